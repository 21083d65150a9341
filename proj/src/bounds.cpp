#include "nbf/bounds.hpp"

#include <stdexcept>

namespace nbf {

Interval LinearBounds::concretize(const Box& domain) const {
    double lo = lower_off, hi = upper_off;
    for (Eigen::Index j = 0; j < lower_coef.size(); ++j) {
        lo += lower_coef[j] >= 0.0 ? lower_coef[j] * domain.lo[j] : lower_coef[j] * domain.hi[j];
        hi += upper_coef[j] >= 0.0 ? upper_coef[j] * domain.hi[j] : upper_coef[j] * domain.lo[j];
    }
    return {lo, hi};
}

std::vector<NodeBounds> ibp_all(const CompGraph& g, const Box& domain) {
    if (domain.dim() != g.input_dim()) throw std::invalid_argument("ibp: dimension mismatch");
    std::vector<NodeBounds> nb(g.nodes.size());
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        const GraphNode& n = g.nodes[i];
        switch (n.kind) {
            case NodeKind::Input:
                nb[i] = {domain.lo, domain.hi};
                break;
            case NodeKind::Affine:
            case NodeKind::ConstAffinePre: {
                const NodeBounds& s = nb[n.in[0]];
                const Eigen::MatrixXd wp = n.W.cwiseMax(0.0), wn = n.W.cwiseMin(0.0);
                nb[i] = {wp * s.lo + wn * s.hi + n.c, wp * s.hi + wn * s.lo + n.c};
                break;
            }
            case NodeKind::Relu: {
                const NodeBounds& s = nb[n.in[0]];
                nb[i] = {s.lo.cwiseMax(0.0), s.hi.cwiseMax(0.0)};
                break;
            }
            case NodeKind::Sum: {
                const NodeBounds& a = nb[n.in[0]];
                const NodeBounds& b = nb[n.in[1]];
                nb[i] = {a.lo + b.lo, a.hi + b.hi};
                break;
            }
            case NodeKind::Negate: {
                const NodeBounds& s = nb[n.in[0]];
                nb[i] = {-s.hi, -s.lo};
                break;
            }
        }
    }
    return nb;
}

Interval ibp(const CompGraph& g, const Box& domain) {
    const auto nb = ibp_all(g, domain);
    return {nb[g.output].lo[0], nb[g.output].hi[0]};
}

std::pair<LinearBounds, Interval> backward_linear(const CompGraph& g, const Box& domain,
                                                  const std::vector<NodeBounds>& pre) {
    if (pre.size() != g.nodes.size())
        throw std::invalid_argument("backward_linear: missing intermediate intervals");
    // lam_l[i]·value(i) summed over pending nodes, plus off_l, is a valid lower
    // bound on the output as the backward sweep peels nodes; same for upper.
    std::vector<Eigen::VectorXd> lam_l(g.nodes.size()), lam_u(g.nodes.size());
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        lam_l[i] = Eigen::VectorXd::Zero(g.nodes[i].dim);
        lam_u[i] = Eigen::VectorXd::Zero(g.nodes[i].dim);
    }
    double off_l = 0.0, off_u = 0.0;
    lam_l[g.output][0] = 1.0;
    lam_u[g.output][0] = 1.0;
    LinearBounds out;
    out.lower_coef = Eigen::VectorXd::Zero(g.input_dim());
    out.upper_coef = Eigen::VectorXd::Zero(g.input_dim());

    for (int i = int(g.nodes.size()) - 1; i >= 0; --i) {
        const GraphNode& n = g.nodes[i];
        if (lam_l[i].isZero(0.0) && lam_u[i].isZero(0.0)) continue;
        switch (n.kind) {
            case NodeKind::Input:
                out.lower_coef += lam_l[i];
                out.upper_coef += lam_u[i];
                break;
            case NodeKind::Affine:
            case NodeKind::ConstAffinePre:
                off_l += lam_l[i].dot(n.c);
                off_u += lam_u[i].dot(n.c);
                lam_l[n.in[0]] += n.W.transpose() * lam_l[i];
                lam_u[n.in[0]] += n.W.transpose() * lam_u[i];
                break;
            case NodeKind::Sum:
                lam_l[n.in[0]] += lam_l[i];
                lam_l[n.in[1]] += lam_l[i];
                lam_u[n.in[0]] += lam_u[i];
                lam_u[n.in[1]] += lam_u[i];
                break;
            case NodeKind::Negate:
                lam_l[n.in[0]] -= lam_l[i];
                lam_u[n.in[0]] -= lam_u[i];
                break;
            case NodeKind::Relu: {
                const Eigen::VectorXd& zl = pre[n.in[0]].lo;
                const Eigen::VectorXd& zh = pre[n.in[0]].hi;
                for (Eigen::Index j = 0; j < n.dim; ++j) {
                    double sl, su, bu;  // lower slope; upper slope and offset
                    if (zl[j] >= 0.0) {
                        sl = su = 1.0;
                        bu = 0.0;
                    } else if (zh[j] <= 0.0) {
                        sl = su = 0.0;
                        bu = 0.0;
                    } else {
                        su = zh[j] / (zh[j] - zl[j]);  // chord through both kink endpoints
                        bu = -su * zl[j];
                        sl = (-zl[j] >= zh[j]) ? 0.0 : 1.0;
                    }
                    const double al = lam_l[i][j], au = lam_u[i][j];
                    if (al >= 0.0) {
                        lam_l[n.in[0]][j] += al * sl;
                    } else {
                        lam_l[n.in[0]][j] += al * su;
                        off_l += al * bu;
                    }
                    if (au >= 0.0) {
                        lam_u[n.in[0]][j] += au * su;
                        off_u += au * bu;
                    } else {
                        lam_u[n.in[0]][j] += au * sl;
                    }
                }
                break;
            }
        }
    }
    out.lower_off = off_l;
    out.upper_off = off_u;
    return {out, out.concretize(domain)};
}

Interval best_bounds(const CompGraph& g, const Box& domain) {
    const auto pre = ibp_all(g, domain);
    const Interval iv{pre[g.output].lo[0], pre[g.output].hi[0]};
    const auto [lb, biv] = backward_linear(g, domain, pre);
    return {std::max(iv.lo, biv.lo), std::min(iv.hi, biv.hi)};
}

}  // namespace nbf
