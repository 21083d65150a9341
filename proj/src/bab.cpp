#include "nbf/bab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>

#include "nbf/jsonio.hpp"

namespace nbf {

json BabConfig::to_json() const {
    return json{{"kappa", kappa},
                {"max_nodes", max_nodes},
                {"probe_steps", probe_steps},
                {"probe_restarts", probe_restarts},
                {"probe_every", probe_every},
                {"boundary_gap", boundary_gap},
                {"boundary_width", boundary_width},
                {"seed", seed}};
}

BabConfig BabConfig::from_json(const json& j) {
    BabConfig cfg;
    cfg.kappa = j.value("kappa", cfg.kappa);
    cfg.max_nodes = j.value("max_nodes", cfg.max_nodes);
    cfg.probe_steps = j.value("probe_steps", cfg.probe_steps);
    cfg.probe_restarts = j.value("probe_restarts", cfg.probe_restarts);
    cfg.probe_every = j.value("probe_every", cfg.probe_every);
    cfg.boundary_gap = j.value("boundary_gap", cfg.boundary_gap);
    cfg.boundary_width = j.value("boundary_width", cfg.boundary_width);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

json ConditionStatus::to_json() const {
    const char* v = verdict == Verdict::Certified   ? "certified"
                    : verdict == Verdict::Falsified ? "falsified"
                                                    : "unknown";
    json j{{"verdict", v},
           {"lower_bound", lower_bound},
           {"value", value},
           {"nodes", nodes},
           {"condition", condition}};
    j["witness"] = witness.size() ? nbf::to_json(witness) : json(nullptr);
    return j;
}

ConditionStatus ConditionStatus::from_json(const json& j) {
    ConditionStatus s;
    std::string v = j.at("verdict").get<std::string>();
    if (v == "certified") {
        s.verdict = Verdict::Certified;
    } else if (v == "falsified") {
        s.verdict = Verdict::Falsified;
    } else if (v == "unknown") {
        s.verdict = Verdict::Unknown;
    } else {
        throw std::invalid_argument("ConditionStatus: bad verdict '" + v + "'");
    }
    s.lower_bound = j.at("lower_bound").get<double>();
    s.value = j.at("value").get<double>();
    s.nodes = j.value("nodes", size_t{0});
    s.condition = j.value("condition", std::string{});
    if (!j.at("witness").is_null()) s.witness = vector_from_json(j.at("witness"));
    return s;
}

namespace {

struct HeapEntry {
    double lb;
    uint64_t seq;  // insertion order makes pops deterministic on lb ties
    Box box;
};

struct LbGreater {
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
        if (a.lb != b.lb) return a.lb > b.lb;
        return a.seq > b.seq;
    }
};

using Heap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, LbGreater>;

// Largest per-dimension width of `box` relative to the enclosing domain scale.
double relative_width(const Box& box, const Eigen::VectorXd& domain_scale) {
    double w = 0.0;
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
        w = std::max(w, (box.hi[i] - box.lo[i]) / domain_scale[i]);
    }
    return w;
}

}  // namespace

ConditionStatus bab_min(const CompGraph& g, const Box& domain, const BabConfig& cfg) {
    if (g.input_dim() != domain.dim()) throw std::invalid_argument("bab_min: dim mismatch");
    Rng rng(cfg.seed);
    Rng probe_rng = rng.fork("probe");

    ConditionStatus st;
    Eigen::VectorXd domain_scale = (domain.hi - domain.lo).cwiseMax(1.0);

    // Best exact value seen anywhere in the domain.
    AttackResult best = pgd_minimize(g, domain, cfg.probe_restarts, cfg.probe_steps * 4, 0.1,
                                     probe_rng);
    auto falsified = [&](const AttackResult& w) {
        st.verdict = ConditionStatus::Verdict::Falsified;
        st.value = w.value;
        st.lower_bound = w.value;
        st.witness = w.x;
        return st;
    };
    if (best.value < 0.0) return falsified(best);

    Interval root = best_bounds(g, domain);
    if (root.lo >= cfg.kappa) {
        st.verdict = ConditionStatus::Verdict::Certified;
        st.lower_bound = root.lo;
        st.value = best.value;
        st.witness = best.x;
        st.nodes = 1;
        return st;
    }

    Heap heap;
    uint64_t seq = 0;
    heap.push({root.lo, seq++, domain});

    double min_pruned_lb = std::numeric_limits<double>::infinity();
    double boundary_lb = std::numeric_limits<double>::infinity();
    size_t n_boundary = 0;
    double last_popped = -std::numeric_limits<double>::infinity();
    size_t used = 0;

    while (!heap.empty()) {
        HeapEntry node = heap.top();
        heap.pop();
        ++used;
        if (node.lb < last_popped - 1e-9) {
            throw std::logic_error("bab_min: popped lower bounds are not monotone");
        }
        last_popped = node.lb;

        if (used > cfg.max_nodes) {
            st.verdict = ConditionStatus::Verdict::Unknown;
            st.lower_bound = std::min(node.lb, boundary_lb);
            st.value = best.value;
            st.witness = best.x;
            st.nodes = used;
            return st;
        }

        // Local minimum estimate: cheap descent from the node center, with a
        // periodic multi-start probe to keep the incumbent honest.
        Eigen::VectorXd center = (node.box.lo + node.box.hi) / 2.0;
        AttackResult local;
        if (used % cfg.probe_every == 0) {
            local = pgd_minimize(g, node.box, cfg.probe_restarts, cfg.probe_steps, 0.1, probe_rng);
        } else {
            local.x = center;
            local.value = g.eval(center);
            const Eigen::VectorXd step = 0.1 * (node.box.hi - node.box.lo);
            Eigen::VectorXd y = center;
            for (int s = 0; s < cfg.probe_steps; ++s) {
                Eigen::VectorXd grad = g.grad_input(y);
                if (!grad.allFinite()) break;
                y = node.box.project(y - step.cwiseProduct(grad));
                double v = g.eval(y);
                if (v < local.value) local = {y, v};
            }
        }
        if (local.value < best.value) best = local;
        if (best.value < 0.0) {
            st.nodes = used;
            return falsified(best);
        }

        if (node.lb >= cfg.kappa) {
            min_pruned_lb = std::min(min_pruned_lb, node.lb);
            continue;
        }

        // A node whose minimum is pinned inside [lb, lb + gap) with lb < kappa
        // and no negative value can be neither certified nor falsified:
        // set it aside instead of splitting forever.
        double gap_tol = cfg.boundary_gap * std::max(1.0, std::abs(local.value));
        if (local.value - node.lb <= gap_tol ||
            relative_width(node.box, domain_scale) <= cfg.boundary_width) {
            boundary_lb = std::min(boundary_lb, node.lb);
            ++n_boundary;
            continue;
        }

        auto halves = node.box.split(node.box.widest_dim());
        for (Box* child : {&halves.first, &halves.second}) {
            Interval b = best_bounds(g, *child);
            double child_lb = std::max(b.lo, node.lb);  // bounds can only tighten downward
            if (child_lb >= cfg.kappa) {
                min_pruned_lb = std::min(min_pruned_lb, child_lb);
            } else {
                heap.push({child_lb, seq++, std::move(*child)});
            }
        }
    }

    st.nodes = used;
    st.value = best.value;
    st.witness = best.x;
    if (n_boundary > 0) {
        st.verdict = ConditionStatus::Verdict::Unknown;
        st.lower_bound = boundary_lb;
        return st;
    }
    if (!std::isfinite(min_pruned_lb)) {
        throw std::logic_error("bab_min: exhausted queue without pruning anything");
    }
    st.verdict = ConditionStatus::Verdict::Certified;
    st.lower_bound = min_pruned_lb;
    return st;
}

GlobalMin bab_global_min(const CompGraph& g, const Box& domain, double gap_tol, size_t max_nodes,
                         uint64_t seed) {
    if (g.input_dim() != domain.dim()) {
        throw std::invalid_argument("bab_global_min: dim mismatch");
    }
    Rng rng(seed);
    Rng probe_rng = rng.fork("probe");

    GlobalMin out;
    AttackResult best = pgd_minimize(g, domain, 8, 60, 0.1, probe_rng);
    Interval root = best_bounds(g, domain);
    out.lower_bound = root.lo;
    out.value = best.value;
    out.argmin = best.x;
    out.nodes = 1;
    if (out.value - out.lower_bound <= gap_tol) {
        out.converged = true;
        return out;
    }

    Heap heap;
    uint64_t seq = 0;
    heap.push({root.lo, seq++, domain});
    size_t used = 0;

    while (!heap.empty()) {
        HeapEntry node = heap.top();
        heap.pop();
        ++used;
        // Heap pops in non-decreasing lb order, but the incumbent can sit
        // below the frontier when every deeper region was pruned against an
        // earlier (worse) incumbent; the minimum is then exactly best.value.
        out.nodes = used;
        out.lower_bound = std::min(node.lb, best.value);
        if (best.value - out.lower_bound <= gap_tol) {
            out.value = best.value;
            out.argmin = best.x;
            out.converged = true;
            return out;
        }
        if (used > max_nodes) break;

        Eigen::VectorXd center = (node.box.lo + node.box.hi) / 2.0;
        AttackResult local;
        if (used % 128 == 0) {
            local = pgd_minimize(g, node.box, 4, 20, 0.1, probe_rng);
        } else {
            local.x = center;
            local.value = g.eval(center);
            const Eigen::VectorXd step = 0.1 * (node.box.hi - node.box.lo);
            Eigen::VectorXd y = center;
            for (int s = 0; s < 15; ++s) {
                Eigen::VectorXd grad = g.grad_input(y);
                if (!grad.allFinite()) break;
                y = node.box.project(y - step.cwiseProduct(grad));
                double v = g.eval(y);
                if (v < local.value) local = {y, v};
            }
        }
        if (local.value < best.value) best = local;

        auto halves = node.box.split(node.box.widest_dim());
        for (Box* child : {&halves.first, &halves.second}) {
            Interval b = best_bounds(g, *child);
            double child_lb = std::max(b.lo, node.lb);
            if (child_lb < best.value) heap.push({child_lb, seq++, std::move(*child)});
        }
    }

    if (heap.empty()) {
        // Every region was pruned at lb >= best.value, so the minimum is best.value.
        out.lower_bound = best.value;
        out.converged = true;
    }
    out.value = best.value;
    out.argmin = best.x;
    return out;
}

namespace {

// Symbolic affine value of a node as a function of the graph input, valid on a
// fixed activation pattern's region.
struct AffineValue {
    Eigen::MatrixXd J;  // dim x n
    Eigen::VectorXd q;  // dim
};

struct HalfSpace {
    Eigen::RowVectorXd a;
    double beta;  // constraint: a x + beta >= 0
};

}  // namespace

std::pair<double, Eigen::VectorXd> brute_force_min(const CompGraph& g, const Box& domain) {
    g.validate();
    const Eigen::Index n = g.input_dim();
    if (n != domain.dim()) throw std::invalid_argument("brute_force_min: dim mismatch");
    if (n > 4) throw std::invalid_argument("brute_force_min: input dimension too large");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(domain.hi[i] > domain.lo[i])) {
            throw std::invalid_argument("brute_force_min: degenerate box");
        }
    }

    // Classify every ReLU unit on the whole box; only IBP-unstable units need
    // to be enumerated, the rest have a fixed state everywhere.
    std::vector<NodeBounds> pre = ibp_all(g, domain);
    struct Unit {
        int node;
        Eigen::Index row;
    };
    std::vector<Unit> unstable;
    for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
        if (g.nodes[id].kind != NodeKind::Relu) continue;
        int src = g.nodes[id].in[0];
        for (Eigen::Index r = 0; r < g.nodes[id].dim; ++r) {
            if (pre[src].lo[r] < 0.0 && pre[src].hi[r] > 0.0) {
                unstable.push_back({id, r});
            }
        }
    }
    if (unstable.size() > 16) {
        throw std::invalid_argument("brute_force_min: too many unstable units");
    }

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;

    const size_t n_patterns = size_t{1} << unstable.size();
    std::vector<AffineValue> sym(g.nodes.size());
    for (size_t pattern = 0; pattern < n_patterns; ++pattern) {
        std::vector<HalfSpace> planes;
        for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
            const GraphNode& nd = g.nodes[id];
            switch (nd.kind) {
                case NodeKind::Input:
                    sym[id].J = Eigen::MatrixXd::Identity(n, n);
                    sym[id].q = Eigen::VectorXd::Zero(n);
                    break;
                case NodeKind::Affine:
                case NodeKind::ConstAffinePre:
                    sym[id].J = nd.W * sym[nd.in[0]].J;
                    sym[id].q = nd.W * sym[nd.in[0]].q + nd.c;
                    break;
                case NodeKind::Sum:
                    sym[id].J = sym[nd.in[0]].J + sym[nd.in[1]].J;
                    sym[id].q = sym[nd.in[0]].q + sym[nd.in[1]].q;
                    break;
                case NodeKind::Negate:
                    sym[id].J = -sym[nd.in[0]].J;
                    sym[id].q = -sym[nd.in[0]].q;
                    break;
                case NodeKind::Relu: {
                    const AffineValue& src = sym[nd.in[0]];
                    sym[id].J = src.J;
                    sym[id].q = src.q;
                    for (Eigen::Index r = 0; r < nd.dim; ++r) {
                        double lo = pre[nd.in[0]].lo[r], hi = pre[nd.in[0]].hi[r];
                        bool active;
                        if (lo >= 0.0) {
                            active = true;
                        } else if (hi <= 0.0) {
                            active = false;
                        } else {
                            size_t u = 0;
                            while (unstable[u].node != id || unstable[u].row != r) ++u;
                            active = (pattern >> u) & 1u;
                            if (active) {
                                planes.push_back({src.J.row(r), src.q[r]});
                            } else {
                                planes.push_back({-src.J.row(r), -src.q[r]});
                            }
                        }
                        if (!active) {
                            sym[id].J.row(r).setZero();
                            sym[id].q[r] = 0.0;
                        }
                    }
                    break;
                }
            }
        }

        const Eigen::RowVectorXd obj_a = sym[g.output].J.row(0);
        const double obj_q = sym[g.output].q[0];

        // Constraint list: box facets then the pattern's hyperplanes.
        std::vector<HalfSpace> cons;
        cons.reserve(2 * static_cast<size_t>(n) + planes.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
            e[i] = 1.0;
            cons.push_back({e, -domain.lo[i]});   //  x_i - lo_i >= 0
            cons.push_back({-e, domain.hi[i]});   //  hi_i - x_i >= 0
        }
        for (const HalfSpace& h : planes) cons.push_back(h);

        auto feasible = [&](const Eigen::VectorXd& x) {
            for (const HalfSpace& h : cons) {
                double v = h.a.dot(x) + h.beta;
                double tol = 1e-8 * (1.0 + h.a.cwiseAbs().dot(x.cwiseAbs()) + std::abs(h.beta));
                if (v < -tol) return false;
            }
            return true;
        };

        // Candidate vertices: every n-subset of active constraints.
        const size_t C = cons.size();
        std::vector<size_t> idx(static_cast<size_t>(n));
        std::function<void(size_t, Eigen::Index)> rec = [&](size_t start, Eigen::Index depth) {
            if (depth == n) {
                Eigen::MatrixXd A(n, n);
                Eigen::VectorXd rhs(n);
                for (Eigen::Index k = 0; k < n; ++k) {
                    A.row(k) = cons[idx[static_cast<size_t>(k)]].a;
                    rhs[k] = -cons[idx[static_cast<size_t>(k)]].beta;
                }
                Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
                lu.setThreshold(1e-10);
                if (!lu.isInvertible()) return;
                Eigen::VectorXd x = lu.solve(rhs);
                if (!x.allFinite() || !feasible(x)) return;
                double v = obj_a.dot(x) + obj_q;
                if (v < best) {
                    best = v;
                    best_x = x;
                }
                return;
            }
            for (size_t i = start; i + (static_cast<size_t>(n) - static_cast<size_t>(depth)) <= C;
                 ++i) {
                idx[static_cast<size_t>(depth)] = i;
                rec(i + 1, depth + 1);
            }
        };
        rec(0, 0);
    }

    if (!best_x.size()) throw std::logic_error("brute_force_min: no feasible vertex found");
    return {best, best_x};
}

}  // namespace nbf
