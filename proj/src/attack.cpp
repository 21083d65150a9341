#include "nbf/attack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nbf/jsonio.hpp"

namespace nbf {

json AttackConfig::to_json() const {
    return json{{"restarts", restarts}, {"steps", steps},         {"step_frac", step_frac},
                {"batch", batch},       {"radius_frac", radius_frac}, {"seed", seed}};
}

AttackConfig AttackConfig::from_json(const json& j) {
    AttackConfig cfg;
    cfg.restarts = j.value("restarts", cfg.restarts);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.step_frac = j.value("step_frac", cfg.step_frac);
    cfg.batch = j.value("batch", cfg.batch);
    cfg.radius_frac = j.value("radius_frac", cfg.radius_frac);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

namespace {

// True if (va, a) is a strictly better minimizer than (vb, b): smaller value,
// lexicographically smaller point on exact ties. Keeps the search order-independent.
bool better(double va, const Eigen::VectorXd& a, double vb, const Eigen::VectorXd& b) {
    if (va != vb) return va < vb;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

Eigen::VectorXd corner_point(const Box& box, uint64_t code) {
    Eigen::VectorXd x(box.dim());
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
        x[i] = (code >> i) & 1u ? box.hi[i] : box.lo[i];
    }
    return x;
}

}  // namespace

AttackResult pgd_minimize(const CompGraph& g, const Box& domain, int restarts, int steps,
                          double step_frac, Rng& rng) {
    if (g.input_dim() != domain.dim()) throw std::invalid_argument("pgd_minimize: dim mismatch");
    if (restarts < 1) restarts = 1;
    const Eigen::VectorXd width = domain.hi - domain.lo;
    const Eigen::VectorXd step = step_frac * width;
    const Eigen::Index n = domain.dim();
    // Corner codes wrap around when there are more deterministic starts than corners.
    const uint64_t n_corners = n >= 63 ? UINT64_MAX : (uint64_t{1} << n);

    AttackResult best;
    best.value = std::numeric_limits<double>::infinity();
    bool have_best = false;

    auto consider = [&](const Eigen::VectorXd& x) {
        double v = g.eval(x);
        if (!have_best || better(v, x, best.value, best.x)) {
            best = {x, v};
            have_best = true;
        }
    };

    const int uniform_starts = restarts / 2;
    for (int r = 0; r < restarts; ++r) {
        Eigen::VectorXd x;
        if (r < uniform_starts) {
            x = rng.uniform_vector(domain.lo, domain.hi);
        } else {
            int k = r - uniform_starts;
            x = k == 0 ? Eigen::VectorXd((domain.lo + domain.hi) / 2.0)
                       : corner_point(domain, static_cast<uint64_t>(k - 1) % n_corners);
        }
        consider(x);
        for (int s = 0; s < steps; ++s) {
            Eigen::VectorXd grad = g.grad_input(x);
            if (!grad.allFinite()) break;
            x = domain.project(x - step.cwiseProduct(grad));
            consider(x);
        }
    }
    return best;
}

std::optional<AttackResult> pgd_falsify(const CompGraph& g, const Box& domain,
                                        const AttackConfig& cfg) {
    Rng rng(cfg.seed);
    AttackResult best = pgd_minimize(g, domain, cfg.restarts, cfg.steps, cfg.step_frac, rng);
    if (best.value < 0.0) return best;
    return std::nullopt;
}

std::vector<Eigen::VectorXd> augment(const std::vector<Eigen::VectorXd>& ces, const Box& domain,
                                     const CompGraph& g, const AttackConfig& cfg) {
    Rng rng(cfg.seed);
    const Eigen::VectorXd radius = cfg.radius_frac * (domain.hi - domain.lo);
    std::vector<Eigen::VectorXd> out;
    out.reserve(ces.size() * static_cast<size_t>(cfg.batch));
    for (size_t k = 0; k < ces.size(); ++k) {
        if (ces[k].size() != domain.dim()) throw std::invalid_argument("augment: dim mismatch");
        Rng local = rng.fork("augment_" + std::to_string(k));
        Box around(domain.project(ces[k] - radius), domain.project(ces[k] + radius));
        const Eigen::VectorXd step = cfg.step_frac * (domain.hi - domain.lo);
        for (int i = 0; i < cfg.batch; ++i) {
            // One descent per sampled state keeps the batch anchored near the witness.
            Eigen::VectorXd y = local.uniform_vector(around.lo, around.hi);
            double bestv = g.eval(y);
            Eigen::VectorXd bestx = y;
            for (int s = 0; s < cfg.steps; ++s) {
                Eigen::VectorXd grad = g.grad_input(y);
                if (!grad.allFinite()) break;
                y = domain.project(y - step.cwiseProduct(grad));
                double v = g.eval(y);
                if (v < bestv) {
                    bestv = v;
                    bestx = y;
                }
            }
            out.push_back(bestx);
        }
    }
    return out;
}

}  // namespace nbf
