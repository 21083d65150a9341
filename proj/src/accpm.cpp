#include "nbf/accpm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace nbf {

bool LocalizationSet::add(CutConstraint cut) {
    if (cut.g.size() != dim) throw std::invalid_argument("LocalizationSet::add: dim mismatch");
    double norm = cut.g.norm();
    if (norm <= 1e-12) {
        // An all-zero normal encodes 0 >= h. Nonpositive h is vacuous and gets
        // dropped; positive h would prove the whole space infeasible, which no
        // sample-induced constraint can.
        if (cut.h > 1e-12) {
            throw std::logic_error("LocalizationSet::add: zero-normal cut with positive offset");
        }
        return false;
    }
    cut.g /= norm;
    cut.h /= norm;
    for (const CutConstraint& c : cuts) {
        if (std::abs(c.h - cut.h) <= 1e-12 && (c.g - cut.g).lpNorm<Eigen::Infinity>() <= 1e-12) {
            return false;
        }
    }
    cuts.push_back(std::move(cut));
    return true;
}

Eigen::VectorXd extract_weights(const VectorBarrier& bf) {
    const Eigen::Index m = bf.m(), M = bf.M();
    Eigen::VectorXd w(m * (M + 1));
    for (Eigen::Index i = 0; i < m; ++i) w.segment(i * M, M) = bf.C.row(i).transpose();
    w.tail(m) = bf.b;
    return w;
}

void install_weights(VectorBarrier& bf, const Eigen::VectorXd& w) {
    const Eigen::Index m = bf.m(), M = bf.M();
    if (w.size() != m * (M + 1)) throw std::invalid_argument("install_weights: size mismatch");
    for (Eigen::Index i = 0; i < m; ++i) bf.C.row(i) = w.segment(i * M, M).transpose();
    bf.b = w.tail(m);
}

std::vector<CutConstraint> cuts_from_samples(const VectorBarrier& bf, const ClosedLoop& sys,
                                             const SampleSet& samples, double eps_u) {
    const Eigen::Index m = bf.m(), M = bf.M();
    const Eigen::Index d = m * (M + 1);
    std::vector<CutConstraint> out;
    out.reserve(samples.su.size() + m * (samples.s0.size() + samples.sx.size()));

    for (const Eigen::VectorXd& x : samples.su) {
        Eigen::VectorXd feat = bf.features(x);
        CutConstraint cut;
        cut.g = Eigen::VectorXd::Zero(d);
        cut.g.segment(bf.i_star * M, M) = feat;
        cut.g[m * M + bf.i_star] = 1.0;
        cut.h = eps_u;
        cut.origin = "unsafe_positivity";
        cut.state = x;
        out.push_back(std::move(cut));
    }

    for (const Eigen::VectorXd& x : samples.s0) {
        Eigen::VectorXd feat = bf.features(x);
        for (Eigen::Index i = 0; i < m; ++i) {
            CutConstraint cut;
            cut.g = Eigen::VectorXd::Zero(d);
            cut.g.segment(i * M, M) = -feat;
            cut.g[m * M + i] = -1.0;
            cut.h = 0.0;
            cut.origin = ConditionId{ConditionId::InitNonpositivity, i}.name();
            cut.state = x;
            out.push_back(std::move(cut));
        }
    }

    for (const Eigen::VectorXd& x : samples.sx) {
        Eigen::VectorXd feat = bf.features(x);
        Eigen::VectorXd feat_next = bf.features(sys.step(x));
        for (Eigen::Index i = 0; i < m; ++i) {
            CutConstraint cut;
            cut.g = Eigen::VectorXd::Zero(d);
            for (Eigen::Index j = 0; j < m; ++j) {
                double a = bf.A(i, j);
                if (a != 0.0) {
                    cut.g.segment(j * M, M) += a * feat;
                    cut.g[m * M + j] += a;
                }
            }
            cut.g.segment(i * M, M) -= feat_next;
            cut.g[m * M + i] -= 1.0;
            cut.h = 0.0;
            cut.origin = ConditionId{ConditionId::Decrease, i}.name();
            cut.state = x;
            out.push_back(std::move(cut));
        }
    }
    return out;
}

namespace {

// Dense inequality system a_k'z >= beta_k with log-barrier Newton machinery.
struct Rows {
    Eigen::MatrixXd a;     // N x n
    Eigen::VectorXd beta;  // N

    Eigen::VectorXd slacks(const Eigen::VectorXd& z) const { return a * z - beta; }
};

// Backtracking line search keeping all slacks strictly positive, then Armijo.
double feasible_step(const Rows& rows, const Eigen::VectorXd& z, const Eigen::VectorXd& dz,
                     const std::function<double(const Eigen::VectorXd&)>& f, double f0,
                     double slope) {
    double alpha = 1.0;
    for (int k = 0; k < 200; ++k) {
        Eigen::VectorXd cand = z + alpha * dz;
        if ((rows.slacks(cand).array() > 0.0).all() && f(cand) <= f0 + 0.25 * alpha * slope) {
            return alpha;
        }
        alpha *= 0.5;
    }
    return 0.0;
}

}  // namespace

PhaseOneResult phase_one(const LocalizationSet& loc) {
    const Eigen::Index d = loc.dim;
    const Eigen::Index n = d + 1;  // variables (w, s)
    const size_t n_cuts = loc.cuts.size();
    const Eigen::Index N = static_cast<Eigen::Index>(n_cuts) + 2 * d;

    Rows rows;
    rows.a.resize(N, n);
    rows.beta.resize(N);
    for (size_t j = 0; j < n_cuts; ++j) {
        rows.a.row(static_cast<Eigen::Index>(j)).head(d) = loc.cuts[j].g.transpose();
        rows.a(static_cast<Eigen::Index>(j), d) = -1.0;
        rows.beta[static_cast<Eigen::Index>(j)] = loc.cuts[j].h;
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::Index r = static_cast<Eigen::Index>(n_cuts) + 2 * i;
        rows.a.row(r).setZero();
        rows.a(r, i) = -1.0;  // R - w_i - s >= 0
        rows.a(r, d) = -1.0;
        rows.beta[r] = -loc.radius;
        rows.a.row(r + 1).setZero();
        rows.a(r + 1, i) = 1.0;  // w_i + R - s >= 0
        rows.a(r + 1, d) = -1.0;
        rows.beta[r + 1] = -loc.radius;
    }

    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    double s0 = loc.radius;
    for (const CutConstraint& c : loc.cuts) s0 = std::min(s0, -c.h);
    z[d] = s0 - 1.0;

    if (!(rows.slacks(z).array() > 0.0).all()) {
        throw std::logic_error("phase_one: infeasible start");
    }

    double t = 1.0;
    for (int outer = 0; outer < 40; ++outer) {
        auto objective = [&](const Eigen::VectorXd& zz) {
            Eigen::VectorXd s = rows.slacks(zz);
            if ((s.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
            return -t * zz[d] - s.array().log().sum();
        };
        for (int it = 0; it < 200; ++it) {
            Eigen::VectorXd s = rows.slacks(z);
            Eigen::VectorXd inv = s.cwiseInverse();
            Eigen::VectorXd grad = -rows.a.transpose() * inv;
            grad[d] -= t;
            Eigen::MatrixXd scaled = rows.a.array().colwise() * inv.array();
            Eigen::MatrixXd H = scaled.transpose() * scaled;
            Eigen::VectorXd dz = Eigen::LDLT<Eigen::MatrixXd>(H).solve(-grad);
            double lambda2 = -grad.dot(dz);
            if (!std::isfinite(lambda2) || lambda2 <= 0.0) break;
            if (lambda2 / 2.0 <= 1e-12) break;
            double alpha = feasible_step(rows, z, dz, objective, objective(z), grad.dot(dz));
            if (alpha == 0.0) break;
            z += alpha * dz;
        }
        if (static_cast<double>(N) / t <= 1e-11) break;
        t *= 20.0;
    }

    return {z.head(d), z[d]};
}

Eigen::VectorXd analytic_center(const LocalizationSet& loc, const Eigen::VectorXd& w0) {
    const Eigen::Index d = loc.dim;
    if (w0.size() != d) throw std::invalid_argument("analytic_center: dim mismatch");
    const size_t n_cuts = loc.cuts.size();
    const Eigen::Index N = static_cast<Eigen::Index>(n_cuts) + 2 * d;

    Rows rows;
    rows.a.resize(N, d);
    rows.beta.resize(N);
    for (size_t j = 0; j < n_cuts; ++j) {
        rows.a.row(static_cast<Eigen::Index>(j)) = loc.cuts[j].g.transpose();
        rows.beta[static_cast<Eigen::Index>(j)] = loc.cuts[j].h;
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::Index r = static_cast<Eigen::Index>(n_cuts) + 2 * i;
        rows.a.row(r).setZero();
        rows.a(r, i) = -1.0;  // R - w_i >= 0
        rows.beta[r] = -loc.radius;
        rows.a.row(r + 1).setZero();
        rows.a(r + 1, i) = 1.0;  // w_i + R >= 0
        rows.beta[r + 1] = -loc.radius;
    }

    Eigen::VectorXd w = w0;
    if (!(rows.slacks(w).array() > 0.0).all()) {
        throw std::invalid_argument("analytic_center: start not strictly feasible");
    }
    auto potential = [&](const Eigen::VectorXd& ww) {
        Eigen::VectorXd s = rows.slacks(ww);
        if ((s.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
        return -s.array().log().sum();
    };

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);
    double pot_prev = std::numeric_limits<double>::infinity();
    int flat = 0;
    for (int it = 0; it < 400; ++it) {
        Eigen::VectorXd s = rows.slacks(w);
        Eigen::VectorXd inv = s.cwiseInverse();
        Eigen::VectorXd grad = -rows.a.transpose() * inv;
        // Newton direction in square-root form: (A'S^-2 A) dw = A'S^-1 1 is
        // the normal equation of the least-squares problem (S^-1 A) dw ~= 1,
        // and solving that by QR stays accurate when near-active cuts push
        // the normal-equation conditioning past what a Cholesky-type
        // factorization of A'S^-2 A can represent in doubles.
        Eigen::MatrixXd scaled = rows.a.array().colwise() * inv.array();
        Eigen::VectorXd dw = scaled.colPivHouseholderQr().solve(ones);
        double lambda2 = -grad.dot(dw);  // squared Newton decrement (>= 0 exactly)
        if (dw.allFinite() && std::abs(lambda2) <= 1e-20) break;
        if (!dw.allFinite() || lambda2 <= 0.0) {
            // Steepest descent as a last resort so degeneracy degrades to
            // slow progress, not failure.
            dw = -grad / std::max(1.0, grad.norm());
        }
        double pot0 = potential(w);
        // Once representable potential decreases stop arriving, double
        // precision is exhausted at this set's scale and further polishing
        // cannot be verified; the raw gradient may legitimately stay large.
        flat = pot0 >= pot_prev ? flat + 1 : 0;
        if (flat >= 3) break;
        pot_prev = pot0;
        double alpha = feasible_step(rows, w, dw, potential, pot0, grad.dot(dw));
        if (alpha == 0.0) break;
        Eigen::VectorXd w_next = w + alpha * dw;
        if ((w_next.array() == w.array()).all()) break;  // below w's resolution
        w = std::move(w_next);
    }

    Eigen::VectorXd s = rows.slacks(w);
    Eigen::VectorXd inv = s.cwiseInverse();
    Eigen::VectorXd grad = -rows.a.transpose() * inv;
    bool centered = (s.array() > 0.0).all();
    if (centered && grad.norm() > 1e-6) {
        // With many cuts the potential is large and its floating-point
        // resolution caps how far the raw gradient can be polished; accept
        // when the affine-invariant Newton decrement certifies the potential
        // is within that resolution (or 5e-13) of the center's.
        Eigen::MatrixXd scaled = rows.a.array().colwise() * inv.array();
        Eigen::VectorXd dw = scaled.colPivHouseholderQr().solve(ones);
        double lambda2 = -grad.dot(dw);
        double pot = -s.array().log().sum();
        double tol = std::max(1e-12, 16.0 * std::numeric_limits<double>::epsilon() *
                                         std::abs(pot));
        centered = dw.allFinite() && std::abs(lambda2) <= tol;
    }
    if (!centered) {
        throw std::runtime_error("analytic_center: Newton failed to polish the center");
    }
    return w;
}

json AccpmConfig::to_json() const {
    return json{{"max_iters", max_iters},   {"eps_u", eps_u},
                {"radius", radius},         {"empty_tol", empty_tol},
                {"budget_seconds", budget_seconds == std::numeric_limits<double>::infinity()
                                       ? json(nullptr)
                                       : json(budget_seconds)},
                {"verifier", verifier.to_json()}, {"attack", attack.to_json()},
                {"seed", seed}};
}

AccpmConfig AccpmConfig::from_json(const json& j) {
    AccpmConfig cfg;
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    cfg.eps_u = j.value("eps_u", cfg.eps_u);
    cfg.radius = j.value("radius", cfg.radius);
    cfg.empty_tol = j.value("empty_tol", cfg.empty_tol);
    if (j.contains("budget_seconds") && !j.at("budget_seconds").is_null()) {
        cfg.budget_seconds = j.at("budget_seconds").get<double>();
    }
    if (j.contains("verifier")) cfg.verifier = VerifierConfig::from_json(j.at("verifier"));
    if (j.contains("attack")) cfg.attack = AttackConfig::from_json(j.at("attack"));
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

json AccpmResult::to_json() const {
    const char* st = status == Status::Feasible ? "feasible"
                     : status == Status::Empty  ? "empty"
                                                : "budget";
    json j{{"status", st},
           {"iterations", iterations},
           {"s_star", s_star},
           {"stop_reason", stop_reason},
           {"trace", trace}};
    j["barrier"] = barrier.to_json();
    if (status == Status::Feasible) j["report"] = report.to_json();
    return j;
}

AccpmResult accpm_finetune(const VectorBarrier& bf_in, const ClosedLoop& sys,
                           const SafetySpec& spec, SampleSet samples, const AccpmConfig& cfg) {
    VectorBarrier bf = bf_in;
    bf.validate();
    const Eigen::Index m = bf.m(), M = bf.M();
    const Eigen::Index d = m * (M + 1);
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };
    Rng rng(cfg.seed);

    AccpmResult res;
    res.barrier = bf;

    const std::vector<ConditionId> conds = all_conditions(m);

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        if (elapsed() > cfg.budget_seconds) {
            res.status = AccpmResult::Status::Budget;
            res.stop_reason = "wall_clock";
            break;
        }
        res.iterations = iter;
        json rec{{"iteration", iter},
                 {"n_samples", {{"s0", samples.s0.size()},
                                {"su", samples.su.size()},
                                {"sx", samples.sx.size()}}}};

        LocalizationSet loc(d, cfg.radius);
        for (CutConstraint& c : cuts_from_samples(bf, sys, samples, cfg.eps_u)) {
            loc.add(std::move(c));
        }
        rec["n_cuts"] = loc.cuts.size();

        PhaseOneResult p1 = phase_one(loc);
        res.s_star = p1.s_star;
        rec["s_star"] = p1.s_star;
        if (p1.s_star <= cfg.empty_tol) {
            rec["status"] = "empty";
            res.trace.push_back(std::move(rec));
            res.status = AccpmResult::Status::Empty;
            res.stop_reason = "phase_one_empty";
            res.barrier = bf;
            res.samples = std::move(samples);
            return res;
        }

        Eigen::VectorXd center = analytic_center(loc, p1.w);
        install_weights(bf, center);
        res.barrier = bf;

        // Counterexample hunt: cheap gradient attack first, formal verification
        // only when the attack comes up empty. The exact quadratic path has no
        // graph to attack and goes straight to verification.
        struct Hit {
            ConditionId cond;
            Eigen::VectorXd x;
            double value;
        };
        std::vector<Hit> hits;
        int attack_hits = 0;
        if (bf.basis != Basis::Quadratic) {
            for (const ConditionId& cond : conds) {
                CompGraph g = build_condition_graph(bf, sys, cond);
                AttackConfig acfg = cfg.attack;
                acfg.seed = rng.fork("attack_" + std::to_string(iter) + "_" + cond.name()).seed();
                if (auto ce = pgd_falsify(g, condition_domain(cond, spec), acfg)) {
                    double v = eval_condition(bf, sys, cond, ce->x);
                    if (v < 0.0) {
                        hits.push_back({cond, ce->x, v});
                        ++attack_hits;
                    }
                }
            }
        }
        rec["attack_hits"] = attack_hits;

        if (hits.empty()) {
            VerifierConfig vcfg = cfg.verifier;
            vcfg.seed = rng.fork("verify_" + std::to_string(iter)).seed();
            VerificationReport report = verify_barrier(bf, sys, spec, vcfg);
            rec["verify"] = report.to_json();
            if (report.certified()) {
                rec["status"] = "feasible";
                res.trace.push_back(std::move(rec));
                res.status = AccpmResult::Status::Feasible;
                res.stop_reason = "verified";
                res.report = std::move(report);
                res.barrier = bf;
                res.samples = std::move(samples);
                return res;
            }
            for (size_t k = 0; k < report.conditions.size(); ++k) {
                const ConditionStatus& st = report.conditions[k];
                if (st.verdict == ConditionStatus::Verdict::Certified || !st.witness.size()) {
                    continue;
                }
                double v = eval_condition(bf, sys, conds[k], st.witness);
                hits.push_back({conds[k], st.witness, v});
            }
        }

        // Fold counterexamples (and local augmentation batches) into the
        // samples; every new state yields sound cuts for the next round.
        double min_new_slack = std::numeric_limits<double>::infinity();
        bool progress = false;
        for (const Hit& hit : hits) {
            double margin = hit.cond.kind == ConditionId::UnsafePositivity ? cfg.eps_u : 0.0;
            if (hit.value < margin) {
                progress = true;
                min_new_slack = std::min(min_new_slack, hit.value - margin);
            }
            const Box& domain = condition_domain(hit.cond, spec);
            std::vector<Eigen::VectorXd>* dest =
                hit.cond.kind == ConditionId::UnsafePositivity  ? &samples.su
                : hit.cond.kind == ConditionId::InitNonpositivity ? &samples.s0
                                                                  : &samples.sx;
            dest->push_back(hit.x);
            AttackConfig acfg = cfg.attack;
            acfg.seed = rng.fork("augment_" + std::to_string(iter) + "_" + hit.cond.name()).seed();
            if (bf.basis == Basis::Quadratic) {
                // No graph to descend on; a local sample cloud still sharpens
                // the next localization set.
                Rng ball = Rng(acfg.seed);
                Eigen::VectorXd radius = acfg.radius_frac * domain.width();
                Box around(domain.project(hit.x - radius), domain.project(hit.x + radius));
                for (const Eigen::VectorXd& s : around.sample_uniform(
                         static_cast<size_t>(acfg.batch), ball)) {
                    dest->push_back(s);
                }
            } else {
                CompGraph g = build_condition_graph(bf, sys, hit.cond);
                for (Eigen::VectorXd& s : augment({hit.x}, domain, g, acfg)) {
                    dest->push_back(std::move(s));
                }
            }
        }
        rec["counterexamples"] = hits.size();

        if (!progress) {
            // Nothing falsifiable and nothing below the unsafe margin: no sound
            // center-violating cut exists, so iterating further cannot move the
            // localization set.
            rec["status"] = "stalled";
            res.trace.push_back(std::move(rec));
            res.status = AccpmResult::Status::Budget;
            res.stop_reason = "unknown_stall";
            res.samples = std::move(samples);
            return res;
        }

        // Cut-progress invariant: the just-queried center strictly violates at
        // least one constraint that the next localization set will contain.
        rec["new_cut_min_slack"] = min_new_slack;
        if (!(min_new_slack < 0.0)) {
            throw std::logic_error("accpm_finetune: added cuts do not exclude the center");
        }
        rec["status"] = "continue";
        res.trace.push_back(std::move(rec));
    }

    if (res.stop_reason.empty()) res.stop_reason = "max_iters";
    res.status = AccpmResult::Status::Budget;
    res.samples = std::move(samples);
    return res;
}

}  // namespace nbf
