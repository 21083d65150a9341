#include "nbf/verifier.hpp"

#include <chrono>

#include "nbf/jsonio.hpp"

namespace nbf {

json VerifierConfig::to_json() const {
    return json{{"bab", bab.to_json()}, {"kappa_strict", kappa_strict}, {"seed", seed}};
}

VerifierConfig VerifierConfig::from_json(const json& j) {
    VerifierConfig cfg;
    if (j.contains("bab")) cfg.bab = BabConfig::from_json(j.at("bab"));
    cfg.kappa_strict = j.value("kappa_strict", cfg.kappa_strict);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

bool VerificationReport::certified() const {
    for (const ConditionStatus& c : conditions) {
        if (c.verdict != ConditionStatus::Verdict::Certified) return false;
    }
    return !conditions.empty();
}

int VerificationReport::first_violation() const {
    for (size_t i = 0; i < conditions.size(); ++i) {
        if (conditions[i].verdict != ConditionStatus::Verdict::Certified) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

json VerificationReport::to_json() const {
    json conds = json::array();
    for (const ConditionStatus& c : conditions) conds.push_back(c.to_json());
    return json{{"conditions", conds},
                {"wall_seconds", wall_seconds},
                {"total_nodes", total_nodes},
                {"certified", certified()}};
}

VerificationReport VerificationReport::from_json(const json& j) {
    VerificationReport r;
    for (const json& c : j.at("conditions")) {
        r.conditions.push_back(ConditionStatus::from_json(c));
    }
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.total_nodes = j.value("total_nodes", size_t{0});
    return r;
}

ConditionStatus verify_condition(const VectorBarrier& bf, const ClosedLoop& sys,
                                 const SafetySpec& spec, const ConditionId& cond,
                                 const VerifierConfig& cfg) {
    const Box& domain = condition_domain(cond, spec);
    const double kappa = cond.kind == ConditionId::UnsafePositivity ? cfg.kappa_strict : 0.0;

    ConditionStatus st;
    if (bf.basis == Basis::Quadratic) {
        // Closed-form objective: the exact minimizer decides the verdict outright.
        BoxQuadratic q = build_condition_quad(bf, sys, cond);
        QuadMin qm = box_quadratic_min(q, domain);
        st.value = qm.value;
        st.witness = qm.argmin;
        st.nodes = 1;
        if (qm.value >= kappa) {
            st.verdict = ConditionStatus::Verdict::Certified;
            st.lower_bound = qm.value;
        } else if (qm.value < 0.0) {
            st.verdict = ConditionStatus::Verdict::Falsified;
            st.lower_bound = qm.value;
        } else {
            // Exact minimum sits in [0, kappa): not certifiable at this margin,
            // not falsifiable either.
            st.verdict = ConditionStatus::Verdict::Unknown;
            st.lower_bound = qm.value;
        }
    } else {
        CompGraph g = build_condition_graph(bf, sys, cond);
        BabConfig bab = cfg.bab;
        bab.kappa = kappa;
        bab.seed = Rng(cfg.seed).fork(cond.name()).seed();
        st = bab_min(g, domain, bab);
    }
    st.condition = cond.name();
    return st;
}

VerificationReport verify_barrier(const VectorBarrier& bf, const ClosedLoop& sys,
                                  const SafetySpec& spec, const VerifierConfig& cfg) {
    bf.validate();
    sys.validate();
    spec.validate();
    auto t0 = std::chrono::steady_clock::now();

    VerificationReport report;
    for (const ConditionId& cond : all_conditions(bf.m())) {
        ConditionStatus st = verify_condition(bf, sys, spec, cond, cfg);
        report.total_nodes += st.nodes;
        report.conditions.push_back(std::move(st));
    }

    report.wall_seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace nbf
