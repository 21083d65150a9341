#include "nbf/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace nbf {

namespace {

std::string now_utc() {
    std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    return buf;
}

Basis basis_from_string(const std::string& s) {
    if (s == "identity") return Basis::Identity;
    if (s == "mlp") return Basis::MlpNet;
    if (s == "quadratic") return Basis::Quadratic;
    throw std::invalid_argument("unknown basis '" + s + "' (want identity|mlp|quadratic)");
}

std::vector<Eigen::VectorXd> states_from_json(const json& a, const Box& domain,
                                              const std::string& what) {
    std::vector<Eigen::VectorXd> out;
    for (const json& row : a) {
        Eigen::VectorXd x = vector_from_json(row);
        if (!domain.contains(x)) {
            throw std::invalid_argument("extra_samples." + what + ": state outside its domain");
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig cfg;
    cfg.raw = j;

    if (j.contains("benchmark")) {
        cfg.benchmark = j.at("benchmark").get<std::string>();
        BenchmarkDef def = builtin(cfg.benchmark);
        cfg.system = std::move(def.system);
        cfg.spec = std::move(def.spec);
        cfg.phi_sizes = std::move(def.barrier_arch);
        cfg.m = def.barrier_m;
        cfg.basis = cfg.phi_sizes.empty() ? Basis::Identity : Basis::MlpNet;
    }
    if (j.contains("system")) cfg.system = ClosedLoop::from_json(j.at("system"));
    if (j.contains("spec")) cfg.spec = SafetySpec::from_json(j.at("spec"));
    if (cfg.benchmark.empty() && !j.contains("system")) {
        throw std::invalid_argument("config needs either \"benchmark\" or \"system\"+\"spec\"");
    }
    if (j.contains("workspace")) cfg.spec.workspace = Box::from_json(j.at("workspace"));
    if (j.contains("initial")) cfg.spec.initial = Box::from_json(j.at("initial"));
    if (j.contains("unsafe")) cfg.spec.unsafe = Box::from_json(j.at("unsafe"));
    cfg.spec.validate();
    cfg.system.validate();

    if (j.contains("basis")) cfg.basis = basis_from_string(j.at("basis").get<std::string>());
    if (j.contains("phi_sizes")) {
        cfg.phi_sizes.clear();
        for (const json& v : j.at("phi_sizes")) {
            cfg.phi_sizes.push_back(v.get<Eigen::Index>());
        }
    }
    cfg.m = j.value("m", cfg.m);
    if (cfg.m < 1) throw std::invalid_argument("config: m must be >= 1");
    Eigen::Index i_star_1 = j.value("i_star", Eigen::Index{1});  // 1-based in JSON
    if (i_star_1 < 1 || i_star_1 > cfg.m) {
        throw std::invalid_argument("config: i_star out of range");
    }
    cfg.i_star = i_star_1 - 1;

    if (j.contains("A") && !j.at("A").is_null()) {
        Eigen::MatrixXd A = matrix_from_json(j.at("A"));
        if (A.rows() != cfg.m || A.cols() != cfg.m) {
            throw std::invalid_argument("config: A must be m x m");
        }
        if ((A.array() < 0.0).any()) throw std::invalid_argument("config: A must be nonnegative");
        cfg.fixed_a = std::move(A);
    }

    if (j.contains("samples")) {
        const json& s = j.at("samples");
        cfg.n0 = s.value("n0", cfg.n0);
        cfg.nu = s.value("nu", cfg.nu);
        cfg.nx = s.value("nx", cfg.nx);
    }
    if (j.contains("extra_samples")) {
        const json& e = j.at("extra_samples");
        if (e.contains("s0")) {
            cfg.extra_samples.s0 = states_from_json(e.at("s0"), cfg.spec.initial, "s0");
        }
        if (e.contains("su")) {
            cfg.extra_samples.su = states_from_json(e.at("su"), cfg.spec.unsafe, "su");
        }
        if (e.contains("sx")) {
            cfg.extra_samples.sx = states_from_json(e.at("sx"), cfg.spec.workspace, "sx");
        }
    }

    if (j.contains("train")) cfg.train = TrainConfig::from_json(j.at("train"));
    if (j.contains("accpm")) cfg.accpm = AccpmConfig::from_json(j.at("accpm"));
    cfg.rounds = j.value("rounds", cfg.rounds);
    if (j.contains("budget_seconds") && !j.at("budget_seconds").is_null()) {
        cfg.budget_seconds = j.at("budget_seconds").get<double>();
    }
    cfg.finetune = j.value("finetune", cfg.finetune);
    if (j.contains("shrink")) {
        cfg.shrink_lambda = j.at("shrink").value("lambda", cfg.shrink_lambda);
        cfg.shrink_sigma = j.at("shrink").value("sigma", cfg.shrink_sigma);
    }
    cfg.seed = j.value("seed", cfg.seed);

    const Eigen::Index n = cfg.spec.workspace.dim();
    if (cfg.basis == Basis::MlpNet) {
        if (cfg.phi_sizes.size() < 2) {
            throw std::invalid_argument("config: mlp basis needs phi_sizes");
        }
        if (cfg.phi_sizes.front() != n) {
            throw std::invalid_argument("config: phi_sizes[0] must equal the state dimension");
        }
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    return from_json(json::parse(in));
}

json Certificate::to_json() const {
    return json{{"version", version},
                {"created", created},
                {"seed", seed},
                {"benchmark", benchmark.empty() ? json(nullptr) : json(benchmark)},
                {"system", system.to_json()},
                {"spec", spec.to_json()},
                {"barrier", barrier.to_json()},
                {"report", report.to_json()},
                {"accpm_trace", accpm_trace},
                {"config", config},
                {"wall_seconds", wall_seconds}};
}

Certificate Certificate::from_json(const json& j) {
    Certificate c;
    c.version = j.value("version", std::string{});
    c.created = j.value("created", std::string{});
    c.seed = j.value("seed", uint64_t{0});
    if (j.contains("benchmark") && !j.at("benchmark").is_null()) {
        c.benchmark = j.at("benchmark").get<std::string>();
    }
    c.system = ClosedLoop::from_json(j.at("system"));
    c.spec = SafetySpec::from_json(j.at("spec"));
    c.barrier = VectorBarrier::from_json(j.at("barrier"));
    c.report = VerificationReport::from_json(j.at("report"));
    if (j.contains("accpm_trace")) c.accpm_trace = j.at("accpm_trace");
    if (j.contains("config")) c.config = j.at("config");
    c.wall_seconds = j.value("wall_seconds", 0.0);
    return c;
}

void save_certificate(const Certificate& cert, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write certificate: " + path);
    out << cert.to_json().dump(2) << "\n";
}

Certificate load_certificate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open certificate: " + path);
    Certificate c = Certificate::from_json(json::parse(in));
    c.system.validate();
    c.spec.validate();
    c.barrier.validate();
    if (c.barrier.input_dim() != c.spec.workspace.dim()) {
        throw std::runtime_error("certificate invalid: barrier/spec dimension mismatch");
    }
    const size_t expected = static_cast<size_t>(2 * c.barrier.m() + 1);
    if (c.report.conditions.size() != expected) {
        throw std::runtime_error("certificate invalid: report must cover all conditions");
    }
    if (!c.report.certified()) {
        throw std::runtime_error("certificate invalid: report contains uncertified conditions");
    }
    return c;
}

namespace {

struct Hit {
    ConditionId cond;
    Eigen::VectorXd x;
    double value;
};

// Fold counterexamples and their local augmentation clouds into the samples.
void fold_hits(const std::vector<Hit>& hits, const VectorBarrier& bf, const ClosedLoop& sys,
               const SafetySpec& spec, const AttackConfig& attack, Rng& rng,
               SampleSet& samples) {
    for (const Hit& hit : hits) {
        const Box& domain = condition_domain(hit.cond, spec);
        std::vector<Eigen::VectorXd>* dest =
            hit.cond.kind == ConditionId::UnsafePositivity    ? &samples.su
            : hit.cond.kind == ConditionId::InitNonpositivity ? &samples.s0
                                                              : &samples.sx;
        dest->push_back(hit.x);
        AttackConfig acfg = attack;
        acfg.seed = rng.fork("fold_" + hit.cond.name() + "_" +
                             std::to_string(dest->size())).seed();
        if (bf.basis == Basis::Quadratic) {
            Rng ball(acfg.seed);
            Eigen::VectorXd radius = acfg.radius_frac * domain.width();
            Box around(domain.project(hit.x - radius), domain.project(hit.x + radius));
            for (const Eigen::VectorXd& s :
                 around.sample_uniform(static_cast<size_t>(acfg.batch), ball)) {
                dest->push_back(s);
            }
        } else {
            CompGraph g = build_condition_graph(bf, sys, hit.cond);
            for (Eigen::VectorXd& s : augment({hit.x}, domain, g, acfg)) {
                dest->push_back(std::move(s));
            }
        }
    }
}

}  // namespace

SynthesisResult synthesize(const PipelineConfig& cfg, const LogSink& sink) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    SynthesisResult result;
    auto emit = [&](json e) {
        e["elapsed"] = elapsed();
        if (sink) sink(e);
        result.log.push_back(std::move(e));
    };

    cfg.spec.validate();
    cfg.system.validate();
    Rng rng(cfg.seed);

    Rng srng = rng.fork("samples");
    SampleSet samples = sample_spec(cfg.spec, cfg.n0, cfg.nu, cfg.nx, srng);
    for (const auto& x : cfg.extra_samples.s0) samples.s0.push_back(x);
    for (const auto& x : cfg.extra_samples.su) samples.su.push_back(x);
    for (const auto& x : cfg.extra_samples.sx) samples.sx.push_back(x);

    const Eigen::Index state_dim = cfg.spec.workspace.dim();
    Rng init_rng = rng.fork("init");
    VectorBarrier bf = random_barrier(cfg.basis, cfg.phi_sizes, cfg.m, state_dim, init_rng);
    bf.i_star = cfg.i_star;
    if (cfg.fixed_a) bf.A = *cfg.fixed_a;
    bf.validate();

    TrainConfig tc = cfg.train;
    if (cfg.fixed_a) tc.train_a = false;

    const std::vector<ConditionId> conds = all_conditions(cfg.m);
    json trace = json::array();

    emit({{"event", "start"},
          {"benchmark", cfg.benchmark},
          {"samples", samples.total()},
          {"seed", cfg.seed}});

    for (int round = 1; round <= cfg.rounds; ++round) {
        result.rounds_used = round;
        if (elapsed() > cfg.budget_seconds) {
            result.reason = "wall_clock";
            break;
        }

        if (tc.epochs > 0) {
            tc.seed = rng.fork("train_r" + std::to_string(round)).seed();
            bf = train_barrier(bf, samples, cfg.system, tc);
            emit({{"event", "train"},
                  {"round", round},
                  {"loss", barrier_loss(bf, samples, cfg.system, tc)}});
        }

        std::vector<Hit> hits;
        if (cfg.basis != Basis::Quadratic) {
            for (const ConditionId& cond : conds) {
                CompGraph g = build_condition_graph(bf, cfg.system, cond);
                AttackConfig acfg = cfg.accpm.attack;
                acfg.seed =
                    rng.fork("attack_r" + std::to_string(round) + "_" + cond.name()).seed();
                if (auto ce = pgd_falsify(g, condition_domain(cond, cfg.spec), acfg)) {
                    double v = eval_condition(bf, cfg.system, cond, ce->x);
                    if (v < 0.0) hits.push_back({cond, ce->x, v});
                }
            }
        }
        emit({{"event", "attack"}, {"round", round}, {"hits", hits.size()}});

        if (hits.empty()) {
            VerifierConfig vcfg = cfg.accpm.verifier;
            vcfg.seed = rng.fork("verify_r" + std::to_string(round)).seed();
            VerificationReport report = verify_barrier(bf, cfg.system, cfg.spec, vcfg);
            json verdicts = json::array();
            for (const ConditionStatus& st : report.conditions) {
                verdicts.push_back(st.to_json());
            }
            emit({{"event", "verify"},
                  {"round", round},
                  {"certified", report.certified()},
                  {"conditions", verdicts}});
            if (report.certified()) {
                Certificate cert;
                cert.created = now_utc();
                cert.seed = cfg.seed;
                cert.benchmark = cfg.benchmark;
                cert.system = cfg.system;
                cert.spec = cfg.spec;
                cert.barrier = bf;
                cert.report = std::move(report);
                cert.accpm_trace = trace;
                cert.config = cfg.raw;
                cert.wall_seconds = elapsed();
                result.success = true;
                result.certificate = std::move(cert);
                result.wall_seconds = elapsed();
                emit({{"event", "success"}, {"round", round}});
                return result;
            }
            for (size_t k = 0; k < report.conditions.size(); ++k) {
                const ConditionStatus& st = report.conditions[k];
                if (st.verdict == ConditionStatus::Verdict::Certified || !st.witness.size()) {
                    continue;
                }
                hits.push_back({conds[k], st.witness,
                                eval_condition(bf, cfg.system, conds[k], st.witness)});
            }
        }

        if (cfg.finetune) {
            AccpmConfig acfg = cfg.accpm;
            acfg.seed = rng.fork("accpm_r" + std::to_string(round)).seed();
            acfg.budget_seconds =
                std::min(acfg.budget_seconds, cfg.budget_seconds - elapsed());
            AccpmResult acc = accpm_finetune(bf, cfg.system, cfg.spec, samples, acfg);
            for (const json& rec : acc.trace) trace.push_back(rec);
            samples = std::move(acc.samples);
            emit({{"event", "finetune"},
                  {"round", round},
                  {"status", acc.status == AccpmResult::Status::Feasible ? "feasible"
                             : acc.status == AccpmResult::Status::Empty  ? "empty"
                                                                         : "budget"},
                  {"iterations", acc.iterations},
                  {"s_star", acc.s_star},
                  {"stop_reason", acc.stop_reason}});

            if (acc.status == AccpmResult::Status::Feasible) {
                // Accept only after an independent re-verification.
                VerifierConfig vcfg = cfg.accpm.verifier;
                vcfg.seed = rng.fork("reverify_r" + std::to_string(round)).seed();
                VerificationReport report2 =
                    verify_barrier(acc.barrier, cfg.system, cfg.spec, vcfg);
                emit({{"event", "reverify"},
                      {"round", round},
                      {"certified", report2.certified()}});
                if (report2.certified()) {
                    Certificate cert;
                    cert.created = now_utc();
                    cert.seed = cfg.seed;
                    cert.benchmark = cfg.benchmark;
                    cert.system = cfg.system;
                    cert.spec = cfg.spec;
                    cert.barrier = acc.barrier;
                    cert.report = std::move(report2);
                    cert.accpm_trace = trace;
                    cert.config = cfg.raw;
                    cert.wall_seconds = elapsed();
                    result.success = true;
                    result.certificate = std::move(cert);
                    result.wall_seconds = elapsed();
                    emit({{"event", "success"}, {"round", round}});
                    return result;
                }
            } else if (acc.status == AccpmResult::Status::Empty && cfg.basis != Basis::MlpNet &&
                       cfg.fixed_a) {
                // Fixed basis and fixed A: the whole class is this one output
                // layer family, so an empty localization set is conclusive.
                result.reason = "conditions_empty";
                result.wall_seconds = elapsed();
                emit({{"event", "failure"}, {"reason", result.reason}});
                return result;
            }
        } else if (!hits.empty()) {
            Rng frng = rng.fork("fold_r" + std::to_string(round));
            fold_hits(hits, bf, cfg.system, cfg.spec, cfg.accpm.attack, frng, samples);
        }

        Rng prng = rng.fork("perturb_r" + std::to_string(round));
        bf = shrink_and_perturb(bf, cfg.shrink_lambda, cfg.shrink_sigma, prng);
        if (cfg.fixed_a) bf.A = *cfg.fixed_a;
        emit({{"event", "restart"}, {"round", round}, {"samples", samples.total()}});
    }

    if (result.reason.empty()) result.reason = "rounds_exhausted";
    result.wall_seconds = elapsed();
    emit({{"event", "failure"}, {"reason", result.reason}});
    return result;
}

json compare_harness(const PipelineConfig& cfg, const LogSink& sink) {
    auto summarize = [](const SynthesisResult& r) {
        json s{{"success", r.success},
               {"rounds", r.rounds_used},
               {"wall_seconds", r.wall_seconds}};
        if (r.success) {
            s["accpm_iterations"] = r.certificate->accpm_trace.size();
        } else {
            s["reason"] = r.reason;
        }
        return s;
    };

    PipelineConfig base = cfg;
    base.finetune = false;
    PipelineConfig tuned = cfg;
    tuned.finetune = true;

    SynthesisResult r_base = synthesize(base, sink);
    SynthesisResult r_tuned = synthesize(tuned, sink);
    return json{{"baseline", summarize(r_base)}, {"finetuned", summarize(r_tuned)}};
}

}  // namespace nbf
