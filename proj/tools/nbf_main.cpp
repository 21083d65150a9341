// nbf: synthesize, fine-tune, verify, simulate, plot, and compare neural
// vector barrier certificates for discrete-time closed-loop systems.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "nbf/pipeline.hpp"

namespace {

using nbf::json;

// JSON-lines event logging plus optional progress echo on stderr.
struct Sink {
    std::ofstream file;
    bool quiet = false;

    nbf::LogSink make() {
        return [this](const json& e) {
            if (file.is_open()) file << e.dump() << "\n" << std::flush;
            if (!quiet) std::cerr << e.dump() << "\n";
        };
    }
};

nbf::Certificate make_certificate(const nbf::PipelineConfig& cfg, const nbf::AccpmResult& acc,
                                  const nbf::VerificationReport& report, double wall) {
    nbf::Certificate cert;
    cert.seed = cfg.seed;
    cert.benchmark = cfg.benchmark;
    cert.system = cfg.system;
    cert.spec = cfg.spec;
    cert.barrier = acc.barrier;
    cert.report = report;
    cert.accpm_trace = acc.trace;
    cert.config = cfg.raw;
    cert.wall_seconds = wall;
    cert.created = [] {
        std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
        return std::string(buf);
    }();
    return cert;
}

int cmd_synth(const std::string& config_path, const std::string& out_path,
              const std::string& log_path, bool no_finetune, long long seed_override,
              bool quiet) {
    nbf::PipelineConfig cfg = nbf::PipelineConfig::load(config_path);
    if (no_finetune) cfg.finetune = false;
    if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);

    Sink sink;
    sink.quiet = quiet;
    if (!log_path.empty()) sink.file.open(log_path);

    nbf::SynthesisResult res = nbf::synthesize(cfg, sink.make());
    json summary{{"success", res.success},
                 {"rounds", res.rounds_used},
                 {"wall_seconds", res.wall_seconds}};
    if (res.success) {
        if (!out_path.empty()) nbf::save_certificate(*res.certificate, out_path);
        summary["certificate"] = out_path.empty() ? json(nullptr) : json(out_path);
    } else {
        summary["reason"] = res.reason;
    }
    std::cout << summary.dump(2) << "\n";
    return res.success ? 0 : 2;
}

int cmd_finetune(const std::string& config_path, const std::string& out_path,
                 const std::string& log_path, long long seed_override, bool quiet) {
    nbf::PipelineConfig cfg = nbf::PipelineConfig::load(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);

    Sink sink;
    sink.quiet = quiet;
    if (!log_path.empty()) sink.file.open(log_path);
    auto emit = sink.make();

    const auto t0 = std::chrono::steady_clock::now();
    nbf::Rng rng(cfg.seed);
    nbf::Rng srng = rng.fork("samples");
    nbf::SampleSet samples = nbf::sample_spec(cfg.spec, cfg.n0, cfg.nu, cfg.nx, srng);
    for (const auto& x : cfg.extra_samples.s0) samples.s0.push_back(x);
    for (const auto& x : cfg.extra_samples.su) samples.su.push_back(x);
    for (const auto& x : cfg.extra_samples.sx) samples.sx.push_back(x);

    nbf::Rng init_rng = rng.fork("init");
    nbf::VectorBarrier bf = nbf::random_barrier(cfg.basis, cfg.phi_sizes, cfg.m,
                                                cfg.spec.workspace.dim(), init_rng);
    bf.i_star = cfg.i_star;
    if (cfg.fixed_a) bf.A = *cfg.fixed_a;
    bf.validate();

    nbf::AccpmConfig acfg = cfg.accpm;
    acfg.seed = rng.fork("accpm").seed();
    acfg.budget_seconds = std::min(acfg.budget_seconds, cfg.budget_seconds);
    nbf::AccpmResult acc = nbf::accpm_finetune(bf, cfg.system, cfg.spec, samples, acfg);
    for (const json& rec : acc.trace) emit(rec);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json summary{{"status", acc.status == nbf::AccpmResult::Status::Feasible ? "feasible"
                            : acc.status == nbf::AccpmResult::Status::Empty ? "empty"
                                                                            : "budget"},
                 {"iterations", acc.iterations},
                 {"s_star", acc.s_star},
                 {"stop_reason", acc.stop_reason},
                 {"wall_seconds", wall}};

    if (acc.status == nbf::AccpmResult::Status::Feasible) {
        // Independent re-verification before a certificate leaves the tool.
        nbf::VerifierConfig vcfg = cfg.accpm.verifier;
        vcfg.seed = rng.fork("reverify").seed();
        nbf::VerificationReport report2 =
            nbf::verify_barrier(acc.barrier, cfg.system, cfg.spec, vcfg);
        if (!report2.certified()) {
            summary["status"] = "budget";
            summary["stop_reason"] = "reverification_failed";
            std::cout << summary.dump(2) << "\n";
            return 2;
        }
        if (!out_path.empty()) {
            nbf::save_certificate(make_certificate(cfg, acc, report2, wall), out_path);
            summary["certificate"] = out_path;
        }
        std::cout << summary.dump(2) << "\n";
        return 0;
    }
    std::cout << summary.dump(2) << "\n";
    return acc.status == nbf::AccpmResult::Status::Empty ? 3 : 2;
}

int cmd_verify(const std::string& cert_path, bool quiet) {
    nbf::Certificate cert = nbf::load_certificate(cert_path);
    nbf::VerifierConfig vcfg;
    vcfg.seed = 1;
    nbf::VerificationReport report =
        nbf::verify_barrier(cert.barrier, cert.system, cert.spec, vcfg);
    if (!quiet) {
        for (const nbf::ConditionStatus& st : report.conditions) {
            std::cerr << st.condition << ": "
                      << (st.verdict == nbf::ConditionStatus::Verdict::Certified ? "certified"
                          : st.verdict == nbf::ConditionStatus::Verdict::Falsified
                              ? "falsified"
                              : "unknown")
                      << " (lower bound " << st.lower_bound << ")\n";
        }
    }
    std::cout << report.to_json().dump(2) << "\n";
    return report.certified() ? 0 : 2;
}

int cmd_simulate(const std::string& cert_path, size_t rollouts, size_t steps, uint64_t seed) {
    nbf::Certificate cert = nbf::load_certificate(cert_path);
    nbf::Rng rng = nbf::Rng(seed).fork("simulate");
    size_t unsafe = 0, exited = 0;
    for (size_t k = 0; k < rollouts; ++k) {
        Eigen::VectorXd x0 =
            rng.uniform_vector(cert.spec.initial.lo, cert.spec.initial.hi);
        nbf::RolloutResult r = nbf::rollout(cert.system, cert.spec, x0, steps);
        if (r.unsafe) ++unsafe;
        if (!r.trajectory.empty() && !cert.spec.workspace.contains(r.trajectory.back())) {
            ++exited;
        }
    }
    json summary{{"rollouts", rollouts}, {"steps", steps}, {"unsafe", unsafe},
                 {"exited_workspace", exited}};
    std::cout << summary.dump(2) << "\n";
    return unsafe == 0 ? 0 : 2;
}

int cmd_plot(const std::string& cert_path, const std::string& out_path, size_t grid,
             size_t trajectories, size_t steps, uint64_t seed) {
    nbf::Certificate cert = nbf::load_certificate(cert_path);
    if (cert.spec.workspace.dim() != 2) {
        std::cerr << "plot: only 2-dimensional state spaces can be gridded\n";
        return 1;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    const Eigen::Index m = cert.barrier.m();
    out << "x1,x2";
    for (Eigen::Index i = 0; i < m; ++i) out << ",B" << (i + 1);
    out << "\n";
    const nbf::Box& X = cert.spec.workspace;
    out.precision(17);
    for (size_t i = 0; i < grid; ++i) {
        double x1 = X.lo[0] + (X.hi[0] - X.lo[0]) * static_cast<double>(i) /
                                  static_cast<double>(grid - 1);
        for (size_t j = 0; j < grid; ++j) {
            double x2 = X.lo[1] + (X.hi[1] - X.lo[1]) * static_cast<double>(j) /
                                      static_cast<double>(grid - 1);
            Eigen::VectorXd x(2);
            x << x1, x2;
            Eigen::VectorXd B = cert.barrier.eval(x);
            out << x1 << "," << x2;
            for (Eigen::Index r = 0; r < m; ++r) out << "," << B[r];
            out << "\n";
        }
    }

    std::string traj_path = out_path + ".traj.csv";
    // Conventional sibling name: grid.csv -> grid.traj.csv.
    if (out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".csv") {
        traj_path = out_path.substr(0, out_path.size() - 4) + ".traj.csv";
    }
    std::ofstream tout(traj_path);
    if (!tout) throw std::runtime_error("cannot write " + traj_path);
    tout.precision(17);
    tout << "trajectory,step,x1,x2\n";
    nbf::Rng rng = nbf::Rng(seed).fork("plot");
    for (size_t k = 0; k < trajectories; ++k) {
        Eigen::VectorXd x0 = rng.uniform_vector(cert.spec.initial.lo, cert.spec.initial.hi);
        nbf::RolloutResult r = nbf::rollout(cert.system, cert.spec, x0, steps);
        for (size_t s = 0; s < r.trajectory.size(); ++s) {
            tout << k << "," << s << "," << r.trajectory[s][0] << "," << r.trajectory[s][1]
                 << "\n";
        }
    }
    std::cerr << "wrote " << out_path << " and " << traj_path << "\n";
    return 0;
}

int cmd_compare(const std::string& config_path, const std::string& out_path, bool quiet) {
    nbf::PipelineConfig cfg = nbf::PipelineConfig::load(config_path);
    Sink sink;
    sink.quiet = quiet;
    json cmp = nbf::compare_harness(cfg, sink.make());
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << cmp.dump(2) << "\n";
    }
    std::cout << cmp.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"neural vector barrier certificates for closed-loop safety"};
    app.require_subcommand(1);

    std::string config_path, cert_path, out_path, log_path;
    bool no_finetune = false, quiet = false;
    long long seed_override = -1;
    size_t rollouts = 10000, steps = 200, grid = 101, trajectories = 20;
    uint64_t seed = 0;

    CLI::App* synth = app.add_subcommand("synth", "train and verify a barrier end to end");
    synth->add_option("--config", config_path, "pipeline config JSON")->required();
    synth->add_option("--out", out_path, "write the certificate here");
    synth->add_option("--log", log_path, "append JSON-lines events here");
    synth->add_flag("--no-finetune", no_finetune, "skip the cutting-plane fine-tuner");
    synth->add_option("--seed", seed_override, "override the config seed");
    synth->add_flag("--quiet", quiet, "suppress progress on stderr");

    CLI::App* fine = app.add_subcommand("finetune", "cutting-plane synthesis of (C, b) only");
    fine->add_option("--config", config_path, "pipeline config JSON")->required();
    fine->add_option("--out", out_path, "write the certificate here");
    fine->add_option("--log", log_path, "append JSON-lines events here");
    fine->add_option("--seed", seed_override, "override the config seed");
    fine->add_flag("--quiet", quiet, "suppress progress on stderr");

    CLI::App* verify = app.add_subcommand("verify", "re-verify a stored certificate");
    verify->add_option("--cert", cert_path, "certificate JSON")->required();
    verify->add_flag("--quiet", quiet, "suppress the per-condition listing");

    CLI::App* sim = app.add_subcommand("simulate", "roll the closed loop out from the initial set");
    sim->add_option("--cert", cert_path, "certificate JSON")->required();
    sim->add_option("--rollouts", rollouts, "number of rollouts");
    sim->add_option("--steps", steps, "steps per rollout");
    sim->add_option("--seed", seed, "sampling seed");

    CLI::App* plot = app.add_subcommand("plot", "grid the barrier over a 2-D workspace as CSV");
    plot->add_option("--cert", cert_path, "certificate JSON")->required();
    plot->add_option("--out", out_path, "output CSV path")->required();
    plot->add_option("--grid", grid, "grid resolution per axis");
    plot->add_option("--trajectories", trajectories, "sample rollouts for the sibling CSV");
    plot->add_option("--steps", steps, "steps per rollout");
    plot->add_option("--seed", seed, "sampling seed");

    CLI::App* cmp = app.add_subcommand("compare", "pipeline with vs without the fine-tuner");
    cmp->add_option("--config", config_path, "pipeline config JSON")->required();
    cmp->add_option("--out", out_path, "write the comparison JSON here");
    cmp->add_flag("--quiet", quiet, "suppress progress on stderr");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return cmd_synth(config_path, out_path, log_path, no_finetune, seed_override, quiet);
        }
        if (fine->parsed()) {
            return cmd_finetune(config_path, out_path, log_path, seed_override, quiet);
        }
        if (verify->parsed()) return cmd_verify(cert_path, quiet);
        if (sim->parsed()) return cmd_simulate(cert_path, rollouts, steps, seed);
        if (plot->parsed()) {
            return cmd_plot(cert_path, out_path, grid, trajectories, steps, seed);
        }
        if (cmp->parsed()) return cmd_compare(config_path, out_path, quiet);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
