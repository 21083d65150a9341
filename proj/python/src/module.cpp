// Python bindings over the main operations. Everything crosses the boundary
// as JSON text; the pure-python package turns that into dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <chrono>
#include <ctime>
#include <string>
#include <vector>

#include "nbf/pipeline.hpp"

namespace py = pybind11;

namespace {

using nbf::json;

std::string iso_now() {
    std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    return std::string(buf);
}

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
    cert.created = iso_now();
    return cert;
}

std::string synthesize_json(const std::string& config_text) {
    nbf::PipelineConfig cfg = nbf::PipelineConfig::from_json(json::parse(config_text));
    nbf::SynthesisResult res = nbf::synthesize(cfg);
    json out{{"success", res.success},
             {"rounds", res.rounds_used},
             {"wall_seconds", res.wall_seconds},
             {"log", res.log}};
    if (res.success) {
        out["certificate"] = res.certificate->to_json();
    } else {
        out["reason"] = res.reason;
    }
    return out.dump();
}

std::string finetune_json(const std::string& config_text) {
    nbf::PipelineConfig cfg = nbf::PipelineConfig::from_json(json::parse(config_text));

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
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json out{{"status", acc.status == nbf::AccpmResult::Status::Feasible ? "feasible"
                        : acc.status == nbf::AccpmResult::Status::Empty ? "empty"
                                                                        : "budget"},
             {"iterations", acc.iterations},
             {"s_star", acc.s_star},
             {"stop_reason", acc.stop_reason},
             {"wall_seconds", wall},
             {"trace", acc.trace}};
    if (acc.status == nbf::AccpmResult::Status::Feasible) {
        nbf::VerifierConfig vcfg = cfg.accpm.verifier;
        vcfg.seed = rng.fork("reverify").seed();
        nbf::VerificationReport again =
            nbf::verify_barrier(acc.barrier, cfg.system, cfg.spec, vcfg);
        if (again.certified()) {
            out["certificate"] = make_certificate(cfg, acc, again, wall).to_json();
        } else {
            out["status"] = "budget";
            out["stop_reason"] = "reverification_failed";
        }
    }
    return out.dump();
}

std::string verify_json(const std::string& cert_text, uint64_t seed) {
    nbf::Certificate cert = nbf::Certificate::from_json(json::parse(cert_text));
    nbf::VerifierConfig vcfg;
    vcfg.seed = seed;
    nbf::VerificationReport report =
        nbf::verify_barrier(cert.barrier, cert.system, cert.spec, vcfg);
    json out{{"certified", report.certified()}, {"report", report.to_json()}};
    return out.dump();
}

std::string simulate_json(const std::string& cert_text, size_t rollouts, size_t steps,
                          uint64_t seed) {
    nbf::Certificate cert = nbf::Certificate::from_json(json::parse(cert_text));
    nbf::Rng rng = nbf::Rng(seed).fork("simulate");
    size_t unsafe = 0, exited = 0;
    for (size_t k = 0; k < rollouts; ++k) {
        Eigen::VectorXd x0 = rng.uniform_vector(cert.spec.initial.lo, cert.spec.initial.hi);
        nbf::RolloutResult r = nbf::rollout(cert.system, cert.spec, x0, steps);
        if (r.unsafe) ++unsafe;
        if (!r.trajectory.empty() && !cert.spec.workspace.contains(r.trajectory.back())) ++exited;
    }
    json out{{"rollouts", rollouts}, {"steps", steps}, {"unsafe", unsafe},
             {"exited_workspace", exited}};
    return out.dump();
}

std::vector<double> barrier_values(const std::string& cert_text,
                                   const std::vector<double>& state) {
    nbf::Certificate cert = nbf::Certificate::from_json(json::parse(cert_text));
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(state.data(),
                                                          static_cast<Eigen::Index>(state.size()));
    Eigen::VectorXd v = cert.barrier.eval(x);
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Learn, fine-tune, and verify neural vector barrier certificates "
              "for discrete-time closed-loop systems.";
    m.attr("__version__") = nbf::kToolVersion;
    m.def("synthesize_json", &synthesize_json, py::arg("config"),
          py::call_guard<py::gil_scoped_release>(),
          "Run the full synthesis pipeline on a JSON config string; returns a JSON summary "
          "with the certificate on success.");
    m.def("finetune_json", &finetune_json, py::arg("config"),
          py::call_guard<py::gil_scoped_release>(),
          "Run only the cutting-plane fine-tuner from a fresh barrier; returns a JSON summary "
          "(status feasible/empty/budget).");
    m.def("verify_json", &verify_json, py::arg("certificate"), py::arg("seed") = 1,
          py::call_guard<py::gil_scoped_release>(),
          "Re-verify a certificate JSON string from scratch; returns the fresh report.");
    m.def("simulate_json", &simulate_json, py::arg("certificate"), py::arg("rollouts") = 1000,
          py::arg("steps") = 200, py::arg("seed") = 0,
          py::call_guard<py::gil_scoped_release>(),
          "Monte-carlo rollouts of a certificate's closed loop; counts unsafe visits.");
    m.def("barrier_values", &barrier_values, py::arg("certificate"), py::arg("state"),
          "Evaluate a certificate's barrier at one state; returns the m component values.");
}
