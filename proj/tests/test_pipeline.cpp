#include "doctest.h"

#include <cstdio>
#include <Eigen/Dense>
#include <fstream>

#include "nbf/pipeline.hpp"

using nbf::PipelineConfig;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

nbf::json base_config() {
    return nbf::json::parse(R"({
        "benchmark": "example1",
        "basis": "identity",
        "m": 2,
        "i_star": 1,
        "A": [[1.0, 1.0], [0.0, 1.0]],
        "samples": {"n0": 80, "nu": 80, "nx": 300},
        "train": {"epochs": 1500, "train_a": false},
        "accpm": {"max_iters": 60, "budget_seconds": 120},
        "rounds": 3,
        "budget_seconds": 120,
        "finetune": true,
        "seed": 7
    })");
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& p) : path(p) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("pipeline config parses the full document") {
    PipelineConfig cfg = PipelineConfig::from_json(base_config());
    CHECK(cfg.benchmark == "example1");
    CHECK(cfg.basis == nbf::Basis::Identity);
    CHECK(cfg.m == 2);
    CHECK(cfg.i_star == 0);  // JSON is 1-based
    REQUIRE(cfg.fixed_a.has_value());
    CHECK((*cfg.fixed_a)(0, 1) == doctest::Approx(1.0));
    CHECK(cfg.n0 == 80);
    CHECK(cfg.nu == 80);
    CHECK(cfg.nx == 300);
    CHECK(cfg.train.epochs == 1500);
    CHECK(cfg.train.train_a == false);
    CHECK(cfg.accpm.max_iters == 60);
    CHECK(cfg.rounds == 3);
    CHECK(cfg.finetune == true);
    CHECK(cfg.seed == 7);
    CHECK(cfg.raw == base_config());
}

TEST_CASE("pipeline config rejects malformed documents") {
    nbf::json j = base_config();
    j.erase("benchmark");
    CHECK_THROWS_AS(PipelineConfig::from_json(j), std::invalid_argument);

    j = base_config();
    j["basis"] = "fourier";
    CHECK_THROWS_AS(PipelineConfig::from_json(j), std::invalid_argument);

    j = base_config();
    j["A"] = {{1.0, 0.0}};  // 1x2, not m x m
    CHECK_THROWS_AS(PipelineConfig::from_json(j), std::invalid_argument);

    j = base_config();
    j["A"] = {{1.0, -0.5}, {0.0, 1.0}};
    CHECK_THROWS_AS(PipelineConfig::from_json(j), std::invalid_argument);

    j = base_config();
    j["i_star"] = 3;
    CHECK_THROWS_AS(PipelineConfig::from_json(j), std::invalid_argument);

    j = base_config();
    j["i_star"] = 0;  // 1-based in documents
    CHECK_THROWS_AS(PipelineConfig::from_json(j), std::invalid_argument);

    j = base_config();
    j["basis"] = "mlp";  // needs phi_sizes
    CHECK_THROWS_AS(PipelineConfig::from_json(j), std::invalid_argument);

    j = base_config();
    j["basis"] = "mlp";
    j["phi_sizes"] = {3, 8, 4};  // state dimension is 2
    CHECK_THROWS_AS(PipelineConfig::from_json(j), std::invalid_argument);

    j = base_config();
    j["extra_samples"] = {{"s0", {{9.0, 9.0}}}};  // outside the initial set
    CHECK_THROWS_AS(PipelineConfig::from_json(j), std::invalid_argument);
}

TEST_CASE("pipeline config applies workspace overrides on top of a benchmark") {
    nbf::json j{{"benchmark", "double_integrator"},
                {"workspace", {{"lo", {-0.5, -1.0}}, {"hi", {3.0, 0.5}}}}};
    PipelineConfig cfg = PipelineConfig::from_json(j);
    CHECK(cfg.spec.workspace.lo[0] == doctest::Approx(-0.5));
    CHECK(cfg.spec.workspace.hi[1] == doctest::Approx(0.5));
    // Benchmark defaults survive the override.
    CHECK(cfg.basis == nbf::Basis::MlpNet);
    CHECK(cfg.phi_sizes == std::vector<Eigen::Index>{2, 30, 20, 10});
    CHECK(cfg.m == 5);
    CHECK(cfg.spec.initial.lo[0] == doctest::Approx(2.5));

    // An override that evicts the initial set from the workspace is invalid.
    nbf::json bad{{"benchmark", "double_integrator"},
                  {"workspace", {{"lo", {-0.5, -1.0}}, {"hi", {2.0, 0.5}}}}};
    CHECK_THROWS_AS(PipelineConfig::from_json(bad), std::invalid_argument);
}

TEST_CASE("extra samples are folded into the synthesis sample set") {
    nbf::json j = base_config();
    j["extra_samples"] = {{"s0", {{0.6, 0.25}, {0.9, 0.35}}}, {"sx", {{1.5, 1.0}}}};
    PipelineConfig cfg = PipelineConfig::from_json(j);
    CHECK(cfg.extra_samples.s0.size() == 2);
    CHECK(cfg.extra_samples.sx.size() == 1);
    CHECK(cfg.extra_samples.s0[1][1] == doctest::Approx(0.35));
}

TEST_CASE("synthesis produces a verifiable certificate on the linear benchmark") {
    PipelineConfig cfg = PipelineConfig::from_json(base_config());
    std::vector<nbf::json> events;
    nbf::SynthesisResult res =
        nbf::synthesize(cfg, [&](const nbf::json& e) { events.push_back(e); });

    REQUIRE(res.success);
    REQUIRE(res.certificate.has_value());
    const nbf::Certificate& cert = *res.certificate;
    CHECK(cert.report.certified());
    CHECK(cert.report.conditions.size() == 5);
    CHECK(cert.version == std::string(nbf::kToolVersion));
    CHECK(cert.seed == 7);
    CHECK(cert.benchmark == "example1");
    CHECK(cert.wall_seconds > 0.0);
    CHECK(cert.created.size() == 20);  // YYYY-MM-DDTHH:MM:SSZ
    CHECK(cert.created[10] == 'T');
    CHECK(cert.created.back() == 'Z');
    CHECK_NOTHROW(cert.barrier.validate());
    CHECK((cert.barrier.A - *cfg.fixed_a).norm() == doctest::Approx(0.0));

    REQUIRE(!events.empty());
    CHECK(events.front().at("event") == "start");
    CHECK(events.back().at("event") == "success");
    CHECK(res.log.size() == events.size());

    // Independent re-verification with a different seed.
    nbf::VerifierConfig vcfg;
    vcfg.seed = 12345;
    CHECK(nbf::verify_barrier(cert.barrier, cert.system, cert.spec, vcfg).certified());

    // Trajectories from the certified system never reach the unsafe set.
    nbf::Rng rng(99);
    for (int k = 0; k < 200; ++k) {
        VectorXd x0 = rng.uniform_vector(cert.spec.initial.lo, cert.spec.initial.hi);
        CHECK_FALSE(nbf::rollout(cert.system, cert.spec, x0, 200).unsafe);
    }
}

TEST_CASE("certificates survive a save/load round trip") {
    PipelineConfig cfg = PipelineConfig::from_json(base_config());
    nbf::SynthesisResult res = nbf::synthesize(cfg);
    REQUIRE(res.success);

    TempFile tmp("test_cert_roundtrip.json");
    nbf::save_certificate(*res.certificate, tmp.path);
    nbf::Certificate back = nbf::load_certificate(tmp.path);
    CHECK(back.version == res.certificate->version);
    CHECK(back.seed == res.certificate->seed);
    CHECK(back.benchmark == "example1");
    CHECK((back.barrier.C - res.certificate->barrier.C).norm() == doctest::Approx(0.0));
    CHECK(back.report.certified());
    CHECK(back.report.conditions.size() == 5);
    CHECK(back.config == cfg.raw);

    // A certificate whose report no longer certifies must be rejected.
    nbf::json doc = res.certificate->to_json();
    doc["report"]["conditions"][0]["verdict"] = "falsified";
    {
        std::ofstream f(tmp.path);
        f << doc.dump(2);
    }
    CHECK_THROWS(nbf::load_certificate(tmp.path));

    // Structural damage (wrong report arity) is also rejected.
    doc = res.certificate->to_json();
    doc["report"]["conditions"].erase(4);
    {
        std::ofstream f(tmp.path);
        f << doc.dump(2);
    }
    CHECK_THROWS(nbf::load_certificate(tmp.path));
}

TEST_CASE("an infeasible fixed class fails conclusively through the pipeline") {
    nbf::json j = base_config();
    j["m"] = 1;
    j["i_star"] = 1;
    j["A"] = {{0.5}};
    j["rounds"] = 2;
    PipelineConfig cfg = PipelineConfig::from_json(j);
    nbf::SynthesisResult res = nbf::synthesize(cfg);
    CHECK_FALSE(res.success);
    CHECK(res.reason == "conditions_empty");
    REQUIRE(!res.log.empty());
    CHECK(res.log.back().at("event") == "failure");
}

TEST_CASE("compare harness reports both arms") {
    nbf::json j = base_config();
    j["rounds"] = 2;
    j["budget_seconds"] = 90;
    PipelineConfig cfg = PipelineConfig::from_json(j);
    nbf::json cmp = nbf::compare_harness(cfg);
    REQUIRE(cmp.contains("baseline"));
    REQUIRE(cmp.contains("finetuned"));
    CHECK(cmp["baseline"].contains("success"));
    CHECK(cmp["finetuned"].contains("success"));
    CHECK(cmp["baseline"].contains("wall_seconds"));
    CHECK(cmp["finetuned"].contains("rounds"));
    // The fine-tuned arm must certify this benchmark.
    CHECK(cmp["finetuned"]["success"].get<bool>());
}

TEST_CASE("certificate json encodes an absent benchmark as null") {
    nbf::Certificate cert;
    cert.created = "2026-01-01T00:00:00Z";
    cert.system = nbf::builtin("example1").system;
    cert.spec = nbf::builtin("example1").spec;
    nbf::Rng rng(1);
    cert.barrier = nbf::random_barrier(nbf::Basis::Identity, {}, 2, 2, rng);
    nbf::json j = cert.to_json();
    CHECK(j.at("benchmark").is_null());
    nbf::Certificate back = nbf::Certificate::from_json(j);
    CHECK(back.benchmark.empty());
}
