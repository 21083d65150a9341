// End-to-end synthesis: sample, train, attack, verify, fine-tune, restart —
// until a verified certificate exists or the budget runs out. Certificates
// serialize the whole story: system, sets, barrier, verification report,
// fine-tuner trace, config echo, and seeds.
#pragma once

#include <functional>
#include <optional>

#include "nbf/accpm.hpp"

namespace nbf {

inline constexpr const char* kToolVersion = "0.3.0";

struct PipelineConfig {
    std::string benchmark;  // builtin name, empty when system/spec are inline
    ClosedLoop system;
    SafetySpec spec;

    Basis basis = Basis::MlpNet;
    std::vector<Eigen::Index> phi_sizes;  // in/hidden/out dims for the MlpNet basis
    Eigen::Index m = 1;
    Eigen::Index i_star = 0;  // 0-based internally (1-based in JSON)
    std::optional<Eigen::MatrixXd> fixed_a;

    size_t n0 = 100, nu = 100, nx = 400;
    SampleSet extra_samples;  // forced into the sample set before round 1

    TrainConfig train;
    AccpmConfig accpm;  // also supplies the verifier/attack configs pipeline-wide
    int rounds = 8;
    double budget_seconds = std::numeric_limits<double>::infinity();
    bool finetune = true;
    double shrink_lambda = 0.4;
    double shrink_sigma = 0.1;
    uint64_t seed = 0;

    json raw = json::object();  // original document, echoed into certificates

    static PipelineConfig from_json(const json& j);
    static PipelineConfig load(const std::string& path);
};

struct Certificate {
    std::string version = kToolVersion;
    std::string created;  // ISO-8601 UTC
    uint64_t seed = 0;
    std::string benchmark;
    ClosedLoop system;
    SafetySpec spec;
    VectorBarrier barrier;
    VerificationReport report;  // all conditions certified
    json accpm_trace = json::array();
    json config = json::object();
    double wall_seconds = 0.0;

    json to_json() const;
    static Certificate from_json(const json& j);
};

void save_certificate(const Certificate& cert, const std::string& path);

// Parses and validates: the report must certify every condition and the
// barrier must satisfy its structural invariants. Throws otherwise.
Certificate load_certificate(const std::string& path);

struct SynthesisResult {
    bool success = false;
    std::optional<Certificate> certificate;
    std::string reason;  // failure cause when !success
    int rounds_used = 0;
    double wall_seconds = 0.0;
    json log = json::array();  // structured event records
};

using LogSink = std::function<void(const json&)>;

SynthesisResult synthesize(const PipelineConfig& cfg, const LogSink& sink = {});

// Run the pipeline with and without the fine-tuner on the same config/seed and
// summarize both arms.
json compare_harness(const PipelineConfig& cfg, const LogSink& sink = {});

}  // namespace nbf
