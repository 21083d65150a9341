// Axis-aligned boxes and the safety problem domains built from them.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nbf/jsonio.hpp"
#include "nbf/rng.hpp"

namespace nbf {

struct Box {
    Eigen::VectorXd lo, hi;

    Box() = default;
    Box(Eigen::VectorXd l, Eigen::VectorXd h);

    Eigen::Index dim() const { return lo.size(); }
    Eigen::VectorXd width() const { return hi - lo; }
    Eigen::VectorXd center() const { return 0.5 * (lo + hi); }

    bool contains(const Eigen::VectorXd& x) const;
    Eigen::VectorXd project(const Eigen::VectorXd& x) const;
    std::vector<Eigen::VectorXd> sample_uniform(size_t n, Rng& rng) const;

    // Split along dimension d at its midpoint.
    std::pair<Box, Box> split(Eigen::Index d) const;
    // Index of the widest dimension.
    Eigen::Index widest_dim() const;
    // All 2^dim corner points (dim must be small).
    std::vector<Eigen::VectorXd> corners() const;

    json to_json() const;
    static Box from_json(const json& j);
};

// Workspace X, initial set X0, unsafe set Xu.
struct SafetySpec {
    Box workspace, initial, unsafe;

    void validate() const;  // initial and unsafe must lie inside the workspace
    json to_json() const;
    static SafetySpec from_json(const json& j);
};

// Finite sample sets drawn from X0, Xu, X.
struct SampleSet {
    std::vector<Eigen::VectorXd> s0, su, sx;

    size_t total() const { return s0.size() + su.size() + sx.size(); }
};

SampleSet sample_spec(const SafetySpec& spec, size_t n0, size_t nu, size_t nx, Rng& rng);

}  // namespace nbf
