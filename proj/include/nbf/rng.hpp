// Deterministic random source. Every consumer forks its own labeled stream so
// adding a sampling site never shifts the draws seen elsewhere.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>

namespace nbf {

class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

    // Independent stream derived from this seed and a site label.
    Rng fork(const std::string& label) const {
        uint64_t h = seed_ ^ 0x9e3779b97f4a7c15ull;
        for (unsigned char c : label) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        // splitmix-style finalizer to decorrelate nearby seeds/labels
        h ^= h >> 30; h *= 0xbf58476d1ce4e5b9ull;
        h ^= h >> 27; h *= 0x94d049bb133111ebull;
        h ^= h >> 31;
        return Rng(h);
    }

    uint64_t seed() const { return seed_; }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

    // Index in [0, n).
    size_t index(size_t n) {
        return std::uniform_int_distribution<size_t>(0, n - 1)(gen_);
    }

    Eigen::VectorXd uniform_vector(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
        Eigen::VectorXd x(lo.size());
        for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = uniform(lo[i], hi[i]);
        return x;
    }

    std::mt19937_64& gen() { return gen_; }

private:
    uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace nbf
