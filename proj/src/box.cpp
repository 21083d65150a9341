#include "nbf/box.hpp"

#include <stdexcept>

namespace nbf {

Box::Box(Eigen::VectorXd l, Eigen::VectorXd h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size()) throw std::invalid_argument("box lo/hi dimension mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) throw std::invalid_argument("box has lo > hi");
}

bool Box::contains(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw std::invalid_argument("contains: dimension mismatch");
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

Eigen::VectorXd Box::project(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw std::invalid_argument("project: dimension mismatch");
    return x.cwiseMax(lo).cwiseMin(hi);
}

std::vector<Eigen::VectorXd> Box::sample_uniform(size_t n, Rng& rng) const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(n);
    for (size_t k = 0; k < n; ++k) out.push_back(rng.uniform_vector(lo, hi));
    return out;
}

std::pair<Box, Box> Box::split(Eigen::Index d) const {
    double mid = 0.5 * (lo[d] + hi[d]);
    Box a = *this, b = *this;
    a.hi[d] = mid;
    b.lo[d] = mid;
    return {a, b};
}

Eigen::Index Box::widest_dim() const {
    Eigen::Index d = 0;
    width().maxCoeff(&d);
    return d;
}

std::vector<Eigen::VectorXd> Box::corners() const {
    const Eigen::Index n = dim();
    std::vector<Eigen::VectorXd> out;
    out.reserve(size_t{1} << n);
    for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
        Eigen::VectorXd c(n);
        for (Eigen::Index i = 0; i < n; ++i) c[i] = (mask >> i) & 1 ? hi[i] : lo[i];
        out.push_back(std::move(c));
    }
    return out;
}

json Box::to_json() const { return {{"lo", nbf::to_json(lo)}, {"hi", nbf::to_json(hi)}}; }

Box Box::from_json(const json& j) {
    return Box(vector_from_json(j.at("lo")), vector_from_json(j.at("hi")));
}

void SafetySpec::validate() const {
    auto inside = [](const Box& inner, const Box& outer) {
        return (inner.lo.array() >= outer.lo.array()).all() &&
               (inner.hi.array() <= outer.hi.array()).all();
    };
    if (!inside(initial, workspace)) throw std::invalid_argument("initial set not inside workspace");
    if (!inside(unsafe, workspace)) throw std::invalid_argument("unsafe set not inside workspace");
}

json SafetySpec::to_json() const {
    return {{"workspace", workspace.to_json()},
            {"initial", initial.to_json()},
            {"unsafe", unsafe.to_json()}};
}

SafetySpec SafetySpec::from_json(const json& j) {
    SafetySpec s{Box::from_json(j.at("workspace")), Box::from_json(j.at("initial")),
                 Box::from_json(j.at("unsafe"))};
    s.validate();
    return s;
}

SampleSet sample_spec(const SafetySpec& spec, size_t n0, size_t nu, size_t nx, Rng& rng) {
    SampleSet s;
    Rng r0 = rng.fork("s0"), ru = rng.fork("su"), rx = rng.fork("sx");
    s.s0 = spec.initial.sample_uniform(n0, r0);
    s.su = spec.unsafe.sample_uniform(nu, ru);
    s.sx = spec.workspace.sample_uniform(nx, rx);
    return s;
}

}  // namespace nbf
