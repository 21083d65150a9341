#include "nbf/system.hpp"

#include <fstream>
#include <stdexcept>

namespace nbf {

// Defined in the generated embedded_controllers.cpp.
extern const char* kDoubleIntegratorControllerJson;
extern const char* kQuadrotorControllerJson;

Eigen::VectorXd ClosedLoop::step(const Eigen::VectorXd& x) const {
    if (x.size() != dynamics.state_dim()) throw std::invalid_argument("step: dimension mismatch");
    if (!controller) return dynamics.a_d * x + dynamics.c_d;
    return dynamics.a_d * x + dynamics.b_d * controller->forward(x) + dynamics.c_d;
}

void ClosedLoop::validate() const {
    if (dynamics.a_d.rows() != dynamics.a_d.cols())
        throw std::invalid_argument("dynamics A must be square");
    if (dynamics.b_d.rows() != dynamics.a_d.rows() || dynamics.c_d.size() != dynamics.a_d.rows())
        throw std::invalid_argument("dynamics B/c dimension mismatch");
    if (controller) {
        controller->validate();
        if (controller->in_dim() != dynamics.state_dim() ||
            controller->out_dim() != dynamics.input_dim())
            throw std::invalid_argument("controller dimensions do not match dynamics");
    }
}

json ClosedLoop::to_json() const {
    json j{{"A", nbf::to_json(dynamics.a_d)},
           {"B", nbf::to_json(dynamics.b_d)},
           {"c", nbf::to_json(dynamics.c_d)}};
    j["controller"] = controller ? controller->to_json() : json(nullptr);
    return j;
}

ClosedLoop ClosedLoop::from_json(const json& j) {
    ClosedLoop sys;
    sys.dynamics.a_d = matrix_from_json(j.at("A"));
    sys.dynamics.b_d = matrix_from_json(j.at("B"));
    sys.dynamics.c_d = vector_from_json(j.at("c"));
    if (j.contains("controller") && !j.at("controller").is_null()) {
        const json& c = j.at("controller");
        if (c.is_string()) {
            // path to a weights file
            std::ifstream f(c.get<std::string>());
            if (!f) throw std::runtime_error("cannot open controller file: " + c.get<std::string>());
            sys.controller = Mlp::from_json(json::parse(f));
        } else {
            sys.controller = Mlp::from_json(c);  // inline weights
        }
    }
    sys.validate();
    return sys;
}

RolloutResult rollout(const ClosedLoop& sys, const SafetySpec& spec, const Eigen::VectorXd& x0,
                      size_t k_max) {
    if (!spec.initial.contains(x0)) throw std::invalid_argument("rollout start is outside the initial set");
    RolloutResult r;
    Eigen::VectorXd x = x0;
    r.trajectory.push_back(x);
    for (size_t k = 0;; ++k) {
        if (!spec.workspace.contains(x)) break;  // left the workspace; later states are out of scope
        if (spec.unsafe.contains(x)) {
            r.unsafe = true;
            break;
        }
        if (k == k_max) break;
        x = sys.step(x);
        r.trajectory.push_back(x);
    }
    return r;
}

Mlp bundled_controller(const std::string& name) {
    if (name == "double_integrator") return Mlp::from_json(json::parse(kDoubleIntegratorControllerJson));
    if (name == "quadrotor6d") return Mlp::from_json(json::parse(kQuadrotorControllerJson));
    throw std::invalid_argument("unknown bundled controller: " + name);
}

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

}  // namespace

BenchmarkDef builtin(const std::string& name) {
    BenchmarkDef def;
    if (name == "example1") {
        def.system.dynamics.a_d.resize(2, 2);
        def.system.dynamics.a_d << 1, 1, 0, 1;
        def.system.dynamics.b_d = Eigen::MatrixXd::Zero(2, 1);
        def.system.dynamics.c_d = Eigen::VectorXd::Zero(2);
        def.spec.workspace = Box(vec2(-2.0, 0.0), vec2(2.0, 2.0));
        def.spec.initial = Box(vec2(0.5, 0.2), vec2(1.0, 0.4));
        def.spec.unsafe = Box(vec2(-1.5, 0.5), vec2(-1.0, 1.5));
        def.barrier_arch = {};  // identity basis
        def.barrier_m = 2;
    } else if (name == "double_integrator") {
        def.system.dynamics.a_d.resize(2, 2);
        def.system.dynamics.a_d << 1, 1, 0, 1;
        def.system.dynamics.b_d.resize(2, 1);
        def.system.dynamics.b_d << 0.5, 1.0;
        def.system.dynamics.c_d = Eigen::VectorXd::Zero(2);
        def.system.controller = bundled_controller("double_integrator");
        def.spec.workspace = Box(vec2(-3.0, -3.0), vec2(3.0, 3.0));
        def.spec.initial = Box(vec2(2.5, -0.5), vec2(2.8, 0.0));
        def.spec.unsafe = Box(vec2(1.5, -0.25), vec2(1.8, 0.0));
        def.barrier_arch = {2, 30, 20, 10};
        def.barrier_m = 5;
    } else if (name == "quadrotor6d") {
        const double dt = 0.1, g = 9.81;
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(6, 6);
        A.topRightCorner(3, 3) += dt * Eigen::MatrixXd::Identity(3, 3);
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 3);
        B(3, 0) = dt * g;
        B(4, 1) = -dt * g;
        B(5, 2) = dt;
        Eigen::VectorXd c = Eigen::VectorXd::Zero(6);
        c[5] = -dt * g;
        def.system.dynamics = {A, B, c};
        def.system.controller = bundled_controller("quadrotor6d");
        Eigen::VectorXd xlo(6), xhi(6), ilo(6), ihi(6), ulo(6), uhi(6);
        xlo << 4.0, 4.0, 2.5, -1.0, -1.0, -1.0;
        xhi << 5.0, 5.0, 3.5, 1.0, 1.0, 1.0;
        ilo << 4.69, 4.65, 2.975, 0.9499, -0.0001, -0.0001;
        ihi << 4.71, 4.75, 3.025, 0.9501, 0.0001, 0.0001;
        ulo << 4.4, 4.3, 2.9, 0.95, -0.1, -0.1;
        uhi << 4.45, 4.35, 3.0, 1.0, 0.1, 0.1;
        def.spec.workspace = Box(xlo, xhi);
        def.spec.initial = Box(ilo, ihi);
        def.spec.unsafe = Box(ulo, uhi);
        def.barrier_arch = {6, 100, 80, 60, 40, 20};
        def.barrier_m = 10;
    } else {
        throw std::invalid_argument("unknown benchmark: " + name);
    }
    def.system.validate();
    def.spec.validate();
    return def;
}

}  // namespace nbf
