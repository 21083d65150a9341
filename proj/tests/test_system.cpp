#include "doctest.h"

#include <Eigen/Dense>

#include "nbf/system.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd v2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("closed loop without controller is the plain affine map") {
    nbf::ClosedLoop sys;
    sys.dynamics.a_d = MatrixXd(2, 2);
    sys.dynamics.a_d << 1.0, 1.0, 0.0, 1.0;
    sys.dynamics.b_d = MatrixXd::Zero(2, 1);
    sys.dynamics.c_d = v2(0.0, 0.0);
    sys.validate();

    VectorXd x = v2(0.7, 0.3);
    VectorXd y = sys.step(x);
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(0.3));
}

TEST_CASE("closed loop with controller adds B u(x) + c") {
    nbf::ClosedLoop sys;
    sys.dynamics.a_d = MatrixXd::Identity(2, 2);
    sys.dynamics.b_d = MatrixXd(2, 1);
    sys.dynamics.b_d << 0.5, 1.0;
    sys.dynamics.c_d = v2(0.1, -0.1);

    // Controller u(x) = relu(x1 + x2) via a 2-1-1 network.
    nbf::Mlp ctrl;
    MatrixXd w1(1, 2);
    w1 << 1.0, 1.0;
    MatrixXd w2(1, 1);
    w2 << 1.0;
    ctrl.layers = {{w1, VectorXd::Zero(1)}, {w2, VectorXd::Zero(1)}};
    sys.controller = ctrl;
    sys.validate();

    VectorXd x = v2(0.4, 0.2);  // u = 0.6
    VectorXd y = sys.step(x);
    CHECK(y[0] == doctest::Approx(0.4 + 0.5 * 0.6 + 0.1));
    CHECK(y[1] == doctest::Approx(0.2 + 1.0 * 0.6 - 0.1));

    VectorXd xa = v2(-1.0, 0.5);  // u = relu(-0.5) = 0
    VectorXd ya = sys.step(xa);
    CHECK(ya[0] == doctest::Approx(-1.0 + 0.1));
    CHECK(ya[1] == doctest::Approx(0.5 - 0.1));

    nbf::ClosedLoop bad = sys;
    bad.dynamics.b_d = MatrixXd::Zero(2, 2);  // controller emits 1 input, B expects 2
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("rollout walks until leaving the workspace and flags unsafe entry") {
    nbf::BenchmarkDef bench = nbf::builtin("example1");
    // Shear map: x1 <- x1 + x2 grows until x leaves the workspace on the right.
    VectorXd x0 = v2(0.6, 0.3);
    nbf::RolloutResult r = nbf::rollout(bench.system, bench.spec, x0, 200);
    CHECK_FALSE(r.unsafe);
    REQUIRE(r.trajectory.size() > 2);
    // With x2 = 0.3 the state needs 5 steps from 0.6 to exceed 2.0; the final
    // recorded state is the first one outside the workspace.
    const VectorXd& last = r.trajectory.back();
    CHECK(last[0] > 2.0);
    for (size_t k = 0; k + 1 < r.trajectory.size(); ++k)
        CHECK(bench.spec.workspace.contains(r.trajectory[k]));

    // Start outside the initial set is rejected.
    CHECK_THROWS_AS(nbf::rollout(bench.system, bench.spec, v2(0.0, 0.0), 10),
                    std::invalid_argument);

    // A spec whose unsafe set sits on the shear path flags the violation.
    nbf::SafetySpec trap = bench.spec;
    trap.unsafe = nbf::Box(v2(1.0, 0.2), v2(1.5, 0.5));
    nbf::RolloutResult caught = nbf::rollout(bench.system, trap, v2(0.75, 0.3), 200);
    CHECK(caught.unsafe);
    CHECK(trap.unsafe.contains(caught.trajectory.back()));
}

TEST_CASE("rollout respects the step budget") {
    nbf::ClosedLoop still;  // identity dynamics: never leaves, never unsafe
    still.dynamics.a_d = MatrixXd::Identity(2, 2);
    still.dynamics.b_d = MatrixXd::Zero(2, 1);
    still.dynamics.c_d = VectorXd::Zero(2);
    nbf::SafetySpec spec = nbf::builtin("example1").spec;
    nbf::RolloutResult r = nbf::rollout(still, spec, v2(0.6, 0.3), 25);
    CHECK(r.trajectory.size() == 26);  // x0 plus 25 steps
    CHECK_FALSE(r.unsafe);
}

TEST_CASE("example1 benchmark geometry is the documented instance") {
    nbf::BenchmarkDef bench = nbf::builtin("example1");
    CHECK(bench.barrier_m == 2);
    CHECK(bench.barrier_arch.empty());
    CHECK_FALSE(bench.system.controller.has_value());
    CHECK((bench.spec.workspace.lo - v2(-2.0, 0.0)).norm() == doctest::Approx(0.0));
    CHECK((bench.spec.workspace.hi - v2(2.0, 2.0)).norm() == doctest::Approx(0.0));
    CHECK((bench.spec.initial.lo - v2(0.5, 0.2)).norm() == doctest::Approx(0.0));
    CHECK((bench.spec.initial.hi - v2(1.0, 0.4)).norm() == doctest::Approx(0.0));
    CHECK((bench.spec.unsafe.lo - v2(-1.5, 0.5)).norm() == doctest::Approx(0.0));
    CHECK((bench.spec.unsafe.hi - v2(-1.0, 1.5)).norm() == doctest::Approx(0.0));
    CHECK_THROWS_AS(nbf::builtin("nope"), std::invalid_argument);
}

TEST_CASE("double integrator benchmark ships a working policy") {
    nbf::BenchmarkDef bench = nbf::builtin("double_integrator");
    REQUIRE(bench.system.controller.has_value());
    const nbf::Mlp& ctrl = *bench.system.controller;
    CHECK(ctrl.in_dim() == 2);
    CHECK(ctrl.out_dim() == 1);
    REQUIRE(ctrl.layers.size() == 3);
    CHECK(ctrl.layers[0].weight.rows() == 10);
    CHECK(ctrl.layers[1].weight.rows() == 5);
    CHECK(bench.barrier_m == 5);
    CHECK(bench.barrier_arch == std::vector<Eigen::Index>{2, 30, 20, 10});

    nbf::Rng rng(31);
    int unsafe = 0;
    for (int k = 0; k < 50; ++k) {
        VectorXd x0 = rng.uniform_vector(bench.spec.initial.lo, bench.spec.initial.hi);
        if (nbf::rollout(bench.system, bench.spec, x0, 200).unsafe) ++unsafe;
    }
    CHECK(unsafe == 0);
}

TEST_CASE("quadrotor benchmark ships a working policy") {
    nbf::BenchmarkDef bench = nbf::builtin("quadrotor6d");
    REQUIRE(bench.system.controller.has_value());
    CHECK(bench.system.controller->in_dim() == 6);
    CHECK(bench.system.controller->out_dim() == 3);
    CHECK(bench.barrier_m == 10);
    CHECK(bench.spec.workspace.dim() == 6);

    nbf::Rng rng(33);
    int unsafe = 0;
    for (int k = 0; k < 20; ++k) {
        VectorXd x0 = rng.uniform_vector(bench.spec.initial.lo, bench.spec.initial.hi);
        if (nbf::rollout(bench.system, bench.spec, x0, 200).unsafe) ++unsafe;
    }
    CHECK(unsafe == 0);
}

TEST_CASE("closed loop json round trip with inline and absent controllers") {
    nbf::BenchmarkDef bench = nbf::builtin("double_integrator");
    nbf::json j = bench.system.to_json();
    nbf::ClosedLoop back = nbf::ClosedLoop::from_json(j);
    back.validate();
    VectorXd x = v2(2.6, -0.2);
    CHECK((back.step(x) - bench.system.step(x)).norm() == doctest::Approx(0.0));

    nbf::ClosedLoop plain = nbf::builtin("example1").system;
    nbf::json j2 = plain.to_json();
    CHECK(j2.at("controller").is_null());
    nbf::ClosedLoop back2 = nbf::ClosedLoop::from_json(j2);
    CHECK_FALSE(back2.controller.has_value());
}
