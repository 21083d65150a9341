#include "doctest.h"

#include <Eigen/Dense>

#include "nbf/barrier.hpp"
#include "nbf/mlp.hpp"

using nbf::Mlp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Fixed 2-3-2 network used across the forward tests. Chosen so exactly one
// hidden unit is active at the probe point.
Mlp fixed_net() {
    Mlp net;
    MatrixXd w1(3, 2);
    w1 << 1.0, -1.0, 0.5, 2.0, -1.5, 0.3;
    VectorXd b1(3);
    b1 << 0.1, -0.2, 0.3;
    MatrixXd w2(2, 3);
    w2 << 1.0, 2.0, -1.0, 0.5, -0.5, 1.0;
    VectorXd b2(2);
    b2 << 0.0, 0.25;
    net.layers = {{w1, b1}, {w2, b2}};
    return net;
}

}  // namespace

TEST_CASE("mlp forward matches a hand-computed value") {
    Mlp net = fixed_net();
    net.validate();
    CHECK(net.in_dim() == 2);
    CHECK(net.out_dim() == 2);
    CHECK(net.relu_count() == 3);

    VectorXd x(2);
    x << 0.3, -0.7;
    // pre-activations (1.1, -1.45, -0.36) -> hidden (1.1, 0, 0)
    VectorXd y = net.forward(x);
    CHECK(y[0] == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("mlp forward_trace exposes input, hidden activations, and output") {
    Mlp net = fixed_net();
    VectorXd x(2);
    x << 0.3, -0.7;
    auto trace = net.forward_trace(x);
    REQUIRE(trace.size() == 3);  // input, post-relu hidden, output
    CHECK((trace[0] - x).norm() == doctest::Approx(0.0));
    CHECK(trace[1][0] == doctest::Approx(1.1));
    CHECK(trace[1][1] == doctest::Approx(0.0));
    CHECK(trace[1][2] == doctest::Approx(0.0));
    CHECK((trace[2] - net.forward(x)).norm() == doctest::Approx(0.0));
}

TEST_CASE("mlp validation rejects inconsistent shapes") {
    Mlp net = fixed_net();
    CHECK_NOTHROW(net.validate());

    Mlp bad = fixed_net();
    bad.layers[1].weight = MatrixXd::Zero(2, 4);  // fan-in mismatch with layer 0
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    Mlp bad2 = fixed_net();
    bad2.layers[0].bias = VectorXd::Zero(2);
    CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);

    Mlp empty;
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

    VectorXd wrong(3);
    wrong << 1, 2, 3;
    CHECK_THROWS_AS(net.forward(wrong), std::invalid_argument);
}

TEST_CASE("mlp json round trip preserves behaviour") {
    Mlp net = fixed_net();
    Mlp back = Mlp::from_json(net.to_json());
    back.validate();
    nbf::Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        VectorXd x(2);
        x << rng.uniform(-2, 2), rng.uniform(-2, 2);
        CHECK((back.forward(x) - net.forward(x)).norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("random_mlp produces the requested architecture deterministically") {
    nbf::Rng r1(9), r2(9), r3(10);
    Mlp a = nbf::random_mlp({3, 8, 5, 2}, r1);
    Mlp b = nbf::random_mlp({3, 8, 5, 2}, r2);
    Mlp c = nbf::random_mlp({3, 8, 5, 2}, r3);
    a.validate();
    CHECK(a.in_dim() == 3);
    CHECK(a.out_dim() == 2);
    CHECK(a.relu_count() == 13);
    REQUIRE(a.layers.size() == 3);
    CHECK(a.layers[0].weight.rows() == 8);
    CHECK(a.layers[1].weight.rows() == 5);

    VectorXd x(3);
    x << 0.2, -0.4, 1.0;
    CHECK((a.forward(x) - b.forward(x)).norm() == doctest::Approx(0.0));
    CHECK((a.forward(x) - c.forward(x)).norm() > 0.0);

    CHECK_THROWS_AS(nbf::random_mlp({4}, r1), std::invalid_argument);
}

TEST_CASE("barrier features cover all three bases") {
    VectorXd x(2);
    x << 2.0, -3.0;

    nbf::VectorBarrier ident;
    ident.basis = nbf::Basis::Identity;
    ident.state_dim = 2;
    ident.C = MatrixXd::Identity(2, 2);
    ident.b = VectorXd::Zero(2);
    ident.A = MatrixXd::Identity(2, 2);
    CHECK((ident.features(x) - x).norm() == doctest::Approx(0.0));
    CHECK(ident.input_dim() == 2);
    CHECK(ident.M() == 2);
    CHECK_NOTHROW(ident.validate());

    nbf::VectorBarrier quad;
    quad.basis = nbf::Basis::Quadratic;
    quad.state_dim = 2;
    quad.C = MatrixXd::Zero(1, 5);
    quad.b = VectorXd::Zero(1);
    quad.A = MatrixXd::Identity(1, 1);
    VectorXd f = quad.features(x);
    REQUIRE(f.size() == 5);  // x1, x2, x1^2, x1 x2, x2^2
    CHECK(f[0] == doctest::Approx(2.0));
    CHECK(f[1] == doctest::Approx(-3.0));
    CHECK(f[2] == doctest::Approx(4.0));
    CHECK(f[3] == doctest::Approx(-6.0));
    CHECK(f[4] == doctest::Approx(9.0));
    CHECK(nbf::quadratic_feature_dim(2) == 5);
    CHECK(nbf::quadratic_feature_dim(3) == 9);

    nbf::VectorBarrier net;
    net.basis = nbf::Basis::MlpNet;
    net.phi = fixed_net();
    net.C = MatrixXd::Identity(2, 2);
    net.b = VectorXd::Zero(2);
    net.A = MatrixXd::Identity(2, 2);
    VectorXd p(2);
    p << 0.3, -0.7;
    CHECK((net.eval(p) - net.phi.forward(p)).norm() == doctest::Approx(0.0));
}

TEST_CASE("barrier eval is C*phi(x) + b and validation guards structure") {
    nbf::VectorBarrier bf;
    bf.basis = nbf::Basis::Identity;
    bf.state_dim = 2;
    bf.C = MatrixXd(2, 2);
    bf.C << 1.0, 2.0, -1.0, 0.5;
    bf.b = VectorXd(2);
    bf.b << 0.25, -1.0;
    bf.A = MatrixXd(2, 2);
    bf.A << 1.0, 1.0, 0.0, 1.0;
    bf.i_star = 0;
    bf.validate();

    VectorXd x(2);
    x << 2.0, -1.0;
    VectorXd v = bf.eval(x);
    CHECK(v[0] == doctest::Approx(1.0 * 2 + 2.0 * (-1) + 0.25));   // 0.25
    CHECK(v[1] == doctest::Approx(-1.0 * 2 + 0.5 * (-1) - 1.0));   // -3.5

    nbf::VectorBarrier bad = bf;
    bad.A(0, 1) = -0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = bf;
    bad.i_star = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = bf;
    bad.b = VectorXd::Zero(3);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("barrier json round trip keeps basis and i_star convention") {
    nbf::VectorBarrier bf;
    bf.basis = nbf::Basis::Quadratic;
    bf.state_dim = 2;
    bf.C = MatrixXd::Random(1, 5);
    bf.b = VectorXd::Random(1);
    bf.A = MatrixXd::Identity(1, 1) * 0.5;
    bf.i_star = 0;
    nbf::json j = bf.to_json();
    CHECK(j.at("i_star").get<int>() == 1);  // serialized 1-based
    CHECK(j.at("basis").at("type") == "quadratic");
    nbf::VectorBarrier back = nbf::VectorBarrier::from_json(j);
    CHECK(back.i_star == 0);
    CHECK(back.basis == nbf::Basis::Quadratic);
    VectorXd x(2);
    x << 0.7, 0.4;
    CHECK((back.eval(x) - bf.eval(x)).norm() == doctest::Approx(0.0));

    nbf::VectorBarrier net;
    net.basis = nbf::Basis::MlpNet;
    net.phi = fixed_net();
    net.C = MatrixXd::Random(3, 2);
    net.b = VectorXd::Random(3);
    net.A = MatrixXd::Identity(3, 3);
    net.i_star = 2;
    nbf::VectorBarrier back2 = nbf::VectorBarrier::from_json(net.to_json());
    CHECK(back2.i_star == 2);
    VectorXd p(2);
    p << -0.1, 0.9;
    CHECK((back2.eval(p) - net.eval(p)).norm() == doctest::Approx(0.0));
}
