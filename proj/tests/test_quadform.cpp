#include "doctest.h"

#include <Eigen/Dense>

#include "nbf/quadform.hpp"

using nbf::Box;
using nbf::BoxQuadratic;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd v2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("quadratic eval is x'Qx + r'x + c") {
    BoxQuadratic q;
    q.Q = MatrixXd(2, 2);
    q.Q << 1.0, 0.5, 0.5, -1.0;
    q.r = v2(-1.0, 0.5);
    q.c = 0.25;
    // f(2, 1) = 4 + 2*0.5*2 - 1 - 2 + 0.5 + 0.25 = 3.75
    CHECK(q.eval(v2(2.0, 1.0)) == doctest::Approx(3.75).epsilon(1e-12));
    CHECK(q.dim() == 2);
}

TEST_CASE("indefinite quadratic attains its box minimum at a corner") {
    // Independently minimized (multi-start + dense grid): min -8.25 at (-1, 3).
    BoxQuadratic q;
    q.Q = MatrixXd(2, 2);
    q.Q << 1.0, 0.5, 0.5, -1.0;
    q.r = v2(-1.0, 0.5);
    q.c = 0.25;
    Box dom(v2(-1.0, 0.0), v2(2.0, 3.0));
    nbf::QuadMin m = nbf::box_quadratic_min(q, dom);
    CHECK(m.value == doctest::Approx(-8.25).epsilon(1e-10));
    CHECK(m.argmin[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(m.argmin[1] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(q.eval(m.argmin) == doctest::Approx(m.value).epsilon(1e-12));
}

TEST_CASE("convex quadratic attains its minimum at the interior stationary point") {
    // Independent reference: min -13.125 at (-0.25, 2).
    BoxQuadratic q;
    q.Q = MatrixXd(2, 2);
    q.Q << 2.0, 0.0, 0.0, 3.0;
    q.r = v2(1.0, -12.0);
    q.c = -1.0;
    Box dom(v2(-5.0, 0.0), v2(5.0, 5.0));
    nbf::QuadMin m = nbf::box_quadratic_min(q, dom);
    CHECK(m.value == doctest::Approx(-13.125).epsilon(1e-10));
    CHECK(m.argmin[0] == doctest::Approx(-0.25).epsilon(1e-8));
    CHECK(m.argmin[1] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("degenerate quadratic (affine) minimizes at a corner") {
    // Independent reference: min -6.5 at (-1, 2).
    BoxQuadratic q;
    q.Q = MatrixXd::Zero(2, 2);
    q.r = v2(2.0, -3.0);
    q.c = 1.5;
    Box dom(v2(-1.0, -2.0), v2(4.0, 2.0));
    nbf::QuadMin m = nbf::box_quadratic_min(q, dom);
    CHECK(m.value == doctest::Approx(-6.5).epsilon(1e-10));
    CHECK(m.argmin[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(m.argmin[1] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("three-dimensional quadratic with a face minimum") {
    // Independent reference: min -2.4184782608695654 at (13/46, 27/46, 2).
    BoxQuadratic q;
    q.Q = MatrixXd(3, 3);
    q.Q << 1.0, 0.2, -0.3, 0.2, 0.5, 0.1, -0.3, 0.1, -0.7;
    q.r = VectorXd(3);
    q.r << 0.4, -1.1, 0.6;
    q.c = -0.5;
    VectorXd lo(3), hi(3);
    lo << -2.0, -1.0, 0.0;
    hi << 1.0, 2.0, 2.0;
    nbf::QuadMin m = nbf::box_quadratic_min(q, Box(lo, hi));
    CHECK(m.value == doctest::Approx(-2.4184782608695654).epsilon(1e-10));
    CHECK(m.argmin[0] == doctest::Approx(13.0 / 46.0).epsilon(1e-8));
    CHECK(m.argmin[1] == doctest::Approx(27.0 / 46.0).epsilon(1e-8));
    CHECK(m.argmin[2] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("exact minimum never exceeds dense sampling") {
    nbf::Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        int dim = 1 + static_cast<int>(rng.index(3));
        MatrixXd S = MatrixXd::NullaryExpr(dim, dim, [&](Eigen::Index, Eigen::Index) {
            return rng.uniform(-1.5, 1.5);
        });
        BoxQuadratic q;
        q.Q = 0.5 * (S + S.transpose());
        q.r = VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return rng.uniform(-2, 2); });
        q.c = rng.uniform(-1, 1);
        VectorXd lo(dim), hi(dim);
        for (int d = 0; d < dim; ++d) {
            double c = rng.uniform(-2, 2), w = rng.uniform(0.2, 3.0);
            lo[d] = c - w / 2;
            hi[d] = c + w / 2;
        }
        Box dom(lo, hi);

        nbf::QuadMin m = nbf::box_quadratic_min(q, dom);
        CHECK(dom.contains(m.argmin));
        CHECK(q.eval(m.argmin) == doctest::Approx(m.value).epsilon(1e-9));
        auto pts = dom.sample_uniform(500, rng);
        pts.push_back(dom.center());
        for (const auto& c2 : dom.corners()) pts.push_back(c2);
        for (const auto& x : pts) CHECK(q.eval(x) >= m.value - 1e-9);
    }
}
