#include <doctest.h>

#include <cmath>

#include "neurotrack/numeric.hpp"
#include "neurotrack/random.hpp"
#include "neurotrack/velocity.hpp"
#include "oracles.hpp"

using namespace neurotrack;

namespace {

RhoVector rv(std::vector<double> v) { return RhoVector{std::move(v)}; }

}  // namespace

TEST_CASE("project sums rectified region unit vectors") {
    const auto layout = make_layout(8);
    const Vec2 one = project(rv({1, 0, 0, 0, 0, 0, 0, 0}), layout);
    CHECK(one.x() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(one.y()) < 1e-15);
    const Vec2 two = project(rv({1, 1, 0, 0, 0, 0, 0, 0}), layout);
    CHECK(two.norm() == doctest::Approx(std::sqrt(2.0 + std::sqrt(2.0))).epsilon(1e-12));
    CHECK(std::atan2(two.y(), two.x()) == doctest::Approx(oracle::pi / 8).epsilon(1e-12));
    CHECK(project(rv(std::vector<double>(8, 0.4)), layout).norm() < 1e-12);
    CHECK(project(rv({-1, 0, 0, 0, 0, 0, 0, 0}), layout).norm() == 0.0);
}

TEST_CASE("initial velocity weight") {
    SessionConfig c;
    const auto w = initial_velocity_weight(c);
    const double s = 800.0 / 6.0;
    const double h = std::sqrt(2.0) / 2.0;
    // the printed circular matrix, scaled by w_s / 6
    const double expected[8][2] = {{1, 0}, {h, h}, {0, 1}, {-h, h}, {-1, 0}, {-h, -h}, {0, -1}, {h, -h}};
    REQUIRE(w.n_regions() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(w.matrix(i, 0) == expected[i][0] * s);
        CHECK(w.matrix(i, 1) == expected[i][1] * s);
    }
    CHECK(w.matrix.colwise().sum().norm() < 1e-12);
    CHECK(w.kind == WeightKind::initial);
}

TEST_CASE("decode velocity") {
    SessionConfig c;
    const auto w = initial_velocity_weight(c);
    const auto v = decode_velocity(rv({1, 0, 0, 0, 0, 0, 0, 0}), w);
    CHECK(v.v.x() == doctest::Approx(800.0 / 6.0).epsilon(1e-15));
    CHECK(v.v.y() == 0.0);
    CHECK(decode_velocity(rv(std::vector<double>(8, 0.0)), w).v.norm() == 0.0);
    // negative rho is rectified for the initial weight
    CHECK(decode_velocity(rv({-1, 0, 0, 0, 0, 0, 0, 0}), w).v.norm() == 0.0);
}

TEST_CASE("least squares weight interpolates an exactly determined set") {
    Rng rng(8);
    RegressionSet d;
    for (int k = 0; k < 8; ++k) {
        std::vector<double> r(8);
        for (double& x : r) x = rng.uniform(-0.5, 1.0);
        d.append(rv(r), Vec2(rng.uniform(-200, 200), rng.uniform(-200, 200)));
    }
    const auto w = train_velocity_weight(d);
    CHECK(w.kind == WeightKind::corrected);
    for (int k = 0; k < 8; ++k) {
        Eigen::RowVectorXd rr = d.rho.row(k);
        std::vector<double> rows(rr.data(), rr.data() + rr.size());
        const auto v = decode_velocity(rv(rows), w);
        CHECK(v.v.x() == doctest::Approx(d.intended(k, 0)).epsilon(1e-9));
        CHECK(v.v.y() == doctest::Approx(d.intended(k, 1)).epsilon(1e-9));
    }
}

TEST_CASE("one-hot regression reproduces the initial weight; duplicates do not matter") {
    SessionConfig c;
    const auto init = initial_velocity_weight(c);
    RegressionSet d, dup;
    for (int k = 0; k < 8; ++k) {
        std::vector<double> r(8, 0.0);
        r[k] = 1.0;
        const double a = 2 * oracle::pi * k / 8;
        const Vec2 target = Vec2(std::cos(a), std::sin(a)) * 800.0 / 6.0;
        d.append(rv(r), target);
        dup.append(rv(r), target);
        if (k % 3 == 0) dup.append(rv(r), target);
    }
    const auto w = train_velocity_weight(d);
    const auto w2 = train_velocity_weight(dup);
    CHECK((w.matrix - init.matrix).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((w2.matrix - w.matrix).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rank deficient regression throws") {
    RegressionSet d;
    for (int k = 0; k < 10; ++k) d.append(rv({1, 1, 0, 0, 0, 0, 0, 0}), Vec2(1, 2));
    CHECK_THROWS_AS(train_velocity_weight(d), SingularMatrixError);
}

TEST_CASE("decay profile conserves displacement exactly") {
    const auto p = decay_profile({Vec2(60, 0)}, 60);
    REQUIRE(p.size() == 60);
    CompensatedSum sx, sy;
    for (const auto& d : p) {
        sx.add(d.x());
        sy.add(d.y());
    }
    CHECK(sx.value() == 60.0);
    CHECK(sy.value() == 0.0);
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i].x() < p[i - 1].x());
    const auto one = decay_profile({Vec2(3.5, -2)}, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == Vec2(3.5, -2));
}

TEST_CASE("velocity cap") {
    bool clamped = false;
    const auto v = cap_velocity({Vec2(300, 400)}, 250.0, &clamped);
    CHECK(clamped);
    CHECK(v.v.norm() == doctest::Approx(250.0).epsilon(1e-14));
    CHECK(v.v.x() / v.v.y() == doctest::Approx(0.75).epsilon(1e-14));
    cap_velocity({Vec2(3, 4)}, 250.0, &clamped);
    CHECK_FALSE(clamped);
}

TEST_CASE("confidence gate") {
    const auto forced = confidence_gate(rv({0.9, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1}), 0.05);
    CHECK(forced.move);
    CHECK(forced.region == 0);
    CHECK_FALSE(confidence_gate(rv(std::vector<double>(8, 0.3)), 0.05).move);

    // rest = all but 0.31; t and p from the definitions
    const std::vector<double> rho{0.30, 0.28, 0.29, 0.27, 0.31, 0.26, 0.29, 0.28};
    std::vector<double> rest;
    for (double r : rho) {
        if (r != 0.31) rest.push_back(r);
    }
    double mean = 0, var = 0;
    for (double r : rest) mean += r;
    mean /= 7;
    for (double r : rest) var += (r - mean) * (r - mean);
    const double t = (0.31 - mean) / std::sqrt(var / 6);
    const double p = oracle::t_upper_tail(t, 6);
    const auto g = confidence_gate(rv(rho), 0.05);
    CHECK(g.region == 4);
    CHECK(g.t_statistic == doctest::Approx(t).epsilon(1e-12));
    CHECK(g.p_value == doctest::Approx(p).epsilon(1e-7));
    CHECK(g.move == (p < 0.05));
    CHECK_FALSE(confidence_gate(rv(rho), 0.01).move);
}
