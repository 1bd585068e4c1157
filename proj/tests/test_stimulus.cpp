#include <doctest.h>

#include <cmath>

#include "neurotrack/stimulus.hpp"
#include "oracles.hpp"

using namespace neurotrack;

TEST_CASE("wn bank is deterministic and statistically uniform") {
    const auto a = generate_wn_bank(8, 60, 42);
    const auto b = generate_wn_bank(8, 60, 42);
    REQUIRE(a.size() == 8);
    // Mean of 60 uniforms has sd sqrt(1/(12*60)); 3 sd bound.
    const double bound = 3.0 * std::sqrt(1.0 / (12.0 * 60.0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].values == b[i].values);
        CHECK(a[i].frames() == 60);
        double mean = 0.0;
        for (double v : a[i].values) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            mean += v;
        }
        mean /= 60.0;
        CHECK(std::abs(mean - 0.5) <= bound);
    }
    CHECK(generate_wn_bank(8, 60, 43)[0].values != a[0].values);
}

TEST_CASE("wn bank pairwise correlation stays below 0.5") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto bank = generate_wn_bank(8, 60, seed);
        for (std::size_t i = 0; i < bank.size(); ++i) {
            for (std::size_t j = i + 1; j < bank.size(); ++j) {
                CHECK(std::abs(oracle::pearson(bank[i].values, bank[j].values)) < 0.5);
            }
        }
    }
}

TEST_CASE("luminance rounding") {
    WnBank bank(3);
    bank[0].values = {1.0, 0.0};
    bank[1].values = {0.0, 0.5};
    bank[2].values = {0.5, 1.0};
    const auto f0 = luminance_frame(bank, 0);
    CHECK(f0 == std::vector<int>{127, 0, 64});
    const auto f3 = luminance_frame(bank, 3);  // cyclic
    CHECK(f3 == std::vector<int>{0, 64, 127});
}

TEST_CASE("visual field weights limits") {
    const auto layout = make_layout(8);
    SUBCASE("far gaze along region 0") {
        const auto w = visual_field_weights({5000.0, 0.0}, {0.0, 0.0}, layout, 100.0);
        CHECK(w.weights[0] > 0.999);
        double sum = 0.0;
        for (double x : w.weights) sum += x;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("gaze on the cursor spreads evenly") {
        const auto w = visual_field_weights({0.0, 0.0}, {0.0, 0.0}, layout, 100.0);
        for (double x : w.weights) CHECK(x == doctest::Approx(1.0 / 8).epsilon(1e-9));
    }
}

namespace {

/// Independent quadrature on a Cartesian grid: Gaussian mass per sector.
std::vector<double> cartesian_weights(const Vec2& gaze, double sigma, int n_regions, int grid) {
    std::vector<double> w(n_regions, 0.0);
    const double extent = 5.0 * sigma;
    const double h = 2.0 * extent / grid;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double x = gaze.x() - extent + (i + 0.5) * h;
            const double y = gaze.y() - extent + (j + 0.5) * h;
            const double g = std::exp(-((x - gaze.x()) * (x - gaze.x()) + (y - gaze.y()) * (y - gaze.y())) /
                                      (2 * sigma * sigma));
            double a = std::atan2(y, x) + oracle::pi / n_regions;
            a = std::fmod(a + 4 * oracle::pi, 2 * oracle::pi);
            w[static_cast<int>(a / (2 * oracle::pi / n_regions)) % n_regions] += g;
        }
    }
    double s = 0;
    for (double v : w) s += v;
    for (double& v : w) v /= s;
    return w;
}

}  // namespace

TEST_CASE("visual field weights on a boundary match a fine quadrature") {
    const auto layout = make_layout(8);
    const double sigma = 100.0;
    const double a = oracle::pi / 8;
    const Vec2 gaze{sigma * std::cos(a), sigma * std::sin(a)};
    const auto w = visual_field_weights(gaze, {0.0, 0.0}, layout, sigma);
    const auto ref = cartesian_weights(gaze, sigma, 8, 2000);
    CHECK(w.weights[0] == doctest::Approx(w.weights[1]).epsilon(1e-6));
    for (int i = 2; i < 8; ++i) {
        CHECK(w.weights[0] > w.weights[i]);
        CHECK(w.weights[1] > w.weights[i]);
    }
    for (int i = 0; i < 8; ++i) CHECK(std::abs(w.weights[i] - ref[i]) < 2e-3);
}

TEST_CASE("visual field weights follow the cursor") {
    const auto layout = make_layout(8);
    const Vec2 cursor{-150.0, 70.0};
    const auto a = visual_field_weights(cursor + Vec2(0.0, 80.0), cursor, layout, 100.0);
    const auto b = visual_field_weights(Vec2(0.0, 80.0), Vec2::Zero(), layout, 100.0);
    for (int i = 0; i < 8; ++i) CHECK(a.weights[i] == doctest::Approx(b.weights[i]).epsilon(1e-12));
    CHECK_THROWS_AS(visual_field_weights({0, 0}, {0, 0}, layout, 0.0), InvalidArgument);
}

TEST_CASE("pearson matches the direct formula") {
    const std::vector<double> a{1, 2, 3, 4, 5.5}, b{2, 1, 4, 3, 7};
    CHECK(pearson(a, b) == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-14));
}
