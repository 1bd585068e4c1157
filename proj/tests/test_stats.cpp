#include <doctest.h>

#include <cmath>
#include <vector>

#include "neurotrack/stats.hpp"
#include "oracles.hpp"

using namespace neurotrack;

TEST_CASE("summary uses the sample standard deviation") {
    const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
    const auto s = stats::summarize(x);
    CHECK(s.n == 8);
    CHECK(s.mean == 5.0);
    CHECK(s.sd == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-14));
}

TEST_CASE("paired t against direct computation") {
    const std::vector<double> a{5.1, 4.8, 6.0, 5.5, 5.9, 6.2}, b{4.9, 4.9, 5.2, 5.0, 5.1, 5.8};
    double md = 0, vd = 0;
    for (std::size_t i = 0; i < a.size(); ++i) md += a[i] - b[i];
    md /= 6;
    for (std::size_t i = 0; i < a.size(); ++i) vd += (a[i] - b[i] - md) * (a[i] - b[i] - md);
    const double t = md / std::sqrt(vd / 5 / 6);
    const auto r = stats::paired_t(a, b);
    CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
    CHECK(r.df == 5);
    CHECK(r.p_one_sided == doctest::Approx(oracle::t_upper_tail(t, 5)).epsilon(1e-7));
    CHECK(r.p_two_sided == doctest::Approx(2 * r.p_one_sided).epsilon(1e-12));
    CHECK(stats::paired_t(b, a).p_one_sided == doctest::Approx(1 - r.p_one_sided).epsilon(1e-12));
}
