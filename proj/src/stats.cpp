#include "neurotrack/stats.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "neurotrack/core.hpp"

namespace neurotrack::stats {

Summary summarize(std::span<const double> xs) {
    Summary s;
    s.n = static_cast<int>(xs.size());
    if (s.n == 0) return s;
    for (double x : xs) s.mean += x;
    s.mean /= s.n;
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / (s.n - 1));
    }
    return s;
}

TTest one_sample_t(std::span<const double> xs, double mu) {
    if (xs.size() < 2) throw InvalidArgument("t-test: need at least two observations");
    const Summary s = summarize(xs);
    TTest r;
    r.mean_difference = s.mean - mu;
    r.df = s.n - 1;
    if (s.sd == 0.0) {
        r.t = r.mean_difference > 0 ? INFINITY : (r.mean_difference < 0 ? -INFINITY : 0.0);
        r.p_one_sided = r.mean_difference > 0 ? 0.0 : 1.0;
        r.p_two_sided = r.mean_difference != 0 ? 0.0 : 1.0;
        return r;
    }
    r.t = r.mean_difference / (s.sd / std::sqrt(static_cast<double>(s.n)));
    boost::math::students_t dist(r.df);
    r.p_one_sided = boost::math::cdf(boost::math::complement(dist, r.t));
    r.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

TTest paired_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("paired t-test: length mismatch");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return one_sample_t(d, 0.0);
}

}  // namespace neurotrack::stats
