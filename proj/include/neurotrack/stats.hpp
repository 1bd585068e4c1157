#pragma once

#include <span>
#include <vector>

namespace neurotrack::stats {

struct Summary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (n - 1)
    int n = 0;
};

Summary summarize(std::span<const double> xs);

struct TTest {
    double t = 0.0;
    double df = 0.0;
    double p_one_sided = 1.0;  // H1: mean(a - b) > 0
    double p_two_sided = 1.0;
    double mean_difference = 0.0;
};

/// Paired t-test on a - b.
TTest paired_t(std::span<const double> a, std::span<const double> b);

/// One-sample t-test of the mean of xs against mu.
TTest one_sample_t(std::span<const double> xs, double mu = 0.0);

}  // namespace neurotrack::stats
