#pragma once

#include <cmath>
#include <span>

namespace neurotrack {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(double start) : sum_(start) {}

    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

}  // namespace neurotrack
