#include "neurotrack/velocity.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "neurotrack/numeric.hpp"

namespace neurotrack {

std::string to_string(WeightKind kind) { return kind == WeightKind::initial ? "initial" : "corrected"; }

WeightKind weight_kind_from_string(const std::string& s) {
    if (s == "initial") return WeightKind::initial;
    if (s == "corrected") return WeightKind::corrected;
    throw InvalidArgument("unknown velocity weight kind: " + s);
}

void RegressionSet::append(const RhoVector& r, const Vec2& intended_velocity) {
    const Eigen::Index n = rho.rows();
    if (n > 0 && rho.cols() != r.size()) throw InvalidArgument("regression: rho length changed");
    rho.conservativeResize(n + 1, r.size());
    intended.conservativeResize(n + 1, 2);
    for (int i = 0; i < r.size(); ++i) rho(n, i) = r.rho[i];
    intended.row(n) = intended_velocity.transpose();
}

Vec2 project(const RhoVector& rho, const StimulusLayout& layout) {
    if (rho.size() != layout.n_regions()) throw InvalidArgument("project: rho length differs from region count");
    Vec2 out = Vec2::Zero();
    for (int i = 0; i < rho.size(); ++i) {
        const double r = std::max(rho.rho[i], 0.0);
        const double a = layout.region_center_angles_rad[i];
        out += r * Vec2(std::cos(a), std::sin(a));
    }
    return out;
}

VelocityWeight initial_velocity_weight(const SessionConfig& config) {
    const double scale = config.screen_width_px / 6.0;
    VelocityWeight w;
    w.kind = WeightKind::initial;
    const int n = config.n_regions;
    w.matrix.resize(n, 2);
    if (n == 8) {
        const double h = std::sqrt(2.0) / 2.0;
        w.matrix << 1.0, 0.0,
                    h, h,
                    0.0, 1.0,
                    -h, h,
                    -1.0, 0.0,
                    -h, -h,
                    0.0, -1.0,
                    h, -h;
    } else {
        for (int i = 0; i < n; ++i) {
            const double a = 2.0 * std::numbers::pi * i / n;
            w.matrix(i, 0) = std::cos(a);
            w.matrix(i, 1) = std::sin(a);
        }
    }
    w.matrix *= scale;
    return w;
}

VelocityVector decode_velocity(const RhoVector& rho, const VelocityWeight& weight, bool relu_before_corrected) {
    if (rho.size() != weight.n_regions()) throw InvalidArgument("decode: rho length differs from weight rows");
    const bool relu = weight.kind == WeightKind::initial || relu_before_corrected;
    VelocityVector out;
    for (int i = 0; i < rho.size(); ++i) {
        const double p = relu ? std::max(rho.rho[i], 0.0) : rho.rho[i];
        out.v += p * weight.matrix.row(i).transpose();
    }
    return out;
}

VelocityVector cap_velocity(const VelocityVector& v, double max_speed, bool* clamped) {
    const double speed = v.v.norm();
    const bool active = speed > max_speed;
    if (clamped) *clamped = active;
    if (!active) return v;
    return VelocityVector{v.v * (max_speed / speed)};
}

VelocityWeight train_velocity_weight(const RegressionSet& data, bool relu_rows) {
    const Eigen::Index n_t = data.rho.rows();
    const Eigen::Index n_r = data.rho.cols();
    if (data.intended.rows() != n_t || data.intended.cols() != 2) {
        throw InvalidArgument("regression: D and I row counts differ");
    }
    if (n_t < n_r || n_r == 0) {
        throw SingularMatrixError("regression: " + std::to_string(n_t) + " trials cannot determine " +
                                  std::to_string(n_r) + " regions");
    }
    Eigen::MatrixXd d = data.rho;
    if (relu_rows) d = d.cwiseMax(0.0);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d);
    qr.setThreshold(1e-12);
    if (qr.rank() < n_r) {
        std::string missing;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < n_r; ++k) {
            if (!missing.empty()) missing += ", ";
            missing += std::to_string(perm[k]);
        }
        throw SingularMatrixError("regression: D^T D is singular (rank " + std::to_string(qr.rank()) + " of " +
                                  std::to_string(n_r) + "); no independent support for region column(s) " +
                                  missing);
    }
    VelocityWeight w;
    w.kind = WeightKind::corrected;
    w.matrix = qr.solve(data.intended);
    return w;
}

namespace {

double exact_last(std::span<const double> head, double target) {
    CompensatedSum partial;
    for (double x : head) partial.add(x);
    double last = target - partial.value();
    auto total = [&](double candidate) {
        CompensatedSum s;
        for (double x : head) s.add(x);
        s.add(candidate);
        return s.value();
    };
    for (int i = 0; i < 256; ++i) {
        const double got = total(last);
        if (got == target) break;
        last = std::nextafter(last, got < target ? INFINITY : -INFINITY);
    }
    return last;
}

}  // namespace

std::vector<Vec2> decay_profile(const VelocityVector& v, int frames) {
    if (frames < 1) throw InvalidArgument("decay_profile: frames must be >= 1");
    const double f = frames;
    std::vector<double> dx(frames), dy(frames);
    for (int k = 0; k + 1 < frames; ++k) {
        // Integral of 2(1 - tau) over frame k of the unit step.
        const double share = (2.0 * f - 2.0 * k - 1.0) / (f * f);
        dx[k] = v.v.x() * share;
        dy[k] = v.v.y() * share;
    }
    dx[frames - 1] = exact_last(std::span<const double>(dx.data(), frames - 1), v.v.x());
    dy[frames - 1] = exact_last(std::span<const double>(dy.data(), frames - 1), v.v.y());
    std::vector<Vec2> out(frames);
    for (int k = 0; k < frames; ++k) out[k] = Vec2(dx[k], dy[k]);
    return out;
}

GateDecision confidence_gate(const RhoVector& rho, double alpha) {
    const int n = rho.size();
    if (n < 3) throw InvalidArgument("confidence_gate: need at least 3 regions");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("confidence_gate: alpha must lie in (0, 1)");
    GateDecision d;
    d.region = rho.argmax();
    const double top = rho.rho[d.region];
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i != d.region) mean += rho.rho[i];
    }
    mean /= (n - 1);
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i != d.region) ss += (rho.rho[i] - mean) * (rho.rho[i] - mean);
    }
    const double sd = std::sqrt(ss / (n - 2));
    if (!(sd > 0.0)) {
        d.move = top > mean;
        d.t_statistic = d.move ? INFINITY : 0.0;
        d.p_value = d.move ? 0.0 : 1.0;
        return d;
    }
    d.t_statistic = (top - mean) / sd;
    boost::math::students_t dist(n - 2);
    d.p_value = boost::math::cdf(boost::math::complement(dist, d.t_statistic));
    d.move = d.p_value < alpha;
    return d;
}

}  // namespace neurotrack
