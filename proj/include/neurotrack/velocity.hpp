#pragma once

#include <vector>

#include "neurotrack/core.hpp"
#include "neurotrack/trca.hpp"

namespace neurotrack {

enum class WeightKind { initial, corrected };

std::string to_string(WeightKind kind);
WeightKind weight_kind_from_string(const std::string& s);

/// N_r x 2 map from rho space to screen velocity (px per step).
struct VelocityWeight {
    Eigen::MatrixXd matrix;
    WeightKind kind = WeightKind::initial;

    int n_regions() const { return static_cast<int>(matrix.rows()); }
};

struct VelocityVector {
    Vec2 v = Vec2::Zero();  // px per step
};

/// Stage II regression data: one row per trial.
struct RegressionSet {
    Eigen::MatrixXd rho;       // D, N_t x N_r
    Eigen::MatrixXd intended;  // I, N_t x 2

    int n_trials() const { return static_cast<int>(rho.rows()); }
    void append(const RhoVector& r, const Vec2& intended_velocity);
};

/// Sum of ReLU(rho_i) * unit vector of region i.
Vec2 project(const RhoVector& rho, const StimulusLayout& layout);

/// The circular initial weight scaled by w_s/6. For N_r = 8 this is the
/// fixed matrix with +-sqrt(2)/2 entries; other counts use cos/sin of the
/// region angles.
VelocityWeight initial_velocity_weight(const SessionConfig& config);

/// v^T = P * V_w. ReLU is applied to P for the initial weight; for the
/// corrected weight only when `relu_before_corrected` is set (the weight was
/// regressed on unrectified rho).
VelocityVector decode_velocity(const RhoVector& rho, const VelocityWeight& weight,
                               bool relu_before_corrected = false);

/// Clamp the speed to `max_speed`; reports whether the clamp was active.
VelocityVector cap_velocity(const VelocityVector& v, double max_speed, bool* clamped = nullptr);

/// Ordinary least squares V_w* = argmin ||D V - I||_F (column-pivoted QR).
/// Throws SingularMatrixError when D is rank deficient.
VelocityWeight train_velocity_weight(const RegressionSet& data, bool relu_rows = false);

/// Per-frame displacements for a speed decaying linearly from 2v to 0 over
/// one step. The compensated sum of the displacements equals v exactly.
std::vector<Vec2> decay_profile(const VelocityVector& v, int frames);

struct GateDecision {
    bool move = false;
    int region = -1;       // argmax of rho
    double t_statistic = 0.0;
    double p_value = 1.0;
};

/// One-sided test of max(rho) against the remaining N_r - 1 scores:
/// t = (rho_max - mean(rest)) / sd(rest), df = N_r - 2. Moves when p < alpha.
/// A zero-variance remainder moves iff rho_max exceeds it.
GateDecision confidence_gate(const RhoVector& rho, double alpha);

}  // namespace neurotrack
