#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "neurotrack/filter_bank_spec.hpp"

namespace neurotrack {

using Vec2 = Eigen::Vector2d;

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Signal too short for the requested operation.
class LengthError : public Error {
public:
    using Error::Error;
};

/// A linear system could not be solved.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

// ----------------------------------------------------------------------------
// Session configuration
// ----------------------------------------------------------------------------

/// All decode math uses screen-centered coordinates in pixels with +y up.
struct SessionConfig {
    int screen_width_px = 800;
    int screen_height_px = 800;
    int n_regions = 8;
    double target_radius_px = 40.0;
    double cursor_radius_px = 5.0;
    double step_seconds = 1.0;
    double trial_timeout_seconds = 15.0;
    double acquisition_rate_hz = 1000.0;
    double processing_rate_hz = 250.0;
    double refresh_rate_hz = 60.0;
    /// 27" 16:9 panel driven at 1920 px wide.
    double px_per_cm = 32.1;
    std::uint64_t rng_seed = 0;

    double gaze_noise_px = 0.0;
    double confidence_alpha = 0.05;
    /// Frames kept after the first hit for the hold-rate curve.
    double post_hit_seconds = 1.0;
    double random_target_margin_px = 40.0;
    int snake_cols = 16;
    int snake_rows = 16;
    bool relu_before_corrected = false;

    FilterBankSpec filter_bank{};

    int frames_per_step() const;
    int samples_per_step() const;
    /// Decode steps whose movement finishes within the trial timeout; the
    /// first second of a trial only records the first epoch.
    int max_steps() const;
    void validate() const;
};

// ----------------------------------------------------------------------------
// Geometry
// ----------------------------------------------------------------------------

/// Radial region layout around the cursor. Region i is centered at 2*pi*i/N,
/// counter-clockwise from +x.
struct StimulusLayout {
    std::vector<double> region_center_angles_rad;
    std::vector<double> region_boundary_angles_rad;  // boundary i sits between region i and i+1
    Vec2 cursor_position_px = Vec2::Zero();

    int n_regions() const { return static_cast<int>(region_center_angles_rad.size()); }
    /// Index of the sector containing direction `angle_rad` (any real angle).
    int region_of_angle(double angle_rad) const;
    StimulusLayout translated_to(const Vec2& cursor) const;
};

StimulusLayout make_layout(int n_regions, const Vec2& cursor = Vec2::Zero());

enum class Ring { inner, outer, none };
enum class Alignment { center, cross, none };

struct TargetSpec {
    Vec2 position_px = Vec2::Zero();
    double radius_px = 40.0;
    Ring ring = Ring::none;
    Alignment alignment = Alignment::none;
    /// Direction index among the 2*N_r center/boundary lines, -1 if free.
    int direction = -1;
};

std::string to_string(Ring ring);
std::string to_string(Alignment alignment);
Ring ring_from_string(const std::string& s);
Alignment alignment_from_string(const std::string& s);

/// Eight targets on the region center lines at w_s/3.
std::vector<TargetSpec> stage1_targets(const SessionConfig& config);

/// 32 targets: 16 directions (centers and boundaries) x radii {w_s/6, w_s/3}.
/// Ordered inner ring first, each ring counter-clockwise from 0 deg.
std::vector<TargetSpec> stage2_targets(const SessionConfig& config);

/// Point-in-circle against the target radius; the boundary counts as a hit.
bool hit_test(const Vec2& cursor, const TargetSpec& target);

/// Center-origin, +y-up coordinates to top-left-origin raster pixels and back.
Vec2 to_raster_px(const Vec2& centered, const SessionConfig& config);
Vec2 from_raster_px(const Vec2& raster, const SessionConfig& config);

// ----------------------------------------------------------------------------
// EEG
// ----------------------------------------------------------------------------

struct EegEpoch {
    Eigen::MatrixXd samples;  // channels x time, microvolts
    double sample_rate_hz = 250.0;
    int stimulus_phase_offset = 0;

    int n_channels() const { return static_cast<int>(samples.rows()); }
    int n_samples() const { return static_cast<int>(samples.cols()); }
    double duration_s() const { return n_samples() / sample_rate_hz; }
};

}  // namespace neurotrack
