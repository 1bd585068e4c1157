#include "neurotrack/core.hpp"

#include <cmath>
#include <numbers>

namespace neurotrack {

void FilterBankSpec::validate() const {
    if (n_subbands < 1 || n_subbands != static_cast<int>(band_edges_hz.size())) {
        throw InvalidArgument("filter bank: n_subbands must equal the number of band edges");
    }
    if (processing_rate_hz <= 0.0) throw InvalidArgument("filter bank: processing rate must be positive");
    if (decimation_factor < 1) throw InvalidArgument("filter bank: decimation factor must be >= 1");
    if (filter_order < 1) throw InvalidArgument("filter bank: filter order must be >= 1");
    if (notch_q <= 0.0) throw InvalidArgument("filter bank: notch Q must be positive");
    const double nyquist = processing_rate_hz / 2.0;
    auto check_band = [nyquist](const std::pair<double, double>& band, const char* what) {
        if (!(band.first > 0.0 && band.first < band.second && band.second <= nyquist)) {
            throw InvalidArgument(std::string("filter bank: invalid ") + what + " edges");
        }
    };
    check_band(bandpass_hz, "band-pass");
    for (const auto& band : band_edges_hz) check_band(band, "sub-band");
    if (notch_hz > 0.0 && notch_hz >= nyquist) {
        throw InvalidArgument("filter bank: notch frequency above Nyquist");
    }
}

int SessionConfig::frames_per_step() const {
    return static_cast<int>(std::lround(step_seconds * refresh_rate_hz));
}

int SessionConfig::samples_per_step() const {
    return static_cast<int>(std::lround(step_seconds * processing_rate_hz));
}

int SessionConfig::max_steps() const {
    return static_cast<int>(std::ceil(trial_timeout_seconds / step_seconds - 1e-9)) - 1;
}

void SessionConfig::validate() const {
    if (n_regions < 2) throw InvalidArgument("config: n_regions must be >= 2");
    if (screen_width_px <= 0 || screen_height_px <= 0) {
        throw InvalidArgument("config: screen size must be positive");
    }
    const double positives[] = {target_radius_px, cursor_radius_px, step_seconds,
                                trial_timeout_seconds, acquisition_rate_hz, processing_rate_hz,
                                refresh_rate_hz, px_per_cm};
    for (double v : positives) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidArgument("config: rates and sizes must be strictly positive");
        }
    }
    const double frames = step_seconds * refresh_rate_hz;
    if (std::abs(frames - std::round(frames)) > 1e-9) {
        throw InvalidArgument("config: step_seconds * refresh_rate_hz must be an integer");
    }
    const double samples = step_seconds * processing_rate_hz;
    if (std::abs(samples - std::round(samples)) > 1e-9) {
        throw InvalidArgument("config: step_seconds * processing_rate_hz must be an integer");
    }
    if (!(confidence_alpha > 0.0 && confidence_alpha < 1.0)) {
        throw InvalidArgument("config: confidence_alpha must lie in (0, 1)");
    }
    if (gaze_noise_px < 0.0 || post_hit_seconds < 0.0 || random_target_margin_px < 0.0) {
        throw InvalidArgument("config: gaze noise, post-hit window and margin must be >= 0");
    }
    if (2.0 * random_target_margin_px >= std::min(screen_width_px, screen_height_px)) {
        throw InvalidArgument("config: random target margin leaves no room on screen");
    }
    if (snake_cols < 3 || snake_rows < 3) throw InvalidArgument("config: snake grid must be >= 3x3");
    if (std::abs(processing_rate_hz - filter_bank.processing_rate_hz) > 1e-9) {
        throw InvalidArgument("config: processing rate disagrees with filter bank");
    }
    filter_bank.validate();
}

// ----------------------------------------------------------------------------

int StimulusLayout::region_of_angle(double angle_rad) const {
    const int n = n_regions();
    const double sector = 2.0 * std::numbers::pi / n;
    double shifted = std::fmod(angle_rad + sector / 2.0, 2.0 * std::numbers::pi);
    if (shifted < 0.0) shifted += 2.0 * std::numbers::pi;
    int idx = static_cast<int>(std::floor(shifted / sector));
    return idx >= n ? n - 1 : idx;
}

StimulusLayout StimulusLayout::translated_to(const Vec2& cursor) const {
    StimulusLayout out = *this;
    out.cursor_position_px = cursor;
    return out;
}

StimulusLayout make_layout(int n_regions, const Vec2& cursor) {
    if (n_regions < 2) throw InvalidArgument("layout: n_regions must be >= 2");
    StimulusLayout layout;
    layout.cursor_position_px = cursor;
    const double sector = 2.0 * std::numbers::pi / n_regions;
    for (int i = 0; i < n_regions; ++i) {
        layout.region_center_angles_rad.push_back(sector * i);
        layout.region_boundary_angles_rad.push_back(sector * (i + 0.5));
    }
    return layout;
}

std::string to_string(Ring ring) {
    switch (ring) {
        case Ring::inner: return "inner";
        case Ring::outer: return "outer";
        case Ring::none: return "none";
    }
    return "none";
}

std::string to_string(Alignment alignment) {
    switch (alignment) {
        case Alignment::center: return "center";
        case Alignment::cross: return "cross";
        case Alignment::none: return "none";
    }
    return "none";
}

Ring ring_from_string(const std::string& s) {
    if (s == "inner") return Ring::inner;
    if (s == "outer") return Ring::outer;
    if (s == "none") return Ring::none;
    throw InvalidArgument("unknown ring: " + s);
}

Alignment alignment_from_string(const std::string& s) {
    if (s == "center") return Alignment::center;
    if (s == "cross") return Alignment::cross;
    if (s == "none") return Alignment::none;
    throw InvalidArgument("unknown alignment: " + s);
}

namespace {

TargetSpec radial_target(const SessionConfig& config, int direction, int n_directions,
                         double radius, Ring ring) {
    const double angle = 2.0 * std::numbers::pi * direction / n_directions;
    TargetSpec t;
    t.position_px = Vec2(radius * std::cos(angle), radius * std::sin(angle));
    t.radius_px = config.target_radius_px;
    t.ring = ring;
    t.direction = direction;
    return t;
}

}  // namespace

std::vector<TargetSpec> stage1_targets(const SessionConfig& config) {
    std::vector<TargetSpec> out;
    const double radius = config.screen_width_px / 3.0;
    const int n_directions = 2 * config.n_regions;
    for (int region = 0; region < config.n_regions; ++region) {
        TargetSpec t = radial_target(config, 2 * region, n_directions, radius, Ring::outer);
        t.alignment = Alignment::center;
        out.push_back(t);
    }
    return out;
}

std::vector<TargetSpec> stage2_targets(const SessionConfig& config) {
    std::vector<TargetSpec> out;
    const int n_directions = 2 * config.n_regions;
    const std::pair<double, Ring> rings[] = {{config.screen_width_px / 6.0, Ring::inner},
                                             {config.screen_width_px / 3.0, Ring::outer}};
    for (const auto& [radius, ring] : rings) {
        for (int d = 0; d < n_directions; ++d) {
            TargetSpec t = radial_target(config, d, n_directions, radius, ring);
            t.alignment = (d % 2 == 0) ? Alignment::center : Alignment::cross;
            out.push_back(t);
        }
    }
    return out;
}

bool hit_test(const Vec2& cursor, const TargetSpec& target) {
    return (cursor - target.position_px).norm() <= target.radius_px;
}

Vec2 to_raster_px(const Vec2& centered, const SessionConfig& config) {
    return {centered.x() + config.screen_width_px / 2.0, config.screen_height_px / 2.0 - centered.y()};
}

Vec2 from_raster_px(const Vec2& raster, const SessionConfig& config) {
    return {raster.x() - config.screen_width_px / 2.0, config.screen_height_px / 2.0 - raster.y()};
}

}  // namespace neurotrack
