#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neurotrack/core.hpp"

namespace neurotrack {

/// One region's white-noise luminance code for a single step, values in [0, 1].
struct WnSequence {
    std::vector<double> values;
    int region_index = 0;

    int frames() const { return static_cast<int>(values.size()); }
};

using WnBank = std::vector<WnSequence>;

/// Fraction of the attention window falling inside each region sector.
struct VisualFieldWeights {
    std::vector<double> weights;
};

/// Sequences whose pairwise |Pearson r| reaches this are redrawn.
inline constexpr double kMaxSequenceCorrelation = 0.5;

/// Draws `n_regions` i.i.d. uniform sequences of `frames` values.
/// Deterministic under `seed`; redraws any sequence correlated with an
/// earlier one at |r| >= 0.5.
WnBank generate_wn_bank(int n_regions, int frames, std::uint64_t seed);

/// Gray level per region for display frame `frame_index` (cyclic with the
/// sequence length): round-half-up of 127 * value.
std::vector<int> luminance_frame(std::span<const WnSequence> bank, long frame_index);

/// Polar quadrature grid for the attention window.
struct AttentionGrid {
    int radial_bins = 64;
    int angular_bins = 256;
    double extent_sigmas = 4.0;
};

/// Gaussian attention window centered on the gaze point; weight i is the
/// window mass inside region i's angular sector as seen from the cursor,
/// normalized to sum to one. `aspect` is the horizontal / vertical sigma
/// ratio at constant area (1 = isotropic).
VisualFieldWeights visual_field_weights(const Vec2& gaze_px, const Vec2& cursor_px,
                                        const StimulusLayout& layout, double attention_sigma_px,
                                        const AttentionGrid& grid = {}, double aspect = 1.0);

double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace neurotrack
