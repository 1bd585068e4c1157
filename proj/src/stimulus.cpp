#include "neurotrack/stimulus.hpp"

#include <cmath>
#include <numbers>

#include "neurotrack/random.hpp"

namespace neurotrack {

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw InvalidArgument("pearson: length mismatch");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

WnBank generate_wn_bank(int n_regions, int frames, std::uint64_t seed) {
    if (frames <= 0) throw InvalidArgument("generate_wn_bank: frames must be >= 1");
    if (n_regions < 1) throw InvalidArgument("generate_wn_bank: n_regions must be >= 1");
    WnBank bank;
    bank.reserve(n_regions);
    for (int region = 0; region < n_regions; ++region) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(region), attempt}));
            WnSequence seq;
            seq.region_index = region;
            seq.values.resize(frames);
            for (auto& v : seq.values) v = rng.uniform();
            bool distinct = true;
            if (frames >= 3) {
                for (const auto& prev : bank) {
                    if (std::abs(pearson(prev.values, seq.values)) >= kMaxSequenceCorrelation) {
                        distinct = false;
                        break;
                    }
                }
            }
            if (distinct || attempt > 10000) {
                bank.push_back(std::move(seq));
                break;
            }
        }
    }
    return bank;
}

std::vector<int> luminance_frame(std::span<const WnSequence> bank, long frame_index) {
    if (frame_index < 0) throw InvalidArgument("luminance_frame: frame index must be >= 0");
    std::vector<int> gray;
    gray.reserve(bank.size());
    for (const auto& seq : bank) {
        const double v = seq.values.at(static_cast<std::size_t>(frame_index % seq.frames()));
        gray.push_back(static_cast<int>(std::floor(127.0 * v + 0.5)));
    }
    return gray;
}

VisualFieldWeights visual_field_weights(const Vec2& gaze_px, const Vec2& cursor_px,
                                        const StimulusLayout& layout, double attention_sigma_px,
                                        const AttentionGrid& grid, double aspect) {
    if (!(attention_sigma_px > 0.0)) {
        throw InvalidArgument("visual_field_weights: attention sigma must be positive");
    }
    if (!(aspect > 0.0)) throw InvalidArgument("visual_field_weights: aspect must be positive");
    const int n = layout.n_regions();
    VisualFieldWeights out;
    out.weights.assign(n, 0.0);

    const double r_max = grid.extent_sigmas * attention_sigma_px;
    const double dr = r_max / grid.radial_bins;
    const double dphi = 2.0 * std::numbers::pi / grid.angular_bins;
    const double two_s2 = 2.0 * attention_sigma_px * attention_sigma_px;
    const Vec2 offset = gaze_px - cursor_px;
    const double sx = std::sqrt(aspect), sy = 1.0 / sx;

    // Per-bin mass = ring mass of the radial Gaussian / angular bins; the
    // representative point is the bin's polar midpoint.
    std::vector<double> ring_mass(grid.radial_bins);
    for (int k = 0; k < grid.radial_bins; ++k) {
        const double r0 = k * dr, r1 = (k + 1) * dr;
        ring_mass[k] = std::exp(-r0 * r0 / two_s2) - std::exp(-r1 * r1 / two_s2);
    }
    std::vector<double> cos_phi(grid.angular_bins), sin_phi(grid.angular_bins);
    for (int j = 0; j < grid.angular_bins; ++j) {
        const double phi = (j + 0.5) * dphi;
        cos_phi[j] = std::cos(phi);
        sin_phi[j] = std::sin(phi);
    }
    std::vector<double> ring_acc(n);
    for (int k = 0; k < grid.radial_bins; ++k) {
        const double r = (k + 0.5) * dr;
        std::fill(ring_acc.begin(), ring_acc.end(), 0.0);
        for (int j = 0; j < grid.angular_bins; ++j) {
            const double x = offset.x() + sx * r * cos_phi[j];
            const double y = offset.y() + sy * r * sin_phi[j];
            ring_acc[layout.region_of_angle(std::atan2(y, x))] += 1.0;
        }
        for (int i = 0; i < n; ++i) out.weights[i] += ring_mass[k] * ring_acc[i] / grid.angular_bins;
    }
    double total = 0.0;
    for (double w : out.weights) total += w;
    for (double& w : out.weights) w /= total;
    return out;
}

}  // namespace neurotrack
