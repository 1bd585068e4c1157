#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neurotrack/core.hpp"
#include "neurotrack/random.hpp"
#include "neurotrack/stimulus.hpp"

namespace neurotrack {

inline constexpr int kDefaultChannels = 21;
inline constexpr int kKernelTaps = 125;

/// Parameters of a simulated observer. The evoked source is the attention-
/// weighted sum of each region's zero-mean code convolved with a VEP kernel;
/// channels see that source through a fixed spatial pattern plus 1/f noise.
struct SyntheticSubject {
    std::vector<double> vep_kernel;       // kKernelTaps taps at 250 Hz, unit energy
    Eigen::VectorXd channel_mixing;       // unit norm
    double attention_sigma_px = 100.0;
    double attention_aspect = 1.0;        // horizontal / vertical spread
    double signal_amplitude_uv = 10.0;    // source scale
    double noise_amplitude_uv = 10.0;     // per-channel noise RMS before filtering
    double shared_noise_fraction = 0.1;   // variance share of the common-mode noise
    int latency_samples = 5;
    /// Per-region response gain (unequal code efficacy across regions); empty = all 1.
    std::vector<double> region_gain;
    std::uint64_t seed = 0;

    int n_channels() const { return static_cast<int>(channel_mixing.size()); }
    /// 20 log10(signal / noise amplitude); -inf for a noiseless subject.
    double snr_db() const;
    void validate(int n_regions) const;
};

/// Difference of two gamma densities peaking at `peak1_s` (positive lobe) and
/// `peak2_s` (negative lobe, scaled by `ratio`), sampled at 250 Hz, unit energy.
std::vector<double> gamma_vep_kernel(double peak1_s, double peak2_s, double ratio,
                                     int taps = kKernelTaps, double fs_hz = 250.0);

/// The calibrated reference observer used for the closed-loop acceptance band.
SyntheticSubject default_subject(std::uint64_t seed = 1);

/// Default subject with the noise switched off.
SyntheticSubject ideal_subject(std::uint64_t seed = 1);

/// Deterministic cohort. Per-subject kernel peaks, attention width, latency,
/// region gains and SNR are drawn from fixed ranges; SNR is stratified so
/// the cohort always spans most of its 14 dB range.
std::vector<SyntheticSubject> make_cohort(int n_subjects, std::uint64_t seed, int n_regions = 8);

/// Cached per-region evoked responses for one subject and one code bank.
class ForwardModel {
public:
    ForwardModel(SyntheticSubject subject, WnBank bank, double sample_rate_hz = 250.0,
                 double step_seconds = 1.0);

    const SyntheticSubject& subject() const { return subject_; }
    const WnBank& bank() const { return bank_; }
    int samples_per_step() const { return samples_per_step_; }

    /// Unit-weight source waveform of region i over one step (periodic).
    const std::vector<double>& region_response(int region) const { return responses_.at(region); }

    /// Noise is drawn from a generator seeded by (subject.seed, stream).
    EegEpoch simulate(const VisualFieldWeights& weights, double duration_s, std::uint64_t stream) const;
    /// Time-varying attention: the step is split into equal segments, each
    /// mixing the region responses with its own weights.
    EegEpoch simulate(std::span<const VisualFieldWeights> segments, double duration_s,
                      std::uint64_t stream) const;

private:
    SyntheticSubject subject_;
    WnBank bank_;
    double sample_rate_hz_;
    double step_seconds_;
    int samples_per_step_;
    std::vector<std::vector<double>> responses_;
};

/// Simulate one epoch. The code bank repeats every step, so each region's
/// response is the periodic (steady-state) convolution of its code with the
/// kernel, delayed by the subject latency. Samples are rounded to float32,
/// the precision of the session-file format.
EegEpoch simulate_epoch(const SyntheticSubject& subject, const VisualFieldWeights& weights,
                        std::span<const WnSequence> bank, double duration_s,
                        std::uint64_t stream = 0, double sample_rate_hz = 250.0,
                        double step_seconds = 1.0);

/// 1/f (pink) Gaussian noise with unit expected variance, no DC.
std::vector<double> pink_noise(int n, Rng& rng);

}  // namespace neurotrack
