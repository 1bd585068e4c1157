#include "neurotrack/synth_eeg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace neurotrack {

namespace {

constexpr double kDefaultSnrDb = 0.0;
constexpr double kCohortSnrSpanDb = 14.0;

double gamma_density(double t, double shape, double scale) {
    if (t <= 0.0) return 0.0;
    return std::exp((shape - 1.0) * std::log(t) - t / scale - std::lgamma(shape) - shape * std::log(scale));
}

Eigen::VectorXd occipital_mixing(Rng& rng, int n_channels) {
    Eigen::VectorXd a(n_channels);
    for (int c = 0; c < n_channels; ++c) a[c] = 1.0 + 0.5 * rng.normal();
    return a / a.norm();
}

}  // namespace

double SyntheticSubject::snr_db() const {
    if (noise_amplitude_uv <= 0.0) return std::numeric_limits<double>::infinity();
    if (signal_amplitude_uv <= 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(signal_amplitude_uv / noise_amplitude_uv);
}

void SyntheticSubject::validate(int n_regions) const {
    if (vep_kernel.empty()) throw InvalidArgument("subject: empty VEP kernel");
    if (channel_mixing.size() == 0) throw InvalidArgument("subject: no channels");
    if (!(attention_sigma_px > 0.0)) throw InvalidArgument("subject: attention sigma must be positive");
    if (!(attention_aspect > 0.0)) throw InvalidArgument("subject: attention aspect must be positive");
    if (noise_amplitude_uv < 0.0 || signal_amplitude_uv < 0.0) {
        throw InvalidArgument("subject: amplitudes must be >= 0");
    }
    if (shared_noise_fraction < 0.0 || shared_noise_fraction > 1.0) {
        throw InvalidArgument("subject: shared noise fraction must lie in [0, 1]");
    }
    if (latency_samples < 0) throw InvalidArgument("subject: latency must be >= 0");
    if (!region_gain.empty() && static_cast<int>(region_gain.size()) != n_regions) {
        throw InvalidArgument("subject: region gain count differs from region count");
    }
}

std::vector<double> gamma_vep_kernel(double peak1_s, double peak2_s, double ratio, int taps, double fs_hz) {
    // Shape 20 gamma densities: mode = 19 * scale, lobes ~40 ms wide.
    constexpr double shape = 20.0;
    std::vector<double> k(taps);
    for (int i = 0; i < taps; ++i) {
        const double t = i / fs_hz;
        k[i] = gamma_density(t, shape, peak1_s / (shape - 1.0)) -
               ratio * gamma_density(t, shape, peak2_s / (shape - 1.0));
    }
    const double energy = std::sqrt(std::inner_product(k.begin(), k.end(), k.begin(), 0.0));
    for (double& v : k) v /= energy;
    return k;
}

SyntheticSubject default_subject(std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0xdef}));
    SyntheticSubject s;
    s.vep_kernel = gamma_vep_kernel(0.100, 0.140, 0.6);
    s.channel_mixing = occipital_mixing(rng, kDefaultChannels);
    s.attention_sigma_px = 100.0;
    s.signal_amplitude_uv = 10.0;
    s.noise_amplitude_uv = s.signal_amplitude_uv / std::pow(10.0, kDefaultSnrDb / 20.0);
    s.latency_samples = 5;
    s.seed = seed;
    return s;
}

SyntheticSubject ideal_subject(std::uint64_t seed) {
    SyntheticSubject s = default_subject(seed);
    s.noise_amplitude_uv = 0.0;
    return s;
}

std::vector<SyntheticSubject> make_cohort(int n_subjects, std::uint64_t seed, int n_regions) {
    if (n_subjects < 1) throw InvalidArgument("make_cohort: need at least one subject");
    Rng rng(derive_seed(seed, {0xc0407}));
    std::vector<int> strata(n_subjects);
    std::iota(strata.begin(), strata.end(), 0);
    for (int i = n_subjects - 1; i > 0; --i) std::swap(strata[i], strata[rng.below(i + 1)]);

    std::vector<SyntheticSubject> cohort;
    for (int i = 0; i < n_subjects; ++i) {
        SyntheticSubject s;
        s.seed = derive_seed(seed, {static_cast<std::uint64_t>(i), 0x5b});
        s.vep_kernel = gamma_vep_kernel(rng.uniform(0.085, 0.115), rng.uniform(0.125, 0.155),
                                        rng.uniform(0.4, 0.8));
        s.channel_mixing = occipital_mixing(rng, kDefaultChannels);
        s.attention_sigma_px = 100.0 * rng.uniform(0.8, 1.25);
        s.attention_aspect = rng.uniform(1.2, 1.8);
        s.latency_samples = static_cast<int>(rng.below(16));
        // lower visual field responds more strongly than the upper field
        const double field_asymmetry = rng.uniform(0.2, 0.5);
        s.region_gain.resize(n_regions);
        for (int r = 0; r < n_regions; ++r) {
            const double angle = 2.0 * std::numbers::pi * r / n_regions;
            s.region_gain[r] = (1.0 - field_asymmetry * std::sin(angle)) * rng.uniform(0.8, 1.2);
        }
        const double quantile = (strata[i] + rng.uniform()) / n_subjects;
        const double snr = kDefaultSnrDb + kCohortSnrSpanDb * (quantile - 0.5);
        s.signal_amplitude_uv = 10.0;
        s.noise_amplitude_uv = s.signal_amplitude_uv / std::pow(10.0, snr / 20.0);
        cohort.push_back(std::move(s));
    }
    return cohort;
}

std::vector<double> pink_noise(int n, Rng& rng) {
    if (n < 2) return std::vector<double>(std::max(n, 0), 0.0);
    std::vector<std::complex<double>> spectrum(n, {0.0, 0.0});
    double variance = 0.0;
    const int half = n / 2;
    for (int k = 1; k <= half; ++k) {
        const double amp = 1.0 / std::sqrt(static_cast<double>(k));
        if (n % 2 == 0 && k == half) {
            spectrum[k] = {amp * rng.normal(), 0.0};
            variance += amp * amp;
        } else {
            const std::complex<double> z(rng.normal() / std::sqrt(2.0), rng.normal() / std::sqrt(2.0));
            spectrum[k] = amp * z;
            spectrum[n - k] = std::conj(spectrum[k]);
            variance += 2.0 * amp * amp;
        }
    }
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<std::complex<double>> time;
    fft.inv(time, spectrum);
    // Unscaled inverse: Var[x_t] = sum_k E|X_k|^2.
    const double norm = std::sqrt(variance);
    std::vector<double> out(n);
    for (int t = 0; t < n; ++t) out[t] = time[t].real() / norm;
    return out;
}

// ----------------------------------------------------------------------------

ForwardModel::ForwardModel(SyntheticSubject subject, WnBank bank, double sample_rate_hz, double step_seconds)
    : subject_(std::move(subject)), bank_(std::move(bank)), sample_rate_hz_(sample_rate_hz),
      step_seconds_(step_seconds) {
    if (bank_.empty()) throw InvalidArgument("simulate: empty code bank");
    subject_.validate(static_cast<int>(bank_.size()));
    samples_per_step_ = static_cast<int>(std::lround(sample_rate_hz_ * step_seconds_));
    if (samples_per_step_ < 1) throw InvalidArgument("simulate: step shorter than one sample");

    const int n = samples_per_step_;
    const auto& kernel = subject_.vep_kernel;
    std::vector<double> code(n);
    for (std::size_t i = 0; i < bank_.size(); ++i) {
        const auto& seq = bank_[i];
        const int frames = seq.frames();
        const double mean = std::accumulate(seq.values.begin(), seq.values.end(), 0.0) / frames;
        for (int t = 0; t < n; ++t) {
            const int frame = static_cast<int>((static_cast<long long>(t) * frames) / n);
            code[t] = (seq.values[frame] - mean) * std::sqrt(12.0);
        }
        const double gain = subject_.signal_amplitude_uv *
                            (subject_.region_gain.empty() ? 1.0 : subject_.region_gain[i]);
        std::vector<double> r(n, 0.0);
        for (int t = 0; t < n; ++t) {
            double acc = 0.0;
            for (std::size_t k = 0; k < kernel.size(); ++k) {
                long idx = (static_cast<long>(t) - static_cast<long>(k) - subject_.latency_samples) % n;
                if (idx < 0) idx += n;
                acc += kernel[k] * code[idx];
            }
            r[t] = gain * acc;
        }
        responses_.push_back(std::move(r));
    }
}

EegEpoch ForwardModel::simulate(const VisualFieldWeights& weights, double duration_s, std::uint64_t stream) const {
    return simulate(std::span<const VisualFieldWeights>(&weights, 1), duration_s, stream);
}

EegEpoch ForwardModel::simulate(std::span<const VisualFieldWeights> segments, double duration_s,
                                std::uint64_t stream) const {
    if (segments.empty()) throw InvalidArgument("simulate: no visual field weights");
    for (const auto& w : segments) {
        if (w.weights.size() != bank_.size()) {
            throw InvalidArgument("simulate: weight count differs from code bank size");
        }
    }
    const double steps = duration_s / step_seconds_;
    if (!(steps > 0.0) || std::abs(steps - std::round(steps)) > 1e-9) {
        throw InvalidArgument("simulate: duration must be a positive multiple of the step");
    }
    const int total = samples_per_step_ * static_cast<int>(std::lround(steps));
    const int n_ch = subject_.n_channels();

    const int n_seg = static_cast<int>(segments.size());
    std::vector<double> source(samples_per_step_, 0.0);
    for (int t = 0; t < samples_per_step_; ++t) {
        const auto& w = segments[static_cast<std::size_t>(t) * n_seg / samples_per_step_].weights;
        for (std::size_t i = 0; i < bank_.size(); ++i) source[t] += w[i] * responses_[i][t];
    }

    EegEpoch epoch;
    epoch.sample_rate_hz = sample_rate_hz_;
    epoch.samples.resize(n_ch, total);
    for (int c = 0; c < n_ch; ++c) {
        for (int t = 0; t < total; ++t) {
            epoch.samples(c, t) = subject_.channel_mixing[c] * source[t % samples_per_step_];
        }
    }

    if (subject_.noise_amplitude_uv > 0.0) {
        Rng rng(derive_seed(subject_.seed, {stream, 0x4015e}));
        const double shared_gain = std::sqrt(subject_.shared_noise_fraction);
        const double own_gain = std::sqrt(1.0 - subject_.shared_noise_fraction);
        const auto shared = pink_noise(total, rng);
        for (int c = 0; c < n_ch; ++c) {
            const auto own = pink_noise(total, rng);
            for (int t = 0; t < total; ++t) {
                epoch.samples(c, t) +=
                    subject_.noise_amplitude_uv * (own_gain * own[t] + shared_gain * shared[t]);
            }
        }
    }
    for (int c = 0; c < n_ch; ++c) {
        for (int t = 0; t < total; ++t) {
            epoch.samples(c, t) = static_cast<double>(static_cast<float>(epoch.samples(c, t)));
        }
    }
    return epoch;
}

EegEpoch simulate_epoch(const SyntheticSubject& subject, const VisualFieldWeights& weights,
                        std::span<const WnSequence> bank, double duration_s, std::uint64_t stream,
                        double sample_rate_hz, double step_seconds) {
    if (bank.empty()) throw InvalidArgument("simulate: empty code bank");
    return ForwardModel(subject, WnBank(bank.begin(), bank.end()), sample_rate_hz, step_seconds)
        .simulate(weights, duration_s, stream);
}

}  // namespace neurotrack
