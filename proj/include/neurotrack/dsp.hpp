#pragma once

#include <array>
#include <span>
#include <vector>

#include "neurotrack/core.hpp"
#include "neurotrack/filter_bank_spec.hpp"

namespace neurotrack::dsp {

/// Second-order section {b0, b1, b2, a0, a1, a2} with a0 == 1.
using Sos = std::array<double, 6>;

/// Cascade of second-order sections (transposed direct form II).
class SosFilter {
public:
    SosFilter() = default;
    explicit SosFilter(std::vector<Sos> sections) : sections_(std::move(sections)) {}

    const std::vector<Sos>& sections() const { return sections_; }
    int order() const;

    /// Samples of odd-extension padding used by filtfilt; also the minimum
    /// input length (the input must be strictly longer).
    int padlen() const { return 3 * (2 * static_cast<int>(sections_.size()) + 1); }

    /// Single forward pass from rest.
    std::vector<double> filter(std::span<const double> x) const;

    /// Forward-backward pass with odd-extension padding and steady-state
    /// initial conditions; zero phase, squared magnitude response.
    std::vector<double> filtfilt(std::span<const double> x) const;

    /// Complex frequency response magnitude at `f_hz` for sample rate `fs_hz`.
    double magnitude(double f_hz, double fs_hz) const;

private:
    std::vector<double> run(std::span<const double> x, double x0_for_zi) const;

    std::vector<Sos> sections_;
};

SosFilter butter_lowpass(int order, double cutoff_hz, double fs_hz);
SosFilter butter_highpass(int order, double cutoff_hz, double fs_hz);
SosFilter butter_bandpass(int order, double low_hz, double high_hz, double fs_hz);
/// Second-order IIR notch (RBJ form, -3 dB bandwidth f0/Q).
SosFilter iir_notch(double f0_hz, double q, double fs_hz);

/// Designed filters for a spec; construction is the only expensive part.
class FilterBank {
public:
    FilterBank() = default;
    explicit FilterBank(const FilterBankSpec& spec);

    const FilterBankSpec& spec() const { return spec_; }

    EegEpoch preprocess(const EegEpoch& raw) const;
    std::vector<EegEpoch> subband_decompose(const EegEpoch& epoch) const;
    /// Sub-band `m` (0-based) of a single preprocessed channel.
    std::vector<double> subband(std::span<const double> x, int m) const;
    const SosFilter& subband_filter(int m) const { return subbands_.at(m); }

private:
    FilterBankSpec spec_;
    SosFilter antialias_;
    SosFilter bandpass_;
    SosFilter notch_;
    std::vector<SosFilter> subbands_;
};

/// Anti-aliased decimation (when the epoch is above the processing rate),
/// zero-phase 4-100 Hz band-pass and 50 Hz notch.
EegEpoch preprocess(const EegEpoch& raw, const FilterBankSpec& spec);

/// Zero-phase band-pass into each sub-band of the filter bank.
std::vector<EegEpoch> subband_decompose(const EegEpoch& epoch, const FilterBankSpec& spec);

/// Filter-bank weight a(m) = m^-1.25 + 0.25, m >= 1.
double subband_weight(int m);

}  // namespace neurotrack::dsp
