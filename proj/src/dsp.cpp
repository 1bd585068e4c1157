#include "neurotrack/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace neurotrack::dsp {

namespace {

using cplx = std::complex<double>;

struct Zpk {
    std::vector<cplx> zeros;
    std::vector<cplx> poles;
    double gain = 1.0;
};

Zpk butter_prototype(int order) {
    Zpk z;
    for (int k = 0; k < order; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
        z.poles.push_back(std::polar(1.0, theta));
    }
    return z;
}

double prewarp(double f_hz, double fs_hz) {
    return 2.0 * fs_hz * std::tan(std::numbers::pi * f_hz / fs_hz);
}

cplx product(const std::vector<cplx>& v, cplx offset, bool negate) {
    cplx p = 1.0;
    for (const auto& x : v) p *= negate ? (offset - x) : (x - offset);
    return p;
}

Zpk lp2lp(const Zpk& in, double w0) {
    Zpk out;
    for (auto z : in.zeros) out.zeros.push_back(z * w0);
    for (auto p : in.poles) out.poles.push_back(p * w0);
    const int degree = static_cast<int>(in.poles.size() - in.zeros.size());
    out.gain = in.gain * std::pow(w0, degree);
    return out;
}

Zpk lp2hp(const Zpk& in, double w0) {
    Zpk out;
    for (auto z : in.zeros) out.zeros.push_back(w0 / z);
    for (auto p : in.poles) out.poles.push_back(w0 / p);
    const int degree = static_cast<int>(in.poles.size() - in.zeros.size());
    for (int i = 0; i < degree; ++i) out.zeros.emplace_back(0.0, 0.0);
    const cplx ratio = product(in.zeros, 0.0, true) / product(in.poles, 0.0, true);
    out.gain = in.gain * ratio.real();
    return out;
}

Zpk lp2bp(const Zpk& in, double w0, double bw) {
    Zpk out;
    auto split = [&](cplx s, std::vector<cplx>& dst) {
        const cplx half = s * bw / 2.0;
        const cplx root = std::sqrt(half * half - w0 * w0);
        dst.push_back(half + root);
        dst.push_back(half - root);
    };
    for (auto z : in.zeros) split(z, out.zeros);
    for (auto p : in.poles) split(p, out.poles);
    const int degree = static_cast<int>(in.poles.size() - in.zeros.size());
    for (int i = 0; i < degree; ++i) out.zeros.emplace_back(0.0, 0.0);
    out.gain = in.gain * std::pow(bw, degree);
    return out;
}

Zpk bilinear(const Zpk& in, double fs_hz) {
    const double fs2 = 2.0 * fs_hz;
    Zpk out;
    for (auto z : in.zeros) out.zeros.push_back((fs2 + z) / (fs2 - z));
    for (auto p : in.poles) out.poles.push_back((fs2 + p) / (fs2 - p));
    const int degree = static_cast<int>(in.poles.size() - in.zeros.size());
    for (int i = 0; i < degree; ++i) out.zeros.emplace_back(-1.0, 0.0);
    const cplx ratio = product(in.zeros, fs2, true) / product(in.poles, fs2, true);
    out.gain = in.gain * ratio.real();
    return out;
}

// Splits roots into conjugate pairs (upper half-plane member kept) and real roots.
void classify(const std::vector<cplx>& roots, std::vector<cplx>& complex_upper,
              std::vector<double>& reals) {
    constexpr double tol = 1e-10;
    for (const auto& r : roots) {
        if (std::abs(r.imag()) <= tol * std::max(1.0, std::abs(r))) {
            reals.push_back(r.real());
        } else if (r.imag() > 0.0) {
            complex_upper.push_back(r);
        }
    }
}

// Quadratic factor coefficients {1, c1, c2} for a pair of roots.
std::array<double, 3> quad_from_pair(cplx r) { return {1.0, -2.0 * r.real(), std::norm(r)}; }
std::array<double, 3> quad_from_reals(double a, double b) { return {1.0, -(a + b), a * b}; }

SosFilter zpk_to_sos(const Zpk& zpk) {
    std::vector<cplx> pc, zc;
    std::vector<double> pr, zr;
    classify(zpk.poles, pc, pr);
    classify(zpk.zeros, zc, zr);

    std::vector<std::array<double, 3>> den, num;
    for (auto p : pc) den.push_back(quad_from_pair(p));
    for (std::size_t i = 0; i + 1 < pr.size(); i += 2) den.push_back(quad_from_reals(pr[i], pr[i + 1]));
    if (pr.size() % 2 == 1) den.push_back({1.0, -pr.back(), 0.0});

    for (auto z : zc) num.push_back(quad_from_pair(z));
    for (std::size_t i = 0; i + 1 < zr.size(); i += 2) num.push_back(quad_from_reals(zr[i], zr[i + 1]));
    if (zr.size() % 2 == 1) num.push_back({1.0, -zr.back(), 0.0});

    while (num.size() < den.size()) num.push_back({1.0, 0.0, 0.0});
    while (den.size() < num.size()) den.push_back({1.0, 0.0, 0.0});

    std::vector<Sos> sections;
    for (std::size_t i = 0; i < den.size(); ++i) {
        sections.push_back({num[i][0], num[i][1], num[i][2], den[i][0], den[i][1], den[i][2]});
    }
    for (int k = 0; k < 3; ++k) sections.front()[k] *= zpk.gain;
    return SosFilter(std::move(sections));
}

void check_design(double f, double fs, const char* what) {
    if (!(f > 0.0 && f < fs / 2.0)) {
        throw InvalidArgument(std::string(what) + ": cutoff must lie in (0, fs/2)");
    }
}

}  // namespace

int SosFilter::order() const {
    int order = 0;
    for (const auto& s : sections_) order += (s[5] != 0.0) ? 2 : (s[4] != 0.0 ? 1 : 0);
    return order;
}

std::vector<double> SosFilter::run(std::span<const double> x, double x0_for_zi) const {
    std::vector<double> y(x.begin(), x.end());
    // Steady-state initial conditions for a constant input of x0; each
    // section sees the DC gain of the ones before it.
    double dc_in = x0_for_zi;
    for (const auto& s : sections_) {
        const double b0 = s[0], b1 = s[1], b2 = s[2], a1 = s[4], a2 = s[5];
        const double dc_gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
        const double y_ss = dc_gain * dc_in;
        double z2 = b2 * dc_in - a2 * y_ss;
        double z1 = b1 * dc_in - a1 * y_ss + z2;
        for (double& v : y) {
            const double in = v;
            const double out = b0 * in + z1;
            z1 = b1 * in - a1 * out + z2;
            z2 = b2 * in - a2 * out;
            v = out;
        }
        dc_in = y_ss;
    }
    return y;
}

std::vector<double> SosFilter::filter(std::span<const double> x) const { return run(x, 0.0); }

std::vector<double> SosFilter::filtfilt(std::span<const double> x) const {
    const int pad = padlen();
    const int n = static_cast<int>(x.size());
    if (n <= pad) {
        throw LengthError("filtfilt: input of " + std::to_string(n) +
                          " samples is not longer than the filter warm-up of " + std::to_string(pad));
    }
    std::vector<double> ext(n + 2 * pad);
    for (int i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
    std::copy(x.begin(), x.end(), ext.begin() + pad);
    for (int i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

    std::vector<double> fwd = run(ext, ext.front());
    std::reverse(fwd.begin(), fwd.end());
    std::vector<double> bwd = run(fwd, fwd.front());
    std::reverse(bwd.begin(), bwd.end());
    return {bwd.begin() + pad, bwd.begin() + pad + n};
}

double SosFilter::magnitude(double f_hz, double fs_hz) const {
    const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_hz);
    const cplx z2 = z1 * z1;
    cplx h = 1.0;
    for (const auto& s : sections_) h *= (s[0] + s[1] * z1 + s[2] * z2) / (s[3] + s[4] * z1 + s[5] * z2);
    return std::abs(h);
}

SosFilter butter_lowpass(int order, double cutoff_hz, double fs_hz) {
    check_design(cutoff_hz, fs_hz, "butter_lowpass");
    return zpk_to_sos(bilinear(lp2lp(butter_prototype(order), prewarp(cutoff_hz, fs_hz)), fs_hz));
}

SosFilter butter_highpass(int order, double cutoff_hz, double fs_hz) {
    check_design(cutoff_hz, fs_hz, "butter_highpass");
    return zpk_to_sos(bilinear(lp2hp(butter_prototype(order), prewarp(cutoff_hz, fs_hz)), fs_hz));
}

SosFilter butter_bandpass(int order, double low_hz, double high_hz, double fs_hz) {
    check_design(low_hz, fs_hz, "butter_bandpass");
    check_design(high_hz, fs_hz, "butter_bandpass");
    if (low_hz >= high_hz) throw InvalidArgument("butter_bandpass: low edge must be below high edge");
    const double w1 = prewarp(low_hz, fs_hz), w2 = prewarp(high_hz, fs_hz);
    return zpk_to_sos(bilinear(lp2bp(butter_prototype(order), std::sqrt(w1 * w2), w2 - w1), fs_hz));
}

SosFilter iir_notch(double f0_hz, double q, double fs_hz) {
    check_design(f0_hz, fs_hz, "iir_notch");
    const double w0 = 2.0 * std::numbers::pi * f0_hz / fs_hz;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    const double c = -2.0 * std::cos(w0);
    return SosFilter({{1.0 / a0, c / a0, 1.0 / a0, 1.0, c / a0, (1.0 - alpha) / a0}});
}

// ----------------------------------------------------------------------------

FilterBank::FilterBank(const FilterBankSpec& spec) : spec_(spec) {
    spec_.validate();
    const double fs = spec_.processing_rate_hz;
    if (spec_.decimation_factor > 1) {
        antialias_ = butter_lowpass(8, 0.8 * fs / 2.0, fs * spec_.decimation_factor);
    }
    const double high = std::min(spec_.bandpass_hz.second, 0.999 * fs / 2.0);
    bandpass_ = butter_bandpass(spec_.filter_order, spec_.bandpass_hz.first, high, fs);
    if (spec_.notch_hz > 0.0) notch_ = iir_notch(spec_.notch_hz, spec_.notch_q, fs);
    for (const auto& [lo, hi] : spec_.band_edges_hz) {
        subbands_.push_back(butter_bandpass(spec_.filter_order, lo, std::min(hi, 0.999 * fs / 2.0), fs));
    }
}

EegEpoch FilterBank::preprocess(const EegEpoch& raw) const {
    const double fs = spec_.processing_rate_hz;
    EegEpoch out;
    out.stimulus_phase_offset = raw.stimulus_phase_offset;
    out.sample_rate_hz = fs;

    Eigen::MatrixXd decimated;
    if (std::abs(raw.sample_rate_hz - fs) <= 1e-9 * fs) {
        decimated = raw.samples;
    } else {
        const int q = spec_.decimation_factor;
        if (q <= 1 || std::abs(raw.sample_rate_hz - fs * q) > 1e-9 * fs) {
            throw InvalidArgument("preprocess: sample rate " + std::to_string(raw.sample_rate_hz) +
                                  " Hz is not the processing rate times the decimation factor");
        }
        if (raw.n_samples() % q != 0) {
            throw InvalidArgument("preprocess: epoch length not divisible by the decimation factor");
        }
        decimated.resize(raw.n_channels(), raw.n_samples() / q);
        std::vector<double> row(raw.n_samples());
        for (int c = 0; c < raw.n_channels(); ++c) {
            for (int t = 0; t < raw.n_samples(); ++t) row[t] = raw.samples(c, t);
            const auto smooth = antialias_.filtfilt(row);
            for (int t = 0; t < decimated.cols(); ++t) decimated(c, t) = smooth[t * q];
        }
        out.stimulus_phase_offset = raw.stimulus_phase_offset / q;
    }

    out.samples.resize(decimated.rows(), decimated.cols());
    std::vector<double> row(decimated.cols());
    for (int c = 0; c < decimated.rows(); ++c) {
        for (int t = 0; t < decimated.cols(); ++t) row[t] = decimated(c, t);
        auto y = bandpass_.filtfilt(row);
        if (!notch_.sections().empty()) y = notch_.filtfilt(y);
        for (int t = 0; t < decimated.cols(); ++t) out.samples(c, t) = y[t];
    }
    return out;
}

std::vector<double> FilterBank::subband(std::span<const double> x, int m) const {
    return subbands_.at(m).filtfilt(x);
}

std::vector<EegEpoch> FilterBank::subband_decompose(const EegEpoch& epoch) const {
    if (std::abs(epoch.sample_rate_hz - spec_.processing_rate_hz) > 1e-9 * spec_.processing_rate_hz) {
        throw InvalidArgument("subband_decompose: epoch is not at the processing rate");
    }
    std::vector<EegEpoch> bands;
    std::vector<double> row(epoch.n_samples());
    for (int m = 0; m < spec_.n_subbands; ++m) {
        EegEpoch band;
        band.sample_rate_hz = epoch.sample_rate_hz;
        band.stimulus_phase_offset = epoch.stimulus_phase_offset;
        band.samples.resize(epoch.n_channels(), epoch.n_samples());
        for (int c = 0; c < epoch.n_channels(); ++c) {
            for (int t = 0; t < epoch.n_samples(); ++t) row[t] = epoch.samples(c, t);
            const auto y = subbands_[m].filtfilt(row);
            for (int t = 0; t < epoch.n_samples(); ++t) band.samples(c, t) = y[t];
        }
        bands.push_back(std::move(band));
    }
    return bands;
}

EegEpoch preprocess(const EegEpoch& raw, const FilterBankSpec& spec) {
    return FilterBank(spec).preprocess(raw);
}

std::vector<EegEpoch> subband_decompose(const EegEpoch& epoch, const FilterBankSpec& spec) {
    return FilterBank(spec).subband_decompose(epoch);
}

double subband_weight(int m) {
    if (m < 1) throw InvalidArgument("subband_weight: m must be >= 1");
    return std::pow(static_cast<double>(m), -1.25) + 0.25;
}

}  // namespace neurotrack::dsp
