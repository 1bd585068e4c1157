#include <doctest.h>

#include <cmath>

#include "neurotrack/random.hpp"
#include "neurotrack/stimulus.hpp"
#include "neurotrack/trca.hpp"
#include "oracles.hpp"

using namespace neurotrack;

namespace {

/// Preprocessed-rate epochs with a region-specific waveform through a fixed
/// mixing vector plus white noise.
std::vector<std::vector<EegEpoch>> planted_trials(int regions, int reps, int channels, double noise,
                                                  std::uint64_t seed, Eigen::VectorXd* mixing = nullptr) {
    Rng rng(seed);
    Eigen::VectorXd a(channels);
    for (int c = 0; c < channels; ++c) a[c] = rng.normal();
    if (mixing) *mixing = a;
    std::vector<std::vector<EegEpoch>> trials(regions);
    for (int r = 0; r < regions; ++r) {
        Eigen::RowVectorXd s(250);
        for (int t = 0; t < 250; ++t) {
            s[t] = std::sin(2 * oracle::pi * (9 + 2 * r) * t / 250.0) + 0.5 * std::sin(2 * oracle::pi * (21 - r) * t / 250.0 + r);
        }
        for (int h = 0; h < reps; ++h) {
            EegEpoch e;
            e.samples = a * s;
            for (int c = 0; c < channels; ++c) {
                for (int t = 0; t < 250; ++t) e.samples(c, t) += noise * rng.normal();
            }
            trials[r].push_back(e);
        }
    }
    return trials;
}

double sum_weights(int n) {
    double s = 0.0;
    for (int m = 1; m <= n; ++m) s += oracle::subband_weight(m);
    return s;
}

}  // namespace

TEST_CASE("template correlates with itself at the filter-bank weight sum") {
    const FilterBankSpec spec;
    const auto trials = planted_trials(4, 3, 6, 0.3, 1);
    const auto model = train_trca(trials, spec);
    // Build an epoch whose filtered sub-band components equal region 2's templates.
    std::vector<Eigen::VectorXd> comps(model.templates[2].begin(), model.templates[2].end());
    const auto rho = correlate_components(model, comps);
    CHECK(rho.rho[2] == doctest::Approx(sum_weights(5)).epsilon(1e-12));
    CHECK(sum_weights(5) == doctest::Approx(3.2342515258026427).epsilon(1e-14));
    for (auto& c : comps) c = -c;
    CHECK(correlate_components(model, comps).rho[2] == doctest::Approx(-sum_weights(5)).epsilon(1e-12));
}

TEST_CASE("identical trials give unit inter-trial correlation of the filtered output") {
    const FilterBankSpec spec;
    auto trials = planted_trials(2, 1, 5, 0.5, 2);
    for (auto& region : trials) region.push_back(region.front());
    const auto model = train_trca(trials, spec);
    const dsp::FilterBank bank(spec);
    for (int r = 0; r < 2; ++r) {
        const auto bands = bank.subband_decompose(trials[r][0]);
        for (int m = 0; m < model.n_subbands(); ++m) {
            const Eigen::VectorXd y = bands[m].samples.transpose() * model.filters[m];
            const std::vector<double> a(y.data(), y.data() + y.size());
            const std::vector<double> b(model.templates[r][m].data(),
                                        model.templates[r][m].data() + model.templates[r][m].size());
            CHECK(oracle::pearson(a, b) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("planted component is recovered at 0 dB") {
    // Oracle: with white isotropic noise the optimal filter is the mixing
    // direction itself (S is rank one along a, Q = aa' + sigma^2 I).
    const int channels = 21;
    int good = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 100);
        Eigen::VectorXd a(channels);
        for (int c = 0; c < channels; ++c) a[c] = rng.normal();
        a.normalize();
        std::vector<Eigen::MatrixXd> group;
        Eigen::RowVectorXd s(250);
        for (int t = 0; t < 250; ++t) s[t] = rng.normal();
        s /= std::sqrt(s.squaredNorm() / 250.0);
        for (int h = 0; h < 6; ++h) {
            Eigen::MatrixXd x = a * s;
            // 0 dB: per-sample noise power over all channels equals signal power
            const double sigma = 1.0 / std::sqrt(static_cast<double>(channels));
            for (int c = 0; c < channels; ++c) {
                for (int t = 0; t < 250; ++t) x(c, t) += sigma * rng.normal();
            }
            group.push_back(x);
        }
        const Eigen::VectorXd w = trca_spatial_filter({group});
        if (std::abs(w.normalized().dot(a)) >= 0.9) ++good;
    }
    CHECK(good >= 19);
}

TEST_CASE("channel permutation permutes the filters and keeps rho") {
    const FilterBankSpec spec;
    const auto trials = planted_trials(3, 3, 6, 1.0, 4);
    const Eigen::VectorXi perm = (Eigen::VectorXi(6) << 3, 0, 5, 1, 4, 2).finished();
    auto permuted = trials;
    for (auto& region : permuted) {
        for (auto& e : region) {
            Eigen::MatrixXd p(e.samples.rows(), e.samples.cols());
            for (int c = 0; c < 6; ++c) p.row(c) = e.samples.row(perm[c]);
            e.samples = p;
        }
    }
    const auto m1 = train_trca(trials, spec);
    const auto m2 = train_trca(permuted, spec);
    for (int m = 0; m < m1.n_subbands(); ++m) {
        for (int c = 0; c < 6; ++c) CHECK(m2.filters[m][c] == doctest::Approx(m1.filters[m][perm[c]]).epsilon(1e-6));
    }
    const auto r1 = correlate(m1, trials[1][0], spec);
    const auto r2 = correlate(m2, permuted[1][0], spec);
    for (int i = 0; i < 3; ++i) CHECK(r1.rho[i] == doctest::Approx(r2.rho[i]).epsilon(1e-6));
}

TEST_CASE("independent noise scores centre on zero") {
    const FilterBankSpec spec;
    const auto model = train_trca(planted_trials(4, 3, 6, 0.3, 5), spec);
    Rng rng(99);
    std::vector<double> rho0;
    for (int k = 0; k < 100; ++k) {
        EegEpoch e;
        e.samples.resize(6, 250);
        for (int c = 0; c < 6; ++c) {
            for (int t = 0; t < 250; ++t) e.samples(c, t) = rng.normal();
        }
        rho0.push_back(correlate(model, e, spec).rho[0]);
    }
    double mean = 0, var = 0;
    for (double r : rho0) mean += r;
    mean /= 100;
    for (double r : rho0) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / 99);
    CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(100.0));
    int outside = 0;
    for (double r : rho0) outside += std::abs(r) > 3.0 * sd;
    CHECK(outside <= 2);  // a Gaussian null leaves ~0.27 of 100 outside 3 sd
}

TEST_CASE("train_trca rejects single-trial regions") {
    auto trials = planted_trials(2, 1, 4, 0.1, 6);
    CHECK_THROWS_AS(train_trca(trials, FilterBankSpec{}), InvalidArgument);
}
