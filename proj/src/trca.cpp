#include "neurotrack/trca.hpp"

#include <algorithm>
#include <cmath>

#include "neurotrack/stimulus.hpp"

namespace neurotrack {

int RhoVector::argmax() const {
    if (rho.empty()) return -1;
    return static_cast<int>(std::max_element(rho.begin(), rho.end()) - rho.begin());
}

int TrcaModel::template_length() const {
    if (templates.empty() || templates.front().empty()) return 0;
    return static_cast<int>(templates.front().front().size());
}

namespace {

Eigen::MatrixXd centered(const Eigen::MatrixXd& x) {
    return x.colwise() - x.rowwise().mean();
}

Eigen::VectorXd leading_generalized(const Eigen::MatrixXd& s, Eigen::MatrixXd q) {
    const int n = static_cast<int>(q.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qeig(q, Eigen::EigenvaluesOnly);
    const double lo = qeig.eigenvalues().minCoeff();
    const double hi = qeig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e10) {
        double eps = 1e-6 * q.trace() / n;
        if (!(eps > 0.0)) eps = 1.0;
        q += eps * Eigen::MatrixXd::Identity(n, n);
    }
    const Eigen::MatrixXd s_sym = 0.5 * (s + s.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(s_sym, q);
    if (ges.info() != Eigen::Success) throw SingularMatrixError("trca: generalized eigenproblem failed");
    Eigen::VectorXd w = ges.eigenvectors().col(n - 1);
    const double norm = w.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw SingularMatrixError("trca: degenerate spatial filter");
    return w / norm;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Eigen::VectorXd trca_spatial_filter(const std::vector<std::vector<Eigen::MatrixXd>>& groups) {
    if (groups.empty() || groups.front().empty()) throw InvalidArgument("trca: no trials");
    const Eigen::Index n_ch = groups.front().front().rows();
    const Eigen::Index n_t = groups.front().front().cols();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n_ch, n_ch);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n_ch, n_ch);
    for (const auto& group : groups) {
        if (group.size() < 2) throw InvalidArgument("trca: need at least 2 trials per region");
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_ch, n_t);
        Eigen::MatrixXd self = Eigen::MatrixXd::Zero(n_ch, n_ch);
        for (const auto& trial : group) {
            if (trial.rows() != n_ch || trial.cols() != n_t) {
                throw InvalidArgument("trca: trials differ in shape");
            }
            const Eigen::MatrixXd x = centered(trial);
            sum += x;
            self.noalias() += x * x.transpose();
        }
        s.noalias() += sum * sum.transpose() - self;
        q += self;
    }
    return leading_generalized(s, q);
}

TrcaModel train_trca(const std::vector<std::vector<EegEpoch>>& trials, const dsp::FilterBank& bank) {
    if (trials.empty()) throw InvalidArgument("trca: no regions");
    const int n_regions = static_cast<int>(trials.size());
    for (const auto& region : trials) {
        if (region.size() < 2) throw InvalidArgument("trca: need at least 2 trials per region");
    }
    const int n_ch = trials.front().front().n_channels();
    const int n_t = trials.front().front().n_samples();
    for (const auto& region : trials) {
        for (const auto& e : region) {
            if (e.n_channels() != n_ch || e.n_samples() != n_t) {
                throw InvalidArgument("trca: training epochs differ in shape");
            }
        }
    }

    const int n_sub = bank.spec().n_subbands;
    // bands[region][trial][subband]
    std::vector<std::vector<std::vector<EegEpoch>>> bands(n_regions);
    int total = 0;
    for (int r = 0; r < n_regions; ++r) {
        for (const auto& e : trials[r]) {
            bands[r].push_back(bank.subband_decompose(e));
            ++total;
        }
    }

    TrcaModel model;
    model.n_trials_trained = total;
    model.templates.assign(n_regions, std::vector<Eigen::VectorXd>(n_sub));
    for (int m = 0; m < n_sub; ++m) {
        std::vector<std::vector<Eigen::MatrixXd>> groups(n_regions);
        Eigen::MatrixXd grand = Eigen::MatrixXd::Zero(n_ch, n_t);
        std::vector<Eigen::MatrixXd> means(n_regions, Eigen::MatrixXd::Zero(n_ch, n_t));
        for (int r = 0; r < n_regions; ++r) {
            for (const auto& trial_bands : bands[r]) {
                groups[r].push_back(trial_bands[m].samples);
                means[r] += trial_bands[m].samples;
            }
            grand += means[r];
            means[r] /= static_cast<double>(bands[r].size());
        }
        grand /= static_cast<double>(total);

        Eigen::VectorXd w = trca_spatial_filter(groups);
        const Eigen::VectorXd g = grand.transpose() * w;
        Eigen::Index peak = 0;
        g.cwiseAbs().maxCoeff(&peak);
        if (g[peak] < 0.0) w = -w;

        model.filters.push_back(w);
        for (int r = 0; r < n_regions; ++r) model.templates[r][m] = means[r].transpose() * w;
    }
    return model;
}

TrcaModel train_trca(const std::vector<std::vector<EegEpoch>>& trials, const FilterBankSpec& spec) {
    return train_trca(trials, dsp::FilterBank(spec));
}

RhoVector correlate_components(const TrcaModel& model, const std::vector<Eigen::VectorXd>& components) {
    if (static_cast<int>(components.size()) != model.n_subbands()) {
        throw InvalidArgument("correlate: component count differs from sub-band count");
    }
    RhoVector out;
    out.rho.assign(model.n_regions(), 0.0);
    for (int m = 0; m < model.n_subbands(); ++m) {
        const auto y = to_std(components[m]);
        const double a = dsp::subband_weight(m + 1);
        for (int r = 0; r < model.n_regions(); ++r) {
            const auto& tpl = model.templates[r][m];
            if (tpl.size() != components[m].size()) {
                throw InvalidArgument("correlate: epoch length differs from template length");
            }
            out.rho[r] += a * pearson(y, std::span<const double>(tpl.data(), tpl.size()));
        }
    }
    return out;
}

RhoVector correlate(const TrcaModel& model, const EegEpoch& preprocessed, const dsp::FilterBank& bank) {
    if (preprocessed.n_channels() != model.n_channels()) {
        throw InvalidArgument("correlate: channel count differs from model");
    }
    if (preprocessed.n_samples() != model.template_length()) {
        throw InvalidArgument("correlate: epoch length differs from template length");
    }
    std::vector<Eigen::VectorXd> components;
    for (int m = 0; m < model.n_subbands(); ++m) {
        const Eigen::VectorXd y = preprocessed.samples.transpose() * model.filters[m];
        const auto filtered = bank.subband(std::span<const double>(y.data(), y.size()), m);
        components.push_back(Eigen::Map<const Eigen::VectorXd>(filtered.data(), filtered.size()));
    }
    return correlate_components(model, components);
}

RhoVector correlate(const TrcaModel& model, const EegEpoch& preprocessed, const FilterBankSpec& spec) {
    return correlate(model, preprocessed, dsp::FilterBank(spec));
}

TrcaMatcher::TrcaMatcher(TrcaModel model, const FilterBankSpec& spec)
    : model_(std::move(model)), bank_(spec) {}

TrcaMatcher::TrcaMatcher(TrcaModel model, dsp::FilterBank bank)
    : model_(std::move(model)), bank_(std::move(bank)) {}

RhoVector TrcaMatcher::correlate(const EegEpoch& preprocessed) const {
    return neurotrack::correlate(model_, preprocessed, bank_);
}

}  // namespace neurotrack
