#pragma once

#include <vector>

#include "neurotrack/core.hpp"
#include "neurotrack/dsp.hpp"

namespace neurotrack {

/// Per-region filter-bank correlation scores (the 1 x N_r matrix P). Values
/// are weighted sums of Pearson coefficients and are not bounded to [-1, 1].
struct RhoVector {
    std::vector<double> rho;

    int size() const { return static_cast<int>(rho.size()); }
    int argmax() const;
};

/// One shared spatial filter per sub-band plus per-region filtered templates.
struct TrcaModel {
    std::vector<Eigen::VectorXd> filters;                  // [sub-band], unit norm
    std::vector<std::vector<Eigen::VectorXd>> templates;   // [region][sub-band]
    int n_trials_trained = 0;

    int n_regions() const { return static_cast<int>(templates.size()); }
    int n_subbands() const { return static_cast<int>(filters.size()); }
    int n_channels() const { return filters.empty() ? 0 : static_cast<int>(filters.front().size()); }
    int template_length() const;
};

/// Template matcher interface: a trained model scoring a preprocessed epoch
/// against every region. TRCA is the only implementation.
class TemplateMatcher {
public:
    virtual ~TemplateMatcher() = default;
    virtual RhoVector correlate(const EegEpoch& preprocessed) const = 0;
    virtual int n_regions() const = 0;
};

class TrcaMatcher final : public TemplateMatcher {
public:
    TrcaMatcher(TrcaModel model, const FilterBankSpec& spec);
    TrcaMatcher(TrcaModel model, dsp::FilterBank bank);

    RhoVector correlate(const EegEpoch& preprocessed) const override;
    int n_regions() const override { return model_.n_regions(); }
    const TrcaModel& model() const { return model_; }
    const dsp::FilterBank& filter_bank() const { return bank_; }

private:
    TrcaModel model_;
    dsp::FilterBank bank_;
};

/// Leading generalized eigenvector of (S, Q) for trials grouped by class.
/// S sums cross-trial covariances over trial pairs h1 != h2 within each
/// group; Q is the pooled covariance of every trial. Q is ridge-regularized
/// (1e-6 * trace(Q) / N_c) when its condition number exceeds 1e10.
/// Returned with unit norm and arbitrary sign.
Eigen::VectorXd trca_spatial_filter(const std::vector<std::vector<Eigen::MatrixXd>>& groups);

/// Train from preprocessed epochs, trials[region][repetition]; >= 2 trials per region.
/// Each filter's sign makes the filtered grand-average template peak positive.
TrcaModel train_trca(const std::vector<std::vector<EegEpoch>>& trials, const dsp::FilterBank& bank);
TrcaModel train_trca(const std::vector<std::vector<EegEpoch>>& trials, const FilterBankSpec& spec);

/// rho_i = sum_m a(m) * pearson(sub-band-m filtered epoch, template[i][m]).
/// A zero-variance filtered epoch contributes zero.
RhoVector correlate(const TrcaModel& model, const EegEpoch& preprocessed, const dsp::FilterBank& bank);
RhoVector correlate(const TrcaModel& model, const EegEpoch& preprocessed, const FilterBankSpec& spec);

/// Same score from already spatially filtered sub-band components.
RhoVector correlate_components(const TrcaModel& model, const std::vector<Eigen::VectorXd>& components);

}  // namespace neurotrack
