#ifndef AMRC_OBJECTIVES_HPP
#define AMRC_OBJECTIVES_HPP

#include "amrc/forecaster.hpp"
#include "amrc/ingest.hpp"
#include "amrc/masking.hpp"

#include <span>
#include <vector>

namespace amrc {

/// A batch in the stacked layout: x is L x (n * D), y is H x (n * D).
struct Batch {
    Matrix x;
    Matrix y;
    Index size = 0;
};

Batch make_batch(const WindowSet& windows, std::span<const Index> indices);
Batch make_batch(const WindowSet& windows);

/// Mean squared error over every entry.
template <typename A, typename B>
double pred_loss(const Eigen::MatrixBase<A>& yhat, const Eigen::MatrixBase<B>& y) {
    if (yhat.rows() != y.rows() || yhat.cols() != y.cols()) {
        throw ValidationError("pred_loss: prediction and target shapes differ");
    }
    if (y.size() == 0) throw ValidationError("pred_loss: empty target");
    return (yhat - y).squaredNorm() / double(y.size());
}

/// Adaptive AML weight max(0, (ell - ell_star) / ell), with 0 at ell = 0.
double beta(double ell, double ell_star);

using TapSelection = std::vector<Tap>;

/// Taps the model exposes that appear in `selection`; all of them when the selection is empty.
TapSelection resolve_taps(const ForecastModel& model, const TapSelection& selection);

/**
 * beta * sum over selected taps of ||Z - Z~||_F^2 / (d1 * d2), for one sample's bundles.
 * `masked` is a constant target.
 */
double aml_loss(const TapBundle& taps, const TapBundle& masked, double beta,
                const TapSelection& selection);

/**
 * Embedding-similarity penalty:
 *   dE_ij = ||Z_i - Z_j||^2 / |Z|,  dO_ij = ||Y_i - Y_j||^2 / |Y|,
 *   ESP = (1 / n^2) sum_ij |dE_ij - dO_ij|   (diagonal included).
 */
double esp_penalty(const std::vector<Matrix>& embeddings, const std::vector<Matrix>& targets);

struct EspResult {
    double value = 0.0;
    Matrix deviation;  // dE - dO, n x n
    Matrix grad;       // d(ESP)/dZ in the batched layout, empty unless requested
};

/// Batched ESP over Z (d1 x (n * D)) and Y (H x (n * D)), through the Gram matrices.
EspResult esp_penalty_batched(const Matrix& embeddings, const Matrix& targets, Index batch,
                              bool with_gradient);

/// Everything the masked branch contributes to one step, frozen at selection time.
struct AmlTargets {
    MaskCandidateSet candidates;
    Vector beta;                 // per sample
    std::vector<MaskLen> kstar;  // per sample, the k of its selected candidate
    Matrix masked_input;         // each sample block masked by its own k*
    TapBundle masked_taps;       // taps of the selected candidate, batched layout
};

AmlTargets build_aml_targets(const ForecastModel& model, const Batch& batch,
                             const ForwardPass& unmasked, std::vector<MaskLen> ks);

struct ObjectiveConfig {
    double lambda_aml = 1.0;
    double lambda_esp = 1.0;
    TapSelection aml_taps;       // empty: every tap the model has
    bool aml_two_sided = false;  // let gradient flow into the masked branch (beta stays constant)
};

struct LossBreakdown {
    double pred = 0.0;
    double aml = 0.0;
    double esp = 0.0;
    double total = 0.0;
    Vector per_sample_beta;
    std::vector<Index> per_sample_sstar;
};

struct ObjectiveResult {
    LossBreakdown breakdown;
    Vector grad;  // empty unless requested
};

/**
 * total = pred + lambda_aml * aml + lambda_esp * esp.
 *
 * With both lambdas at zero the AML and ESP paths are not evaluated and total
 * equals pred exactly. `targets` may be null when lambda_aml is zero.
 * `unmasked` lets the caller reuse a forward pass computed at the current parameters.
 */
ObjectiveResult total_loss(const ForecastModel& model, const Batch& batch, const AmlTargets* targets,
                           const ObjectiveConfig& config, bool with_gradient,
                           const ForwardPass* unmasked = nullptr);

/// The same loss as an Objective closure over the parameters, masked branch frozen.
Objective make_objective(const Batch& batch, const AmlTargets* targets, const ObjectiveConfig& config);

}  // namespace amrc

#endif  // AMRC_OBJECTIVES_HPP
