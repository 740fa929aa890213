#ifndef AMRC_MASKING_HPP
#define AMRC_MASKING_HPP

#include "amrc/forecaster.hpp"
#include "amrc/ingest.hpp"

#include <random>
#include <vector>

namespace amrc {

/// Prefix mask length k in [0, L]; k = 0 leaves the window untouched.
struct MaskLen {
    Index k = 0;

    friend bool operator==(MaskLen, MaskLen) = default;
};

/**
 * Zeroes the oldest k rows of a lookback window and keeps the shape.
 * Works on a single L x D window and on the batched L x (n * D) layout alike,
 * since rows are timesteps in both.
 */
template <typename Derived>
typename Derived::PlainObject apply_prefix_mask(const Eigen::MatrixBase<Derived>& x, MaskLen mask) {
    if (mask.k < 0 || mask.k > x.rows()) {
        throw ValidationError("mask length " + std::to_string(mask.k) + " outside [0, " +
                              std::to_string(x.rows()) + "]");
    }
    typename Derived::PlainObject out = x;
    out.topRows(mask.k).setZero();
    return out;
}

/// m independent draws from Uniform{1, ..., L}; duplicates allowed.
std::vector<MaskLen> sample_mask_indices(Index m, Index lookback, std::mt19937_64& rng);

struct CandidateChoice {
    Index s = 0;        // index into the candidate list
    double gain = 0.0;  // unmasked loss minus the chosen candidate's loss
};

/**
 * Losses of m sampled prefix masks for every sample of a batch.
 * per_sample_losses(i, s) is the MSE of sample i under mask ks[s].
 */
struct MaskCandidateSet {
    std::vector<MaskLen> ks;
    Matrix per_sample_losses;  // n x m
    Vector unmasked_losses;    // n
    std::vector<CandidateChoice> per_sample_best;

    Index size() const { return Index(ks.size()); }
    Index samples() const { return unmasked_losses.size(); }
};

/// s* = argmax_s (l_i - l_{i,s}); ties go to the smaller k, then the smaller s.
CandidateChoice select_best_candidate(const MaskCandidateSet& candidates, Index sample);

/// Per-sample MSE of a batched prediction: entry i averages sample i's H x D block.
Vector per_sample_mse(const Matrix& yhat, const Matrix& y, Index channels);

/**
 * Runs one batched forward per candidate mask, fills the loss table and each
 * sample's best choice. `unmasked` is the forward pass of the same batch.
 * When `masked_passes` is non-null it receives the m forward passes.
 */
MaskCandidateSet evaluate_candidates(const ForecastModel& model, const Matrix& batch_x,
                                     const Matrix& batch_y, const ForwardPass& unmasked,
                                     std::vector<MaskLen> ks,
                                     std::vector<ForwardPass>* masked_passes = nullptr);

struct MaskSearchResult {
    MaskLen k;
    double loss = 0.0;
};

/// k* = argmin over k in {1..L} of the sample's MSE under M_k; ties go to the smallest k.
MaskSearchResult optimal_mask_exhaustive(const ForecastModel& model, const WindowSample& sample);

/// Loss of the sample under every k in {0..L}; entry k is the loss with mask k.
Vector mask_loss_profile(const ForecastModel& model, const WindowSample& sample);

}  // namespace amrc

#endif  // AMRC_MASKING_HPP
