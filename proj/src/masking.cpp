#include "amrc/masking.hpp"

#include <sstream>

namespace amrc {

std::vector<MaskLen> sample_mask_indices(Index m, Index lookback, std::mt19937_64& rng) {
    if (m < 1 || lookback < 1) throw ValidationError("mask sampling needs m >= 1 and L >= 1");
    std::uniform_int_distribution<Index> dist(1, lookback);
    std::vector<MaskLen> out;
    out.reserve(std::size_t(m));
    for (Index s = 0; s < m; ++s) out.push_back({dist(rng)});
    return out;
}

CandidateChoice select_best_candidate(const MaskCandidateSet& candidates, Index sample) {
    if (candidates.ks.empty()) throw ValidationError("candidate set is empty");
    if (sample < 0 || sample >= candidates.samples()) {
        throw ValidationError("candidate sample index out of range");
    }
    const double ell = candidates.unmasked_losses(sample);
    CandidateChoice best{0, ell - candidates.per_sample_losses(sample, 0)};
    for (Index s = 1; s < candidates.size(); ++s) {
        const double gain = ell - candidates.per_sample_losses(sample, s);
        const bool better = gain > best.gain ||
                            (gain == best.gain && candidates.ks[std::size_t(s)].k <
                                                      candidates.ks[std::size_t(best.s)].k);
        if (better) best = {s, gain};
    }
    return best;
}

Vector per_sample_mse(const Matrix& yhat, const Matrix& y, Index channels) {
    if (yhat.rows() != y.rows() || yhat.cols() != y.cols()) {
        std::ostringstream os;
        os << "prediction is " << yhat.rows() << "x" << yhat.cols() << ", target is " << y.rows()
           << "x" << y.cols();
        throw ValidationError(os.str());
    }
    const Index n = yhat.cols() / channels;
    Vector out(n);
    for (Index i = 0; i < n; ++i) {
        out(i) = (yhat.middleCols(i * channels, channels) - y.middleCols(i * channels, channels))
                     .squaredNorm() /
                 double(y.rows() * channels);
    }
    return out;
}

MaskCandidateSet evaluate_candidates(const ForecastModel& model, const Matrix& batch_x,
                                     const Matrix& batch_y, const ForwardPass& unmasked,
                                     std::vector<MaskLen> ks,
                                     std::vector<ForwardPass>* masked_passes) {
    const Index channels = model.dims().channels;
    MaskCandidateSet out;
    out.ks = std::move(ks);
    out.unmasked_losses = per_sample_mse(unmasked.yhat, batch_y, channels);
    const Index n = out.unmasked_losses.size();
    out.per_sample_losses.resize(n, out.size());
    if (masked_passes) {
        masked_passes->clear();
        masked_passes->reserve(out.ks.size());
    }
    for (Index s = 0; s < out.size(); ++s) {
        ForwardPass pass = forward(model, apply_prefix_mask(batch_x, out.ks[std::size_t(s)]));
        out.per_sample_losses.col(s) = per_sample_mse(pass.yhat, batch_y, channels);
        if (masked_passes) masked_passes->push_back(std::move(pass));
    }
    out.per_sample_best.reserve(std::size_t(n));
    for (Index i = 0; i < n; ++i) out.per_sample_best.push_back(select_best_candidate(out, i));
    return out;
}

Vector mask_loss_profile(const ForecastModel& model, const WindowSample& sample) {
    const Index L = model.dims().lookback;
    const Index D = model.dims().channels;
    if (sample.x.rows() != L || sample.x.cols() != D || sample.y.rows() != model.dims().horizon ||
        sample.y.cols() != D) {
        throw ValidationError("sample shape does not match the model dims");
    }
    Matrix stacked(L, (L + 1) * D);
    Matrix targets(sample.y.rows(), (L + 1) * D);
    for (Index k = 0; k <= L; ++k) {
        stacked.middleCols(k * D, D) = apply_prefix_mask(sample.x, MaskLen{k});
        targets.middleCols(k * D, D) = sample.y;
    }
    return per_sample_mse(forward(model, stacked).yhat, targets, D);
}

MaskSearchResult optimal_mask_exhaustive(const ForecastModel& model, const WindowSample& sample) {
    const Vector losses = mask_loss_profile(model, sample);
    MaskSearchResult best{{1}, losses(1)};
    for (Index k = 2; k < losses.size(); ++k) {
        if (losses(k) < best.loss) best = {{k}, losses(k)};
    }
    return best;
}

}  // namespace amrc
