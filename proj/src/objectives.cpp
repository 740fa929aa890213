#include "amrc/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace amrc {

Batch make_batch(const WindowSet& windows, std::span<const Index> indices) {
    if (indices.empty()) throw ValidationError("batch has no samples");
    const WindowSample& first = windows.at(std::size_t(indices.front()));
    const Index L = first.x.rows();
    const Index H = first.y.rows();
    const Index D = first.x.cols();
    const Index n = Index(indices.size());
    Batch out{Matrix(L, n * D), Matrix(H, n * D), n};
    for (Index i = 0; i < n; ++i) {
        const WindowSample& w = windows.at(std::size_t(indices[std::size_t(i)]));
        if (w.x.rows() != L || w.x.cols() != D || w.y.rows() != H || w.y.cols() != D) {
            throw ValidationError("windows in one batch have different shapes");
        }
        out.x.middleCols(i * D, D) = w.x;
        out.y.middleCols(i * D, D) = w.y;
    }
    return out;
}

Batch make_batch(const WindowSet& windows) {
    std::vector<Index> all(windows.size());
    std::iota(all.begin(), all.end(), Index{0});
    return make_batch(windows, all);
}

double beta(double ell, double ell_star) {
    if (!(ell >= 0.0) || !(ell_star >= 0.0)) {
        throw ValidationError("beta needs non-negative losses");
    }
    if (ell == 0.0) return 0.0;
    return std::max(0.0, (ell - ell_star) / ell);
}

TapSelection resolve_taps(const ForecastModel& model, const TapSelection& selection) {
    const std::vector<Tap> available = model.taps();
    if (selection.empty()) return available;
    TapSelection out;
    for (Tap t : selection) {
        if (std::find(available.begin(), available.end(), t) == available.end()) {
            throw ValidationError("model " + to_string(model.kind()) + " has no tap " + to_string(t));
        }
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    return out;
}

double aml_loss(const TapBundle& taps, const TapBundle& masked, double beta_value,
                const TapSelection& selection) {
    if (!(beta_value >= 0.0 && beta_value <= 1.0)) throw ValidationError("beta outside [0, 1]");
    double sum = 0.0;
    for (Tap t : selection) {
        if (!taps.contains(t) || !masked.contains(t)) {
            throw ValidationError("tap " + to_string(t) + " missing from a bundle");
        }
        const Matrix& z = taps.at(t);
        const Matrix& zm = masked.at(t);
        if (z.rows() != zm.rows() || z.cols() != zm.cols()) {
            throw ValidationError("tap " + to_string(t) + " shapes differ");
        }
        sum += (z - zm).squaredNorm() / double(z.size());
    }
    return beta_value * sum;
}

namespace {

// Pairwise squared distances of the columns of f, divided by `scale`.
Matrix pairwise_sq(const Eigen::Map<const Matrix>& f, double scale) {
    const Matrix gram = f.transpose() * f;
    const Vector sq = gram.diagonal();
    const Index n = gram.rows();
    Matrix d(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            d(i, j) = i == j ? 0.0 : std::max(0.0, sq(i) + sq(j) - 2.0 * gram(i, j)) / scale;
        }
    }
    return d;
}

}  // namespace

EspResult esp_penalty_batched(const Matrix& embeddings, const Matrix& targets, Index batch,
                              bool with_gradient) {
    if (batch < 1) throw ValidationError("ESP needs at least one sample");
    if (embeddings.cols() % batch != 0 || targets.cols() % batch != 0 ||
        embeddings.cols() / batch != targets.cols() / batch) {
        throw ValidationError("ESP: embeddings and targets do not split into the batch");
    }
    const Index de = embeddings.size() / batch;
    const Index dy = targets.size() / batch;
    // A sample's block is contiguous in column-major storage, so each sample is one column here.
    const Eigen::Map<const Matrix> fe(embeddings.data(), de, batch);
    const Eigen::Map<const Matrix> fy(targets.data(), dy, batch);
    const Matrix de_ij = pairwise_sq(fe, double(de));
    const Matrix do_ij = pairwise_sq(fy, double(dy));
    const double n2 = double(batch) * double(batch);

    EspResult out;
    out.deviation = de_ij - do_ij;
    const Matrix& diff = out.deviation;
    out.value = diff.cwiseAbs().sum() / n2;
    if (with_gradient) {
        const Matrix s = diff.unaryExpr([](double v) { return double((v > 0.0) - (v < 0.0)); });
        Matrix lap = -s;
        lap.diagonal() += s.rowwise().sum();
        const Matrix g = (4.0 / (n2 * double(de))) * (fe * lap);
        out.grad = Eigen::Map<const Matrix>(g.data(), embeddings.rows(), embeddings.cols());
    }
    return out;
}

double esp_penalty(const std::vector<Matrix>& embeddings, const std::vector<Matrix>& targets) {
    if (embeddings.empty()) throw ValidationError("ESP needs at least one sample");
    if (embeddings.size() != targets.size()) {
        throw ValidationError("ESP: embedding and target counts differ");
    }
    const Index n = Index(embeddings.size());
    const Matrix& z0 = embeddings.front();
    const Matrix& y0 = targets.front();
    Matrix z(z0.size(), n);
    Matrix y(y0.size(), n);
    for (Index i = 0; i < n; ++i) {
        const Matrix& zi = embeddings[std::size_t(i)];
        const Matrix& yi = targets[std::size_t(i)];
        if (zi.rows() != z0.rows() || zi.cols() != z0.cols() || yi.rows() != y0.rows() ||
            yi.cols() != y0.cols()) {
            throw ValidationError("ESP: shape mismatch at sample " + std::to_string(i));
        }
        z.col(i) = zi.reshaped();
        y.col(i) = yi.reshaped();
    }
    return esp_penalty_batched(z, y, n, false).value;
}

AmlTargets build_aml_targets(const ForecastModel& model, const Batch& batch,
                             const ForwardPass& unmasked, std::vector<MaskLen> ks) {
    std::vector<ForwardPass> passes;
    AmlTargets out;
    out.candidates = evaluate_candidates(model, batch.x, batch.y, unmasked, std::move(ks), &passes);
    const Index n = batch.size;
    const Index D = model.dims().channels;
    out.beta.resize(n);
    out.kstar.reserve(std::size_t(n));
    out.masked_input = batch.x;
    out.masked_taps = unmasked.taps;
    for (Index i = 0; i < n; ++i) {
        const CandidateChoice& c = out.candidates.per_sample_best[std::size_t(i)];
        const MaskLen k = out.candidates.ks[std::size_t(c.s)];
        out.kstar.push_back(k);
        out.beta(i) = beta(out.candidates.unmasked_losses(i), out.candidates.per_sample_losses(i, c.s));
        out.masked_input.middleCols(i * D, D).topRows(k.k).setZero();
        const ForwardPass& p = passes[std::size_t(c.s)];
        for (auto& [tap, value] : out.masked_taps.entries) {
            value.middleCols(i * D, D) = p.taps.at(tap).middleCols(i * D, D);
        }
    }
    return out;
}

ObjectiveResult total_loss(const ForecastModel& model, const Batch& batch, const AmlTargets* targets,
                           const ObjectiveConfig& config, bool with_gradient,
                           const ForwardPass* unmasked) {
    if (!(config.lambda_aml >= 0.0) || !(config.lambda_esp >= 0.0)) {
        throw ValidationError("loss weights must be non-negative");
    }
    const Index n = batch.size;
    const Index D = model.dims().channels;
    ForwardPass local;
    if (!unmasked) {
        local = forward(model, batch.x);
        unmasked = &local;
    }
    const ForwardPass& pass = *unmasked;

    ObjectiveResult out;
    LossBreakdown& b = out.breakdown;
    const Vector per_sample = per_sample_mse(pass.yhat, batch.y, D);
    b.pred = per_sample.mean();
    b.per_sample_beta = Vector::Zero(n);
    b.per_sample_sstar.assign(std::size_t(n), 0);

    TapBundle grads;
    if (with_gradient) {
        grads.set(Tap::predictor,
                  (2.0 / double(n * pass.yhat.rows() * D)) * (pass.yhat - batch.y));
    }
    auto add_grad = [&](Tap tap, const Matrix& g) {
        if (grads.contains(tap)) {
            grads.at(tap) += g;
        } else {
            grads.set(tap, g);
        }
    };

    const bool use_aml = config.lambda_aml > 0.0;
    const bool use_esp = config.lambda_esp > 0.0;
    ForwardPass masked_pass;
    TapBundle masked_grads;

    if (use_aml) {
        if (!targets) throw ValidationError("AML is enabled but no candidate targets were given");
        if (targets->beta.size() != n) throw ValidationError("AML targets do not match the batch");
        const TapSelection sel = resolve_taps(model, config.aml_taps);
        const TapBundle* zt = &targets->masked_taps;
        if (config.aml_two_sided) {
            masked_pass = forward(model, targets->masked_input);
            zt = &masked_pass.taps;
        }
        double aml = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double bi = targets->beta(i);
            b.per_sample_beta(i) = bi;
            b.per_sample_sstar[std::size_t(i)] = targets->candidates.per_sample_best[std::size_t(i)].s;
            double s = 0.0;
            for (Tap t : sel) {
                const auto z = pass.sample(pass.taps.at(t), i);
                const auto zm = zt->at(t).middleCols(i * D, D);
                s += (z - zm).squaredNorm() / double(z.size());
            }
            aml += bi * s;
        }
        b.aml = aml / double(n);
        if (with_gradient) {
            for (Tap t : sel) {
                const Matrix& z = pass.taps.at(t);
                const Matrix& zm = zt->at(t);
                Matrix g = z - zm;
                const double scale = 2.0 * config.lambda_aml / (double(n) * double(z.rows() * D));
                for (Index i = 0; i < n; ++i) g.middleCols(i * D, D) *= scale * targets->beta(i);
                if (config.aml_two_sided) masked_grads.set(t, -g);
                add_grad(t, g);
            }
        }
    }

    if (use_esp) {
        const Tap enc = model.encoder_tap();
        EspResult esp = esp_penalty_batched(pass.taps.at(enc), batch.y, n, with_gradient);
        b.esp = esp.value;
        if (with_gradient) add_grad(enc, config.lambda_esp * esp.grad);
    }

    b.total = b.pred + config.lambda_aml * b.aml + config.lambda_esp * b.esp;
    if (!std::isfinite(b.total)) {
        std::ostringstream os;
        os << "non-finite loss (pred " << b.pred << ", aml " << b.aml << ", esp " << b.esp << ")";
        throw NumericError(os.str());
    }

    if (with_gradient) {
        out.grad = Vector::Zero(model.param_count());
        backward(model, pass, grads, out.grad);
        if (config.aml_two_sided && !masked_grads.entries.empty()) {
            backward(model, masked_pass, masked_grads, out.grad);
        }
    }
    return out;
}

Objective make_objective(const Batch& batch, const AmlTargets* targets, const ObjectiveConfig& config) {
    return [batch, targets, config](const ForecastModel& model, Vector* grad) {
        ObjectiveResult r = total_loss(model, batch, targets, config, grad != nullptr);
        if (grad) *grad = std::move(r.grad);
        return r.breakdown.total;
    };
}

}  // namespace amrc
