#include "amrc/trainer.hpp"

#include "json_fields.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace amrc {

std::string to_string(MaskSchedule s) {
    return s == MaskSchedule::per_batch ? "per_batch" : "per_epoch";
}

MaskSchedule parse_mask_schedule(const std::string& s) {
    if (s == "per_batch") return MaskSchedule::per_batch;
    if (s == "per_epoch") return MaskSchedule::per_epoch;
    throw ValidationError("unknown mask schedule '" + s + "' (per_batch|per_epoch)");
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw ValidationError("train." + what); };
    if (lookback < 1) fail("L: must be >= 1");
    if (horizon < 1) fail("H: must be >= 1");
    if (batch_size < 1) fail("batch_size: must be >= 1");
    if (max_epochs < 1) fail("max_epochs: must be >= 1");
    if (!(lr0 > 0.0) || !std::isfinite(lr0)) fail("lr0: must be > 0");
    if (patience < 1) fail("patience: must be >= 1");
    if (amrc_enabled && m < 1) fail("m: must be >= 1 when amrc is enabled");
    if (!(lambda_aml >= 0.0) || !std::isfinite(lambda_aml)) fail("lambda_aml: must be >= 0");
    if (!(lambda_esp >= 0.0) || !std::isfinite(lambda_esp)) fail("lambda_esp: must be >= 0");
    if (!(grad_clip >= 0.0)) fail("grad_clip: must be >= 0");
}

ObjectiveConfig TrainConfig::objective() const {
    ObjectiveConfig c;
    c.lambda_aml = amrc_enabled ? lambda_aml : 0.0;
    c.lambda_esp = amrc_enabled ? lambda_esp : 0.0;
    c.aml_taps = tap_selection;
    c.aml_two_sided = aml_two_sided;
    return c;
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json taps = nlohmann::json::array();
    for (Tap t : tap_selection) taps.push_back(to_string(t));
    return {{"L", lookback},
            {"H", horizon},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"lr0", lr0},
            {"patience", patience},
            {"m", m},
            {"lambda_aml", lambda_aml},
            {"lambda_esp", lambda_esp},
            {"tap_selection", taps},
            {"seed", seed},
            {"amrc_enabled", amrc_enabled},
            {"mask_schedule", to_string(mask_schedule)},
            {"aml_two_sided", aml_two_sided},
            {"grad_clip", grad_clip}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const std::string& path) {
    detail::FieldReader r(j, path);
    TrainConfig c;
    r.optional("L", c.lookback);
    r.optional("H", c.horizon);
    r.optional("batch_size", c.batch_size);
    r.optional("max_epochs", c.max_epochs);
    r.optional("lr0", c.lr0);
    r.optional("patience", c.patience);
    r.optional("m", c.m);
    r.optional("lambda_aml", c.lambda_aml);
    r.optional("lambda_esp", c.lambda_esp);
    r.optional("seed", c.seed);
    r.optional("amrc_enabled", c.amrc_enabled);
    r.optional("aml_two_sided", c.aml_two_sided);
    r.optional("grad_clip", c.grad_clip);
    std::string schedule = to_string(c.mask_schedule);
    r.optional("mask_schedule", schedule);
    try {
        c.mask_schedule = parse_mask_schedule(schedule);
    } catch (const ValidationError& e) {
        throw ValidationError(r.path("mask_schedule") + ": " + e.what());
    }
    if (r.has("tap_selection")) {
        const nlohmann::json& taps = r.raw("tap_selection");
        if (!taps.is_array()) throw ValidationError(r.path("tap_selection") + ": expected an array");
        for (std::size_t i = 0; i < taps.size(); ++i) {
            const std::string where = r.path("tap_selection") + "[" + std::to_string(i) + "]";
            if (!taps[i].is_string()) throw ValidationError(where + ": expected a string");
            try {
                c.tap_selection.push_back(parse_tap(taps[i].get<std::string>()));
            } catch (const ValidationError& e) {
                throw ValidationError(where + ": " + e.what());
            }
        }
    }
    r.finish();
    try {
        c.validate();
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        if (msg.rfind("train.", 0) == 0) msg = path + "." + msg.substr(6);
        throw ValidationError(msg);
    }
    return c;
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history,
                       const std::string& metadata, bool with_timing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    if (!metadata.empty()) out << "# " << metadata << "\n";
    out << "epoch,train_pred,train_aml,train_esp,train_total,val_mse,lr,seconds\n";
    out.precision(17);
    for (const EpochRecord& e : history.epochs) {
        out << e.epoch << ',' << e.train_pred << ',' << e.train_aml << ',' << e.train_esp << ','
            << e.train_total << ',' << e.val_mse << ',' << e.lr << ','
            << (with_timing ? e.seconds : 0.0) << '\n';
    }
    if (!out) throw ValidationError("failed writing " + path.string());
}

void adam_step(Vector& params, const Vector& grad, AdamState& state, double lr) {
    if (params.size() != grad.size() || params.size() != state.m.size()) {
        throw ValidationError("adam_step: parameter, gradient and state lengths differ");
    }
    if (!grad.allFinite()) throw NumericError("adam_step: non-finite gradient");
    ++state.t;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, double(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, double(state.t));
    params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

double cosine_lr(Index epoch, Index max_epochs, double lr0) {
    if (max_epochs < 1 || epoch < 0 || epoch >= max_epochs) {
        throw ValidationError("cosine_lr: epoch " + std::to_string(epoch) + " outside [0, " +
                              std::to_string(max_epochs) + ")");
    }
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * double(epoch) / double(max_epochs)));
}

double prediction_mse(const ForecastModel& model, const WindowSet& windows) {
    if (windows.empty()) throw ValidationError("cannot evaluate an empty window set");
    constexpr Index chunk = 256;
    const Index n = Index(windows.size());
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    double sum = 0.0;
    for (Index start = 0; start < n; start += chunk) {
        const Index count = std::min(chunk, n - start);
        const Batch b = make_batch(windows, std::span<const Index>(idx).subspan(std::size_t(start),
                                                                              std::size_t(count)));
        const Vector l = per_sample_mse(forward(model, b.x).yhat, b.y, model.dims().channels);
        for (Index i = 0; i < count; ++i) sum += l(i);
    }
    return sum / double(n);
}

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream)};
    return std::mt19937_64(seq);
}

TrainResult train(ForecastModel model, const WindowSet& train_set, const WindowSet& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.empty()) throw ValidationError("training split has no windows");
    if (val_set.empty()) throw ValidationError("validation split has no windows");
    const ModelDims& dims = model.dims();
    if (dims.lookback != config.lookback || dims.horizon != config.horizon) {
        std::ostringstream os;
        os << "model has L=" << dims.lookback << ", H=" << dims.horizon << " but config has L="
           << config.lookback << ", H=" << config.horizon;
        throw ValidationError(os.str());
    }
    const WindowSample& w0 = train_set.front();
    if (w0.x.rows() != dims.lookback || w0.y.rows() != dims.horizon ||
        w0.x.cols() != dims.channels) {
        throw ValidationError("window shape does not match the model dims");
    }

    const ObjectiveConfig objective = config.objective();
    std::mt19937_64 shuffle_rng = derive_rng(config.seed, kShuffleStream);
    std::mt19937_64 mask_rng = derive_rng(config.seed, kMaskStream);

    const Index n = Index(train_set.size());
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});

    Vector params = model.params();
    AdamState adam(params.size());
    TrainHistory history;
    Vector best_params = params;
    std::vector<MaskLen> ks;

    for (Index epoch = 0; epoch < config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = cosine_lr(epoch, config.max_epochs, config.lr0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        if (config.amrc_enabled && config.mask_schedule == MaskSchedule::per_epoch) {
            ks = sample_mask_indices(config.m, dims.lookback, mask_rng);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        Index batch_no = 0;
        for (Index start = 0; start < n; start += config.batch_size, ++batch_no) {
            const Index count = std::min(config.batch_size, n - start);
            const Batch batch = make_batch(
                train_set,
                std::span<const Index>(order).subspan(std::size_t(start), std::size_t(count)));
            try {
                const ForwardPass pass = forward(model, batch.x);
                AmlTargets targets;
                const AmlTargets* tp = nullptr;
                if (config.amrc_enabled) {
                    if (config.mask_schedule == MaskSchedule::per_batch) {
                        ks = sample_mask_indices(config.m, dims.lookback, mask_rng);
                    }
                    targets = build_aml_targets(model, batch, pass, ks);
                    tp = &targets;
                }
                ObjectiveResult r = total_loss(model, batch, tp, objective, true, &pass);
                if (config.grad_clip > 0.0) {
                    const double norm = r.grad.norm();
                    if (norm > config.grad_clip) r.grad *= config.grad_clip / norm;
                }
                adam_step(params, r.grad, adam, lr);
                model.set_params(params);

                const double wgt = double(count);
                rec.train_pred += wgt * r.breakdown.pred;
                rec.train_aml += wgt * r.breakdown.aml;
                rec.train_esp += wgt * r.breakdown.esp;
                rec.train_total += wgt * r.breakdown.total;
            } catch (const NumericError& e) {
                std::ostringstream os;
                os << "epoch " << epoch << ", batch " << batch_no << ": " << e.what();
                throw NumericError(os.str());
            }
        }
        rec.train_pred /= double(n);
        rec.train_aml /= double(n);
        rec.train_esp /= double(n);
        rec.train_total /= double(n);
        rec.val_mse = prediction_mse(model, val_set);
        if (!std::isfinite(rec.val_mse)) {
            throw NumericError("epoch " + std::to_string(epoch) + ": non-finite validation MSE");
        }
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (history.best_epoch < 0 || rec.val_mse < history.best_val) {
            history.best_epoch = epoch;
            history.best_val = rec.val_mse;
            best_params = params;
        } else if (epoch - history.best_epoch >= config.patience) {
            break;
        }
    }
    model.set_params(best_params);
    return {std::move(model), std::move(history)};
}

}  // namespace amrc
