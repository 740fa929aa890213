#ifndef AMRC_TRAINER_HPP
#define AMRC_TRAINER_HPP

#include "amrc/forecaster.hpp"
#include "amrc/ingest.hpp"
#include "amrc/objectives.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace amrc {

/// When a fresh candidate set is drawn.
enum class MaskSchedule { per_batch, per_epoch };

std::string to_string(MaskSchedule s);
MaskSchedule parse_mask_schedule(const std::string& s);

struct TrainConfig {
    Index lookback = 48;
    Index horizon = 48;
    Index batch_size = 32;
    Index max_epochs = 100;
    double lr0 = 1e-4;
    Index patience = 20;
    Index m = 12;
    double lambda_aml = 1.0;
    double lambda_esp = 1.0;
    TapSelection tap_selection;  // empty: every tap
    std::uint64_t seed = 0;
    bool amrc_enabled = true;

    MaskSchedule mask_schedule = MaskSchedule::per_batch;
    bool aml_two_sided = false;
    double grad_clip = 0.0;  // max global gradient norm, 0 disables

    void validate() const;
    ObjectiveConfig objective() const;

    nlohmann::json to_json() const;
    /// Strict: unknown keys and wrong types raise ValidationError naming the field path.
    static TrainConfig from_json(const nlohmann::json& j, const std::string& path = "train");
};

struct EpochRecord {
    Index epoch = 0;
    double train_pred = 0.0;
    double train_aml = 0.0;
    double train_esp = 0.0;
    double train_total = 0.0;
    double val_mse = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    Index best_epoch = -1;
    double best_val = 0.0;
};

/**
 * Writes the history CSV. Wall time is nondeterministic, so `seconds` is
 * written as 0 unless `with_timing` is set.
 */
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history,
                       const std::string& metadata, bool with_timing);

struct AdamState {
    Vector m;
    Vector v;
    Index t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

/// One bias-corrected Adam update in place. Throws NumericError on a non-finite gradient.
void adam_step(Vector& params, const Vector& grad, AdamState& state, double lr);

/// lr0 * 0.5 * (1 + cos(pi * epoch / max_epochs)) for 0 <= epoch < max_epochs.
double cosine_lr(Index epoch, Index max_epochs, double lr0);

/// Mean prediction MSE of the model over a window set, evaluated in fixed-size chunks.
double prediction_mse(const ForecastModel& model, const WindowSet& windows);

/// Independent generator for one purpose (shuffle, masks) derived from the seed.
std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream);

inline constexpr std::uint64_t kShuffleStream = 1;
inline constexpr std::uint64_t kMaskStream = 2;

struct TrainResult {
    ForecastModel model;  // parameters of the best-val epoch
    TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/**
 * Adam with a per-epoch cosine schedule and early stopping on val prediction MSE.
 * With amrc_enabled the candidate masks are drawn and evaluated every step even
 * when both lambdas are zero; the extra work never touches the shuffle stream.
 */
TrainResult train(ForecastModel model, const WindowSet& train_set, const WindowSet& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace amrc

#endif  // AMRC_TRAINER_HPP
