#ifndef AMRC_CLI_HPP
#define AMRC_CLI_HPP

#include "amrc/forecaster.hpp"
#include "amrc/ingest.hpp"
#include "amrc/reporting.hpp"
#include "amrc/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace amrc {

/**
 * Split given as explicit row boundaries, as train/val fractions of T, or as
 * the "ett_hourly" preset.
 */
struct SplitConfig {
    enum class Kind { rows, fractions, preset } kind = Kind::fractions;
    SplitSpec rows{};
    double train_frac = 0.6;
    double val_frac = 0.2;
    std::string preset;

    SplitSpec resolve(Index total_rows) const;
    nlohmann::json to_json() const;
    static SplitConfig from_json(const nlohmann::json& j, const std::string& path);
};

struct ExperimentConfig {
    std::filesystem::path data_path;  // absolute after loading
    std::string data_name;
    std::vector<std::string> columns;  // empty: every numeric column
    bool clamp_zero_variance = false;
    SplitConfig split;
    ModelKind model_kind = ModelKind::tinymlp;
    Index hidden = 64;
    TrainConfig train;
    std::filesystem::path output_dir;  // absolute after loading
    std::vector<std::uint64_t> seeds{0};
    bool record_timing = false;  // write wall time into history CSVs (breaks byte identity)

    /// Relative paths resolve against `base_dir`. Unknown keys are errors.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static ExperimentConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    /// FNV-1a over the canonical JSON dump, as 16 hex digits.
    std::string hash() const;
};

/// {tool_version, config_hash, seed} block carried by every output file.
nlohmann::json output_metadata(const std::string& config_hash, std::optional<std::uint64_t> seed);
/// The same block flattened to "key=value" pairs for CSV comment lines.
std::string metadata_line(const nlohmann::json& meta);

std::string fnv1a_hex(const std::string& text);

struct SeedRun {
    std::uint64_t seed = 0;
    Index epochs = 0;
    Index best_epoch = 0;
    double best_val_mse = 0.0;
    MetricsReport test;
    std::filesystem::path checkpoint;
    std::filesystem::path history;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample std (n - 1); 0 for a single value
};

MeanStd mean_std(const std::vector<double>& values);

struct TrainSummary {
    std::vector<SeedRun> runs;
    MeanStd test_mse;
    MeanStd test_mae;

    nlohmann::json to_json() const;
};

/// Loads the dataset and returns (normalized data, split, norm stats) as training sees them.
struct PreparedData {
    SeriesDataset data;  // normalized
    SplitSpec split;
    NormStats norm;
};
PreparedData prepare_data(const ExperimentConfig& config);

/**
 * One training run per seed. Writes seed_<s>/checkpoint.json, seed_<s>/train_config.json,
 * seed_<s>/history.csv and summary.json under the output directory.
 */
TrainSummary cmd_train(const ExperimentConfig& config, std::ostream* log = nullptr);

/// A checkpoint together with the normalization and split it was trained with.
struct Checkpoint {
    ForecastModel model;
    NormStats norm;
    SplitSpec split;
    std::string config_hash;  // of the experiment that produced it, "unknown" if absent

    static Checkpoint load(const std::filesystem::path& path);
};

/// Windows of one region of a raw CSV, normalized with the checkpoint's statistics.
WindowSet checkpoint_windows(const Checkpoint& ckpt, const std::filesystem::path& data,
                             Region region);

MetricsReport cmd_eval(const std::filesystem::path& ckpt, const std::filesystem::path& data,
                       Region region, std::optional<Index> horizon,
                       const std::optional<std::filesystem::path>& out);

/// Writes the scan JSON to `out` and the k* histogram next to it as <stem>_hist.csv.
MaskScanReport cmd_mask_scan(const std::filesystem::path& ckpt, const std::filesystem::path& data,
                             Region region, const std::optional<std::filesystem::path>& out);

struct GradcheckOptions {
    ModelKind kind = ModelKind::tinymlp;
    ModelDims dims{8, 4, 2, 6};
    std::uint64_t seed = 0;
    bool aux_terms = true;       // false: lambdas 0, prediction loss only
    bool corrupt = false;        // negative control: perturb the analytic gradient
    double step = 1e-3;
    double tolerance = 1e-4;
    Index batch = 6;
    Index max_params = 5000;
};

struct GradcheckResult {
    double max_rel_error = 0.0;
    Index worst_coord = 0;
    Index coords = 0;
    Index active_beta = 0;  // samples whose AML term is active
    /// Smallest off-diagonal |dE - dO|. ESP has a kink where this is zero, and a
    /// margin comparable to the step lets the finite difference straddle it.
    double esp_margin = 0.0;
    bool passed = false;

    nlohmann::json to_json() const;
};

/**
 * Compares the analytic gradient of the full objective with central finite
 * differences on every coordinate. Relative error per coordinate is
 * |a - f| / max(|a|, |f|, 1e-3 * max_i |f_i|); the floor keeps near-zero
 * components from being judged on finite-difference truncation error alone.
 */
GradcheckResult cmd_gradcheck(const GradcheckOptions& options);

void cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& out);

}  // namespace amrc

#endif  // AMRC_CLI_HPP
