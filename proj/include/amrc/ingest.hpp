#ifndef AMRC_INGEST_HPP
#define AMRC_INGEST_HPP

#include "amrc/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace amrc {

/**
 * Raw multivariate series: T rows (timesteps) by D columns (channels).
 */
struct SeriesDataset {
    Matrix values;
    std::vector<std::string> channel_names;
    std::vector<std::string> timestamps;  // empty when the source had no date column
    std::string name;

    Index rows() const { return values.rows(); }
    Index channels() const { return values.cols(); }
};

/// Exclusive row boundaries of the train / val / test regions.
struct SplitSpec {
    Index train_end = 0;
    Index val_end = 0;
    Index test_end = 0;

    void validate(Index total_rows) const;

    /// 12/4/4 months of hourly data, the usual ETT-small layout.
    static SplitSpec ett_hourly();
    /// Fractions of the row count; the test region takes the remainder.
    static SplitSpec from_fractions(Index total_rows, double train_frac, double val_frac);
};

enum class Region { train, val, test };

Region parse_region(const std::string& s);
std::string to_string(Region r);

struct NormStats {
    Vector mean;
    Vector std;

    nlohmann::json to_json() const;
    static NormStats from_json(const nlohmann::json& j);
};

/// One supervised pair: x holds the L rows ending at `origin`, y the H rows after it.
struct WindowSample {
    Matrix x;
    Matrix y;
    Index origin = 0;
};

using WindowSet = std::vector<WindowSample>;

struct CsvSchema {
    /// Treat the first column as a timestamp when its header is "date" (case-insensitive).
    bool detect_timestamp = true;
    /// Restrict to these channel names, in this order. Empty keeps every numeric column.
    std::vector<std::string> columns;
    std::string name;
};

SeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes a header row ("date" first when timestamps are present) and full-precision values.
void write_csv(const std::filesystem::path& path, const SeriesDataset& dataset);

/// Per-channel z-score statistics over rows [0, train_end). Population std (divide by n).
NormStats fit_norm(const SeriesDataset& dataset, const SplitSpec& split,
                   bool clamp_zero_variance = false);

SeriesDataset apply_norm(const SeriesDataset& dataset, const NormStats& stats);
SeriesDataset invert_norm(const SeriesDataset& dataset, const NormStats& stats);

/// Row range [begin, end) of a region. Val and test borrow L rows of lookback
/// context from the region before them.
std::pair<Index, Index> region_rows(const SplitSpec& split, Region region, Index lookback);

/// Stride-1 sliding windows fully contained in the region, ordered by origin.
WindowSet windows(const SeriesDataset& dataset, const SplitSpec& split, Region region,
                  Index lookback, Index horizon);

/// Number of windows `windows()` yields for a region of the given length.
constexpr Index window_count(Index region_len, Index lookback, Index horizon) {
    return region_len - lookback - horizon + 1;
}

struct SyntheticSpec {
    std::uint64_t seed = 0;
    Index rows = 2000;
    Index channels = 3;
    Index prefix = 16;    // p: number of redundant leading rows per window
    double snr = 4.0;     // predictable variance / innovation variance
    Index lookback = 48;  // L the series is designed for
};

/**
 * Series whose future depends only on the most recent L - p steps of any window.
 *
 * Each channel follows x[t] = phi * x[t - P] + sqrt(1 - phi^2) * e[t] with period
 * P = L - p and phi^2 / (1 - phi^2) = snr. Given the last P rows of a window the
 * horizon (H <= P) is conditionally independent of the oldest p rows, so those
 * rows only contribute fluctuations a model can overfit to. Unit marginal variance.
 */
SeriesDataset make_synthetic_redundant(const SyntheticSpec& spec);

/// Innovation amplitude sqrt(1 - phi^2) = 1 / sqrt(1 + snr).
double synthetic_innovation_scale(double snr);

}  // namespace amrc

#endif  // AMRC_INGEST_HPP
