#ifndef AMRC_REPORTING_HPP
#define AMRC_REPORTING_HPP

#include "amrc/forecaster.hpp"
#include "amrc/ingest.hpp"
#include "amrc/masking.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace amrc {

struct MetricsReport {
    double mse = 0.0;
    double mae = 0.0;
    Index n_samples = 0;
    Index horizon = 0;
    std::string split;

    nlohmann::json to_json() const;
};

/// MSE and MAE over every sample and entry, on the normalized scale.
MetricsReport evaluate(const ForecastModel& model, const WindowSet& windows, Index horizon,
                       const std::string& split = "");

struct MaskScanReport {
    double mse_unmasked = 0.0;
    double mse_star = 0.0;  // mean of per-sample min(unmasked, best masked)
    double ratio = 0.0;     // improved / n
    Index improved = 0;
    Index n_samples = 0;
    Index lookback = 0;
    std::vector<Index> kstar_histogram;  // entry k - 1 counts improved samples with k* = k
    std::string split;

    Vector per_sample_unmasked;
    Vector per_sample_best;             // exhaustive min over k in {1..L}
    std::vector<Index> per_sample_kstar;

    /// Most frequent k* among improved samples, smallest on ties; 0 when none improved.
    Index histogram_mode() const;
    nlohmann::json to_json() const;
};

/**
 * Exhaustive prefix-mask scan. A sample counts as improved only when its best
 * masked loss is strictly below the unmasked loss.
 */
MaskScanReport mask_scan(const ForecastModel& model, const WindowSet& windows, Index lookback,
                         const std::string& split = "");

struct RatioComparison {
    double ratio = 0.0;       // baseline model
    double ratio_star = 0.0;  // AMRC-trained model
    double delta = 0.0;       // ratio - ratio_star

    nlohmann::json to_json() const;
};

RatioComparison compare_ratio(const MaskScanReport& baseline, const MaskScanReport& amrc);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

/// "k,count" with one row per k in {1..L}.
void write_histogram_csv(const std::filesystem::path& path, const MaskScanReport& report,
                         const std::string& metadata);

/// One flat row per report, with a header.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& rows,
                       const std::string& metadata);
void write_scan_csv(const std::filesystem::path& path, const std::vector<MaskScanReport>& rows,
                    const std::string& metadata);

}  // namespace amrc

#endif  // AMRC_REPORTING_HPP
