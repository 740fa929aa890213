#include "amrc/reporting.hpp"

#include "amrc/objectives.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace amrc {

nlohmann::json MetricsReport::to_json() const {
    return {{"split", split}, {"n_samples", n_samples}, {"horizon", horizon}, {"mse", mse},
            {"mae", mae}};
}

MetricsReport evaluate(const ForecastModel& model, const WindowSet& windows, Index horizon,
                       const std::string& split) {
    if (windows.empty()) throw ValidationError("cannot evaluate an empty window set");
    const ModelDims& dims = model.dims();
    if (horizon != dims.horizon) {
        std::ostringstream os;
        os << "checkpoint predicts H=" << dims.horizon << " but H=" << horizon << " was requested";
        throw ValidationError(os.str());
    }
    const WindowSample& w0 = windows.front();
    if (w0.y.rows() != horizon || w0.x.rows() != dims.lookback || w0.x.cols() != dims.channels) {
        std::ostringstream os;
        os << "windows are L=" << w0.x.rows() << ", H=" << w0.y.rows() << ", D=" << w0.x.cols()
           << " but the checkpoint has L=" << dims.lookback << ", H=" << dims.horizon
           << ", D=" << dims.channels;
        throw ValidationError(os.str());
    }

    constexpr Index chunk = 256;
    const Index n = Index(windows.size());
    const Index D = dims.channels;
    const double entries = double(horizon * D);
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    double se = 0.0;
    double ae = 0.0;
    for (Index start = 0; start < n; start += chunk) {
        const Index count = std::min(chunk, n - start);
        const Batch b = make_batch(
            windows, std::span<const Index>(idx).subspan(std::size_t(start), std::size_t(count)));
        const Matrix yhat = forward(model, b.x).yhat;
        const Vector sq = per_sample_mse(yhat, b.y, D);
        const Matrix err = yhat - b.y;
        for (Index i = 0; i < count; ++i) {
            se += sq(i);
            ae += err.middleCols(i * D, D).cwiseAbs().sum() / entries;
        }
    }
    return {se / double(n), ae / double(n), n, horizon, split};
}

Index MaskScanReport::histogram_mode() const {
    Index best = 0;
    Index count = 0;
    for (std::size_t k = 0; k < kstar_histogram.size(); ++k) {
        if (kstar_histogram[k] > count) {
            count = kstar_histogram[k];
            best = Index(k) + 1;
        }
    }
    return best;
}

nlohmann::json MaskScanReport::to_json() const {
    return {{"split", split},
            {"n_samples", n_samples},
            {"lookback", lookback},
            {"mse_unmasked", mse_unmasked},
            {"mse_star", mse_star},
            {"ratio", ratio},
            {"improved", improved},
            {"kstar_mode", histogram_mode()},
            {"kstar_histogram", kstar_histogram}};
}

MaskScanReport mask_scan(const ForecastModel& model, const WindowSet& windows, Index lookback,
                         const std::string& split) {
    if (windows.empty()) throw ValidationError("cannot scan an empty window set");
    if (lookback != model.dims().lookback) {
        std::ostringstream os;
        os << "checkpoint has L=" << model.dims().lookback << " but L=" << lookback
           << " was requested";
        throw ValidationError(os.str());
    }
    const Index n = Index(windows.size());
    MaskScanReport r;
    r.split = split;
    r.n_samples = n;
    r.lookback = lookback;
    r.kstar_histogram.assign(std::size_t(lookback), 0);
    r.per_sample_unmasked.resize(n);
    r.per_sample_best.resize(n);
    r.per_sample_kstar.resize(std::size_t(n));

    double sum_unmasked = 0.0;
    double sum_star = 0.0;
    for (Index i = 0; i < n; ++i) {
        const Vector profile = mask_loss_profile(model, windows[std::size_t(i)]);
        Index kstar = 1;
        for (Index k = 2; k <= lookback; ++k) {
            if (profile(k) < profile(kstar)) kstar = k;
        }
        const double base = profile(0);
        const double best = profile(kstar);
        r.per_sample_unmasked(i) = base;
        r.per_sample_best(i) = best;
        r.per_sample_kstar[std::size_t(i)] = kstar;
        sum_unmasked += base;
        if (best < base) {
            ++r.improved;
            ++r.kstar_histogram[std::size_t(kstar - 1)];
            sum_star += best;
        } else {
            sum_star += base;
        }
    }
    r.mse_unmasked = sum_unmasked / double(n);
    r.mse_star = sum_star / double(n);
    r.ratio = double(r.improved) / double(n);
    return r;
}

nlohmann::json RatioComparison::to_json() const {
    return {{"ratio", ratio}, {"ratio_star", ratio_star}, {"delta", delta}};
}

RatioComparison compare_ratio(const MaskScanReport& baseline, const MaskScanReport& amrc) {
    if (baseline.split != amrc.split || baseline.lookback != amrc.lookback ||
        baseline.n_samples != amrc.n_samples) {
        std::ostringstream os;
        os << "mask scans are not comparable: (" << baseline.split << ", L=" << baseline.lookback
           << ", n=" << baseline.n_samples << ") vs (" << amrc.split << ", L=" << amrc.lookback
           << ", n=" << amrc.n_samples << ")";
        throw ValidationError(os.str());
    }
    return {baseline.ratio, amrc.ratio, baseline.ratio - amrc.ratio};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw ValidationError("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const std::string& metadata) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out.precision(17);
    if (!metadata.empty()) out << "# " << metadata << '\n';
    return out;
}

}  // namespace

void write_histogram_csv(const std::filesystem::path& path, const MaskScanReport& report,
                         const std::string& metadata) {
    std::ofstream out = open_csv(path, metadata);
    out << "k,count\n";
    for (std::size_t k = 0; k < report.kstar_histogram.size(); ++k) {
        out << k + 1 << ',' << report.kstar_histogram[k] << '\n';
    }
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& rows,
                       const std::string& metadata) {
    std::ofstream out = open_csv(path, metadata);
    out << "split,n_samples,horizon,mse,mae\n";
    for (const MetricsReport& r : rows) {
        out << r.split << ',' << r.n_samples << ',' << r.horizon << ',' << r.mse << ',' << r.mae
            << '\n';
    }
}

void write_scan_csv(const std::filesystem::path& path, const std::vector<MaskScanReport>& rows,
                    const std::string& metadata) {
    std::ofstream out = open_csv(path, metadata);
    out << "split,n_samples,lookback,mse_unmasked,mse_star,ratio,kstar_mode\n";
    for (const MaskScanReport& r : rows) {
        out << r.split << ',' << r.n_samples << ',' << r.lookback << ',' << r.mse_unmasked << ','
            << r.mse_star << ',' << r.ratio << ',' << r.histogram_mode() << '\n';
    }
}

}  // namespace amrc
