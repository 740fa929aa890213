#include "amrc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace amrc {

namespace {

std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

// Splits one CSV record. Double-quoted fields may contain commas; "" is an escaped quote.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                current += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(trim(current));
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string hourly_timestamp(Index t) {
    using namespace std::chrono;
    sys_days day = year{2020} / January / 1;
    day += days{t / 24};
    year_month_day ymd{day};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:00:00", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), int(t % 24));
    return buf;
}

}  // namespace

void SplitSpec::validate(Index total_rows) const {
    if (!(0 < train_end && train_end <= val_end && val_end <= test_end &&
          test_end <= total_rows)) {
        std::ostringstream os;
        os << "invalid split (train_end=" << train_end << ", val_end=" << val_end
           << ", test_end=" << test_end << ") for " << total_rows
           << " rows; need 0 < train_end <= val_end <= test_end <= T";
        throw ValidationError(os.str());
    }
}

SplitSpec SplitSpec::ett_hourly() {
    constexpr Index month = 30 * 24;
    return {12 * month, 16 * month, 20 * month};
}

SplitSpec SplitSpec::from_fractions(Index total_rows, double train_frac, double val_frac) {
    if (!(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0)) {
        throw ValidationError("split fractions must satisfy 0 < train, 0 <= val, train + val <= 1");
    }
    const auto train_end = static_cast<Index>(std::floor(train_frac * double(total_rows)));
    const auto val_end = static_cast<Index>(std::floor((train_frac + val_frac) * double(total_rows)));
    SplitSpec s{train_end, val_end, total_rows};
    s.validate(total_rows);
    return s;
}

Region parse_region(const std::string& s) {
    if (s == "train") return Region::train;
    if (s == "val") return Region::val;
    if (s == "test") return Region::test;
    throw ValidationError("unknown split '" + s + "' (expected train|val|test)");
}

std::string to_string(Region r) {
    switch (r) {
        case Region::train: return "train";
        case Region::val: return "val";
        case Region::test: return "test";
    }
    return "?";
}

nlohmann::json NormStats::to_json() const {
    return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
            {"std", std::vector<double>(std.data(), std.data() + std.size())}};
}

NormStats NormStats::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("mean") || !j.contains("std")) {
        throw ValidationError("normalization stats need 'mean' and 'std' arrays");
    }
    auto m = j.at("mean").get<std::vector<double>>();
    auto s = j.at("std").get<std::vector<double>>();
    if (m.size() != s.size() || m.empty()) {
        throw ValidationError("normalization stats: mean and std must be non-empty and equal length");
    }
    NormStats out;
    out.mean = Eigen::Map<const Vector>(m.data(), Index(m.size()));
    out.std = Eigen::Map<const Vector>(s.data(), Index(s.size()));
    if ((out.std.array() <= 0.0).any()) throw ValidationError("normalization stats: std must be > 0");
    return out;
}

SeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_record(line);
            break;
        }
    }
    if (header.empty()) throw ValidationError("'" + path.string() + "' is empty");

    const bool has_ts = schema.detect_timestamp && lower(header.front()) == "date";
    const std::size_t first_value = has_ts ? 1 : 0;
    if (header.size() <= first_value) {
        throw ValidationError("'" + path.string() + "' has no value columns");
    }

    // Which source columns to keep, in output order.
    std::vector<std::size_t> keep;
    if (schema.columns.empty()) {
        for (std::size_t c = first_value; c < header.size(); ++c) keep.push_back(c);
    } else {
        for (const auto& name : schema.columns) {
            auto it = std::find(header.begin() + Index(first_value), header.end(), name);
            if (it == header.end()) {
                throw ValidationError("column '" + name + "' not found in '" + path.string() + "'");
            }
            keep.push_back(std::size_t(it - header.begin()));
        }
    }

    std::vector<double> flat;
    std::vector<std::string> stamps;
    Index rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_record(line);
        ++rows;
        if (fields.size() != header.size()) {
            std::ostringstream os;
            os << path.string() << ": row " << rows << " (line " << line_no << ") has "
               << fields.size() << " fields, header has " << header.size();
            throw ValidationError(os.str());
        }
        if (has_ts) stamps.push_back(fields.front());
        for (std::size_t c : keep) {
            double v = 0.0;
            if (!parse_double(fields[c], v)) {
                std::ostringstream os;
                os << path.string() << ": non-numeric value '" << fields[c] << "' at row " << rows
                   << " (line " << line_no << "), column " << (c + 1) << " '" << header[c] << "'";
                throw ValidationError(os.str());
            }
            flat.push_back(v);
        }
    }
    if (rows == 0) throw ValidationError("'" + path.string() + "' has a header but no data rows");

    SeriesDataset ds;
    const auto d = Index(keep.size());
    ds.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), rows, d);
    for (std::size_t c : keep) ds.channel_names.push_back(header[c]);
    ds.timestamps = std::move(stamps);
    ds.name = schema.name.empty() ? path.stem().string() : schema.name;
    return ds;
}

void write_csv(const std::filesystem::path& path, const SeriesDataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    const bool has_ts = !dataset.timestamps.empty();
    if (has_ts) out << "date";
    for (Index c = 0; c < dataset.channels(); ++c) {
        if (has_ts || c > 0) out << ',';
        out << dataset.channel_names[std::size_t(c)];
    }
    out << '\n';
    for (Index t = 0; t < dataset.rows(); ++t) {
        if (has_ts) out << dataset.timestamps[std::size_t(t)];
        for (Index c = 0; c < dataset.channels(); ++c) {
            if (has_ts || c > 0) out << ',';
            out << format_double(dataset.values(t, c));
        }
        out << '\n';
    }
    if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

NormStats fit_norm(const SeriesDataset& dataset, const SplitSpec& split, bool clamp_zero_variance) {
    split.validate(dataset.rows());
    if (split.train_end < 2) throw ValidationError("fit_norm needs at least 2 training rows");

    const auto train = dataset.values.topRows(split.train_end);
    NormStats stats;
    stats.mean = train.colwise().mean().transpose();
    stats.std = ((train.rowwise() - stats.mean.transpose()).array().square().colwise().sum() /
                 double(split.train_end))
                    .sqrt()
                    .transpose();
    for (Index c = 0; c < stats.std.size(); ++c) {
        if (stats.std(c) > 0.0) continue;
        if (!clamp_zero_variance) {
            throw ValidationError("channel '" + dataset.channel_names[std::size_t(c)] +
                                  "' has zero variance in the training region");
        }
        stats.std(c) = 1.0;
    }
    return stats;
}

namespace {
void check_stats(const SeriesDataset& dataset, const NormStats& stats) {
    if (stats.mean.size() != dataset.channels() || stats.std.size() != dataset.channels()) {
        std::ostringstream os;
        os << "normalization stats have " << stats.mean.size() << " channels, dataset has "
           << dataset.channels();
        throw ValidationError(os.str());
    }
}
}  // namespace

SeriesDataset apply_norm(const SeriesDataset& dataset, const NormStats& stats) {
    check_stats(dataset, stats);
    SeriesDataset out = dataset;
    out.values = ((dataset.values.rowwise() - stats.mean.transpose()).array().rowwise() /
                  stats.std.transpose().array())
                     .matrix();
    return out;
}

SeriesDataset invert_norm(const SeriesDataset& dataset, const NormStats& stats) {
    check_stats(dataset, stats);
    SeriesDataset out = dataset;
    out.values = ((dataset.values.array().rowwise() * stats.std.transpose().array()).matrix()
                      .rowwise() +
                  stats.mean.transpose());
    return out;
}

std::pair<Index, Index> region_rows(const SplitSpec& split, Region region, Index lookback) {
    switch (region) {
        case Region::train: return {0, split.train_end};
        case Region::val: return {std::max<Index>(0, split.train_end - lookback), split.val_end};
        case Region::test: return {std::max<Index>(0, split.val_end - lookback), split.test_end};
    }
    return {0, 0};
}

WindowSet windows(const SeriesDataset& dataset, const SplitSpec& split, Region region,
                  Index lookback, Index horizon) {
    if (lookback < 1 || horizon < 1) throw ValidationError("lookback and horizon must be >= 1");
    split.validate(dataset.rows());
    const auto [begin, end] = region_rows(split, region, lookback);
    const Index count = window_count(end - begin, lookback, horizon);
    if (count < 1) {
        std::ostringstream os;
        os << to_string(region) << " region has " << (end - begin) << " rows; need at least L+H = "
           << (lookback + horizon);
        throw ValidationError(os.str());
    }
    WindowSet out;
    out.reserve(std::size_t(count));
    for (Index i = 0; i < count; ++i) {
        const Index origin = begin + i + lookback - 1;
        out.push_back({dataset.values.middleRows(origin - lookback + 1, lookback),
                       dataset.values.middleRows(origin + 1, horizon), origin});
    }
    return out;
}

double synthetic_innovation_scale(double snr) {
    if (!(snr > 0.0)) throw ValidationError("snr must be > 0");
    return 1.0 / std::sqrt(1.0 + snr);
}

SeriesDataset make_synthetic_redundant(const SyntheticSpec& spec) {
    const double innovation = synthetic_innovation_scale(spec.snr);
    if (spec.lookback < 2 || spec.prefix < 0 || spec.prefix >= spec.lookback) {
        throw ValidationError("synthetic data needs 0 <= prefix < lookback");
    }
    if (spec.rows < 1 || spec.channels < 1) throw ValidationError("synthetic data needs T, D >= 1");
    const double phi = std::sqrt(1.0 - innovation * innovation);
    const Index period = spec.lookback - spec.prefix;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SeriesDataset ds;
    ds.values.resize(spec.rows, spec.channels);
    // Row-major fill keeps the draw order independent of storage layout.
    for (Index t = 0; t < spec.rows; ++t) {
        for (Index c = 0; c < spec.channels; ++c) {
            const double e = normal(rng);
            ds.values(t, c) = t < period ? e : phi * ds.values(t - period, c) + innovation * e;
        }
    }
    for (Index c = 0; c < spec.channels; ++c) ds.channel_names.push_back("ch" + std::to_string(c));
    ds.timestamps.reserve(std::size_t(spec.rows));
    for (Index t = 0; t < spec.rows; ++t) ds.timestamps.push_back(hourly_timestamp(t));
    ds.name = "synthetic_p" + std::to_string(spec.prefix);
    return ds;
}

}  // namespace amrc
