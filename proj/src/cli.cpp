#include "amrc/cli.hpp"

#include "amrc/masking.hpp"
#include "amrc/objectives.hpp"

#include "json_fields.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace amrc {

namespace fs = std::filesystem;

SplitSpec SplitConfig::resolve(Index total_rows) const {
    SplitSpec s;
    switch (kind) {
        case Kind::rows: s = rows; break;
        case Kind::fractions: s = SplitSpec::from_fractions(total_rows, train_frac, val_frac); break;
        case Kind::preset: s = SplitSpec::ett_hourly(); break;
    }
    s.validate(total_rows);
    return s;
}

nlohmann::json SplitConfig::to_json() const {
    switch (kind) {
        case Kind::rows:
            return {{"train_end", rows.train_end}, {"val_end", rows.val_end},
                    {"test_end", rows.test_end}};
        case Kind::fractions: return {{"train_frac", train_frac}, {"val_frac", val_frac}};
        case Kind::preset: return {{"preset", preset}};
    }
    return {};
}

SplitConfig SplitConfig::from_json(const nlohmann::json& j, const std::string& path) {
    detail::FieldReader r(j, path);
    SplitConfig c;
    if (r.has("preset")) {
        c.kind = Kind::preset;
        c.preset = r.required<std::string>("preset");
        if (c.preset != "ett_hourly") {
            throw ValidationError(r.path("preset") + ": unknown preset '" + c.preset + "'");
        }
    } else if (r.has("train_end") || r.has("val_end") || r.has("test_end")) {
        c.kind = Kind::rows;
        c.rows.train_end = r.required<Index>("train_end");
        c.rows.val_end = r.required<Index>("val_end");
        c.rows.test_end = r.required<Index>("test_end");
    } else {
        c.kind = Kind::fractions;
        c.train_frac = r.required<double>("train_frac");
        c.val_frac = r.required<double>("val_frac");
    }
    r.finish();
    return c;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    detail::FieldReader r(j, "config");
    ExperimentConfig c;

    {
        detail::FieldReader d(r.raw("dataset"), "config.dataset");
        fs::path p = d.required<std::string>("path");
        c.data_path = p.is_absolute() ? p : base_dir / p;
        c.data_name = c.data_path.stem().string();
        d.optional("name", c.data_name);
        d.optional("columns", c.columns);
        d.optional("clamp_zero_variance", c.clamp_zero_variance);
        d.finish();
        if (!fs::exists(c.data_path)) {
            throw ValidationError("config.dataset.path: file not found: " + c.data_path.string());
        }
    }

    if (r.has("split")) c.split = SplitConfig::from_json(r.raw("split"), "config.split");

    if (r.has("model")) {
        detail::FieldReader m(r.raw("model"), "config.model");
        std::string kind = to_string(c.model_kind);
        m.optional("kind", kind);
        try {
            c.model_kind = parse_model_kind(kind);
        } catch (const ValidationError& e) {
            throw ValidationError(m.path("kind") + ": " + e.what());
        }
        m.optional("hidden", c.hidden);
        m.finish();
        if (c.model_kind == ModelKind::tinymlp && c.hidden < 1) {
            throw ValidationError("config.model.hidden: must be >= 1");
        }
    }

    if (r.has("train")) c.train = TrainConfig::from_json(r.raw("train"), "config.train");

    {
        fs::path out = r.required<std::string>("output_dir");
        c.output_dir = out.is_absolute() ? out : base_dir / out;
    }

    if (r.has("seeds")) {
        const nlohmann::json& s = r.raw("seeds");
        if (!s.is_array() || s.empty()) {
            throw ValidationError("config.seeds: expected a non-empty array of integers");
        }
        c.seeds.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].is_number_integer() || s[i].get<std::int64_t>() < 0) {
                throw ValidationError("config.seeds[" + std::to_string(i) +
                                      "]: expected a non-negative integer");
            }
            c.seeds.push_back(s[i].get<std::uint64_t>());
        }
    } else {
        c.seeds = {c.train.seed};
    }
    r.optional("record_timing", c.record_timing);
    r.finish();
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    const nlohmann::json j = read_json(path);
    return from_json(j, fs::absolute(path).parent_path());
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json dataset = {{"path", data_path.string()}, {"name", data_name},
                              {"clamp_zero_variance", clamp_zero_variance}};
    if (!columns.empty()) dataset["columns"] = columns;
    nlohmann::json model = {{"kind", to_string(model_kind)}};
    if (model_kind == ModelKind::tinymlp) model["hidden"] = hidden;
    return {{"dataset", dataset},
            {"split", split.to_json()},
            {"model", model},
            {"train", train.to_json()},
            {"output_dir", output_dir.string()},
            {"seeds", seeds},
            {"record_timing", record_timing}};
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

nlohmann::json output_metadata(const std::string& config_hash, std::optional<std::uint64_t> seed) {
    nlohmann::json m = {{"tool_version", kToolVersion}, {"config_hash", config_hash}};
    m["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    return m;
}

std::string metadata_line(const nlohmann::json& meta) {
    std::ostringstream os;
    bool first = true;
    for (auto it = meta.begin(); it != meta.end(); ++it) {
        if (!first) os << ' ';
        first = false;
        os << it.key() << '=' << (it->is_string() ? it->get<std::string>() : it->dump());
    }
    return os.str();
}

MeanStd mean_std(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("mean_std of an empty list");
    const double n = double(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

nlohmann::json TrainSummary::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const SeedRun& r : runs) {
        rows.push_back({{"seed", r.seed},
                        {"epochs", r.epochs},
                        {"best_epoch", r.best_epoch},
                        {"best_val_mse", r.best_val_mse},
                        {"test_mse", r.test.mse},
                        {"test_mae", r.test.mae},
                        {"test_samples", r.test.n_samples},
                        {"checkpoint", r.checkpoint.filename().string()}});
    }
    return {{"runs", rows},
            {"test_mse", {{"mean", test_mse.mean}, {"std", test_mse.std}}},
            {"test_mae", {{"mean", test_mae.mean}, {"std", test_mae.std}}}};
}

PreparedData prepare_data(const ExperimentConfig& config) {
    CsvSchema schema;
    schema.columns = config.columns;
    schema.name = config.data_name;
    SeriesDataset raw = load_csv(config.data_path, schema);
    PreparedData out;
    out.split = config.split.resolve(raw.rows());
    out.norm = fit_norm(raw, out.split, config.clamp_zero_variance);
    out.data = apply_norm(raw, out.norm);
    return out;
}

namespace {

nlohmann::json split_json(const SplitSpec& s) {
    return {{"train_end", s.train_end}, {"val_end", s.val_end}, {"test_end", s.test_end}};
}

}  // namespace

TrainSummary cmd_train(const ExperimentConfig& config, std::ostream* log) {
    const PreparedData prep = prepare_data(config);
    const Index L = config.train.lookback;
    const Index H = config.train.horizon;
    const WindowSet train_set = windows(prep.data, prep.split, Region::train, L, H);
    const WindowSet val_set = windows(prep.data, prep.split, Region::val, L, H);
    const WindowSet test_set = windows(prep.data, prep.split, Region::test, L, H);
    const ModelDims dims{L, H, prep.data.channels(),
                         config.model_kind == ModelKind::tinymlp ? config.hidden : 0};
    const std::string hash = config.hash();

    fs::create_directories(config.output_dir);
    TrainSummary summary;
    std::vector<double> mses;
    std::vector<double> maes;
    for (std::uint64_t seed : config.seeds) {
        TrainConfig tc = config.train;
        tc.seed = seed;
        if (log) {
            *log << "seed " << seed << ": " << train_set.size() << " train / " << val_set.size()
                 << " val / " << test_set.size() << " test windows, amrc "
                 << (tc.amrc_enabled ? "on" : "off") << '\n';
        }
        EpochCallback progress;
        if (log) {
            progress = [log](const EpochRecord& e) {
                *log << "  epoch " << std::setw(3) << e.epoch << "  train " << std::setprecision(6)
                     << e.train_total << "  val " << e.val_mse << '\n';
            };
        }
        TrainResult result = train(new_model(config.model_kind, dims, seed), train_set, val_set, tc,
                                   progress);

        const fs::path dir = config.output_dir / ("seed_" + std::to_string(seed));
        fs::create_directories(dir);
        const nlohmann::json meta = output_metadata(hash, seed);

        nlohmann::json ckpt = result.model.to_json();
        ckpt["norm"] = prep.norm.to_json();
        ckpt["split"] = split_json(prep.split);
        ckpt["dataset"] = config.data_name;
        ckpt["meta"] = meta;
        write_json(dir / "checkpoint.json", ckpt);

        nlohmann::json sidecar = tc.to_json();
        sidecar["meta"] = meta;
        write_json(dir / "train_config.json", sidecar);

        write_history_csv(dir / "history.csv", result.history, metadata_line(meta),
                          config.record_timing);

        SeedRun run;
        run.seed = seed;
        run.epochs = Index(result.history.epochs.size());
        run.best_epoch = result.history.best_epoch;
        run.best_val_mse = result.history.best_val;
        run.test = evaluate(result.model, test_set, H, "test");
        run.checkpoint = dir / "checkpoint.json";
        run.history = dir / "history.csv";
        mses.push_back(run.test.mse);
        maes.push_back(run.test.mae);
        if (log) {
            *log << "seed " << seed << ": best epoch " << run.best_epoch << ", test mse "
                 << run.test.mse << ", mae " << run.test.mae << '\n';
        }
        summary.runs.push_back(std::move(run));
    }
    summary.test_mse = mean_std(mses);
    summary.test_mae = mean_std(maes);

    nlohmann::json doc = summary.to_json();
    doc["meta"] = output_metadata(hash, std::nullopt);
    doc["meta"]["seeds"] = config.seeds;
    write_json(config.output_dir / "summary.json", doc);
    return summary;
}

Checkpoint Checkpoint::load(const fs::path& path) {
    const nlohmann::json j = read_json(path);
    ForecastModel model = ForecastModel::from_json(j);
    try {
        NormStats norm = NormStats::from_json(j.at("norm"));
        const auto& s = j.at("split");
        SplitSpec split{s.at("train_end").get<Index>(), s.at("val_end").get<Index>(),
                        s.at("test_end").get<Index>()};
        std::string hash = "unknown";
        if (j.contains("meta") && j["meta"].contains("config_hash")) {
            hash = j["meta"]["config_hash"].get<std::string>();
        }
        return {std::move(model), std::move(norm), split, std::move(hash)};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("corrupt checkpoint " + path.string() + ": " + e.what());
    }
}

WindowSet checkpoint_windows(const Checkpoint& ckpt, const fs::path& data, Region region) {
    const SeriesDataset raw = load_csv(data);
    if (raw.channels() != ckpt.model.dims().channels) {
        std::ostringstream os;
        os << "data has D=" << raw.channels() << " channels but the checkpoint has D="
           << ckpt.model.dims().channels;
        throw ValidationError(os.str());
    }
    ckpt.split.validate(raw.rows());
    const ModelDims& d = ckpt.model.dims();
    return windows(apply_norm(raw, ckpt.norm), ckpt.split, region, d.lookback, d.horizon);
}

MetricsReport cmd_eval(const fs::path& ckpt_path, const fs::path& data, Region region,
                       std::optional<Index> horizon, const std::optional<fs::path>& out) {
    const Checkpoint ckpt = Checkpoint::load(ckpt_path);
    const Index H = horizon.value_or(ckpt.model.dims().horizon);
    if (H != ckpt.model.dims().horizon) {
        std::ostringstream os;
        os << "checkpoint predicts H=" << ckpt.model.dims().horizon << " but H=" << H
           << " was requested";
        throw ValidationError(os.str());
    }
    const MetricsReport report =
        evaluate(ckpt.model, checkpoint_windows(ckpt, data, region), H, to_string(region));
    if (out) {
        nlohmann::json doc = report.to_json();
        doc["meta"] = output_metadata(ckpt.config_hash, ckpt.model.seed());
        write_json(*out, doc);
    }
    return report;
}

MaskScanReport cmd_mask_scan(const fs::path& ckpt_path, const fs::path& data, Region region,
                             const std::optional<fs::path>& out) {
    const Checkpoint ckpt = Checkpoint::load(ckpt_path);
    const MaskScanReport report = mask_scan(ckpt.model, checkpoint_windows(ckpt, data, region),
                                            ckpt.model.dims().lookback, to_string(region));
    if (out) {
        const nlohmann::json meta = output_metadata(ckpt.config_hash, ckpt.model.seed());
        nlohmann::json doc = report.to_json();
        doc["meta"] = meta;
        write_json(*out, doc);
        fs::path hist = *out;
        hist.replace_filename(out->stem().string() + "_hist.csv");
        write_histogram_csv(hist, report, metadata_line(meta));
    }
    return report;
}

nlohmann::json GradcheckResult::to_json() const {
    return {{"max_rel_error", max_rel_error}, {"worst_coord", worst_coord}, {"coords", coords},
            {"active_beta", active_beta},     {"esp_margin", esp_margin}, {"passed", passed}};
}

GradcheckResult cmd_gradcheck(const GradcheckOptions& o) {
    const Index P = ForecastModel::param_count(o.kind, o.dims);
    if (P > o.max_params) {
        throw ValidationError("gradcheck: " + std::to_string(P) + " parameters exceed the budget of " +
                              std::to_string(o.max_params));
    }
    if (o.batch < 2) throw ValidationError("gradcheck: batch must be >= 2");
    const ForecastModel model = new_model(o.kind, o.dims, o.seed);

    std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    const Index D = o.dims.channels;
    Batch batch{Matrix(o.dims.lookback, o.batch * D), Matrix(o.dims.horizon, o.batch * D), o.batch};
    for (Index c = 0; c < batch.x.cols(); ++c) {
        for (Index r = 0; r < batch.x.rows(); ++r) batch.x(r, c) = normal(rng);
    }
    for (Index c = 0; c < batch.y.cols(); ++c) {
        for (Index r = 0; r < batch.y.rows(); ++r) batch.y(r, c) = normal(rng);
    }

    ObjectiveConfig cfg;
    cfg.lambda_aml = o.aux_terms ? 1.0 : 0.0;
    cfg.lambda_esp = o.aux_terms ? 1.0 : 0.0;

    // Every prefix length is a candidate so the AML term is active for as many samples as possible.
    std::vector<MaskLen> ks;
    for (Index k = 1; k <= o.dims.lookback; ++k) ks.push_back({k});
    const AmlTargets targets = build_aml_targets(model, batch, forward(model, batch.x), ks);
    const Objective objective = make_objective(batch, &targets, cfg);

    Vector analytic = loss_gradient(model, objective);
    if (o.corrupt) analytic(0) += 1e-2 * (1.0 + std::abs(analytic(0)));
    std::vector<Index> coords(static_cast<std::size_t>(P));
    std::iota(coords.begin(), coords.end(), Index{0});
    const Vector numeric = finite_difference_gradient(model, objective, coords, o.step);

    GradcheckResult res;
    res.coords = P;
    for (Index i = 0; i < targets.beta.size(); ++i) res.active_beta += targets.beta(i) > 0.0;
    {
        const Matrix dev =
            esp_penalty_batched(forward(model, batch.x).taps.at(model.encoder_tap()), batch.y,
                                batch.size, false)
                .deviation.cwiseAbs();
        res.esp_margin = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < dev.cols(); ++j) {
            for (Index i = 0; i < dev.rows(); ++i) {
                if (i != j) res.esp_margin = std::min(res.esp_margin, dev(i, j));
            }
        }
    }
    if (!o.aux_terms) res.active_beta = 0;
    const double floor = std::max(1e-3 * numeric.cwiseAbs().maxCoeff(), 1e-12);
    for (Index i = 0; i < P; ++i) {
        const double a = analytic(i);
        const double f = numeric(i);
        const double rel = std::abs(a - f) / std::max({std::abs(a), std::abs(f), floor});
        if (rel > res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst_coord = i;
        }
    }
    res.passed = res.max_rel_error <= o.tolerance;
    return res;
}

void cmd_synth(const SyntheticSpec& spec, const fs::path& out) {
    write_csv(out, make_synthetic_redundant(spec));
}

}  // namespace amrc
