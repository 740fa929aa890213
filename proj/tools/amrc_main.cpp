#include "amrc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

namespace {

amrc::ModelDims parse_dims(const std::string& text, amrc::ModelKind kind) {
    std::vector<amrc::Index> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long n = std::stoll(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            v.push_back(n);
        } catch (const std::exception&) {
            throw amrc::ValidationError("--dims: '" + item + "' is not an integer");
        }
    }
    const std::size_t want = kind == amrc::ModelKind::tinymlp ? 4 : 3;
    if (v.size() != want && !(kind == amrc::ModelKind::linear && v.size() == 4)) {
        throw amrc::ValidationError("--dims: expected " + std::string(want == 4 ? "L,H,D,E" : "L,H,D"));
    }
    return {v[0], v[1], v[2], v.size() == 4 ? v[3] : 0};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive masking and representation-consistency training for forecasting"};
    app.require_subcommand(1);
    app.set_version_flag("--version", amrc::kToolVersion);

    auto* train = app.add_subcommand("train", "train one model per seed from a JSON config");
    std::string config_path;
    std::string amrc_flag;
    std::vector<std::uint64_t> seeds;
    bool quiet = false;
    train->add_option("--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
    train->add_option("--amrc", amrc_flag, "override: on|off")->check(CLI::IsMember({"on", "off"}));
    train->add_option("--seed", seeds, "override the config's seed list");
    train->add_flag("--quiet", quiet, "no per-epoch log");

    auto* eval = app.add_subcommand("eval", "MSE/MAE of a checkpoint on one split");
    std::string ckpt, data, split = "test", out;
    std::optional<amrc::Index> horizon;
    eval->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
    eval->add_option("--data", data)->required()->check(CLI::ExistingFile);
    eval->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
    eval->add_option("--H", horizon, "expected horizon");
    eval->add_option("--out", out, "write the report JSON here");

    auto* scan = app.add_subcommand("mask-scan", "exhaustive prefix-mask scan of a checkpoint");
    scan->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
    scan->add_option("--data", data)->required()->check(CLI::ExistingFile);
    scan->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
    scan->add_option("--out", out, "report JSON; the histogram goes to <stem>_hist.csv");

    auto* grad = app.add_subcommand("gradcheck", "analytic vs finite-difference gradient");
    std::string kind = "tinymlp", dims = "8,4,2,6";
    amrc::GradcheckOptions gopt;
    bool no_aux = false;
    grad->add_option("--model", kind)->check(CLI::IsMember({"linear", "tinymlp"}));
    grad->add_option("--dims", dims, "L,H,D[,E]");
    grad->add_option("--seed", gopt.seed);
    grad->add_flag("--no-aux", no_aux, "prediction loss only");
    grad->add_flag("--corrupt", gopt.corrupt, "perturb the analytic gradient (negative control)");

    auto* synth = app.add_subcommand("synth", "write a synthetic series with a redundant prefix");
    amrc::SyntheticSpec sspec;
    std::string synth_out;
    synth->add_option("--seed", sspec.seed)->required();
    synth->add_option("--T", sspec.rows)->required();
    synth->add_option("--D", sspec.channels)->required();
    synth->add_option("--prefix", sspec.prefix)->required();
    synth->add_option("--snr", sspec.snr)->required();
    synth->add_option("--L", sspec.lookback, "lookback the series is built for");
    synth->add_option("--out", synth_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*train) {
            amrc::ExperimentConfig cfg = amrc::ExperimentConfig::load(config_path);
            if (amrc_flag == "off") cfg.train.amrc_enabled = false;
            if (amrc_flag == "on") cfg.train.amrc_enabled = true;
            if (!seeds.empty()) cfg.seeds = seeds;
            cfg.train.validate();
            const amrc::TrainSummary s = amrc::cmd_train(cfg, quiet ? nullptr : &std::cerr);
            std::cout << s.to_json().dump(2) << '\n';
        } else if (*eval) {
            std::optional<std::filesystem::path> o;
            if (!out.empty()) o = out;
            const auto r = amrc::cmd_eval(ckpt, data, amrc::parse_region(split), horizon, o);
            std::cout << r.to_json().dump(2) << '\n';
        } else if (*scan) {
            std::optional<std::filesystem::path> o;
            if (!out.empty()) o = out;
            const auto r = amrc::cmd_mask_scan(ckpt, data, amrc::parse_region(split), o);
            std::cout << r.to_json().dump(2) << '\n';
        } else if (*grad) {
            gopt.kind = amrc::parse_model_kind(kind);
            gopt.dims = parse_dims(dims, gopt.kind);
            gopt.aux_terms = !no_aux;
            const auto r = amrc::cmd_gradcheck(gopt);
            std::cout << r.to_json().dump(2) << '\n';
            if (!r.passed) {
                std::cerr << "gradient check failed: max relative error " << r.max_rel_error
                          << " > " << gopt.tolerance << '\n';
                return 2;
            }
        } else if (*synth) {
            amrc::cmd_synth(sspec, synth_out);
        }
    } catch (const amrc::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const amrc::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
