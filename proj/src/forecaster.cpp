#include "amrc/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace amrc {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using MutMap = Eigen::Map<Matrix>;
using MutVecMap = Eigen::Map<Vector>;

// Block offsets inside the flat parameter vector.
struct Layout {
    struct Block {
        Index offset, rows, cols;
        Index size() const { return rows * cols; }
    };
    std::vector<Block> blocks;
    Index total = 0;

    void add(Index rows, Index cols) {
        blocks.push_back({total, rows, cols});
        total += rows * cols;
    }
};

Layout layout_for(ModelKind kind, const ModelDims& d) {
    Layout l;
    if (kind == ModelKind::linear) {
        l.add(d.horizon, d.lookback);
        l.add(d.horizon, 1);
    } else {
        l.add(d.hidden, d.lookback);
        l.add(d.hidden, 1);
        l.add(d.hidden, d.hidden);
        l.add(d.hidden, 1);
        l.add(d.horizon, d.hidden);
        l.add(d.horizon, 1);
    }
    return l;
}

void check_dims(ModelKind kind, const ModelDims& d) {
    if (d.lookback < 1 || d.horizon < 1 || d.channels < 1) {
        throw ValidationError("model dims L, H, D must be >= 1");
    }
    if (kind == ModelKind::tinymlp && d.hidden < 1) {
        throw ValidationError("tinymlp hidden width E must be >= 1");
    }
}

void check_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string("non-finite values in tap '") + what + "'");
}

// Uniform initialization, block by block, each block in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Vector init_params(const Layout& layout, const std::vector<Index>& fan_in, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Vector p(layout.total);
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
        const double a = 1.0 / std::sqrt(double(fan_in[b]));
        std::uniform_real_distribution<double> dist(-a, a);
        const auto& blk = layout.blocks[b];
        for (Index i = 0; i < blk.size(); ++i) p(blk.offset + i) = dist(rng);
    }
    return p;
}

}  // namespace

std::string to_string(ModelKind kind) {
    return kind == ModelKind::linear ? "linear" : "tinymlp";
}

std::string to_string(Tap tap) {
    switch (tap) {
        case Tap::embedding: return "embedding";
        case Tap::backbone: return "backbone";
        case Tap::predictor: return "predictor";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& s) {
    if (s == "linear") return ModelKind::linear;
    if (s == "tinymlp") return ModelKind::tinymlp;
    throw ValidationError("unknown model kind '" + s + "' (expected linear|tinymlp)");
}

Tap parse_tap(const std::string& s) {
    if (s == "embedding") return Tap::embedding;
    if (s == "backbone") return Tap::backbone;
    if (s == "predictor") return Tap::predictor;
    throw ValidationError("unknown tap '" + s + "' (expected embedding|backbone|predictor)");
}

bool TapBundle::contains(Tap tap) const {
    return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.first == tap; });
}

const Matrix& TapBundle::at(Tap tap) const {
    for (const auto& [t, m] : entries) {
        if (t == tap) return m;
    }
    throw ValidationError("tap '" + to_string(tap) + "' is not present");
}

Matrix& TapBundle::at(Tap tap) {
    for (auto& [t, m] : entries) {
        if (t == tap) return m;
    }
    throw ValidationError("tap '" + to_string(tap) + "' is not present");
}

void TapBundle::set(Tap tap, Matrix value) {
    for (auto& [t, m] : entries) {
        if (t == tap) {
            m = std::move(value);
            return;
        }
    }
    entries.emplace_back(tap, std::move(value));
}

ForecastModel::ForecastModel(ModelKind kind, ModelDims dims, std::uint64_t seed, Vector params)
    : kind_(kind), dims_(dims), seed_(seed), params_(std::move(params)) {
    check_dims(kind_, dims_);
    if (kind_ == ModelKind::linear) dims_.hidden = 0;
    const Index expected = param_count(kind_, dims_);
    if (params_.size() != expected) {
        std::ostringstream os;
        os << to_string(kind_) << " model expects " << expected << " parameters, got "
           << params_.size();
        throw ValidationError(os.str());
    }
}

void ForecastModel::set_params(const Vector& params) {
    if (params.size() != params_.size()) {
        std::ostringstream os;
        os << "set_params: expected " << params_.size() << " values, got " << params.size();
        throw ValidationError(os.str());
    }
    params_ = params;
}

Index ForecastModel::param_count(ModelKind kind, const ModelDims& d) {
    const Index L = d.lookback, H = d.horizon, E = d.hidden;
    if (kind == ModelKind::linear) return H * L + H;
    return E * L + E + E * E + E + H * E + H;
}

std::vector<Tap> ForecastModel::taps() const {
    if (kind_ == ModelKind::linear) return {Tap::embedding, Tap::predictor};
    return {Tap::embedding, Tap::backbone, Tap::predictor};
}

Tap ForecastModel::encoder_tap() const {
    return Tap::embedding;
}

nlohmann::json ForecastModel::to_json() const {
    nlohmann::json dims = {{"L", dims_.lookback}, {"H", dims_.horizon}, {"D", dims_.channels}};
    if (kind_ == ModelKind::tinymlp) dims["E"] = dims_.hidden;
    return {{"kind", to_string(kind_)},
            {"dims", dims},
            {"seed", seed_},
            {"params", std::vector<double>(params_.data(), params_.data() + params_.size())}};
}

ForecastModel ForecastModel::from_json(const nlohmann::json& j) {
    try {
        const auto kind = parse_model_kind(j.at("kind").get<std::string>());
        const auto& jd = j.at("dims");
        ModelDims dims{jd.at("L").get<Index>(), jd.at("H").get<Index>(), jd.at("D").get<Index>(),
                       kind == ModelKind::tinymlp ? jd.at("E").get<Index>() : 0};
        auto values = j.at("params").get<std::vector<double>>();
        Vector params = Eigen::Map<const Vector>(values.data(), Index(values.size()));
        return ForecastModel(kind, dims, j.at("seed").get<std::uint64_t>(), std::move(params));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("corrupt checkpoint: ") + e.what());
    }
}

ForecastModel new_linear(Index lookback, Index horizon, Index channels, std::uint64_t seed) {
    ModelDims dims{lookback, horizon, channels, 0};
    check_dims(ModelKind::linear, dims);
    auto layout = layout_for(ModelKind::linear, dims);
    return ForecastModel(ModelKind::linear, dims, seed,
                         init_params(layout, {lookback, lookback}, seed));
}

ForecastModel new_tinymlp(Index lookback, Index horizon, Index channels, Index hidden,
                          std::uint64_t seed) {
    ModelDims dims{lookback, horizon, channels, hidden};
    check_dims(ModelKind::tinymlp, dims);
    auto layout = layout_for(ModelKind::tinymlp, dims);
    return ForecastModel(
        ModelKind::tinymlp, dims, seed,
        init_params(layout, {lookback, lookback, hidden, hidden, hidden, hidden}, seed));
}

ForecastModel new_model(ModelKind kind, const ModelDims& dims, std::uint64_t seed) {
    if (kind == ModelKind::linear) return new_linear(dims.lookback, dims.horizon, dims.channels, seed);
    return new_tinymlp(dims.lookback, dims.horizon, dims.channels, dims.hidden, seed);
}

Matrix stack_columns(const std::vector<const Matrix*>& blocks) {
    if (blocks.empty()) throw ValidationError("cannot stack an empty batch");
    const Index rows = blocks.front()->rows();
    const Index cols = blocks.front()->cols();
    Matrix out(rows, cols * Index(blocks.size()));
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i]->rows() != rows || blocks[i]->cols() != cols) {
            throw ValidationError("batch members have different shapes");
        }
        out.middleCols(Index(i) * cols, cols) = *blocks[i];
    }
    return out;
}

ForwardPass forward(const ForecastModel& model, const Matrix& input) {
    const auto& d = model.dims();
    if (input.rows() != d.lookback || input.cols() == 0 || input.cols() % d.channels != 0) {
        std::ostringstream os;
        os << "forward: input is " << input.rows() << "x" << input.cols() << ", model expects "
           << d.lookback << " rows and a multiple of " << d.channels << " columns";
        throw ValidationError(os.str());
    }
    if (!input.allFinite()) throw NumericError("forward: input contains non-finite values");

    ForwardPass pass;
    pass.input = input;
    pass.batch = input.cols() / d.channels;
    pass.channels = d.channels;

    const auto layout = layout_for(model.kind(), d);
    const double* p = model.params().data();
    auto block = [&](std::size_t b) {
        const auto& blk = layout.blocks[b];
        return ConstMap(p + blk.offset, blk.rows, blk.cols);
    };
    auto bias = [&](std::size_t b) {
        const auto& blk = layout.blocks[b];
        return ConstVecMap(p + blk.offset, blk.rows);
    };

    // Coefficient-wise products: every output column is reduced in the same order no
    // matter how many samples share the batch, so batched and single-sample results agree bit for bit.
    if (model.kind() == ModelKind::linear) {
        pass.yhat = block(0).lazyProduct(input).colwise() + bias(1);
        check_finite(pass.yhat, "predictor");
        pass.taps.set(Tap::embedding, pass.yhat);
        pass.taps.set(Tap::predictor, pass.yhat);
        return pass;
    }

    Matrix embedding = block(0).lazyProduct(input).colwise() + bias(1);
    check_finite(embedding, "embedding");
    Matrix backbone = (block(2).lazyProduct(embedding).colwise() + bias(3)).array().tanh().matrix();
    check_finite(backbone, "backbone");
    pass.yhat = block(4).lazyProduct(backbone).colwise() + bias(5);
    check_finite(pass.yhat, "predictor");
    pass.taps.set(Tap::embedding, std::move(embedding));
    pass.taps.set(Tap::backbone, std::move(backbone));
    pass.taps.set(Tap::predictor, pass.yhat);
    return pass;
}

void backward(const ForecastModel& model, const ForwardPass& pass, const TapBundle& tap_grads,
              Eigen::Ref<Vector> grad) {
    if (grad.size() != model.param_count()) {
        throw ValidationError("backward: gradient buffer has the wrong length");
    }
    const Index cols = pass.input.cols();
    for (const auto& [tap, g] : tap_grads.entries) {
        const auto& taps = model.taps();
        if (std::find(taps.begin(), taps.end(), tap) == taps.end()) {
            throw ValidationError("backward: " + to_string(model.kind()) + " model has no tap '" +
                                  to_string(tap) + "'");
        }
        const Matrix& t = pass.taps.at(tap);
        if (g.rows() != t.rows() || g.cols() != cols) {
            throw ValidationError("backward: gradient for tap '" + to_string(tap) +
                                  "' has the wrong shape");
        }
        if (!g.allFinite()) {
            throw NumericError("non-finite gradient flowing into tap '" + to_string(tap) + "'");
        }
    }

    const auto layout = layout_for(model.kind(), model.dims());
    const double* p = model.params().data();
    auto weight = [&](std::size_t b) {
        const auto& blk = layout.blocks[b];
        return ConstMap(p + blk.offset, blk.rows, blk.cols);
    };
    auto dweight = [&](std::size_t b) {
        const auto& blk = layout.blocks[b];
        return MutMap(grad.data() + blk.offset, blk.rows, blk.cols);
    };
    auto dbias = [&](std::size_t b) {
        const auto& blk = layout.blocks[b];
        return MutVecMap(grad.data() + blk.offset, blk.rows);
    };

    const Index H = model.dims().horizon;
    Matrix g_out = tap_grads.contains(Tap::predictor) ? tap_grads.at(Tap::predictor)
                                                      : Matrix::Zero(H, cols);

    if (model.kind() == ModelKind::linear) {
        if (tap_grads.contains(Tap::embedding)) g_out += tap_grads.at(Tap::embedding);
        dweight(0).noalias() += g_out * pass.input.transpose();
        dbias(1) += g_out.rowwise().sum();
        return;
    }

    const Matrix& embedding = pass.taps.at(Tap::embedding);
    const Matrix& backbone = pass.taps.at(Tap::backbone);

    dweight(4).noalias() += g_out * backbone.transpose();
    dbias(5) += g_out.rowwise().sum();

    Matrix g_backbone = weight(4).transpose() * g_out;
    if (tap_grads.contains(Tap::backbone)) g_backbone += tap_grads.at(Tap::backbone);
    const Matrix g_pre2 = (g_backbone.array() * (1.0 - backbone.array().square())).matrix();

    dweight(2).noalias() += g_pre2 * embedding.transpose();
    dbias(3) += g_pre2.rowwise().sum();

    Matrix g_embedding = weight(2).transpose() * g_pre2;
    if (tap_grads.contains(Tap::embedding)) g_embedding += tap_grads.at(Tap::embedding);

    dweight(0).noalias() += g_embedding * pass.input.transpose();
    dbias(1) += g_embedding.rowwise().sum();
}

Vector loss_gradient(const ForecastModel& model, const Objective& objective) {
    Vector grad = Vector::Zero(model.param_count());
    const double value = objective(model, &grad);
    if (!std::isfinite(value)) throw NumericError("objective value is not finite");
    if (!grad.allFinite()) throw NumericError("gradient contains non-finite entries");
    return grad;
}

Vector finite_difference_gradient(const ForecastModel& model, const Objective& objective,
                                  const std::vector<Index>& coords, double step) {
    Vector out(Index(coords.size()));
    ForecastModel probe = model;
    Vector params = model.params();
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const Index c = coords[i];
        const double original = params(c);
        params(c) = original + step;
        probe.set_params(params);
        const double plus = objective(probe, nullptr);
        params(c) = original - step;
        probe.set_params(params);
        const double minus = objective(probe, nullptr);
        params(c) = original;
        out(Index(i)) = (plus - minus) / (2.0 * step);
    }
    return out;
}

}  // namespace amrc
