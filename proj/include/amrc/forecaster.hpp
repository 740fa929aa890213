#ifndef AMRC_FORECASTER_HPP
#define AMRC_FORECASTER_HPP

#include "amrc/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace amrc {

enum class ModelKind { linear, tinymlp };

/// Named intermediate tensors a model exposes to the regularizers.
enum class Tap { embedding, backbone, predictor };

std::string to_string(ModelKind kind);
std::string to_string(Tap tap);
ModelKind parse_model_kind(const std::string& s);
Tap parse_tap(const std::string& s);

struct ModelDims {
    Index lookback = 0;  // L
    Index horizon = 0;   // H
    Index channels = 0;  // D
    Index hidden = 0;    // E, tinymlp only

    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/**
 * Ordered (tap, tensor) pairs. In a batched forward pass every tensor has
 * n * D columns; columns [i * D, (i + 1) * D) belong to sample i.
 */
struct TapBundle {
    std::vector<std::pair<Tap, Matrix>> entries;

    bool contains(Tap tap) const;
    const Matrix& at(Tap tap) const;
    Matrix& at(Tap tap);
    void set(Tap tap, Matrix value);
};

/**
 * A channel-independent forecaster with a flat parameter vector.
 *
 * linear:  yhat_c = W x_c + b                          (W: H x L)
 * tinymlp: e_c = W1 x_c + b1         -> tap "embedding" (E per channel)
 *          h_c = tanh(W2 e_c + b2)   -> tap "backbone"
 *          yhat_c = W3 h_c + b3      -> tap "predictor"
 *
 * Parameters are stored as consecutive column-major blocks in the order listed.
 * The linear model exposes its prediction as both "embedding" and "predictor".
 * "embedding" is the encoder output Z for both kinds.
 */
class ForecastModel {
public:
    ForecastModel(ModelKind kind, ModelDims dims, std::uint64_t seed, Vector params);

    ModelKind kind() const { return kind_; }
    const ModelDims& dims() const { return dims_; }
    std::uint64_t seed() const { return seed_; }

    const Vector& params() const { return params_; }
    Index param_count() const { return params_.size(); }
    void set_params(const Vector& params);

    std::vector<Tap> taps() const;
    /// The representation treated as the encoder output Z.
    Tap encoder_tap() const;

    static Index param_count(ModelKind kind, const ModelDims& dims);

    /// Checkpoint document {kind, dims, seed, params}.
    nlohmann::json to_json() const;
    static ForecastModel from_json(const nlohmann::json& j);

private:
    ModelKind kind_;
    ModelDims dims_;
    std::uint64_t seed_;
    Vector params_;
};

ForecastModel new_linear(Index lookback, Index horizon, Index channels, std::uint64_t seed);
ForecastModel new_tinymlp(Index lookback, Index horizon, Index channels, Index hidden,
                          std::uint64_t seed);
ForecastModel new_model(ModelKind kind, const ModelDims& dims, std::uint64_t seed);

/// Activations of one batched forward pass; `input` is kept for the backward pass.
struct ForwardPass {
    Matrix input;  // L x (n * D)
    Matrix yhat;   // H x (n * D)
    TapBundle taps;
    Index batch = 0;
    Index channels = 0;

    /// Column block of sample i in any tap or in yhat.
    auto sample(const Matrix& m, Index i) const { return m.middleCols(i * channels, channels); }
};

/// Horizontally stacks L x D windows into the L x (n * D) batch layout.
Matrix stack_columns(const std::vector<const Matrix*>& blocks);

/// Forward pass over `input` (L x (n * D), n >= 1). Throws on non-finite input.
ForwardPass forward(const ForecastModel& model, const Matrix& input);

/**
 * Reverse pass. `tap_grads` holds d(objective)/d(tap) for any subset of the
 * model's taps, in the batched layout. Adds the parameter gradient into `grad`.
 */
void backward(const ForecastModel& model, const ForwardPass& pass, const TapBundle& tap_grads,
              Eigen::Ref<Vector> grad);

/// Scalar objective of the parameters; fills `grad` when non-null.
using Objective = std::function<double(const ForecastModel&, Vector* grad)>;

/// Analytic gradient of `objective` at the model's current parameters.
Vector loss_gradient(const ForecastModel& model, const Objective& objective);

/// Central finite-difference derivative for the listed parameter coordinates.
Vector finite_difference_gradient(const ForecastModel& model, const Objective& objective,
                                  const std::vector<Index>& coords, double step);

}  // namespace amrc

#endif  // AMRC_FORECASTER_HPP
