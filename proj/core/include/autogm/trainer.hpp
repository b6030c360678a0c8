#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "autogm/engine.hpp"
#include "autogm/graph.hpp"

namespace autogm {

// Per-layer transformation matrices W_1 (d0 x d), W_2..W_k (d x d), plus the
// linear classification head W_out (d x C). Layers can be frozen
// individually (used when pinning conventional presets to fixed weights).
struct WeightStack {
    std::vector<Eigen::MatrixXd> layers;
    Eigen::MatrixXd head;
    std::vector<bool> layer_trainable;
    bool head_trainable = true;

    std::int32_t steps() const { return static_cast<std::int32_t>(layers.size()); }
    void check_shapes(std::int64_t feature_dim, std::int32_t dim, std::int32_t steps,
                      std::int32_t class_count) const;
};

struct TrainConfig {
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    double dropout = 0.5;
    std::int32_t max_epochs = 200;
    std::int32_t patience = 10;
    std::uint64_t seed = 0;
    // Share one d x d matrix across message-passing layers (W_1 included when
    // d0 == d), mirroring a single decay coefficient applied at every step.
    bool tie_layer_weights = false;

    void validate() const;
};

struct TrainedModel {
    ParamSet params;
    WeightStack weights;
    double train_seconds = 0.0;
};

// One measured algorithm: validation accuracy and inference wall-clock.
struct EvalResult {
    double accuracy = 0.0;
    double inference_seconds = 0.0;
};

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Glorot-uniform initialization, limit sqrt(6 / (fan_in + fan_out)) per
// matrix. Deterministic given seed.
WeightStack init_weights(std::int64_t feature_dim, std::int32_t dim, std::int32_t steps,
                         std::int32_t class_count, std::uint64_t seed);

// Full-batch semi-supervised training: softmax cross-entropy on the train
// split, L2 weight decay, Adam, dropout on every layer input in train mode,
// early stopping on validation loss. Returns the best-validation-loss
// weights. Throws TrainingError if the loss turns non-finite.
TrainedModel train(const Dataset& dataset, const ParamSet& params, const TrainConfig& config);

// Embeddings through the classification head, train_mode = false.
Eigen::MatrixXd predict_logits(const Dataset& dataset, const ParamSet& params,
                               const WeightStack& weights, std::mt19937_64& rng);

// Fraction of split nodes whose argmax class matches the label; ties break
// toward the lowest class index.
double evaluate_accuracy(const TrainedModel& model, const Dataset& dataset, Split split,
                         std::mt19937_64& rng);

// Median wall-clock of 5 full-graph forward passes after one warm-up.
double measure_inference_time(const TrainedModel& model, const Dataset& dataset,
                              std::mt19937_64& rng);

// Mean cross-entropy of softmax(X_k W_out) over the train split at the given
// weights, no dropout. This is the function `gradient` differentiates.
double training_loss(const Dataset& dataset, const ParamSet& params, const WeightStack& weights,
                     std::mt19937_64& rng);

// Analytic gradient of training_loss w.r.t. every matrix, returned in a
// stack of matching shapes (frozen layers get zero gradients).
WeightStack gradient(const Dataset& dataset, const ParamSet& params, const WeightStack& weights,
                     std::mt19937_64& rng);

}  // namespace autogm
