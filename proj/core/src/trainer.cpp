#include "autogm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>

#include "autogm/csr.hpp"
#include "autogm/rng.hpp"

namespace autogm {

namespace {

// Seed stream tags so sampling, dropout, init, and validation never share a
// stream.
constexpr std::uint64_t kInitTag = 0x494e4954;
constexpr std::uint64_t kSampleTag = 0x53414d50;
constexpr std::uint64_t kDropTag = 0x44524f50;
constexpr std::uint64_t kValTag = 0x56414c53;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<AggregationOperator> make_operators(const SparseGraph& graph, const ParamSet& params,
                                                std::uint64_t seed_base) {
    std::vector<AggregationOperator> ops(params.steps);
    if (params.width == -1) {
        auto rng = make_rng(seed_base);
        AggregationOperator shared =
            build_aggregation(sample_neighbors(graph, -1, rng), params.aggregation);
        for (auto& op : ops) op = shared;
    } else {
        for (std::int32_t i = 0; i < params.steps; ++i) {
            auto rng = make_rng(mix_seed(seed_base, static_cast<std::uint64_t>(i)));
            ops[i] = build_aggregation(sample_neighbors(graph, params.width, rng),
                                       params.aggregation);
        }
    }
    return ops;
}

std::vector<AggregationOperator> make_operators(const SparseGraph& graph, const ParamSet& params,
                                                std::mt19937_64& rng) {
    std::vector<AggregationOperator> ops(params.steps);
    if (params.width == -1) {
        AggregationOperator shared =
            build_aggregation(sample_neighbors(graph, -1, rng), params.aggregation);
        for (auto& op : ops) op = shared;
    } else {
        for (auto& op : ops) {
            op = build_aggregation(sample_neighbors(graph, params.width, rng),
                                   params.aggregation);
        }
    }
    return ops;
}

struct LayerCache {
    Eigen::MatrixXd input;       // layer input after dropout
    Eigen::MatrixXd mask;        // dropout multiplier, empty when dropout off
    Eigen::MatrixXd aggregated;  // op * input
    Eigen::MatrixXd preact;      // aggregated * W
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    Eigen::MatrixXd head_input;  // X_k after head dropout
    Eigen::MatrixXd head_mask;
    Eigen::MatrixXd logits;
};

Eigen::MatrixXd dropout_mask(std::int64_t rows, std::int64_t cols, double dropout,
                             std::mt19937_64& rng) {
    std::bernoulli_distribution keep(1.0 - dropout);
    const double inv_keep = 1.0 / (1.0 - dropout);
    Eigen::MatrixXd mask(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            mask(i, j) = keep(rng) ? inv_keep : 0.0;
        }
    }
    return mask;
}

ForwardCache forward_cached(const Dataset& dataset, const ParamSet& params,
                            const WeightStack& weights,
                            const std::vector<AggregationOperator>& ops, double dropout,
                            std::mt19937_64& mask_rng) {
    ForwardCache cache;
    cache.layers.resize(params.steps);

    Eigen::MatrixXd x = dataset.features;
    for (std::int32_t i = 0; i < params.steps; ++i) {
        LayerCache& layer = cache.layers[i];
        if (dropout > 0.0) {
            layer.mask = dropout_mask(x.rows(), x.cols(), dropout, mask_rng);
            layer.input = x.cwiseProduct(layer.mask);
        } else {
            layer.input = std::move(x);
        }
        layer.aggregated = spmm(ops[i], layer.input);
        layer.preact = layer.aggregated * weights.layers[i];
        x = params.nonlinear ? layer.preact.cwiseMax(0.0).eval() : layer.preact;
    }

    if (dropout > 0.0) {
        cache.head_mask = dropout_mask(x.rows(), x.cols(), dropout, mask_rng);
        cache.head_input = x.cwiseProduct(cache.head_mask);
    } else {
        cache.head_input = std::move(x);
    }
    cache.logits = cache.head_input * weights.head;
    return cache;
}

double mean_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<std::int32_t>& labels,
                          const std::vector<std::int64_t>& nodes) {
    double total = 0.0;
    for (std::int64_t u : nodes) {
        const auto row = logits.row(u);
        const double m = row.maxCoeff();
        const double lse = m + std::log((row.array() - m).exp().sum());
        total += lse - row(labels[u]);
    }
    return total / static_cast<double>(nodes.size());
}

WeightStack backward(const ForwardCache& cache, const Dataset& dataset, const ParamSet& params,
                     const WeightStack& weights, const std::vector<AggregationOperator>& ops,
                     const std::vector<std::int64_t>& train_nodes) {
    WeightStack grads;
    grads.layers.resize(weights.layers.size());
    grads.layer_trainable = weights.layer_trainable;
    grads.head_trainable = weights.head_trainable;

    const auto n = dataset.node_count();
    const auto inv_count = 1.0 / static_cast<double>(train_nodes.size());

    // d loss / d logits: (softmax - onehot) / |train| on train rows.
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(n, dataset.class_count);
    for (std::int64_t u : train_nodes) {
        const auto row = cache.logits.row(u);
        const double m = row.maxCoeff();
        Eigen::RowVectorXd p = (row.array() - m).exp();
        p /= p.sum();
        dlogits.row(u) = p * inv_count;
        dlogits(u, dataset.labels[u]) -= inv_count;
    }

    grads.head = cache.head_input.transpose() * dlogits;

    Eigen::MatrixXd dx = dlogits * weights.head.transpose();
    if (cache.head_mask.size() > 0) dx = dx.cwiseProduct(cache.head_mask);

    for (std::int32_t i = params.steps - 1; i >= 0; --i) {
        const LayerCache& layer = cache.layers[i];
        Eigen::MatrixXd dz = std::move(dx);
        if (params.nonlinear) {
            dz = dz.cwiseProduct((layer.preact.array() > 0.0).cast<double>().matrix());
        }
        grads.layers[i] = layer.aggregated.transpose() * dz;
        if (i > 0) {
            Eigen::MatrixXd dp = dz * weights.layers[i].transpose();
            dx = spmm_transpose(ops[i], dp);
            if (layer.mask.size() > 0) dx = dx.cwiseProduct(layer.mask);
        }
    }

    for (std::size_t i = 0; i < grads.layers.size(); ++i) {
        if (!weights.layer_trainable[i]) grads.layers[i].setZero();
    }
    if (!weights.head_trainable) grads.head.setZero();
    return grads;
}

struct AdamState {
    Eigen::MatrixXd m;
    Eigen::MatrixXd v;
};

void adam_update(Eigen::MatrixXd& w, const Eigen::MatrixXd& g, AdamState& state, double lr,
                 std::int64_t t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (state.m.size() == 0) {
        state.m = Eigen::MatrixXd::Zero(w.rows(), w.cols());
        state.v = Eigen::MatrixXd::Zero(w.rows(), w.cols());
    }
    state.m = beta1 * state.m + (1.0 - beta1) * g;
    state.v = beta2 * state.v + (1.0 - beta2) * g.cwiseProduct(g);
    const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    w -= (lr / corr1) * state.m.cwiseQuotient(
                            ((state.v / corr2).cwiseSqrt().array() + eps).matrix());
}

}  // namespace

void WeightStack::check_shapes(std::int64_t feature_dim, std::int32_t dim, std::int32_t steps,
                               std::int32_t class_count) const {
    if (static_cast<std::int32_t>(layers.size()) != steps) {
        throw std::invalid_argument("WeightStack: layer count != steps");
    }
    if (layer_trainable.size() != layers.size()) {
        throw std::invalid_argument("WeightStack: trainable flags mismatch");
    }
    for (std::int32_t i = 0; i < steps; ++i) {
        const auto expected_rows = i == 0 ? feature_dim : dim;
        if (layers[i].rows() != expected_rows || layers[i].cols() != dim) {
            throw std::invalid_argument("WeightStack: layer " + std::to_string(i + 1) +
                                        " has wrong shape");
        }
        if (!layers[i].allFinite()) throw std::invalid_argument("WeightStack: non-finite layer");
    }
    if (head.rows() != dim || head.cols() != class_count) {
        throw std::invalid_argument("WeightStack: head has wrong shape");
    }
    if (!head.allFinite()) throw std::invalid_argument("WeightStack: non-finite head");
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate <= 0");
    if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay < 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw std::invalid_argument("TrainConfig: dropout must be in [0, 1)");
    }
    if (max_epochs < 0) throw std::invalid_argument("TrainConfig: max_epochs < 0");
    if (patience < 1) throw std::invalid_argument("TrainConfig: patience < 1");
}

WeightStack init_weights(std::int64_t feature_dim, std::int32_t dim, std::int32_t steps,
                         std::int32_t class_count, std::uint64_t seed) {
    if (feature_dim < 1 || dim < 1 || steps < 1 || class_count < 1) {
        throw std::invalid_argument("init_weights: all dimensions must be >= 1");
    }
    auto rng = make_rng(seed);
    auto glorot = [&rng](std::int64_t rows, std::int64_t cols) {
        const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> u(-limit, limit);
        Eigen::MatrixXd w(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = u(rng);
        }
        return w;
    };

    WeightStack stack;
    stack.layers.reserve(steps);
    stack.layers.push_back(glorot(feature_dim, dim));
    for (std::int32_t i = 1; i < steps; ++i) stack.layers.push_back(glorot(dim, dim));
    stack.head = glorot(dim, class_count);
    stack.layer_trainable.assign(steps, true);
    return stack;
}

TrainedModel train(const Dataset& dataset, const ParamSet& params, const TrainConfig& config) {
    params.validate();
    config.validate();
    const double t_start = now_seconds();

    WeightStack weights = init_weights(dataset.feature_dim(), params.dim, params.steps,
                                       dataset.class_count, mix_seed(config.seed, kInitTag));

    if (config.max_epochs == 0) {
        return {params, std::move(weights), now_seconds() - t_start};
    }

    const auto train_nodes = dataset.split_indices(Split::train);
    const auto val_nodes = dataset.split_indices(Split::val);

    // Validation forward uses a fixed sampling seed so the loss series is
    // comparable across epochs.
    const auto val_ops =
        make_operators(dataset.graph, params, mix_seed(config.seed, kValTag));

    std::vector<AdamState> layer_state(weights.layers.size());
    AdamState head_state;

    // Tied group: all square d x d layers (W_1 included when d0 == d).
    std::vector<std::size_t> tied;
    if (config.tie_layer_weights) {
        for (std::size_t i = 0; i < weights.layers.size(); ++i) {
            if (weights.layers[i].rows() == params.dim && weights.layer_trainable[i]) {
                tied.push_back(i);
            }
        }
    }

    WeightStack best_weights = weights;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::int32_t epochs_without_improvement = 0;
    std::int64_t step_count = 0;

    for (std::int32_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        const auto ops = make_operators(
            dataset.graph, params,
            mix_seed(mix_seed(config.seed, kSampleTag), static_cast<std::uint64_t>(epoch)));
        auto mask_rng = make_rng(
            mix_seed(mix_seed(config.seed, kDropTag), static_cast<std::uint64_t>(epoch)));

        auto cache =
            forward_cached(dataset, params, weights, ops, config.dropout, mask_rng);
        const double loss = mean_cross_entropy(cache.logits, dataset.labels, train_nodes);
        if (!std::isfinite(loss)) {
            throw TrainingError("training diverged: non-finite loss at epoch " +
                                std::to_string(epoch));
        }

        WeightStack grads = backward(cache, dataset, params, weights, ops, train_nodes);
        if (config.weight_decay > 0.0) {
            for (std::size_t i = 0; i < weights.layers.size(); ++i) {
                if (weights.layer_trainable[i]) {
                    grads.layers[i] += config.weight_decay * weights.layers[i];
                }
            }
            if (weights.head_trainable) grads.head += config.weight_decay * weights.head;
        }

        ++step_count;
        if (tied.size() > 1) {
            Eigen::MatrixXd tied_grad =
                Eigen::MatrixXd::Zero(params.dim, params.dim);
            for (auto i : tied) tied_grad += grads.layers[i];
            adam_update(weights.layers[tied[0]], tied_grad, layer_state[tied[0]],
                        config.learning_rate, step_count);
            for (auto i : tied) weights.layers[i] = weights.layers[tied[0]];
        }
        for (std::size_t i = 0; i < weights.layers.size(); ++i) {
            if (!weights.layer_trainable[i]) continue;
            if (std::find(tied.begin(), tied.end(), i) != tied.end() && tied.size() > 1) continue;
            adam_update(weights.layers[i], grads.layers[i], layer_state[i], config.learning_rate,
                        step_count);
        }
        if (weights.head_trainable) {
            adam_update(weights.head, grads.head, head_state, config.learning_rate, step_count);
        }

        auto dummy_rng = make_rng(0);
        auto val_cache = forward_cached(dataset, params, weights, val_ops, 0.0, dummy_rng);
        const double val_loss = mean_cross_entropy(val_cache.logits, dataset.labels, val_nodes);
        if (!std::isfinite(val_loss)) {
            throw TrainingError("training diverged: non-finite validation loss at epoch " +
                                std::to_string(epoch));
        }

        if (val_loss < best_val_loss) {
            best_val_loss = val_loss;
            best_weights = weights;
            epochs_without_improvement = 0;
        } else if (++epochs_without_improvement >= config.patience) {
            break;
        }
    }

    return {params, std::move(best_weights), now_seconds() - t_start};
}

Eigen::MatrixXd predict_logits(const Dataset& dataset, const ParamSet& params,
                               const WeightStack& weights, std::mt19937_64& rng) {
    weights.check_shapes(dataset.feature_dim(), params.dim, params.steps, dataset.class_count);
    Eigen::MatrixXd embeddings =
        forward(dataset, params, std::span<const Eigen::MatrixXd>(weights.layers), rng,
                /*train_mode=*/false);
    return embeddings * weights.head;
}

double evaluate_accuracy(const TrainedModel& model, const Dataset& dataset, Split split,
                         std::mt19937_64& rng) {
    const auto nodes = dataset.split_indices(split);
    if (nodes.empty()) throw std::invalid_argument("evaluate_accuracy: empty split");

    const Eigen::MatrixXd logits = predict_logits(dataset, model.params, model.weights, rng);
    std::int64_t correct = 0;
    for (std::int64_t u : nodes) {
        std::int32_t arg = 0;
        for (std::int32_t c = 1; c < dataset.class_count; ++c) {
            if (logits(u, c) > logits(u, arg)) arg = c;  // ties keep the lowest index
        }
        if (arg == dataset.labels[u]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double measure_inference_time(const TrainedModel& model, const Dataset& dataset,
                              std::mt19937_64& rng) {
    constexpr int kRepeats = 5;
    double checksum = 0.0;

    checksum += predict_logits(dataset, model.params, model.weights, rng).sum();  // warm-up

    std::array<double, kRepeats> times{};
    for (int r = 0; r < kRepeats; ++r) {
        const double t0 = now_seconds();
        checksum += predict_logits(dataset, model.params, model.weights, rng).sum();
        times[r] = now_seconds() - t0;
    }
    // Keep the passes observable so they cannot be elided.
    if (!std::isfinite(checksum)) std::fputc(0, stderr);
    std::sort(times.begin(), times.end());
    return times[kRepeats / 2];
}

double training_loss(const Dataset& dataset, const ParamSet& params, const WeightStack& weights,
                     std::mt19937_64& rng) {
    weights.check_shapes(dataset.feature_dim(), params.dim, params.steps, dataset.class_count);
    const auto ops = make_operators(dataset.graph, params, rng);
    auto dummy_rng = make_rng(0);
    auto cache = forward_cached(dataset, params, weights, ops, 0.0, dummy_rng);
    return mean_cross_entropy(cache.logits, dataset.labels, dataset.split_indices(Split::train));
}

WeightStack gradient(const Dataset& dataset, const ParamSet& params, const WeightStack& weights,
                     std::mt19937_64& rng) {
    weights.check_shapes(dataset.feature_dim(), params.dim, params.steps, dataset.class_count);
    const auto ops = make_operators(dataset.graph, params, rng);
    auto dummy_rng = make_rng(0);
    auto cache = forward_cached(dataset, params, weights, ops, 0.0, dummy_rng);
    return backward(cache, dataset, params, weights, ops, dataset.split_indices(Split::train));
}

}  // namespace autogm
