#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relgnn/graph.hpp"
#include "relgnn/model.hpp"
#include "relgnn/sampling.hpp"

namespace relgnn {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
    std::size_t epochs = 100;
    double lr = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch_size = 128;
    double weight_decay = 0.0;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    SamplerConfig sampler;

    void validate() const;
};

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct Splits {
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
};

/// Seeded shuffle, then test and validation shares are cut from the front.
Splits split_edges(std::span<const Triple> edges, double valid_fraction, double test_fraction, std::uint64_t seed);

/// -log(s_pos) - sum log(1 - s_neg), scores clamped to [1e-12, 1 - 1e-12],
/// averaged over positives. `negatives` holds `negatives.size() /
/// positives.size()` scores per positive.
double bce_pair_loss(std::span<const double> positive_scores, std::span<const double> negative_scores);
Var bce_pair_loss(Var positive_scores, Var negative_scores, std::size_t batch);

class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, const ModelParameters& shape);
    void step(ModelParameters& params, const std::vector<Matrix>& grads);

private:
    TrainConfig cfg_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    std::size_t t_ = 0;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double loss = 0.0;
    double mu = 0.0;
    double mean_neg_score = 0.0;
    std::optional<double> fn_rate;
    std::optional<double> val_auc;
    std::size_t steps = 0;
};

/// Everything one training run needs that is fixed for its duration.
class TrainingContext {
public:
    TrainingContext(const HeteroGraph& full, Splits splits, ModelConfig model, TrainConfig train,
                    std::vector<Triple> held_out = {});

    const HeteroGraph& train_graph() const { return train_graph_; }
    const GraphTensors& tensors() const { return tensors_; }
    const Splits& splits() const { return splits_; }
    const ModelConfig& model_config() const { return model_; }
    const TrainConfig& train_config() const { return train_; }
    const TripleSet& known_positives() const { return all_known_; }
    const CorruptionSource& corruption_source() const { return source_; }
    const NegativeSampler& sampler() const { return sampler_; }
    const TripleSet& held_out() const { return held_out_; }
    bool has_held_out() const { return !held_out_.empty(); }
    const std::vector<Triple>& valid_negatives() const { return valid_negatives_; }

private:
    HeteroGraph train_graph_;
    GraphTensors tensors_;
    Splits splits_;
    ModelConfig model_;
    TrainConfig train_;
    TripleSet train_set_;
    TripleSet all_known_;
    CorruptionSource source_;
    NegativeSampler sampler_;
    TripleSet held_out_;
    std::vector<Triple> valid_negatives_;
};

struct TrainState {
    ModelParameters params;
    Optimizer optimizer;
    std::size_t epoch = 0;  // completed epochs
    Scorer snapshot;        // frozen scorer from the end of the previous epoch
    double best_val_auc = -1.0;

    TrainState(const TrainingContext& ctx, ModelParameters init);
};

/// Gradients of the batch loss for each parameter array, in
/// ModelParameters::named() order.
struct LossAndGrad {
    double loss = 0.0;
    std::vector<Matrix> grads;
};

LossAndGrad loss_and_grad(const ModelParameters& params, const GraphTensors& gt, const ModelConfig& cfg,
                          std::span<const Triple> positives, std::span<const Triple> negatives);
double loss_value(const ModelParameters& params, const GraphTensors& gt, const ModelConfig& cfg,
                  std::span<const Triple> positives, std::span<const Triple> negatives);

/// Refreshes the frozen scorer, then shuffles, selects negatives, and takes
/// one optimizer step per batch.
EpochStats train_epoch(TrainState& state, const TrainingContext& ctx);

double validation_auc(const Scorer& scorer, const TrainingContext& ctx);

struct FitResult {
    ModelParameters best;
    std::size_t best_epoch = 0;
    double best_val_auc = 0.0;
    std::vector<EpochStats> log;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains with early stopping on validation ROC-AUC and returns the best
/// parameters seen.
FitResult fit(const TrainingContext& ctx, const EpochCallback& on_epoch = {});

std::string to_json_line(const EpochStats& s);

}  // namespace relgnn
