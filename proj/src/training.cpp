#include "relgnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "relgnn/error.hpp"
#include "relgnn/eval.hpp"
#include "relgnn/rng.hpp"

namespace relgnn {

namespace {
constexpr double kProbEps = 1e-12;
}

void TrainConfig::validate() const {
    auto bad = [](const std::string& why) { fail(ErrorKind::config, "train config: " + why); };
    if (epochs < 1) bad("epochs must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) bad("lr must be > 0");
    if (batch_size < 1) bad("batch_size must be >= 1");
    if (patience < 1) bad("patience must be >= 1");
    if (!(weight_decay >= 0.0)) bad("weight_decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) bad("adam betas must lie in [0, 1)");
    if (!(eps > 0.0)) bad("eps must be > 0");
    sampler.validate();
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    fail(ErrorKind::config, "unknown optimizer '" + s + "' (sgd, adam)");
}

Splits split_edges(std::span<const Triple> edges, double valid_fraction, double test_fraction, std::uint64_t seed) {
    if (!(valid_fraction >= 0.0 && test_fraction >= 0.0 && valid_fraction + test_fraction < 1.0)) {
        fail(ErrorKind::config, "split fractions must be >= 0 and sum to less than 1");
    }
    std::vector<Triple> shuffled(edges.begin(), edges.end());
    Rng rng(derive_seed(seed, "split"));
    shuffle(shuffled, rng);
    const auto n = static_cast<double>(shuffled.size());
    const auto n_test = static_cast<std::size_t>(std::llround(n * test_fraction));
    const auto n_valid = static_cast<std::size_t>(std::llround(n * valid_fraction));
    Splits s;
    s.test.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.valid.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test),
                   shuffled.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid));
    s.train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid), shuffled.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.valid.begin(), s.valid.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

double bce_pair_loss(std::span<const double> positive_scores, std::span<const double> negative_scores) {
    if (positive_scores.empty()) fail(ErrorKind::invalid_argument, "bce_pair_loss: empty batch");
    double total = 0.0;
    for (double s : positive_scores) total -= std::log(std::clamp(s, kProbEps, 1.0 - kProbEps));
    for (double s : negative_scores) total -= std::log(1.0 - std::clamp(s, kProbEps, 1.0 - kProbEps));
    return total / static_cast<double>(positive_scores.size());
}

Var bce_pair_loss(Var positive_scores, Var negative_scores, std::size_t batch) {
    Var pos = log(clamp(positive_scores, kProbEps, 1.0 - kProbEps));
    Var neg = log(affine(clamp(negative_scores, kProbEps, 1.0 - kProbEps), -1.0, 1.0));
    return scale(add(sum(pos), sum(neg)), -1.0 / static_cast<double>(batch));
}

Optimizer::Optimizer(const TrainConfig& cfg, const ModelParameters& shape) : cfg_(cfg) {
    for (const auto* m : shape.arrays()) {
        m_.emplace_back(m->rows, m->cols);
        v_.emplace_back(m->rows, m->cols);
    }
}

void Optimizer::step(ModelParameters& params, const std::vector<Matrix>& grads) {
    auto named = params.named();
    if (named.size() != grads.size()) fail(ErrorKind::invalid_argument, "optimizer: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t a = 0; a < named.size(); ++a) {
        Matrix& p = *named[a].value;
        const Matrix& g = grads[a];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g.data[i] + cfg_.weight_decay * p.data[i];
            if (cfg_.optimizer == OptimizerKind::sgd) {
                p.data[i] -= cfg_.lr * gi;
                continue;
            }
            double& m = m_[a].data[i];
            double& v = v_[a].data[i];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gi;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gi * gi;
            p.data[i] -= cfg_.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
        }
    }
}

TrainingContext::TrainingContext(const HeteroGraph& full, Splits splits, ModelConfig model, TrainConfig train,
                                 std::vector<Triple> held_out)
    : train_graph_(full.with_edges(splits.train)),
      tensors_(make_graph_tensors(train_graph_)),
      splits_(std::move(splits)),
      model_(config_for_graph(std::move(model), full)),
      train_(std::move(train)),
      train_set_(make_triple_set(splits_.train)),
      all_known_(make_triple_set(splits_.train, splits_.valid, splits_.test)),
      source_(train_graph_, train_set_),
      sampler_(train_.sampler, source_),
      held_out_(make_triple_set(held_out)) {
    model_.validate();
    train_.validate();
    if (splits_.train.empty()) fail(ErrorKind::invalid_argument, "training split is empty");
    if (!splits_.valid.empty()) {
        valid_negatives_ = classification_negatives(train_graph_, splits_.valid, all_known_,
                                                    derive_seed(train_.seed, "valid-negatives"));
    }
}

TrainState::TrainState(const TrainingContext& ctx, ModelParameters init)
    : params(std::move(init)), optimizer(ctx.train_config(), params) {}

LossAndGrad loss_and_grad(const ModelParameters& params, const GraphTensors& gt, const ModelConfig& cfg,
                          std::span<const Triple> positives, std::span<const Triple> negatives) {
    Tape tape;
    auto vars = bind_parameters(tape, params, true);
    auto fwd = forward(vars, gt, cfg);
    Var pos = score_triples(fwd.final, vars.relation, positives);
    Var neg = score_triples(fwd.final, vars.relation, negatives);
    Var loss = bce_pair_loss(pos, neg, positives.size());
    LossAndGrad out;
    out.loss = loss.scalar();
    if (!std::isfinite(out.loss)) {
        std::ostringstream os;
        os << "non-finite loss " << out.loss << "; batch:";
        auto dump = [&os](const char* label, std::span<const Triple> ts, const Matrix& scores) {
            os << "\n  " << label << ":";
            for (std::size_t i = 0; i < ts.size(); ++i) {
                os << " (" << ts[i].src << ", " << ts[i].rel << ", " << ts[i].dst << ")=" << scores.data[i];
            }
        };
        dump("positives", positives, pos.value());
        dump("negatives", negatives, neg.value());
        fail(ErrorKind::runtime, os.str());
    }
    tape.backward(loss);
    for (const auto& v : vars.all()) out.grads.push_back(v.grad());
    return out;
}

double loss_value(const ModelParameters& params, const GraphTensors& gt, const ModelConfig& cfg,
                  std::span<const Triple> positives, std::span<const Triple> negatives) {
    Tape tape;
    auto vars = bind_parameters(tape, params, false);
    auto fwd = forward(vars, gt, cfg);
    Var pos = score_triples(fwd.final, vars.relation, positives);
    Var neg = score_triples(fwd.final, vars.relation, negatives);
    return bce_pair_loss(pos, neg, positives.size()).scalar();
}

EpochStats train_epoch(TrainState& state, const TrainingContext& ctx) {
    const auto& cfg = ctx.train_config();
    const auto& train = ctx.splits().train;
    const std::size_t epoch = state.epoch;

    state.snapshot = make_scorer(state.params, ctx.tensors(), ctx.model_config());
    const Scorer& frozen = state.snapshot;
    const TripleScorer scorer = [&frozen](const Triple& t) { return frozen(t); };

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(derive_seed(cfg.seed, "shuffle"), epoch));
    shuffle(order, rng);

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.mu = mu_at(epoch, cfg.sampler);
    double loss_sum = 0.0, neg_score_sum = 0.0;
    std::size_t neg_count = 0, fn_hits = 0;
    std::vector<Triple> positives, negatives;
    std::vector<std::size_t> ids;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        positives.clear();
        ids.clear();
        for (std::size_t i = start; i < end; ++i) {
            positives.push_back(train[order[i]]);
            ids.push_back(order[i]);
        }
        const auto selected = ctx.sampler().select(positives, ids, epoch, scorer);
        negatives.clear();
        for (const auto& s : selected) {
            negatives.push_back(s.corruption.corrupted);
            neg_score_sum += s.score;
            fn_hits += ctx.held_out().contains(s.corruption.corrupted) ? 1 : 0;
        }
        neg_count += selected.size();

        auto lg = loss_and_grad(state.params, ctx.tensors(), ctx.model_config(), positives, negatives);
        loss_sum += lg.loss * static_cast<double>(positives.size());
        state.optimizer.step(state.params, lg.grads);
        ++stats.steps;
    }
    stats.loss = loss_sum / static_cast<double>(train.size());
    stats.mean_neg_score = neg_count ? neg_score_sum / static_cast<double>(neg_count) : 0.0;
    if (ctx.has_held_out()) stats.fn_rate = static_cast<double>(fn_hits) / static_cast<double>(neg_count);
    ++state.epoch;
    return stats;
}

double validation_auc(const Scorer& scorer, const TrainingContext& ctx) {
    const auto& valid = ctx.splits().valid;
    if (valid.empty()) fail(ErrorKind::invalid_argument, "validation split is empty");
    LabeledScores ls;
    for (const auto& t : valid) {
        ls.scores.push_back(scorer(t));
        ls.labels.push_back(1);
    }
    for (const auto& t : ctx.valid_negatives()) {
        ls.scores.push_back(scorer(t));
        ls.labels.push_back(0);
    }
    return roc_auc(ls);
}

FitResult fit(const TrainingContext& ctx, const EpochCallback& on_epoch) {
    const auto& cfg = ctx.train_config();
    TrainState state(ctx, init_parameters(ctx.model_config()));
    FitResult result;
    result.best = state.params;
    result.best_val_auc = -1.0;
    std::size_t since_best = 0;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        auto stats = train_epoch(state, ctx);
        if (!ctx.splits().valid.empty()) {
            const auto scorer = make_scorer(state.params, ctx.tensors(), ctx.model_config());
            stats.val_auc = validation_auc(scorer, ctx);
        }
        result.log.push_back(stats);
        if (on_epoch) on_epoch(stats);
        const double metric = stats.val_auc.value_or(-stats.loss);
        if (result.best_epoch == 0 || metric > result.best_val_auc) {
            result.best_val_auc = metric;
            result.best_epoch = stats.epoch;
            result.best = state.params;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

std::string to_json_line(const EpochStats& s) {
    nlohmann::ordered_json j;
    j["epoch"] = s.epoch;
    j["loss"] = s.loss;
    j["val_auc"] = s.val_auc ? nlohmann::ordered_json(*s.val_auc) : nlohmann::ordered_json(nullptr);
    j["mu"] = s.mu;
    j["mean_neg_score"] = s.mean_neg_score;
    j["fn_rate"] = s.fn_rate ? nlohmann::ordered_json(*s.fn_rate) : nlohmann::ordered_json(nullptr);
    return j.dump();
}

}  // namespace relgnn
