#include "relgnn/sampling.hpp"

#include <cmath>

#include "relgnn/error.hpp"

namespace relgnn {

std::string to_string(SamplerStrategy s) {
    switch (s) {
        case SamplerStrategy::random: return "random";
        case SamplerStrategy::self_adversarial: return "self_adversarial";
        case SamplerStrategy::asa: return "asa";
    }
    return "?";
}

std::string to_string(MuSchedule s) {
    switch (s) {
        case MuSchedule::constant: return "constant";
        case MuSchedule::linear: return "linear";
        case MuSchedule::exponential: return "exponential";
    }
    return "?";
}

SamplerStrategy parse_strategy(const std::string& s) {
    if (s == "random") return SamplerStrategy::random;
    if (s == "self_adversarial") return SamplerStrategy::self_adversarial;
    if (s == "asa") return SamplerStrategy::asa;
    fail(ErrorKind::config, "unknown sampler strategy '" + s + "' (random, self_adversarial, asa)");
}

MuSchedule parse_schedule(const std::string& s) {
    if (s == "constant") return MuSchedule::constant;
    if (s == "linear") return MuSchedule::linear;
    if (s == "exponential") return MuSchedule::exponential;
    fail(ErrorKind::config, "unknown mu schedule '" + s + "' (constant, linear, exponential)");
}

void SamplerConfig::validate() const {
    if (pool_size < 1) fail(ErrorKind::config, "sampler.pool_size must be >= 1");
    if (!(mu >= 0.0) || !std::isfinite(mu)) fail(ErrorKind::config, "sampler.mu must be >= 0");
    if (!(rate >= 0.0) || !std::isfinite(rate)) fail(ErrorKind::config, "sampler.rate must be >= 0");
    if (negatives < 1) fail(ErrorKind::config, "train.negatives must be >= 1");
}

Triple replace_endpoint(const Triple& t, Side side, NodeId node) {
    Triple c = t;
    (side == Side::head ? c.src : c.dst) = node;
    return c;
}

bool CorruptionSource::is_valid(const Corruption& c) const {
    const auto& p = c.positive;
    const auto& q = c.corrupted;
    if (q.rel != p.rel) return false;
    if (known_->contains(q)) return false;
    if (c.side == Side::head) {
        return q.dst == p.dst && q.src != p.src && q.src < graph_->num_nodes() &&
               graph_->node_type(q.src) == graph_->node_type(p.src);
    }
    return q.src == p.src && q.dst != p.dst && q.dst < graph_->num_nodes() &&
           graph_->node_type(q.dst) == graph_->node_type(p.dst);
}

std::vector<Corruption> CorruptionSource::enumerate(const Triple& positive, Side side) const {
    const NodeId replaced = side == Side::head ? positive.src : positive.dst;
    std::vector<Corruption> out;
    for (NodeId x : graph_->nodes_of_type(graph_->node_type(replaced))) {
        const Triple q = replace_endpoint(positive, side, x);
        if (x == replaced || known_->contains(q)) continue;
        out.push_back({positive, q, side});
    }
    return out;
}

std::vector<Corruption> CorruptionSource::enumerate(const Triple& positive) const {
    auto out = enumerate(positive, Side::head);
    auto tail = enumerate(positive, Side::tail);
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

bool CorruptionSource::try_side(const Triple& positive, Side side, Rng& rng, Corruption& out) const {
    constexpr int kRejectionTries = 64;
    const NodeId replaced = side == Side::head ? positive.src : positive.dst;
    const auto& pool = graph_->nodes_of_type(graph_->node_type(replaced));
    for (int i = 0; i < kRejectionTries; ++i) {
        const NodeId x = pool[uniform_index(rng, pool.size())];
        const Triple q = replace_endpoint(positive, side, x);
        if (x == replaced || known_->contains(q)) continue;
        out = {positive, q, side};
        return true;
    }
    // Dense neighbourhood: sample exactly from the enumerated valid set.
    auto valid = enumerate(positive, side);
    if (valid.empty()) return false;
    out = valid[uniform_index(rng, valid.size())];
    return true;
}

Corruption CorruptionSource::corrupt_random(const Triple& positive, Rng& rng) const {
    if (positive.src >= graph_->num_nodes() || positive.dst >= graph_->num_nodes()) {
        fail(ErrorKind::invalid_argument, "corrupt_random: positive endpoint out of range");
    }
    const Side first = uniform_index(rng, 2) == 0 ? Side::head : Side::tail;
    const Side second = first == Side::head ? Side::tail : Side::head;
    Corruption c;
    if (try_side(positive, first, rng, c) || try_side(positive, second, rng, c)) return c;
    fail(ErrorKind::runtime, "no valid corruption exists for (" + std::to_string(positive.src) + ", " +
                                 std::to_string(positive.rel) + ", " + std::to_string(positive.dst) +
                                 "): every type-compatible replacement is a known edge");
}

std::vector<Corruption> CorruptionSource::draw_pool(const Triple& positive, std::size_t pool_size, Rng& rng) const {
    if (pool_size < 1) fail(ErrorKind::invalid_argument, "pool size must be >= 1");
    std::vector<Corruption> pool;
    pool.reserve(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) pool.push_back(corrupt_random(positive, rng));
    return pool;
}

std::size_t select_self_adversarial(std::span<const double> pool_scores) {
    if (pool_scores.empty()) fail(ErrorKind::invalid_argument, "selection from an empty pool");
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool_scores.size(); ++i) {
        if (pool_scores[i] > pool_scores[best]) best = i;
    }
    return best;
}

std::size_t select_self_adversarial(std::span<const Corruption> pool, const TripleScorer& scorer) {
    std::vector<double> scores;
    scores.reserve(pool.size());
    for (const auto& c : pool) scores.push_back(scorer(c.corrupted));
    return select_self_adversarial(scores);
}

std::size_t select_asa(double positive_score, std::span<const double> pool_scores, double mu) {
    if (pool_scores.empty()) fail(ErrorKind::invalid_argument, "selection from an empty pool");
    if (!(mu >= 0.0)) fail(ErrorKind::invalid_argument, "mu must be >= 0");
    std::size_t best = 0;
    double best_residual = std::abs(positive_score - pool_scores[0] - mu);
    for (std::size_t i = 1; i < pool_scores.size(); ++i) {
        const double residual = std::abs(positive_score - pool_scores[i] - mu);
        if (residual < best_residual) {
            best = i;
            best_residual = residual;
        }
    }
    return best;
}

std::size_t select_asa(double positive_score, std::span<const Corruption> pool, const TripleScorer& scorer,
                       double mu) {
    std::vector<double> scores;
    scores.reserve(pool.size());
    for (const auto& c : pool) scores.push_back(scorer(c.corrupted));
    return select_asa(positive_score, scores, mu);
}

double mu_at(std::size_t epoch, const SamplerConfig& cfg) {
    if (cfg.rate < 0.0) fail(ErrorKind::invalid_argument, "mu schedule rate must be >= 0");
    const double e = static_cast<double>(epoch);
    switch (cfg.schedule) {
        case MuSchedule::constant: return cfg.mu;
        case MuSchedule::linear: return std::max(0.0, cfg.mu - cfg.rate * e);
        case MuSchedule::exponential: return cfg.mu * std::exp(-cfg.rate * e);
    }
    return cfg.mu;
}

double false_negative_rate(std::span<const Corruption> selected, const TripleSet& held_out) {
    if (selected.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& c : selected) hits += held_out.contains(c.corrupted) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(selected.size());
}

NegativeSampler::NegativeSampler(SamplerConfig cfg, const CorruptionSource& source)
    : cfg_(std::move(cfg)), source_(&source) {
    cfg_.validate();
}

std::vector<Selection> NegativeSampler::select(std::span<const Triple> positives,
                                               std::span<const std::size_t> positive_ids, std::size_t epoch,
                                               const TripleScorer& scorer) const {
    if (positive_ids.size() != positives.size()) {
        fail(ErrorKind::invalid_argument, "select: one id per positive is required");
    }
    const double mu = mu_at(epoch, cfg_);
    std::vector<Selection> out;
    out.reserve(positives.size() * cfg_.negatives);
    std::vector<double> scores;
    for (std::size_t i = 0; i < positives.size(); ++i) {
        Rng rng(derive_seed(cfg_.seed, epoch, positive_ids[i]));
        const double s_pos = cfg_.strategy == SamplerStrategy::asa ? scorer(positives[i]) : 0.0;
        for (std::size_t k = 0; k < cfg_.negatives; ++k) {
            if (cfg_.strategy == SamplerStrategy::random) {
                auto c = source_->corrupt_random(positives[i], rng);
                out.push_back({c, scorer(c.corrupted)});
                continue;
            }
            auto pool = source_->draw_pool(positives[i], cfg_.pool_size, rng);
            scores.clear();
            for (const auto& c : pool) scores.push_back(scorer(c.corrupted));
            const std::size_t pick = cfg_.strategy == SamplerStrategy::asa ? select_asa(s_pos, scores, mu)
                                                                           : select_self_adversarial(scores);
            out.push_back({pool[pick], scores[pick]});
        }
    }
    return out;
}

}  // namespace relgnn
