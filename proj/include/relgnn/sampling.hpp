#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "relgnn/graph.hpp"
#include "relgnn/rng.hpp"

namespace relgnn {

enum class Side { head, tail };

/// A positive triple with exactly one endpoint replaced, relation kept.
struct Corruption {
    Triple positive;
    Triple corrupted;
    Side side = Side::tail;

    friend bool operator==(const Corruption&, const Corruption&) = default;
};

enum class SamplerStrategy { random, self_adversarial, asa };
enum class MuSchedule { constant, linear, exponential };

std::string to_string(SamplerStrategy s);
std::string to_string(MuSchedule s);
SamplerStrategy parse_strategy(const std::string& s);
MuSchedule parse_schedule(const std::string& s);

struct SamplerConfig {
    SamplerStrategy strategy = SamplerStrategy::asa;
    std::size_t pool_size = 10;
    double mu = 0.1;
    MuSchedule schedule = MuSchedule::constant;
    double rate = 0.0;
    std::size_t negatives = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Corruption candidates are restricted to nodes with the same type as the
/// replaced endpoint and filtered against `known` (the training positives).
class CorruptionSource {
public:
    CorruptionSource(const HeteroGraph& g, const TripleSet& known) : graph_(&g), known_(&known) {}

    /// Uniform side, then a uniform valid replacement on that side. Falls
    /// back to the other side only when the chosen side has no valid
    /// replacement at all.
    Corruption corrupt_random(const Triple& positive, Rng& rng) const;

    std::vector<Corruption> draw_pool(const Triple& positive, std::size_t pool_size, Rng& rng) const;

    /// Every valid corruption of `positive` on one side, ascending node id.
    std::vector<Corruption> enumerate(const Triple& positive, Side side) const;
    std::vector<Corruption> enumerate(const Triple& positive) const;

    bool is_valid(const Corruption& c) const;

    const HeteroGraph& graph() const { return *graph_; }
    const TripleSet& known() const { return *known_; }

private:
    bool try_side(const Triple& positive, Side side, Rng& rng, Corruption& out) const;

    const HeteroGraph* graph_;
    const TripleSet* known_;
};

Triple replace_endpoint(const Triple& t, Side side, NodeId node);

using TripleScorer = std::function<double(const Triple&)>;

/// Highest-scored pool element; ties go to the lowest index.
std::size_t select_self_adversarial(std::span<const Corruption> pool, const TripleScorer& scorer);
std::size_t select_self_adversarial(std::span<const double> pool_scores);

/// Pool element minimising |s_pos - s_neg - mu|; ties go to the lowest index.
std::size_t select_asa(double positive_score, std::span<const Corruption> pool, const TripleScorer& scorer,
                       double mu);
std::size_t select_asa(double positive_score, std::span<const double> pool_scores, double mu);

double mu_at(std::size_t epoch, const SamplerConfig& cfg);

/// Fraction of selected corruptions that are true edges withheld from the
/// graph.
double false_negative_rate(std::span<const Corruption> selected, const TripleSet& held_out);

struct Selection {
    Corruption corruption;
    double score = 0.0;  // frozen-scorer probability of the selected negative
};

/// Applies a SamplerConfig to a batch of positives. Each positive draws from
/// its own stream seeded by (sampler seed, epoch, positive index), so the
/// result does not depend on evaluation order.
class NegativeSampler {
public:
    NegativeSampler(SamplerConfig cfg, const CorruptionSource& source);

    std::vector<Selection> select(std::span<const Triple> positives, std::span<const std::size_t> positive_ids,
                                  std::size_t epoch, const TripleScorer& scorer) const;

    const SamplerConfig& config() const { return cfg_; }

private:
    SamplerConfig cfg_;
    const CorruptionSource* source_;
};

}  // namespace relgnn
