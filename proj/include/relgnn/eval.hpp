#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "relgnn/graph.hpp"
#include "relgnn/sampling.hpp"

namespace relgnn {

struct LabeledScores {
    std::vector<double> scores;
    std::vector<int> labels;  // 1 positive, 0 negative

    void validate() const;
};

/// Mann-Whitney AUC: P(s_pos > s_neg) + P(tie) / 2 over all pos/neg pairs.
double roc_auc(const LabeledScores& ls);
/// Step-wise AP over descending scores; equal scores keep input order.
double average_precision(const LabeledScores& ls);
double f1_at(const LabeledScores& ls, double threshold = 0.5);

struct RankingCase {
    Triple positive;
    Side side = Side::tail;
    std::size_t candidates = 0;
    std::size_t rank = 1;  // 1-based; ties count against the positive
};

/// For each test triple and each side, ranks the triple against every
/// type-compatible corruption not in `known_positives`.
std::vector<RankingCase> filtered_ranking(const TripleScorer& scorer, const HeteroGraph& g,
                                          std::span<const Triple> test_edges, const TripleSet& known_positives);

double mrr(std::span<const RankingCase> cases);
double hit_at_k(std::span<const RankingCase> cases, std::size_t k);

struct MetricsReport {
    double auc = 0.0;
    double ap = 0.0;
    double f1 = 0.0;
    double mrr = 0.0;
    std::map<std::size_t, double> hit;
    std::size_t n_cases = 0;

    /// {"auc":..,"ap":..,"f1_at_0.5":..,"mrr":..,"hit":{"1":..},"n_cases":..}
    std::string to_json() const;
};

/// One corruption per positive, drawn with `seed`, filtered against `known`.
LabeledScores labeled_scores(const TripleScorer& scorer, const HeteroGraph& g, std::span<const Triple> positives,
                             const TripleSet& known, std::uint64_t seed);

std::vector<Triple> classification_negatives(const HeteroGraph& g, std::span<const Triple> positives,
                                             const TripleSet& known, std::uint64_t seed);

MetricsReport evaluate(const TripleScorer& scorer, const HeteroGraph& g, std::span<const Triple> positives,
                       const TripleSet& known, std::span<const std::size_t> ks, std::uint64_t seed);

}  // namespace relgnn
