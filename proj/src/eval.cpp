#include "relgnn/eval.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "relgnn/error.hpp"

namespace relgnn {

void LabeledScores::validate() const {
    if (scores.size() != labels.size()) {
        fail(ErrorKind::invalid_argument, "scores and labels differ in length (" + std::to_string(scores.size()) +
                                              " vs " + std::to_string(labels.size()) + ")");
    }
}

namespace {

// Indices sorted by descending score; equal scores keep input order.
std::vector<std::size_t> descending(const std::vector<double>& s) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    return idx;
}

}  // namespace

double roc_auc(const LabeledScores& ls) {
    ls.validate();
    // Rank-sum form with midranks for ties; exact equivalent of the pairwise count.
    std::vector<std::size_t> idx(ls.scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ls.scores[a] < ls.scores[b]; });
    double pos = 0, neg = 0;
    for (int l : ls.labels) (l ? pos : neg) += 1;
    if (pos == 0 || neg == 0) fail(ErrorKind::invalid_argument, "roc_auc needs both positive and negative labels");
    // wins counted in pairs: for each group of equal scores, positives beat all
    // negatives strictly below and tie with negatives in the group.
    double wins2 = 0;  // twice the win count, keeps ties integral
    double neg_below = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        double p = 0, n = 0;
        while (j < idx.size() && ls.scores[idx[j]] == ls.scores[idx[i]]) {
            (ls.labels[idx[j]] ? p : n) += 1;
            ++j;
        }
        wins2 += p * (2 * neg_below + n);
        neg_below += n;
        i = j;
    }
    return wins2 / (2 * pos * neg);
}

double average_precision(const LabeledScores& ls) {
    ls.validate();
    const auto order = descending(ls.scores);
    double total_pos = 0;
    for (int l : ls.labels) total_pos += l ? 1 : 0;
    if (total_pos == 0) fail(ErrorKind::invalid_argument, "average_precision needs at least one positive");
    double hits = 0, ap = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (ls.labels[order[k]]) {
            hits += 1;
            ap += hits / static_cast<double>(k + 1);
        }
    }
    return ap / total_pos;
}

double f1_at(const LabeledScores& ls, double threshold) {
    ls.validate();
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < ls.scores.size(); ++i) {
        const bool predicted = ls.scores[i] >= threshold;
        if (predicted && ls.labels[i]) tp += 1;
        else if (predicted) fp += 1;
        else if (ls.labels[i]) fn += 1;
    }
    if (tp == 0) return 0.0;
    // harmonic mean of precision and recall with a single rounding
    return 2 * tp / (2 * tp + fp + fn);
}

std::vector<RankingCase> filtered_ranking(const TripleScorer& scorer, const HeteroGraph& g,
                                          std::span<const Triple> test_edges, const TripleSet& known_positives) {
    std::vector<RankingCase> cases;
    cases.reserve(test_edges.size() * 2);
    for (const auto& t : test_edges) {
        if (!known_positives.contains(t)) {
            fail(ErrorKind::invalid_argument, "filtered_ranking: test triple missing from the known positives");
        }
        const double s_pos = scorer(t);
        for (Side side : {Side::head, Side::tail}) {
            const NodeId replaced = side == Side::head ? t.src : t.dst;
            RankingCase c{t, side, 0, 1};
            for (NodeId x : g.nodes_of_type(g.node_type(replaced))) {
                if (x == replaced) continue;
                const Triple q = replace_endpoint(t, side, x);
                if (known_positives.contains(q)) continue;
                ++c.candidates;
                if (scorer(q) >= s_pos) ++c.rank;
            }
            if (c.candidates == 0) {
                fail(ErrorKind::runtime, "filtered_ranking: empty candidate set for (" + std::to_string(t.src) +
                                             ", " + std::to_string(t.rel) + ", " + std::to_string(t.dst) + ")");
            }
            cases.push_back(c);
        }
    }
    return cases;
}

double mrr(std::span<const RankingCase> cases) {
    if (cases.empty()) fail(ErrorKind::invalid_argument, "mrr of an empty case list");
    double s = 0;
    for (const auto& c : cases) s += 1.0 / static_cast<double>(c.rank);
    return s / static_cast<double>(cases.size());
}

double hit_at_k(std::span<const RankingCase> cases, std::size_t k) {
    if (cases.empty()) fail(ErrorKind::invalid_argument, "hit_at_k of an empty case list");
    std::size_t n = 0;
    for (const auto& c : cases) n += c.rank <= k ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(cases.size());
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["auc"] = auc;
    j["ap"] = ap;
    j["f1_at_0.5"] = f1;
    j["mrr"] = mrr;
    nlohmann::ordered_json h = nlohmann::ordered_json::object();
    for (const auto& [k, v] : hit) h[std::to_string(k)] = v;
    j["hit"] = h;
    j["n_cases"] = n_cases;
    return j.dump();
}

std::vector<Triple> classification_negatives(const HeteroGraph& g, std::span<const Triple> positives,
                                             const TripleSet& known, std::uint64_t seed) {
    CorruptionSource source(g, known);
    std::vector<Triple> out;
    out.reserve(positives.size());
    for (std::size_t i = 0; i < positives.size(); ++i) {
        Rng rng(derive_seed(seed, i));
        out.push_back(source.corrupt_random(positives[i], rng).corrupted);
    }
    return out;
}

LabeledScores labeled_scores(const TripleScorer& scorer, const HeteroGraph& g, std::span<const Triple> positives,
                             const TripleSet& known, std::uint64_t seed) {
    LabeledScores ls;
    for (const auto& t : positives) {
        ls.scores.push_back(scorer(t));
        ls.labels.push_back(1);
    }
    for (const auto& t : classification_negatives(g, positives, known, seed)) {
        ls.scores.push_back(scorer(t));
        ls.labels.push_back(0);
    }
    return ls;
}

MetricsReport evaluate(const TripleScorer& scorer, const HeteroGraph& g, std::span<const Triple> positives,
                       const TripleSet& known, std::span<const std::size_t> ks, std::uint64_t seed) {
    if (positives.empty()) fail(ErrorKind::invalid_argument, "evaluate: no positive triples");
    MetricsReport r;
    const auto ls = labeled_scores(scorer, g, positives, known, seed);
    r.auc = roc_auc(ls);
    r.ap = average_precision(ls);
    r.f1 = f1_at(ls, 0.5);
    const auto cases = filtered_ranking(scorer, g, positives, known);
    r.mrr = mrr(cases);
    for (auto k : ks) r.hit[k] = hit_at_k(cases, k);
    r.n_cases = cases.size();
    return r;
}

}  // namespace relgnn
