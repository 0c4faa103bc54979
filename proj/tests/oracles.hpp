#pragma once

// Naive reference implementations shared by the unit tests and the
// acceptance binary.

#include <cstddef>
#include <vector>

#include "relgnn/eval.hpp"
#include "relgnn/graph.hpp"

namespace oracle {

using relgnn::LabeledScores;

inline double auc(const LabeledScores& ls) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < ls.scores.size(); ++i) {
        if (ls.labels[i] != 1) continue;
        for (std::size_t j = 0; j < ls.scores.size(); ++j) {
            if (ls.labels[j] != 0) continue;
            pairs += 1;
            wins += ls.scores[i] > ls.scores[j] ? 1.0 : ls.scores[i] == ls.scores[j] ? 0.5 : 0.0;
        }
    }
    return wins / pairs;
}

// Position of every item in the stable descending order, by counting.
inline double average_precision(const LabeledScores& ls) {
    const std::size_t n = ls.scores.size();
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t before = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (ls.scores[j] > ls.scores[i] || (ls.scores[j] == ls.scores[i] && j < i)) ++before;
        }
        pos[i] = before + 1;
    }
    // precision at every rank holding a positive, accumulated in rank order
    double total = 0.0, positives = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (pos[i] != k || ls.labels[i] != 1) continue;
            positives += 1;
            double hits = 0.0;
            for (std::size_t j = 0; j < n; ++j) hits += (ls.labels[j] == 1 && pos[j] <= k) ? 1.0 : 0.0;
            total += hits / static_cast<double>(k);
        }
    }
    return total / positives;
}

inline double f1(const LabeledScores& ls, double t) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < ls.scores.size(); ++i) {
        const bool pred = ls.scores[i] >= t;
        tp += pred && ls.labels[i] == 1;
        fp += pred && ls.labels[i] == 0;
        fn += !pred && ls.labels[i] == 1;
    }
    if (tp == 0) return 0.0;
    return 2 * tp / (2 * tp + fp + fn);
}

// Every type-valid corruption of `pos` not in `known`, straight from the
// node list: head replacements first, then tail replacements.
inline std::vector<relgnn::Triple> candidates(const relgnn::HeteroGraph& g, const relgnn::TripleSet& known,
                                              const relgnn::Triple& pos) {
    std::vector<relgnn::Triple> out;
    for (relgnn::NodeId x = 0; x < g.num_nodes(); ++x) {
        if (x != pos.src && g.node_type(x) == g.node_type(pos.src) && !known.contains({x, pos.rel, pos.dst}))
            out.push_back({x, pos.rel, pos.dst});
    }
    for (relgnn::NodeId x = 0; x < g.num_nodes(); ++x) {
        if (x != pos.dst && g.node_type(x) == g.node_type(pos.dst) && !known.contains({pos.src, pos.rel, x}))
            out.push_back({pos.src, pos.rel, x});
    }
    return out;
}

}  // namespace oracle
