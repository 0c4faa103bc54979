#pragma once

#include <string>
#include <vector>

#include "relgnn/checkpoint.hpp"
#include "relgnn/config.hpp"
#include "relgnn/eval.hpp"
#include "relgnn/graph.hpp"
#include "relgnn/training.hpp"

namespace relgnn {

struct Dataset {
    HeteroGraph graph;  // every node; edges = all known positives
    Splits splits;
    std::vector<Triple> held_out;
};

/// Loads data.nodes/data.edges when set, otherwise generates the
/// [synthetic] graph in memory. Splits are cut with a seed derived from the
/// top-level seed, so evaluate and train see the same partition.
Dataset load_dataset(const RunConfig& cfg);

struct GenerateResult {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t held_out = 0;
};

/// Writes nodes.tsv, edges.tsv, heldout.tsv.
GenerateResult run_generate(const RunConfig& cfg, const std::string& out_dir);

struct TrainResult {
    FitResult fit;
    Checkpoint checkpoint;
};

/// Trains, then writes best.ckpt, train_log.jsonl and resolved.cfg to out_dir
/// (skipped when out_dir is empty).
TrainResult run_train(const RunConfig& cfg, const std::string& out_dir);
TrainResult run_train(const RunConfig& cfg, const Dataset& data, const std::string& out_dir);

const std::vector<Triple>& split_edges_named(const Dataset& data, const std::string& split);

MetricsReport evaluate_checkpoint(const RunConfig& cfg, const Dataset& data, const Checkpoint& ckpt);

/// Writes metrics.json to out_dir when non-empty.
MetricsReport run_evaluate(const RunConfig& cfg, const Checkpoint& ckpt, const std::string& out_dir);

std::vector<EntropyRow> diagnose_checkpoint(const Dataset& data, const Checkpoint& ckpt);

/// Writes node_id,layer,in_degree,entropy rows to csv_path.
std::vector<EntropyRow> run_diagnose(const RunConfig& cfg, const Checkpoint& ckpt, const std::string& csv_path);

void write_entropy_csv(const std::vector<EntropyRow>& rows, const std::string& path);

}  // namespace relgnn
