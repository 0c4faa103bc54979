#include "relgnn/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "relgnn/error.hpp"
#include "relgnn/rng.hpp"
#include "text_util.hpp"

namespace relgnn {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + path);
    out << text;
    if (!out) fail(ErrorKind::io, "write failed: " + path);
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) fail(ErrorKind::io, std::string(what) + " file not found: " + path);
}

}  // namespace

Dataset load_dataset(const RunConfig& cfg) {
    Dataset d;
    const auto split_seed = derive_seed(cfg.seed, "split");
    if (cfg.data.nodes.empty() && cfg.data.edges.empty()) {
        auto synth = generate_synthetic(cfg.synthetic);
        d.splits = split_edges(synth.graph.edges(), cfg.data.valid_fraction, cfg.data.test_fraction, split_seed);
        d.held_out = std::move(synth.held_out);
        d.graph = std::move(synth.graph);
        return d;
    }
    if (cfg.data.nodes.empty() || cfg.data.edges.empty()) {
        fail(ErrorKind::config, "data.nodes and data.edges must be given together");
    }
    require_file(cfg.data.nodes, "nodes");
    require_file(cfg.data.edges, "edges");
    LoadOptions opts;
    opts.add_reverse = cfg.data.reverse;
    HeteroGraph g = load_graph(cfg.data.nodes, cfg.data.edges, opts);
    if (!cfg.data.heldout.empty()) {
        require_file(cfg.data.heldout, "heldout");
        d.held_out = load_edges(cfg.data.heldout);
    }
    if (cfg.data.valid_edges.empty() != cfg.data.test_edges.empty()) {
        fail(ErrorKind::config, "data.valid_edges and data.test_edges must be given together");
    }
    if (!cfg.data.valid_edges.empty()) {
        require_file(cfg.data.valid_edges, "valid edges");
        require_file(cfg.data.test_edges, "test edges");
        d.splits.train = g.edges();
        d.splits.valid = load_edges(cfg.data.valid_edges);
        d.splits.test = load_edges(cfg.data.test_edges);
        std::vector<Triple> all = d.splits.train;
        all.insert(all.end(), d.splits.valid.begin(), d.splits.valid.end());
        all.insert(all.end(), d.splits.test.begin(), d.splits.test.end());
        d.graph = g.with_edges(std::move(all));
    } else {
        d.splits = split_edges(g.edges(), cfg.data.valid_fraction, cfg.data.test_fraction, split_seed);
        d.graph = std::move(g);
    }
    return d;
}

GenerateResult run_generate(const RunConfig& cfg, const std::string& out_dir) {
    auto synth = generate_synthetic(cfg.synthetic);
    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    save_graph(synth.graph, (dir / "nodes.tsv").string(), (dir / "edges.tsv").string());
    save_edges(synth.held_out, (dir / "heldout.tsv").string());
    return {synth.graph.num_nodes(), synth.graph.num_edges(), synth.held_out.size()};
}

TrainResult run_train(const RunConfig& cfg, const std::string& out_dir) {
    return run_train(cfg, load_dataset(cfg), out_dir);
}

TrainResult run_train(const RunConfig& cfg, const Dataset& data, const std::string& out_dir) {
    TrainingContext ctx(data.graph, data.splits, cfg.model, cfg.train, data.held_out);
    std::ofstream log;
    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        write_text((fs::path(out_dir) / "resolved.cfg").string(), cfg.resolved().to_text());
        log.open((fs::path(out_dir) / "train_log.jsonl").string(), std::ios::binary);
        if (!log) fail(ErrorKind::io, "cannot write training log in " + out_dir);
    }
    TrainResult r;
    r.fit = fit(ctx, [&](const EpochStats& s) {
        if (log.is_open()) log << to_json_line(s) << '\n' << std::flush;
    });
    r.checkpoint = {ctx.model_config(), r.fit.best};
    if (!out_dir.empty()) save_checkpoint(r.checkpoint, (fs::path(out_dir) / "best.ckpt").string());
    return r;
}

const std::vector<Triple>& split_edges_named(const Dataset& data, const std::string& split) {
    if (split == "test") return data.splits.test;
    if (split == "valid") return data.splits.valid;
    if (split == "train") return data.splits.train;
    fail(ErrorKind::config, "unknown split '" + split + "'");
}

MetricsReport evaluate_checkpoint(const RunConfig& cfg, const Dataset& data, const Checkpoint& ckpt) {
    const HeteroGraph train_graph = data.graph.with_edges(data.splits.train);
    ckpt.config.check_graph(train_graph);
    const auto gt = make_graph_tensors(train_graph);
    const Scorer scorer = make_scorer(ckpt.params, gt, ckpt.config);
    const auto known = make_triple_set(data.splits.train, data.splits.valid, data.splits.test);
    const auto& edges = split_edges_named(data, cfg.eval.split);
    return evaluate([&scorer](const Triple& t) { return scorer(t); }, train_graph, edges, known, cfg.eval.hits,
                    cfg.eval.seed);
}

MetricsReport run_evaluate(const RunConfig& cfg, const Checkpoint& ckpt, const std::string& out_dir) {
    const auto report = evaluate_checkpoint(cfg, load_dataset(cfg), ckpt);
    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        write_text((fs::path(out_dir) / "metrics.json").string(), report.to_json() + "\n");
    }
    return report;
}

std::vector<EntropyRow> diagnose_checkpoint(const Dataset& data, const Checkpoint& ckpt) {
    const HeteroGraph train_graph = data.graph.with_edges(data.splits.train);
    ckpt.config.check_graph(train_graph);
    const auto gt = make_graph_tensors(train_graph);
    return attention_entropy(compute_embeddings(ckpt.params, gt, ckpt.config), gt);
}

void write_entropy_csv(const std::vector<EntropyRow>& rows, const std::string& path) {
    std::ostringstream os;
    os << "node_id,layer,in_degree,entropy\n";
    for (const auto& r : rows) {
        os << r.node << ',' << r.layer << ',' << r.in_degree << ',' << text::format_double(r.entropy) << '\n';
    }
    write_text(path, os.str());
}

std::vector<EntropyRow> run_diagnose(const RunConfig& cfg, const Checkpoint& ckpt, const std::string& csv_path) {
    auto rows = diagnose_checkpoint(load_dataset(cfg), ckpt);
    const auto parent = fs::path(csv_path).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
    write_entropy_csv(rows, csv_path);
    return rows;
}

}  // namespace relgnn
