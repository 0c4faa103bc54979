#include "relgnn/relgnn.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "relgnn/checkpoint.hpp"
#include "relgnn/config.hpp"
#include "relgnn/error.hpp"
#include "relgnn/graph.hpp"
#include "relgnn/pipeline.hpp"

struct relgnn_config {
    relgnn::KeyValueConfig kv;
};

struct relgnn_graph {
    relgnn::HeteroGraph graph;
};

struct relgnn_model {
    relgnn::Checkpoint ckpt;
};

namespace {

thread_local std::string last_error;

relgnn_status to_status(relgnn::ErrorKind k) {
    switch (k) {
        case relgnn::ErrorKind::invalid_argument: return RELGNN_ERR_INVALID_ARGUMENT;
        case relgnn::ErrorKind::io: return RELGNN_ERR_IO;
        case relgnn::ErrorKind::parse: return RELGNN_ERR_PARSE;
        case relgnn::ErrorKind::config: return RELGNN_ERR_CONFIG;
        case relgnn::ErrorKind::runtime: return RELGNN_ERR_RUNTIME;
    }
    return RELGNN_ERR_INTERNAL;
}

template <typename F>
relgnn_status guarded(F&& f) {
    try {
        f();
        return RELGNN_OK;
    } catch (const relgnn::Error& e) {
        last_error = e.what();
        return to_status(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return RELGNN_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return RELGNN_ERR_INTERNAL;
    }
}

relgnn_status null_arg(const char* what) {
    last_error = std::string("null argument: ") + what;
    return RELGNN_ERR_INVALID_ARGUMENT;
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

}  // namespace

extern "C" {

const char* relgnn_version(void) { return "0.1.0"; }

const char* relgnn_last_error(void) { return last_error.c_str(); }

const char* relgnn_status_name(relgnn_status status) {
    switch (status) {
        case RELGNN_OK: return "ok";
        case RELGNN_ERR_INVALID_ARGUMENT: return "invalid argument";
        case RELGNN_ERR_IO: return "io error";
        case RELGNN_ERR_PARSE: return "parse error";
        case RELGNN_ERR_CONFIG: return "config error";
        case RELGNN_ERR_RUNTIME: return "runtime error";
        case RELGNN_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

void relgnn_string_free(char* s) { std::free(s); }

relgnn_status relgnn_config_new(relgnn_config** out) {
    if (!out) return null_arg("out");
    return guarded([&] { *out = new relgnn_config(); });
}

relgnn_status relgnn_config_load(const char* path, relgnn_config** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new relgnn_config{relgnn::KeyValueConfig::load(path)}; });
}

relgnn_status relgnn_config_set(relgnn_config* cfg, const char* key, const char* value) {
    if (!cfg) return null_arg("cfg");
    if (!key || !value) return null_arg("key/value");
    return guarded([&] { cfg->kv.set(key, value); });
}

relgnn_status relgnn_config_get(const relgnn_config* cfg, const char* key, char** value) {
    if (!cfg) return null_arg("cfg");
    if (!key || !value) return null_arg("key/value");
    return guarded([&] {
        const auto resolved = relgnn::RunConfig::from(cfg->kv).resolved();
        auto v = resolved.get(key);
        if (!v) relgnn::fail(relgnn::ErrorKind::config, std::string("unknown config key '") + key + "'");
        *value = dup(*v);
    });
}

relgnn_status relgnn_config_resolved_text(const relgnn_config* cfg, char** text) {
    if (!cfg) return null_arg("cfg");
    if (!text) return null_arg("text");
    return guarded([&] { *text = dup(relgnn::RunConfig::from(cfg->kv).resolved().to_text()); });
}

void relgnn_config_free(relgnn_config* cfg) { delete cfg; }

relgnn_status relgnn_graph_load(const char* nodes_path, const char* edges_path, int add_reverse,
                                relgnn_graph** out) {
    if (!nodes_path || !edges_path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] {
        relgnn::LoadOptions opts;
        opts.add_reverse = add_reverse != 0;
        *out = new relgnn_graph{relgnn::load_graph(nodes_path, edges_path, opts)};
    });
}

relgnn_status relgnn_graph_save(const relgnn_graph* g, const char* nodes_path, const char* edges_path) {
    if (!g) return null_arg("g");
    if (!nodes_path || !edges_path) return null_arg("path");
    return guarded([&] { relgnn::save_graph(g->graph, nodes_path, edges_path); });
}

size_t relgnn_graph_num_nodes(const relgnn_graph* g) { return g ? g->graph.num_nodes() : 0; }
size_t relgnn_graph_num_edges(const relgnn_graph* g) { return g ? g->graph.num_edges() : 0; }
size_t relgnn_graph_num_relations(const relgnn_graph* g) { return g ? g->graph.num_relations() : 0; }

relgnn_status relgnn_graph_in_neighbors(const relgnn_graph* g, uint32_t v, uint32_t r, uint32_t* out,
                                        size_t capacity, size_t* count) {
    if (!g) return null_arg("g");
    if (!count) return null_arg("count");
    if (!out && capacity > 0) return null_arg("out");
    return guarded([&] {
        auto nb = g->graph.in_neighbors(v, r);
        *count = nb.size();
        for (size_t i = 0; i < nb.size() && i < capacity; ++i) out[i] = nb[i];
    });
}

void relgnn_graph_free(relgnn_graph* g) { delete g; }

relgnn_status relgnn_generate(const relgnn_config* cfg, const char* out_dir) {
    if (!cfg) return null_arg("cfg");
    if (!out_dir) return null_arg("out_dir");
    return guarded([&] { relgnn::run_generate(relgnn::RunConfig::from(cfg->kv), out_dir); });
}

relgnn_status relgnn_train(const relgnn_config* cfg, const char* out_dir) {
    if (!cfg) return null_arg("cfg");
    if (!out_dir) return null_arg("out_dir");
    return guarded([&] { relgnn::run_train(relgnn::RunConfig::from(cfg->kv), out_dir); });
}

relgnn_status relgnn_model_load(const char* checkpoint_path, relgnn_model** out) {
    if (!checkpoint_path) return null_arg("checkpoint_path");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new relgnn_model{relgnn::load_checkpoint(checkpoint_path)}; });
}

size_t relgnn_model_num_parameters(const relgnn_model* m) { return m ? m->ckpt.params.count() : 0; }

void relgnn_model_free(relgnn_model* m) { delete m; }

relgnn_status relgnn_evaluate(const relgnn_config* cfg, const relgnn_model* m, const char* out_dir,
                              char** metrics_json) {
    if (!cfg) return null_arg("cfg");
    if (!m) return null_arg("m");
    return guarded([&] {
        const auto report = relgnn::run_evaluate(relgnn::RunConfig::from(cfg->kv), m->ckpt, out_dir ? out_dir : "");
        if (metrics_json) *metrics_json = dup(report.to_json());
    });
}

relgnn_status relgnn_diagnose(const relgnn_config* cfg, const relgnn_model* m, const char* csv_path,
                              size_t* rows) {
    if (!cfg) return null_arg("cfg");
    if (!m) return null_arg("m");
    if (!csv_path) return null_arg("csv_path");
    return guarded([&] {
        const auto r = relgnn::run_diagnose(relgnn::RunConfig::from(cfg->kv), m->ckpt, csv_path);
        if (rows) *rows = r.size();
    });
}

relgnn_status relgnn_model_score(const relgnn_model* m, const relgnn_graph* g, const uint32_t* triples, size_t n,
                                 double* scores) {
    if (!m) return null_arg("m");
    if (!g) return null_arg("g");
    if (n > 0 && (!triples || !scores)) return null_arg("triples/scores");
    return guarded([&] {
        m->ckpt.config.check_graph(g->graph);
        const auto gt = relgnn::make_graph_tensors(g->graph);
        const auto scorer = relgnn::make_scorer(m->ckpt.params, gt, m->ckpt.config);
        for (size_t i = 0; i < n; ++i) {
            const relgnn::Triple t{triples[3 * i], triples[3 * i + 1], triples[3 * i + 2]};
            if (t.src >= g->graph.num_nodes() || t.dst >= g->graph.num_nodes() ||
                t.rel >= g->graph.num_relations()) {
                relgnn::fail(relgnn::ErrorKind::invalid_argument, "triple " + std::to_string(i) + " out of range");
            }
            scores[i] = scorer(t);
        }
    });
}

}  // extern "C"
