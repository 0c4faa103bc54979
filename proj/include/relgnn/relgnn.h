#ifndef RELGNN_RELGNN_H
#define RELGNN_RELGNN_H

/* C interface to the relgnn library. Objects are opaque handles owned by the
 * caller and released with the matching *_free function. Every call that can
 * fail returns a relgnn_status; on failure relgnn_last_error() describes the
 * problem (thread-local, valid until the next failing call on that thread).
 * Strings returned through char** out-parameters are released with
 * relgnn_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RELGNN_BUILDING)
#    define RELGNN_API __declspec(dllexport)
#  else
#    define RELGNN_API __declspec(dllimport)
#  endif
#else
#  define RELGNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum relgnn_status {
    RELGNN_OK = 0,
    RELGNN_ERR_INVALID_ARGUMENT = 1,
    RELGNN_ERR_IO = 2,
    RELGNN_ERR_PARSE = 3,
    RELGNN_ERR_CONFIG = 4,
    RELGNN_ERR_RUNTIME = 5,
    RELGNN_ERR_INTERNAL = 6
} relgnn_status;

typedef struct relgnn_config relgnn_config;
typedef struct relgnn_graph relgnn_graph;
typedef struct relgnn_model relgnn_model;

RELGNN_API const char* relgnn_version(void);
RELGNN_API const char* relgnn_last_error(void);
RELGNN_API const char* relgnn_status_name(relgnn_status status);
RELGNN_API void relgnn_string_free(char* s);

/* --- configuration ------------------------------------------------------ */

RELGNN_API relgnn_status relgnn_config_new(relgnn_config** out);
RELGNN_API relgnn_status relgnn_config_load(const char* path, relgnn_config** out);
/* Assigns "section.key" (or a top-level key such as "seed"). Unknown keys
 * are rejected when the configuration is next resolved. */
RELGNN_API relgnn_status relgnn_config_set(relgnn_config* cfg, const char* key, const char* value);
/* Resolved value of a key, defaults expanded. */
RELGNN_API relgnn_status relgnn_config_get(const relgnn_config* cfg, const char* key, char** value);
/* The fully resolved configuration as key=value text. */
RELGNN_API relgnn_status relgnn_config_resolved_text(const relgnn_config* cfg, char** text);
RELGNN_API void relgnn_config_free(relgnn_config* cfg);

/* --- graphs ------------------------------------------------------------- */

RELGNN_API relgnn_status relgnn_graph_load(const char* nodes_path, const char* edges_path, int add_reverse,
                                           relgnn_graph** out);
RELGNN_API relgnn_status relgnn_graph_save(const relgnn_graph* g, const char* nodes_path, const char* edges_path);
RELGNN_API size_t relgnn_graph_num_nodes(const relgnn_graph* g);
RELGNN_API size_t relgnn_graph_num_edges(const relgnn_graph* g);
RELGNN_API size_t relgnn_graph_num_relations(const relgnn_graph* g);
/* Writes up to `capacity` sources of edges (u, r, v) in ascending order and
 * the full count to *count. */
RELGNN_API relgnn_status relgnn_graph_in_neighbors(const relgnn_graph* g, uint32_t v, uint32_t r, uint32_t* out,
                                                   size_t capacity, size_t* count);
RELGNN_API void relgnn_graph_free(relgnn_graph* g);

/* --- commands ----------------------------------------------------------- */

/* Writes nodes.tsv, edges.tsv and heldout.tsv for the [synthetic] section. */
RELGNN_API relgnn_status relgnn_generate(const relgnn_config* cfg, const char* out_dir);
/* Writes best.ckpt, train_log.jsonl and resolved.cfg. */
RELGNN_API relgnn_status relgnn_train(const relgnn_config* cfg, const char* out_dir);

RELGNN_API relgnn_status relgnn_model_load(const char* checkpoint_path, relgnn_model** out);
RELGNN_API size_t relgnn_model_num_parameters(const relgnn_model* m);
RELGNN_API void relgnn_model_free(relgnn_model* m);

/* Metrics JSON for eval.split; also written to <out_dir>/metrics.json when
 * out_dir is non-NULL. */
RELGNN_API relgnn_status relgnn_evaluate(const relgnn_config* cfg, const relgnn_model* m, const char* out_dir,
                                         char** metrics_json);
/* Per-node attention entropy CSV. */
RELGNN_API relgnn_status relgnn_diagnose(const relgnn_config* cfg, const relgnn_model* m, const char* csv_path,
                                         size_t* rows);
/* Scores n triples (src, rel, dst laid out consecutively) with message
 * passing over graph g. */
RELGNN_API relgnn_status relgnn_model_score(const relgnn_model* m, const relgnn_graph* g, const uint32_t* triples,
                                            size_t n, double* scores);

#ifdef __cplusplus
}
#endif

#endif /* RELGNN_RELGNN_H */
