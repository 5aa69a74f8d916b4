#ifndef ADVGRAPH_ADVGRAPH_H
#define ADVGRAPH_ADVGRAPH_H

/* C API of the adversarial-graph defense toolkit. All functions that can
 * fail return advg_status; on failure a thread-local message is available
 * via advg_last_error(). Strings are UTF-8. Handles are opaque and owned
 * by the caller through the matching _free function. */

#include <stddef.h>

#if defined(_WIN32)
#define ADVG_API __declspec(dllexport)
#else
#define ADVG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum advg_status {
    ADVG_OK = 0,
    ADVG_INVALID_ARGUMENT = 1,
    ADVG_ERROR = 2
} advg_status;

ADVG_API const char* advg_version(void);

/* Message describing the most recent failure on this thread; empty string
 * if the last call succeeded. */
ADVG_API const char* advg_last_error(void);

typedef struct advg_graph advg_graph;
typedef struct advg_lexicon advg_lexicon;
typedef struct advg_model advg_model;

/* ---- adversarial graph ---- */

ADVG_API advg_status advg_graph_load(const char* path, advg_graph** out);
ADVG_API void advg_graph_free(advg_graph* g);
ADVG_API size_t advg_graph_node_count(const advg_graph* g);
ADVG_API size_t advg_graph_edge_count(const advg_graph* g);

/* Neighbors of a single UTF-8 character under a relation filter
 * ("P", "G" or "any"), written as a NUL-terminated UTF-8 string of
 * neighbor characters in code-point order. neighbor_count receives the
 * number of neighbors. Fails if the buffer is too small. */
ADVG_API advg_status advg_graph_neighbors(const advg_graph* g, const char* utf8_char,
                                          const char* filter, char* buf, size_t buf_size,
                                          size_t* neighbor_count);

/* ---- pinyin lexicon ---- */

ADVG_API advg_status advg_lexicon_load(const char* path, advg_lexicon** out);
ADVG_API void advg_lexicon_free(advg_lexicon* lex);
ADVG_API advg_status advg_phonetically_similar(const advg_lexicon* lex, const char* utf8_a,
                                               const char* utf8_b, int* out_similar);

/* ---- classifier bundle ---- */

ADVG_API advg_status advg_model_load(const char* bundle_dir, advg_model** out);
ADVG_API void advg_model_free(advg_model* m);
ADVG_API int advg_model_class_count(const advg_model* m);

/* Classifies a UTF-8 text. out_distribution (optional) must hold
 * class_count doubles. */
ADVG_API advg_status advg_model_predict(const advg_model* m, const char* utf8_text,
                                        int* out_label, double* out_confidence,
                                        double* out_distribution);

/* Greedy substitution attack on one text with the graph as the candidate
 * pool. Writes the adversarial text (NUL-terminated UTF-8) into adv_buf.
 * out_success is 1 if the predicted label flipped within budget. */
ADVG_API advg_status advg_attack_text(const advg_model* m, const advg_graph* g,
                                      const char* utf8_text, int true_label, int budget,
                                      char* adv_buf, size_t adv_buf_size, int* out_success,
                                      size_t* out_perturbations, size_t* out_queries);

/* ---- pipeline stage runner ---- */

/* Runs one pipeline stage (synth-glyphs, train-glyph, build-graph, synth,
 * embed-graph, embed-corpus, train-clf, attack, evaluate, sweep, report)
 * against a config file, applying `key=value` overrides in order. */
ADVG_API advg_status advg_run_stage(const char* command, const char* config_path,
                                    const char* const* overrides, size_t n_overrides);

#ifdef __cplusplus
}
#endif

#endif /* ADVGRAPH_ADVGRAPH_H */
