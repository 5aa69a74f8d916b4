#include "advgraph/advgraph.h"

#include <cstring>
#include <string>

#include "advgraph/attack.hpp"
#include "advgraph/classifier.hpp"
#include "advgraph/common.hpp"
#include "advgraph/graph.hpp"
#include "advgraph/phonetics.hpp"
#include "advgraph/pipeline.hpp"
#include "advgraph/utf8.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
advg_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return ADVG_OK;
    } catch (const advgraph::Error& e) {
        g_last_error = e.what();
        return ADVG_ERROR;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return ADVG_ERROR;
    }
}

advg_status invalid(const char* msg) {
    g_last_error = msg;
    return ADVG_INVALID_ARGUMENT;
}

char32_t single_char(const char* utf8, const char* what) {
    std::u32string s = advgraph::utf8_decode(utf8);
    advgraph::require(s.size() == 1, what, " must be a single character");
    return s[0];
}

void copy_out(const std::string& s, char* buf, size_t buf_size, const char* what) {
    advgraph::require(buf_size >= s.size() + 1, what, " buffer too small (need ", s.size() + 1,
                      " bytes)");
    std::memcpy(buf, s.data(), s.size());
    buf[s.size()] = '\0';
}

} // namespace

struct advg_graph {
    advgraph::AdversarialGraph rep;
};

struct advg_lexicon {
    advgraph::PinyinLexicon rep;
};

struct advg_model {
    advgraph::ModelBundle rep;
};

extern "C" {

const char* advg_version(void) { return "1.0.0"; }

const char* advg_last_error(void) { return g_last_error.c_str(); }

advg_status advg_graph_load(const char* path, advg_graph** out) {
    if (!path || !out) return invalid("advg_graph_load: null argument");
    return guarded([&]() {
        auto* g = new advg_graph{advgraph::load_graph(path)};
        *out = g;
    });
}

void advg_graph_free(advg_graph* g) { delete g; }

size_t advg_graph_node_count(const advg_graph* g) { return g ? g->rep.node_count() : 0; }

size_t advg_graph_edge_count(const advg_graph* g) { return g ? g->rep.edge_count() : 0; }

advg_status advg_graph_neighbors(const advg_graph* g, const char* utf8_char, const char* filter,
                                 char* buf, size_t buf_size, size_t* neighbor_count) {
    if (!g || !utf8_char || !filter || !buf) return invalid("advg_graph_neighbors: null argument");
    return guarded([&]() {
        advgraph::RelationFilter f;
        std::string fs(filter);
        if (fs == "P")
            f = advgraph::RelationFilter::P;
        else if (fs == "G")
            f = advgraph::RelationFilter::G;
        else if (fs == "any")
            f = advgraph::RelationFilter::Any;
        else
            advgraph::fail("filter must be P, G, or any");
        auto neighbors = g->rep.neighbors(single_char(utf8_char, "character"), f);
        std::u32string joined(neighbors.begin(), neighbors.end());
        copy_out(advgraph::utf8_encode(joined), buf, buf_size, "neighbor");
        if (neighbor_count) *neighbor_count = neighbors.size();
    });
}

advg_status advg_lexicon_load(const char* path, advg_lexicon** out) {
    if (!path || !out) return invalid("advg_lexicon_load: null argument");
    return guarded([&]() {
        auto* lex = new advg_lexicon{advgraph::load_pinyin_lexicon(path)};
        *out = lex;
    });
}

void advg_lexicon_free(advg_lexicon* lex) { delete lex; }

advg_status advg_phonetically_similar(const advg_lexicon* lex, const char* utf8_a,
                                      const char* utf8_b, int* out_similar) {
    if (!lex || !utf8_a || !utf8_b || !out_similar)
        return invalid("advg_phonetically_similar: null argument");
    return guarded([&]() {
        *out_similar = advgraph::phonetically_similar(single_char(utf8_a, "character"),
                                                      single_char(utf8_b, "character"), lex->rep)
                           ? 1
                           : 0;
    });
}

advg_status advg_model_load(const char* bundle_dir, advg_model** out) {
    if (!bundle_dir || !out) return invalid("advg_model_load: null argument");
    return guarded([&]() {
        auto* m = new advg_model{advgraph::load_bundle(bundle_dir)};
        *out = m;
    });
}

void advg_model_free(advg_model* m) { delete m; }

int advg_model_class_count(const advg_model* m) { return m ? m->rep.params.class_count : 0; }

advg_status advg_model_predict(const advg_model* m, const char* utf8_text, int* out_label,
                               double* out_confidence, double* out_distribution) {
    if (!m || !utf8_text) return invalid("advg_model_predict: null argument");
    return guarded([&]() {
        advgraph::Prediction p = advgraph::predict(advgraph::utf8_decode(utf8_text), m->rep);
        if (out_label) *out_label = p.label;
        if (out_confidence) *out_confidence = p.confidence;
        if (out_distribution)
            std::memcpy(out_distribution, p.distribution.data(),
                        p.distribution.size() * sizeof(double));
    });
}

advg_status advg_attack_text(const advg_model* m, const advg_graph* g, const char* utf8_text,
                             int true_label, int budget, char* adv_buf, size_t adv_buf_size,
                             int* out_success, size_t* out_perturbations, size_t* out_queries) {
    if (!m || !g || !utf8_text || !adv_buf) return invalid("advg_attack_text: null argument");
    if (budget < 0) return invalid("advg_attack_text: negative budget");
    return guarded([&]() {
        advgraph::LabeledText text{advgraph::utf8_decode(utf8_text), true_label};
        advgraph::AttackConfig config;
        config.budget = budget;
        const advgraph::ModelBundle& bundle = m->rep;
        advgraph::PredictFn model = [&bundle](const std::u32string& chars) {
            return advgraph::predict(chars, bundle);
        };
        advgraph::AttackResult result = advgraph::attack(text, model, g->rep, config);
        copy_out(advgraph::utf8_encode(result.adversarial), adv_buf, adv_buf_size, "adversarial");
        if (out_success) *out_success = result.success ? 1 : 0;
        if (out_perturbations) *out_perturbations = result.perturbed_positions.size();
        if (out_queries) *out_queries = result.query_count;
    });
}

advg_status advg_run_stage(const char* command, const char* config_path,
                           const char* const* overrides, size_t n_overrides) {
    if (!command || !config_path) return invalid("advg_run_stage: null argument");
    return guarded([&]() {
        advgraph::PipelineConfig config = advgraph::PipelineConfig::from_file(config_path);
        for (size_t i = 0; i < n_overrides; ++i) {
            advgraph::require(overrides && overrides[i], "null override");
            config.apply_override(overrides[i]);
        }
        advgraph::run_stage(command, config);
    });
}

} // extern "C"
