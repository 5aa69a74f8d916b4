#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advgraph/corpus.hpp"
#include "advgraph/embedding.hpp"

namespace advgraph {

// Convolutional sequence encoder: per filter width a bank of 1-D filters
// over the embedded character sequence, ReLU, then max-over-time pooling.
// Output dimension is widths * filters_per_width.
struct EncoderConfig {
    std::vector<int> filter_widths{2, 3, 4};
    int filters_per_width = 32;

    int output_dim() const {
        return static_cast<int>(filter_widths.size()) * filters_per_width;
    }
};

struct UnimodalEncoderParams {
    EncoderConfig config;
    int embed_dim = 0;
    // filters[w] is [filters_per_width][width][embed_dim] flattened.
    std::vector<std::vector<double>> filters;
    std::vector<std::vector<double>> biases;
};

struct ClassifierParams {
    int class_count = 0;
    std::optional<UnimodalEncoderParams> graph_encoder;     // branch phi^(g)
    std::optional<UnimodalEncoderParams> semantic_encoder;  // branch phi^(s)
    std::vector<double> head_w;  // [class_count][fused_dim]
    std::vector<double> head_b;  // [class_count]

    int fused_dim() const;
};

struct Prediction {
    int label = 0;
    double confidence = 0.0;
    std::vector<double> distribution;
};

// Embeds the sequence (unknown characters map to a zero row, sequences
// shorter than the largest filter width are right-padded with zero rows)
// and applies the encoder. Errors on an empty sequence.
std::vector<double> encode(const std::u32string& chars, const EmbeddingTable& table,
                           const UnimodalEncoderParams& enc);

// Concatenation, graph branch first. Either side may be empty (ablation).
std::vector<double> fuse(const std::vector<double>& graph_vec,
                         const std::vector<double>& semantic_vec);

// Softmax head over the fused vector, stabilized by max-subtraction.
// Argmax ties resolve to the lowest class id.
Prediction classify(const std::vector<double>& fused, const ClassifierParams& params);

// Frozen embedding tables plus classifier parameters. A branch without an
// encoder contributes nothing to the fused representation.
struct ModelBundle {
    std::optional<EmbeddingTable> graph_table;
    std::optional<EmbeddingTable> semantic_table;
    ClassifierParams params;
};

Prediction predict(const std::u32string& chars, const ModelBundle& bundle);

struct ClassifierTrainConfig {
    EncoderConfig encoder;
    int class_count = 2;
    bool use_graph = true;
    bool use_semantic = true;
    double lr = 0.1;
    int epochs = 20;
    int batch = 32;
    uint64_t seed = 0;
};

struct ClassifierTrainStats {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> epoch_batch_mean_loss;
};

// Cross-entropy mini-batch SGD over the softmax head and both encoders.
// Embedding tables are read-only throughout. Deterministic per seed.
ClassifierParams train_classifier(const Corpus& train, const EmbeddingTable* graph_table,
                                  const EmbeddingTable* semantic_table,
                                  const ClassifierTrainConfig& config,
                                  ClassifierTrainStats* stats = nullptr);

// Flat-parameter view (all encoder filters and biases, then head) used by
// the trainer and gradient checks.
std::vector<double> flatten_classifier_params(const ClassifierParams& params);
ClassifierParams unflatten_classifier_params(const ClassifierParams& reference,
                                             const std::vector<double>& flat);

// Cross-entropy of one example with analytic gradients w.r.t. every
// parameter in the flat layout.
double classifier_loss_and_grad(const ClassifierParams& params, const EmbeddingTable* graph_table,
                                const EmbeddingTable* semantic_table, const LabeledText& example,
                                std::vector<double>* grad_out);

void save_classifier_params(const ClassifierParams& params, const std::string& path);
ClassifierParams load_classifier_params(const std::string& path);

// Model bundle directory: embedding files, classifier parameter file, and
// a manifest recording dimensions, class count, and content fingerprints.
void save_bundle(const ModelBundle& bundle, const std::string& dir);
ModelBundle load_bundle(const std::string& dir);

} // namespace advgraph
