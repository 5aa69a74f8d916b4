#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "advgraph/corpus.hpp"
#include "advgraph/graph.hpp"

namespace advgraph {

// Second-order node2vec bias: an unnormalized weight of 1/p for stepping
// back to the previous node, 1 for a candidate adjacent to it, 1/q
// otherwise. Distributions are computed on demand from the graph.
struct TransitionModel {
    const AdversarialGraph* graph = nullptr;
    double p = 1.0;
    double q = 1.0;
};

// Normalized next-step distribution over the neighbors of cur (node ids,
// in neighbor order). prev == nullopt means the first step: uniform.
// Errors if cur has no neighbors.
std::vector<std::pair<int, double>> transition_distribution(const TransitionModel& tm,
                                                            std::optional<int> prev, int cur);

struct WalkSet {
    std::vector<std::vector<int>> sequences;  // node ids
    int walk_length = 0;
    int walks_per_node = 0;
};

// r biased walks of length l from every node. Isolated nodes yield
// singleton walks. Per-(node, walk) derived seeds keep the result
// identical for any worker count.
WalkSet generate_walks(const AdversarialGraph& g, int r, int l, double p, double q, uint64_t seed,
                       int workers = 1);

std::vector<std::u32string> walks_as_token_sequences(const AdversarialGraph& g, const WalkSet& w);
void save_walks(const AdversarialGraph& g, const WalkSet& w, const std::string& path);

// One character sequence per text, order preserved.
std::vector<std::u32string> corpus_to_sequences(const Corpus& corpus);

class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::vector<char32_t> vocabulary, int dim);

    int dim() const { return dim_; }
    size_t vocab_size() const { return vocabulary_.size(); }
    const std::vector<char32_t>& vocabulary() const { return vocabulary_; }

    bool contains(char32_t token) const { return index_.count(token) > 0; }
    int token_id(char32_t token) const;  // error if absent
    std::optional<int> try_token_id(char32_t token) const;

    // Input vectors are the published embedding; output vectors are the
    // context side of SGNS training.
    double* input_row(int id) { return &input_[static_cast<size_t>(id) * dim_]; }
    const double* input_row(int id) const { return &input_[static_cast<size_t>(id) * dim_]; }
    double* output_row(int id) { return &output_[static_cast<size_t>(id) * dim_]; }
    const double* output_row(int id) const { return &output_[static_cast<size_t>(id) * dim_]; }

    std::vector<double> input_vector(char32_t token) const;

private:
    std::vector<char32_t> vocabulary_;
    std::unordered_map<char32_t, int> index_;
    int dim_ = 0;
    std::vector<double> input_;
    std::vector<double> output_;
};

struct SgnsConfig {
    int dim = 64;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double lr = 0.025;
    uint64_t seed = 0;
};

// Skip-gram with negative sampling over token sequences (graph walks or
// corpus text share this trainer). Vocabulary is every token seen, in
// first-appearance order; noise distribution is unigram^0.75. Fixed seed
// reproduces the table bitwise.
EmbeddingTable sgns_train(const std::vector<std::u32string>& sequences, const SgnsConfig& config);

struct SgnsPairGrads {
    double objective = 0.0;
    std::vector<double> d_center;
    std::vector<double> d_context;
    std::vector<std::vector<double>> d_negatives;
};

// objective = log sigma(context . center) + sum_k log sigma(-negative_k . center),
// with analytic gradients of the objective w.r.t. every vector.
SgnsPairGrads sgns_pair_objective_and_grad(const std::vector<double>& center,
                                           const std::vector<double>& context,
                                           const std::vector<std::vector<double>>& negatives);

// Top-k cosine neighbors over input vectors; self excluded, descending
// score, ties by ascending code point.
std::vector<std::pair<char32_t, double>> nearest_embedding_neighbors(const EmbeddingTable& table,
                                                                     char32_t token, int k);

// Embedding file: `<vocab_size> <dim>` then `<token> <v1> ... <vd>` per
// line (input vectors only). A loaded table has zero output vectors.
void save_embedding(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embedding(const std::string& path);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

} // namespace advgraph
