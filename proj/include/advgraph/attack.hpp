#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "advgraph/classifier.hpp"
#include "advgraph/corpus.hpp"
#include "advgraph/graph.hpp"

namespace advgraph {

// Black-box query access: the attacker sees only the Prediction.
using PredictFn = std::function<Prediction(const std::u32string&)>;

enum class CandidateSource { GraphP, GraphG, Both };

struct AttackConfig {
    int budget = 4;
    CandidateSource source = CandidateSource::Both;
    // Extra variants unioned with the graph candidates (external file).
    std::map<char32_t, std::vector<char32_t>> external_variants;
    uint64_t seed = 0;
};

// External variant file: `<char><TAB><variant1>,<variant2>,...` per line.
std::map<char32_t, std::vector<char32_t>> load_variant_file(const std::string& path);

struct PerturbedPosition {
    size_t index = 0;
    char32_t original = 0;
    char32_t replacement = 0;
};

struct AttackResult {
    LabeledText original;
    std::u32string adversarial;
    bool success = false;
    std::vector<PerturbedPosition> perturbed_positions;
    double initial_confidence = 0.0;  // true-class confidence before any perturbation
    std::vector<double> confidence_trace;  // true-class confidence after each accepted perturbation
    size_t query_count = 0;
};

struct AttackReport {
    std::vector<AttackResult> results;
};

// Deletion-based importance: conf(text) minus the true-class confidence
// with position i removed, ranked descending (ties by ascending position).
// Uses one query for the full text plus one per deletion; deleting the
// only character of a length-1 text scores the full confidence without a
// query. query_count_out (optional) receives the number of predict calls.
std::vector<std::pair<size_t, double>> char_importance(const LabeledText& text,
                                                       const PredictFn& model,
                                                       size_t* query_count_out = nullptr);

// Graph neighbors filtered by the configured relation, unioned with the
// external variants, deduplicated, x itself excluded, code-point order.
// A character absent from the graph simply has no graph candidates.
std::vector<char32_t> candidate_variants(char32_t x, const AdversarialGraph& g,
                                         const AttackConfig& config);

// Greedy substitution attack under the perturbation budget. The caller is
// expected to pass a correctly classified text. Accepts, per position in
// importance order, the candidate that minimizes true-class confidence if
// it strictly decreases it; stops on label flip or budget exhaustion.
AttackResult attack(const LabeledText& text, const PredictFn& model, const AdversarialGraph& g,
                    const AttackConfig& config);

// Filters the corpus to correctly classified texts and attacks each one.
// Errors if nothing is attackable.
AttackReport attack_corpus(const Corpus& corpus, const PredictFn& model,
                           const AdversarialGraph& g, const AttackConfig& config,
                           int workers = 1);

// Line-delimited JSON, one record per result.
void save_attack_report(const AttackReport& report, const std::string& path);
AttackReport load_attack_report(const std::string& path);

} // namespace advgraph
