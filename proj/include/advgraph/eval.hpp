#pragma once

#include <optional>
#include <string>
#include <vector>

#include "advgraph/attack.hpp"
#include "advgraph/corpus.hpp"
#include "advgraph/embedding.hpp"
#include "advgraph/glyph.hpp"
#include "advgraph/phonetics.hpp"

namespace advgraph {

struct CleanReport {
    double accuracy = 0.0;
    // Mean confidence over correctly classified texts; absent when nothing
    // was classified correctly.
    std::optional<double> avg_conf;
    size_t total = 0;
    size_t correct = 0;
};

CleanReport clean_eval(const PredictFn& model, const Corpus& corpus);

double asr(const AttackReport& report);

enum class PerturbPopulation { SuccessesOnly, All };

double avg_perturbation(const AttackReport& report, PerturbPopulation population);

// Per perturbed position the similarity is max(phonetic score, glyph
// similarity); the text score is the mean over perturbed positions, or
// 1.0 when the texts are identical. A replacement character missing from
// the atlas contributes a glyph score of 0 (its phonetic score still
// counts). Errors on a length mismatch.
double adversarial_similarity(const std::u32string& original, const std::u32string& adversarial,
                              const GlyphModelParams& glyph_params, const GlyphAtlas& atlas,
                              const PinyinLexicon& lex);

// Cosine between mean-pooled semantic embeddings, skipping OOV rows.
// Absent when either text is entirely OOV.
std::optional<double> semantic_similarity_proxy(const std::u32string& original,
                                                const std::u32string& adversarial,
                                                const EmbeddingTable& table);

// One attack_corpus run per budget with a shared seed.
std::vector<std::pair<int, double>> budget_sweep(const Corpus& corpus, const PredictFn& model,
                                                 const AdversarialGraph& g,
                                                 const AttackConfig& base_config,
                                                 const std::vector<int>& budgets,
                                                 int workers = 1);

// Empirical distribution of per-perturbation confidence drops.
struct SensitivityDistribution {
    std::vector<double> samples;  // ascending

    double cdf(double x) const;
    double median() const;
};

SensitivityDistribution sensitivity_distribution(const AttackReport& report);

struct RobustnessReport {
    double asr = 0.0;
    // Absent when the configured population is empty (e.g. successes-only
    // with no successful attack).
    std::optional<double> avg_perturbation;
    // Similarity means are taken over results with at least one accepted
    // perturbation; absent when there are none.
    std::optional<double> mean_adversarial_similarity;
    std::optional<double> mean_semantic_similarity;
    size_t attacked = 0;
    size_t successes = 0;
    double mean_queries = 0.0;
};

RobustnessReport summarize_robustness(const AttackReport& report,
                                      const GlyphModelParams& glyph_params,
                                      const GlyphAtlas& atlas, const PinyinLexicon& lex,
                                      const EmbeddingTable& semantic_table,
                                      PerturbPopulation population);

} // namespace advgraph
