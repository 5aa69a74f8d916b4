#include "advgraph/eval.hpp"

#include <algorithm>

#include "advgraph/common.hpp"

namespace advgraph {

CleanReport clean_eval(const PredictFn& model, const Corpus& corpus) {
    require(!corpus.texts.empty(), "clean_eval: empty corpus");
    CleanReport report;
    report.total = corpus.texts.size();
    double conf_sum = 0.0;
    for (const auto& t : corpus.texts) {
        Prediction p = model(t.chars);
        if (p.label == t.label) {
            ++report.correct;
            conf_sum += p.confidence;
        }
    }
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
    if (report.correct > 0) report.avg_conf = conf_sum / static_cast<double>(report.correct);
    return report;
}

double asr(const AttackReport& report) {
    require(!report.results.empty(), "asr: empty report");
    size_t successes = 0;
    for (const auto& r : report.results)
        if (r.success) ++successes;
    return static_cast<double>(successes) / static_cast<double>(report.results.size());
}

double avg_perturbation(const AttackReport& report, PerturbPopulation population) {
    size_t count = 0;
    size_t total = 0;
    for (const auto& r : report.results) {
        if (population == PerturbPopulation::SuccessesOnly && !r.success) continue;
        ++count;
        total += r.perturbed_positions.size();
    }
    require(count > 0, "avg_perturbation: selected population is empty");
    return static_cast<double>(total) / static_cast<double>(count);
}

double adversarial_similarity(const std::u32string& original, const std::u32string& adversarial,
                              const GlyphModelParams& glyph_params, const GlyphAtlas& atlas,
                              const PinyinLexicon& lex) {
    require(original.size() == adversarial.size(),
            "adversarial_similarity: texts differ in length");
    double total = 0.0;
    size_t changed = 0;
    for (size_t i = 0; i < original.size(); ++i) {
        if (original[i] == adversarial[i]) continue;
        ++changed;
        double phon = phonetic_score(original[i], adversarial[i], lex);
        double glyph = 0.0;
        if (atlas.contains(original[i]) && atlas.contains(adversarial[i]))
            glyph = glyph_similarity(original[i], adversarial[i], glyph_params, atlas);
        total += std::max(phon, glyph);
    }
    if (changed == 0) return 1.0;
    return total / static_cast<double>(changed);
}

namespace {
std::optional<std::vector<double>> mean_pool(const std::u32string& text,
                                             const EmbeddingTable& table) {
    std::vector<double> acc(static_cast<size_t>(table.dim()), 0.0);
    size_t known = 0;
    for (char32_t ch : text) {
        auto id = table.try_token_id(ch);
        if (!id) continue;
        const double* row = table.input_row(*id);
        for (int j = 0; j < table.dim(); ++j) acc[static_cast<size_t>(j)] += row[j];
        ++known;
    }
    if (known == 0) return std::nullopt;
    for (auto& v : acc) v /= static_cast<double>(known);
    return acc;
}
} // namespace

std::optional<double> semantic_similarity_proxy(const std::u32string& original,
                                                const std::u32string& adversarial,
                                                const EmbeddingTable& table) {
    require(!original.empty() && !adversarial.empty(),
            "semantic_similarity_proxy: empty text");
    auto a = mean_pool(original, table);
    auto b = mean_pool(adversarial, table);
    if (!a || !b) return std::nullopt;
    return cosine_similarity(*a, *b);
}

std::vector<std::pair<int, double>> budget_sweep(const Corpus& corpus, const PredictFn& model,
                                                 const AdversarialGraph& g,
                                                 const AttackConfig& base_config,
                                                 const std::vector<int>& budgets, int workers) {
    require(std::is_sorted(budgets.begin(), budgets.end()),
            "budget_sweep: budgets must be sorted ascending");
    std::vector<std::pair<int, double>> out;
    out.reserve(budgets.size());
    for (int budget : budgets) {
        AttackConfig config = base_config;
        config.budget = budget;
        AttackReport report = attack_corpus(corpus, model, g, config, workers);
        out.emplace_back(budget, asr(report));
    }
    return out;
}

double SensitivityDistribution::cdf(double x) const {
    auto it = std::upper_bound(samples.begin(), samples.end(), x);
    return static_cast<double>(it - samples.begin()) / static_cast<double>(samples.size());
}

double SensitivityDistribution::median() const {
    const size_t n = samples.size();
    if (n % 2 == 1) return samples[n / 2];
    return (samples[n / 2 - 1] + samples[n / 2]) / 2.0;
}

SensitivityDistribution sensitivity_distribution(const AttackReport& report) {
    SensitivityDistribution dist;
    for (const auto& r : report.results) {
        double prev = r.initial_confidence;
        for (double conf : r.confidence_trace) {
            dist.samples.push_back(prev - conf);
            prev = conf;
        }
    }
    require(!dist.samples.empty(), "sensitivity_distribution: no accepted perturbations");
    std::sort(dist.samples.begin(), dist.samples.end());
    return dist;
}

RobustnessReport summarize_robustness(const AttackReport& report,
                                      const GlyphModelParams& glyph_params,
                                      const GlyphAtlas& atlas, const PinyinLexicon& lex,
                                      const EmbeddingTable& semantic_table,
                                      PerturbPopulation population) {
    RobustnessReport out;
    out.attacked = report.results.size();
    out.asr = asr(report);
    for (const auto& r : report.results)
        if (r.success) ++out.successes;
    if (population == PerturbPopulation::All || out.successes > 0)
        out.avg_perturbation = avg_perturbation(report, population);

    double adv_sum = 0.0, sem_sum = 0.0, query_sum = 0.0;
    size_t perturbed = 0, sem_count = 0;
    for (const auto& r : report.results) {
        query_sum += static_cast<double>(r.query_count);
        if (r.perturbed_positions.empty()) continue;
        ++perturbed;
        adv_sum += adversarial_similarity(r.original.chars, r.adversarial, glyph_params, atlas,
                                          lex);
        auto sem = semantic_similarity_proxy(r.original.chars, r.adversarial, semantic_table);
        if (sem) {
            sem_sum += *sem;
            ++sem_count;
        }
    }
    if (perturbed > 0) out.mean_adversarial_similarity = adv_sum / static_cast<double>(perturbed);
    if (sem_count > 0) out.mean_semantic_similarity = sem_sum / static_cast<double>(sem_count);
    out.mean_queries = query_sum / static_cast<double>(report.results.size());
    return out;
}

} // namespace advgraph
