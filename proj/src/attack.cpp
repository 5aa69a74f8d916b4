#include "advgraph/attack.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "advgraph/common.hpp"
#include "advgraph/io.hpp"
#include "advgraph/parallel.hpp"
#include "advgraph/utf8.hpp"

namespace advgraph {

std::map<char32_t, std::vector<char32_t>> load_variant_file(const std::string& path) {
    std::map<char32_t, std::vector<char32_t>> out;
    auto lines = split_lines(read_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty() || lines[i][0] == '#') continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        auto fields = split_fields(lines[i], '\t');
        require(fields.size() == 2, "expected <char><TAB><variants> at ", where);
        std::u32string ch = utf8_decode(fields[0]);
        require(ch.size() == 1, "character field must be a single code point at ", where);
        auto tokens = split_fields(fields[1], ',');
        auto& list = out[ch[0]];
        for (const auto& tok : tokens) {
            require(!tok.empty(), "empty variant at ", where);
            std::u32string v = utf8_decode(tok);
            require(v.size() == 1, "variant must be a single code point at ", where);
            if (std::find(list.begin(), list.end(), v[0]) == list.end()) list.push_back(v[0]);
        }
    }
    return out;
}

namespace {

// Deletion scoring shared by char_importance and attack; conf is the
// true-class confidence of the intact text.
std::vector<std::pair<size_t, double>> rank_by_deletion(const LabeledText& text, double conf,
                                                        const PredictFn& model, size_t& queries) {
    const size_t n = text.chars.size();
    std::vector<std::pair<size_t, double>> scored;
    scored.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        double importance;
        if (n == 1) {
            // Deleting the only character would leave an empty text; score
            // it as the full confidence drop.
            importance = conf;
        } else {
            std::u32string reduced = text.chars;
            reduced.erase(reduced.begin() + static_cast<long>(i));
            Prediction p = model(reduced);
            ++queries;
            importance = conf - p.distribution[static_cast<size_t>(text.label)];
        }
        scored.emplace_back(i, importance);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return scored;
}

} // namespace

std::vector<std::pair<size_t, double>> char_importance(const LabeledText& text,
                                                       const PredictFn& model,
                                                       size_t* query_count_out) {
    require(!text.chars.empty(), "char_importance: empty text");
    size_t queries = 0;
    Prediction full = model(text.chars);
    ++queries;
    require(text.label >= 0 &&
                static_cast<size_t>(text.label) < full.distribution.size(),
            "char_importance: label out of range for model");
    const double conf = full.distribution[static_cast<size_t>(text.label)];
    auto scored = rank_by_deletion(text, conf, model, queries);
    if (query_count_out) *query_count_out = queries;
    return scored;
}

std::vector<char32_t> candidate_variants(char32_t x, const AdversarialGraph& g,
                                         const AttackConfig& config) {
    std::set<char32_t> out;
    if (g.has_node(x)) {
        RelationFilter filter = config.source == CandidateSource::GraphP ? RelationFilter::P
                                : config.source == CandidateSource::GraphG
                                    ? RelationFilter::G
                                    : RelationFilter::Any;
        for (char32_t nb : g.neighbors(x, filter)) out.insert(nb);
    }
    auto it = config.external_variants.find(x);
    if (it != config.external_variants.end())
        for (char32_t v : it->second) out.insert(v);
    out.erase(x);
    return std::vector<char32_t>(out.begin(), out.end());
}

AttackResult attack(const LabeledText& text, const PredictFn& model, const AdversarialGraph& g,
                    const AttackConfig& config) {
    require(config.budget >= 0, "attack: budget must be >= 0");
    require(!text.chars.empty(), "attack: empty text");
    AttackResult result;
    result.original = text;
    result.adversarial = text.chars;

    size_t queries = 0;
    auto query = [&](const std::u32string& chars) {
        Prediction p = model(chars);
        ++queries;
        return p;
    };

    Prediction full = query(text.chars);
    require(text.label >= 0 && static_cast<size_t>(text.label) < full.distribution.size(),
            "attack: label out of range for model");
    result.initial_confidence = full.distribution[static_cast<size_t>(text.label)];
    if (config.budget == 0) {
        result.query_count = queries;
        return result;
    }

    auto ranking = rank_by_deletion(text, result.initial_confidence, model, queries);

    double cur_conf = result.initial_confidence;
    int accepted = 0;
    for (const auto& [pos, importance] : ranking) {
        if (accepted >= config.budget) break;
        const char32_t original_char = text.chars[pos];
        auto candidates = candidate_variants(original_char, g, config);
        if (candidates.empty()) continue;
        double best_conf = cur_conf;
        char32_t best_char = 0;
        int best_label = text.label;
        bool found = false;
        for (char32_t cand : candidates) {
            std::u32string trial = result.adversarial;
            trial[pos] = cand;
            Prediction p = query(trial);
            const double c = p.distribution[static_cast<size_t>(text.label)];
            if (c < best_conf) {
                best_conf = c;
                best_char = cand;
                best_label = p.label;
                found = true;
            }
        }
        if (!found) continue;  // no strictly improving candidate; budget not consumed
        result.adversarial[pos] = best_char;
        result.perturbed_positions.push_back({pos, original_char, best_char});
        result.confidence_trace.push_back(best_conf);
        cur_conf = best_conf;
        ++accepted;
        if (best_label != text.label) {
            result.success = true;
            break;
        }
    }
    result.query_count = queries;
    return result;
}

AttackReport attack_corpus(const Corpus& corpus, const PredictFn& model,
                           const AdversarialGraph& g, const AttackConfig& config, int workers) {
    std::vector<size_t> attackable;
    for (size_t i = 0; i < corpus.texts.size(); ++i) {
        Prediction p = model(corpus.texts[i].chars);
        if (p.label == corpus.texts[i].label) attackable.push_back(i);
    }
    require(!attackable.empty(), "nothing attackable: no correctly classified texts");
    AttackReport report;
    report.results.resize(attackable.size());
    parallel_for(attackable.size(), workers, [&](size_t t) {
        report.results[t] = attack(corpus.texts[attackable[t]], model, g, config);
    });
    return report;
}

void save_attack_report(const AttackReport& report, const std::string& path) {
    std::string out;
    for (const auto& r : report.results) {
        nlohmann::json j;
        j["label"] = r.original.label;
        j["original"] = utf8_encode(r.original.chars);
        j["adversarial"] = utf8_encode(r.adversarial);
        j["success"] = r.success;
        nlohmann::json positions = nlohmann::json::array();
        for (const auto& p : r.perturbed_positions)
            positions.push_back({{"index", p.index},
                                 {"original", utf8_encode(p.original)},
                                 {"replacement", utf8_encode(p.replacement)}});
        j["perturbed_positions"] = positions;
        j["initial_confidence"] = r.initial_confidence;
        j["confidence_trace"] = r.confidence_trace;
        j["query_count"] = r.query_count;
        out += j.dump();
        out += '\n';
    }
    write_file(path, out);
}

AttackReport load_attack_report(const std::string& path) {
    AttackReport report;
    auto lines = split_lines(read_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            fail("malformed attack record at ", where, ": ", e.what());
        }
        AttackResult r;
        r.original.label = j.at("label").get<int>();
        r.original.chars = utf8_decode(j.at("original").get<std::string>());
        r.adversarial = utf8_decode(j.at("adversarial").get<std::string>());
        r.success = j.at("success").get<bool>();
        for (const auto& p : j.at("perturbed_positions")) {
            PerturbedPosition pp;
            pp.index = p.at("index").get<size_t>();
            std::u32string orig = utf8_decode(p.at("original").get<std::string>());
            std::u32string repl = utf8_decode(p.at("replacement").get<std::string>());
            require(orig.size() == 1 && repl.size() == 1, "bad perturbation record at ", where);
            pp.original = orig[0];
            pp.replacement = repl[0];
            r.perturbed_positions.push_back(pp);
        }
        r.initial_confidence = j.at("initial_confidence").get<double>();
        r.confidence_trace = j.at("confidence_trace").get<std::vector<double>>();
        r.query_count = j.at("query_count").get<size_t>();
        report.results.push_back(std::move(r));
    }
    return report;
}

} // namespace advgraph
