#include <doctest.h>

#include <algorithm>
#include <set>

#include "advgraph/attack.hpp"
#include "advgraph/common.hpp"
#include "advgraph/io.hpp"
#include "advgraph/rng.hpp"
#include "advgraph/utf8.hpp"
#include "test_util.hpp"

using namespace advgraph;

namespace {

Prediction make_prediction(double spam_conf) {
    Prediction p;
    p.distribution = {1.0 - spam_conf, spam_conf};
    p.label = spam_conf >= 0.5 ? 1 : 0;
    p.confidence = std::max(spam_conf, 1.0 - spam_conf);
    return p;
}

// Spam iff the keyword occurs anywhere.
PredictFn keyword_model(char32_t keyword) {
    return [keyword](const std::u32string& chars) {
        bool present = chars.find(keyword) != std::u32string::npos;
        return make_prediction(present ? 0.9 : 0.1);
    };
}

// Spam confidence grows with the number of keyword characters present;
// lets attacks accept several perturbations with a strictly decreasing
// trace.
PredictFn counting_model(const std::set<char32_t>& keywords) {
    return [keywords](const std::u32string& chars) {
        int count = 0;
        for (char32_t c : chars)
            if (keywords.count(c)) ++count;
        double conf = std::min(0.95, 0.30 + 0.20 * count);
        return make_prediction(conf);
    };
}

PredictFn constant_model() {
    return [](const std::u32string&) { return make_prediction(0.8); };
}

// Deterministic pseudo-random model: confidence derived from a content
// hash, so an independent recomputation gives identical scores.
PredictFn hash_model() {
    return [](const std::u32string& chars) {
        uint64_t fp = fingerprint_bytes(utf8_encode(chars));
        double conf = 0.05 + 0.90 * static_cast<double>(fp % 10007) / 10006.0;
        return make_prediction(conf);
    };
}

AdversarialGraph keyword_graph() {
    // keyword U'k' has variants; fillers have none.
    AdversarialGraph g;
    for (char32_t c : {U'k', U'v', U'w', U'f', U'g', U'h'}) g.add_node(c);
    g.add_edge(U'k', U'v', kRelationP);
    g.add_edge(U'k', U'w', kRelationG);
    return g;
}

} // namespace

TEST_CASE("char_importance: constant model gives zero importance and N+1 queries") {
    LabeledText text{U"abcd", 1};
    size_t queries = 0;
    auto ranking = char_importance(text, constant_model(), &queries);
    CHECK(queries == text.chars.size() + 1);
    REQUIRE(ranking.size() == 4);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(ranking[i].first == i);  // tie-break: ascending position
        CHECK(ranking[i].second == doctest::Approx(0.0));
    }
}

TEST_CASE("char_importance: keyword position dominates") {
    LabeledText text{U"afkg", 1};
    auto ranking = char_importance(text, keyword_model(U'k'), nullptr);
    CHECK(ranking[0].first == 2);
    CHECK(ranking[0].second == doctest::Approx(0.8));  // 0.9 -> 0.1
    for (size_t i = 1; i < ranking.size(); ++i) CHECK(ranking[i].second == doctest::Approx(0.0));
}

TEST_CASE("char_importance: length-1 text scores the full confidence without a query") {
    LabeledText text{U"k", 1};
    size_t queries = 0;
    auto ranking = char_importance(text, keyword_model(U'k'), &queries);
    CHECK(queries == 1);
    REQUIRE(ranking.size() == 1);
    CHECK(ranking[0].second == doctest::Approx(0.9));
}

TEST_CASE("char_importance equals brute-force recomputation on short texts") {
    PredictFn model = hash_model();
    Rng rng(3);
    for (int t = 0; t < 30; ++t) {
        size_t len = 2 + rng.next_below(7);
        std::u32string chars;
        for (size_t i = 0; i < len; ++i)
            chars.push_back(static_cast<char32_t>(U'a' + rng.next_below(9)));
        LabeledText text{chars, static_cast<int>(rng.next_below(2))};

        auto ranking = char_importance(text, model, nullptr);

        // Independent recomputation.
        double conf = model(chars).distribution[static_cast<size_t>(text.label)];
        std::vector<std::pair<size_t, double>> expected;
        for (size_t i = 0; i < len; ++i) {
            std::u32string reduced = chars;
            reduced.erase(reduced.begin() + static_cast<long>(i));
            expected.emplace_back(
                i, conf - model(reduced).distribution[static_cast<size_t>(text.label)]);
        }
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        REQUIRE(ranking.size() == expected.size());
        for (size_t i = 0; i < ranking.size(); ++i) {
            CHECK(ranking[i].first == expected[i].first);
            CHECK(ranking[i].second == doctest::Approx(expected[i].second));
        }
    }
}

TEST_CASE("candidate_variants: isolated, filtered, unioned with the external file") {
    AdversarialGraph g = keyword_graph();
    AttackConfig config;
    CHECK(candidate_variants(U'f', g, config).empty());  // isolated node
    CHECK(candidate_variants(U'z', g, config).empty());  // not a node at all

    config.source = CandidateSource::GraphP;
    CHECK(candidate_variants(U'k', g, config) == std::vector<char32_t>{U'v'});
    config.source = CandidateSource::GraphG;
    CHECK(candidate_variants(U'k', g, config) == std::vector<char32_t>{U'w'});
    config.source = CandidateSource::Both;
    CHECK(candidate_variants(U'k', g, config) == std::vector<char32_t>{U'v', U'w'});

    config.external_variants[U'k'] = {U'x', U'v'};
    auto merged = candidate_variants(U'k', g, config);
    // Manual set union: graph {v,w} with file {x,v}.
    CHECK(merged == std::vector<char32_t>{U'v', U'w', U'x'});

    // The character itself never appears among its variants.
    config.external_variants[U'k'].push_back(U'k');
    auto no_self = candidate_variants(U'k', g, config);
    CHECK(std::find(no_self.begin(), no_self.end(), U'k') == no_self.end());
}

TEST_CASE("variant file load: format and dedup") {
    testutil::TempDir dir("attack_varfile");
    write_file(dir.file("v.tsv"), "k\tv,w,v\nm\tn\n");
    auto variants = load_variant_file(dir.file("v.tsv"));
    CHECK(variants[U'k'] == std::vector<char32_t>({U'v', U'w'}));
    CHECK(variants[U'm'] == std::vector<char32_t>({U'n'}));
    write_file(dir.file("bad.tsv"), "k\n");
    CHECK_THROWS_AS(load_variant_file(dir.file("bad.tsv")), Error);
}

TEST_CASE("attack: budget 0 means no perturbation and no success") {
    AdversarialGraph g = keyword_graph();
    AttackConfig config;
    config.budget = 0;
    AttackResult r = attack({U"afkg", 1}, keyword_model(U'k'), g, config);
    CHECK_FALSE(r.success);
    CHECK(r.perturbed_positions.empty());
    CHECK(r.adversarial == U"afkg");
    CHECK(r.query_count == 1);
}

TEST_CASE("attack: keyword model flips with exactly one perturbation") {
    AdversarialGraph g = keyword_graph();
    AttackConfig config;
    config.budget = 4;
    PredictFn model = keyword_model(U'k');
    AttackResult r = attack({U"afkg", 1}, model, g, config);
    CHECK(r.success);
    REQUIRE(r.perturbed_positions.size() == 1);
    CHECK(r.perturbed_positions[0].index == 2);
    CHECK(r.perturbed_positions[0].original == U'k');
    CHECK(r.perturbed_positions[0].replacement == U'v');  // first improving candidate wins ties
    REQUIRE(r.confidence_trace.size() == 1);
    CHECK(r.confidence_trace[0] < r.initial_confidence);
    CHECK(model(r.adversarial).label != 1);  // verified by an extra predict call
}

TEST_CASE("attack: constant model fails with zero accepted perturbations and full accounting") {
    AdversarialGraph g = keyword_graph();
    AttackConfig config;
    config.budget = 2;
    LabeledText text{U"kfkg", 1};
    AttackResult r = attack(text, constant_model(), g, config);
    CHECK_FALSE(r.success);
    CHECK(r.perturbed_positions.empty());
    CHECK(r.confidence_trace.empty());
    // Queries: 1 + N deletions + candidate probes (two 'k' positions with
    // 2 candidates each; 'f' and 'g' have none).
    CHECK(r.query_count == 1 + 4 + 2 * 2);
}

TEST_CASE("attack invariants hold across seeded attacks on the counting model") {
    AdversarialGraph g;
    std::vector<char32_t> keywords{U'j', U'k', U'l'};
    std::vector<char32_t> fillers{U'f', U'g', U'h', U'i'};
    std::vector<char32_t> variants{U'v', U'w', U'x'};
    for (char32_t c : keywords) g.add_node(c);
    for (char32_t c : fillers) g.add_node(c);
    for (char32_t c : variants) g.add_node(c);
    g.add_edge(U'j', U'v', kRelationP);
    g.add_edge(U'k', U'w', kRelationG);
    g.add_edge(U'l', U'x', kRelationP | kRelationG);
    g.add_edge(U'k', U'v', kRelationP);

    std::set<char32_t> kwset(keywords.begin(), keywords.end());
    PredictFn model = counting_model(kwset);

    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::u32string chars;
        size_t len = 3 + rng.next_below(8);
        for (size_t i = 0; i < len; ++i) {
            if (rng.next_below(3) == 0)
                chars.push_back(keywords[rng.next_below(keywords.size())]);
            else
                chars.push_back(fillers[rng.next_below(fillers.size())]);
        }
        LabeledText text{chars, 1};
        if (model(chars).label != 1) continue;  // caller filters to correct inputs

        AttackConfig config;
        config.budget = static_cast<int>(rng.next_below(4));
        AttackResult r = attack(text, model, g, config);

        CHECK(r.perturbed_positions.size() <= static_cast<size_t>(config.budget));
        CHECK(r.confidence_trace.size() == r.perturbed_positions.size());
        double prev = r.initial_confidence;
        for (double c : r.confidence_trace) {
            CHECK(c < prev);
            prev = c;
        }
        // Adversarial text differs exactly at the perturbed positions, and
        // every replacement is a candidate of the replaced character.
        std::set<size_t> touched;
        for (const auto& p : r.perturbed_positions) {
            touched.insert(p.index);
            CHECK(r.original.chars[p.index] == p.original);
            CHECK(r.adversarial[p.index] == p.replacement);
            auto cands = candidate_variants(p.original, g, config);
            CHECK(std::find(cands.begin(), cands.end(), p.replacement) != cands.end());
        }
        for (size_t i = 0; i < chars.size(); ++i) {
            if (!touched.count(i)) CHECK(r.adversarial[i] == chars[i]);
        }
        if (r.success) CHECK(model(r.adversarial).label != text.label);
    }
}

TEST_CASE("attack: budget monotonicity via the greedy prefix property") {
    AdversarialGraph g;
    for (char32_t c : {U'j', U'k', U'f', U'v', U'w'}) g.add_node(c);
    g.add_edge(U'j', U'v', kRelationP);
    g.add_edge(U'k', U'w', kRelationP);
    PredictFn model = counting_model({U'j', U'k'});

    LabeledText text{U"jfkjf", 1};
    REQUIRE(model(text.chars).label == 1);
    bool succeeded_before = false;
    std::vector<PerturbedPosition> prev_positions;
    for (int budget = 0; budget <= 4; ++budget) {
        AttackConfig config;
        config.budget = budget;
        AttackResult r = attack(text, model, g, config);
        if (succeeded_before) CHECK(r.success);
        if (r.success) succeeded_before = true;
        // Greedy prefix: the previous trajectory is a prefix of this one.
        REQUIRE(r.perturbed_positions.size() >= prev_positions.size());
        for (size_t i = 0; i < prev_positions.size(); ++i) {
            CHECK(r.perturbed_positions[i].index == prev_positions[i].index);
            CHECK(r.perturbed_positions[i].replacement == prev_positions[i].replacement);
        }
        prev_positions = r.perturbed_positions;
    }
    CHECK(succeeded_before);
}

TEST_CASE("attack_corpus: filtering, errors, determinism, workers") {
    AdversarialGraph g = keyword_graph();
    PredictFn model = keyword_model(U'k');
    AttackConfig config;
    config.budget = 2;

    Corpus all_wrong;
    all_wrong.texts.push_back({U"kfg", 0});  // model says 1
    all_wrong.texts.push_back({U"ffg", 1});  // model says 0
    CHECK_THROWS_WITH_AS(attack_corpus(all_wrong, model, g, config),
                         doctest::Contains("nothing attackable"), Error);

    Corpus one;
    one.texts.push_back({U"kfg", 1});
    AttackReport single = attack_corpus(one, model, g, config);
    CHECK(single.results.size() == 1);

    Corpus corpus;
    Rng rng(23);
    for (int i = 0; i < 50; ++i) {
        std::u32string chars;
        for (int j = 0; j < 6; ++j)
            chars.push_back(rng.next_below(4) == 0 ? U'k' : U'f');
        bool spam = chars.find(U'k') != std::u32string::npos;
        corpus.texts.push_back({chars, spam ? 1 : 0});
    }
    AttackReport r1 = attack_corpus(corpus, model, g, config, 1);
    AttackReport r2 = attack_corpus(corpus, model, g, config, 1);
    AttackReport r4 = attack_corpus(corpus, model, g, config, 4);
    REQUIRE(r1.results.size() == r2.results.size());
    REQUIRE(r1.results.size() == r4.results.size());
    for (size_t i = 0; i < r1.results.size(); ++i) {
        CHECK(r1.results[i].adversarial == r2.results[i].adversarial);
        CHECK(r1.results[i].query_count == r2.results[i].query_count);
        CHECK(r1.results[i].adversarial == r4.results[i].adversarial);
        CHECK(r1.results[i].success == r4.results[i].success);
    }
}

TEST_CASE("attack report serialization round-trips") {
    testutil::TempDir dir("attack_report");
    AdversarialGraph g = keyword_graph();
    Corpus corpus;
    corpus.texts.push_back({U"kfg", 1});
    corpus.texts.push_back({U"ffg", 0});
    AttackConfig config;
    config.budget = 3;
    AttackReport report = attack_corpus(corpus, keyword_model(U'k'), g, config);
    save_attack_report(report, dir.file("r.jsonl"));
    AttackReport loaded = load_attack_report(dir.file("r.jsonl"));
    REQUIRE(loaded.results.size() == report.results.size());
    for (size_t i = 0; i < report.results.size(); ++i) {
        CHECK(loaded.results[i].original.chars == report.results[i].original.chars);
        CHECK(loaded.results[i].adversarial == report.results[i].adversarial);
        CHECK(loaded.results[i].success == report.results[i].success);
        CHECK(loaded.results[i].initial_confidence ==
              doctest::Approx(report.results[i].initial_confidence));
        CHECK(loaded.results[i].query_count == report.results[i].query_count);
        CHECK(loaded.results[i].perturbed_positions.size() ==
              report.results[i].perturbed_positions.size());
    }
    write_file(dir.file("bad.jsonl"), "{not json\n");
    CHECK_THROWS_AS(load_attack_report(dir.file("bad.jsonl")), Error);
}
