#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "advgraph/common.hpp"
#include "advgraph/embedding.hpp"
#include "advgraph/io.hpp"
#include "advgraph/rng.hpp"
#include "advgraph/utf8.hpp"
#include "test_util.hpp"

using namespace advgraph;

namespace {

AdversarialGraph path_graph_abc() {
    AdversarialGraph g;
    g.add_node(U'a');
    g.add_node(U'b');
    g.add_node(U'c');
    g.add_edge(U'a', U'b', kRelationP);
    g.add_edge(U'b', U'c', kRelationP);
    return g;
}

AdversarialGraph random_graph(int n, double edge_prob, uint64_t seed) {
    AdversarialGraph g;
    std::vector<char32_t> chars;
    for (int i = 0; i < n; ++i) {
        chars.push_back(static_cast<char32_t>(0x4E00 + i));
        g.add_node(chars.back());
    }
    Rng rng(seed);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.next_double() < edge_prob) g.add_edge(chars[i], chars[j], kRelationP);
    return g;
}

// Exact Eq.-style full-softmax walk objective on a tiny vocabulary:
// sum over (center, context-in-window) pairs of log softmax(ctx | center),
// with the output vectors as the softmax weights.
double full_softmax_objective(const EmbeddingTable& t,
                              const std::vector<std::u32string>& sequences, int window) {
    double total = 0.0;
    const int d = t.dim();
    for (const auto& seq : sequences) {
        const int n = static_cast<int>(seq.size());
        for (int i = 0; i < n; ++i) {
            int center = t.token_id(seq[static_cast<size_t>(i)]);
            for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j) {
                if (j == i) continue;
                int context = t.token_id(seq[static_cast<size_t>(j)]);
                double denom = 0.0, num = 0.0;
                for (size_t v = 0; v < t.vocab_size(); ++v) {
                    double dot = 0.0;
                    for (int k = 0; k < d; ++k)
                        dot += t.input_row(center)[k] * t.output_row(static_cast<int>(v))[k];
                    denom += std::exp(dot);
                    if (static_cast<int>(v) == context) num = dot;
                }
                total += num - std::log(denom);
            }
        }
    }
    return total;
}

} // namespace

TEST_CASE("transition_distribution: uniform when p=q=1 and on the first step") {
    AdversarialGraph g = path_graph_abc();
    TransitionModel tm{&g, 1.0, 1.0};
    auto first = transition_distribution(tm, std::nullopt, g.node_id(U'b'));
    REQUIRE(first.size() == 2);
    CHECK(first[0].second == doctest::Approx(0.5));
    CHECK(first[1].second == doctest::Approx(0.5));
    auto biased = transition_distribution(tm, g.node_id(U'a'), g.node_id(U'b'));
    for (const auto& [node, prob] : biased) CHECK(prob == doctest::Approx(0.5));
}

TEST_CASE("transition_distribution: path graph hand-normalized example") {
    // a-b-c, prev=a, cur=b, p=2, q=0.5: weights {a: 0.5, c: 2.0},
    // probabilities {a: 0.2, c: 0.8}.
    AdversarialGraph g = path_graph_abc();
    TransitionModel tm{&g, 2.0, 0.5};
    auto dist = transition_distribution(tm, g.node_id(U'a'), g.node_id(U'b'));
    REQUIRE(dist.size() == 2);
    std::map<int, double> by_node(dist.begin(), dist.end());
    CHECK(by_node[g.node_id(U'a')] == doctest::Approx(0.2));
    CHECK(by_node[g.node_id(U'c')] == doctest::Approx(0.8));
}

TEST_CASE("transition_distribution: triangle graph distance classification") {
    AdversarialGraph g;
    g.add_node(U'a');
    g.add_node(U'b');
    g.add_node(U'c');
    g.add_edge(U'a', U'b', kRelationP);
    g.add_edge(U'b', U'c', kRelationP);
    g.add_edge(U'a', U'c', kRelationP);
    TransitionModel tm{&g, 4.0, 0.25};
    auto dist = transition_distribution(tm, g.node_id(U'a'), g.node_id(U'b'));
    std::map<int, double> by_node(dist.begin(), dist.end());
    // neighbor a: returns to prev, weight 1/p; neighbor c: adjacent to a, weight 1.
    const double wa = 1.0 / 4.0, wc = 1.0;
    CHECK(by_node[g.node_id(U'a')] == doctest::Approx(wa / (wa + wc)));
    CHECK(by_node[g.node_id(U'c')] == doctest::Approx(wc / (wa + wc)));
}

TEST_CASE("transition_distribution matches brute-force weights on random graphs") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed + 1000);
        int n = 3 + static_cast<int>(rng.next_below(10));
        AdversarialGraph g = random_graph(n, 0.4, seed);
        double p = 0.25 + rng.next_double() * 3.0;
        double q = 0.25 + rng.next_double() * 3.0;
        TransitionModel tm{&g, p, q};
        for (int cur = 0; cur < n; ++cur) {
            const auto& nbrs = g.neighbor_ids(cur);
            if (nbrs.empty()) {
                CHECK_THROWS_AS(transition_distribution(tm, std::nullopt, cur), Error);
                continue;
            }
            for (int prev : nbrs) {
                auto dist = transition_distribution(tm, prev, cur);
                double total_weight = 0.0;
                std::map<int, double> weights;
                for (int nb : nbrs) {
                    double w = nb == prev ? 1.0 / p : (g.has_edge(nb, prev) ? 1.0 : 1.0 / q);
                    weights[nb] = w;
                    total_weight += w;
                }
                double sum = 0.0;
                for (const auto& [node, prob] : dist) {
                    CHECK(std::fabs(prob - weights[node] / total_weight) <= 1e-12);
                    sum += prob;
                }
                CHECK(std::fabs(sum - 1.0) <= 1e-12);
            }
        }
    }
}

TEST_CASE("generate_walks: isolated nodes give singleton walks; 2-node path alternates") {
    AdversarialGraph isolated;
    isolated.add_node(U'a');
    isolated.add_node(U'b');
    WalkSet ws = generate_walks(isolated, 3, 5, 1.0, 1.0, 7);
    REQUIRE(ws.sequences.size() == 6);
    for (const auto& seq : ws.sequences) CHECK(seq.size() == 1);

    AdversarialGraph pair;
    pair.add_node(U'a');
    pair.add_node(U'b');
    pair.add_edge(U'a', U'b', kRelationP);
    WalkSet walks = generate_walks(pair, 2, 6, 1.0, 1.0, 7);
    for (const auto& seq : walks.sequences) {
        REQUIRE(seq.size() == 6);
        for (size_t i = 1; i < seq.size(); ++i) CHECK(seq[i] != seq[i - 1]);
    }
}

TEST_CASE("generate_walks: start nodes, adjacency of consecutive nodes, determinism, workers") {
    AdversarialGraph g = random_graph(9, 0.35, 3);
    WalkSet a = generate_walks(g, 4, 12, 2.0, 0.5, 11, 1);
    WalkSet b = generate_walks(g, 4, 12, 2.0, 0.5, 11, 4);
    CHECK(a.sequences == b.sequences);  // worker count must not change walks
    for (size_t node = 0; node < g.node_count(); ++node) {
        for (int w = 0; w < 4; ++w) {
            const auto& seq = a.sequences[node * 4 + static_cast<size_t>(w)];
            REQUIRE(!seq.empty());
            CHECK(seq[0] == static_cast<int>(node));
            for (size_t i = 1; i < seq.size(); ++i)
                CHECK(g.has_edge(seq[i - 1], seq[i]));
        }
    }
}

TEST_CASE("empirical next-step frequencies approach the exact distribution") {
    // Fixed 5-node graph; 100,000 steps; frequencies within 0.02.
    AdversarialGraph g;
    for (int i = 0; i < 5; ++i) g.add_node(static_cast<char32_t>(U'a' + i));
    auto ch = [&](int i) { return static_cast<char32_t>(U'a' + i); };
    g.add_edge(ch(0), ch(1), kRelationP);
    g.add_edge(ch(0), ch(2), kRelationP);
    g.add_edge(ch(1), ch(2), kRelationP);
    g.add_edge(ch(2), ch(3), kRelationP);
    g.add_edge(ch(3), ch(4), kRelationP);
    g.add_edge(ch(4), ch(0), kRelationP);
    TransitionModel tm{&g, 2.0, 0.5};

    // Count (prev, cur) -> next frequencies along one long deterministic walk.
    Rng rng(13);
    std::map<std::pair<int, int>, std::map<int, int>> counts;
    std::map<std::pair<int, int>, int> totals;
    int prev = 0;
    int cur = 1;
    for (int step = 0; step < 100000; ++step) {
        auto dist = transition_distribution(tm, prev, cur);
        double r = rng.next_double();
        double acc = 0.0;
        int next = dist.back().first;
        for (const auto& [node, prob] : dist) {
            acc += prob;
            if (r < acc) {
                next = node;
                break;
            }
        }
        counts[{prev, cur}][next] += 1;
        totals[{prev, cur}] += 1;
        prev = cur;
        cur = next;
    }
    int checked = 0;
    for (const auto& [key, next_counts] : counts) {
        if (totals[key] < 2000) continue;  // enough mass for a tight estimate
        auto dist = transition_distribution(tm, key.first, key.second);
        for (const auto& [node, prob] : dist) {
            double freq = static_cast<double>(next_counts.count(node) ? next_counts.at(node) : 0) /
                          totals[key];
            CHECK(std::fabs(freq - prob) <= 0.02);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("corpus_to_sequences decomposes texts into unicode scalars") {
    Corpus corpus;
    corpus.texts.push_back({U"智", 0});
    corpus.texts.push_back({U"智障", 1});
    corpus.texts.push_back({U"智障", 1});
    auto seqs = corpus_to_sequences(corpus);
    REQUIRE(seqs.size() == 3);
    CHECK(seqs[0].size() == 1);
    CHECK(seqs[1] == seqs[2]);
    std::u32string decoded = utf8_decode(utf8_encode(std::u32string(U"智障")));
    CHECK(seqs[1] == decoded);
}

TEST_CASE("sgns_pair_objective_and_grad: closed-form cases") {
    // all-zero vectors, one negative: objective = 2 log(0.5)
    std::vector<double> zero{0.0, 0.0};
    auto z = sgns_pair_objective_and_grad(zero, zero, {zero});
    CHECK(z.objective == doctest::Approx(2.0 * std::log(0.5)));

    // center=(1,0), context=(1,0), no negatives: log sigma(1)
    std::vector<double> e1{1.0, 0.0};
    auto o = sgns_pair_objective_and_grad(e1, e1, {});
    CHECK(o.objective == doctest::Approx(std::log(1.0 / (1.0 + std::exp(-1.0)))));
    CHECK(o.objective == doctest::Approx(-0.3132616875).epsilon(1e-6));

    CHECK_THROWS_AS(sgns_pair_objective_and_grad(e1, zero, {{1.0, 2.0, 3.0}}), Error);
}

TEST_CASE("sgns pair gradients match finite differences") {
    Rng rng(37);
    for (int trial = 0; trial < 25; ++trial) {
        const int d = 4;
        const int nneg = 1 + static_cast<int>(rng.next_below(3));
        std::vector<double> center(d), context(d);
        std::vector<std::vector<double>> negatives(nneg, std::vector<double>(d));
        for (int i = 0; i < d; ++i) {
            center[static_cast<size_t>(i)] = rng.next_normal();
            context[static_cast<size_t>(i)] = rng.next_normal();
        }
        for (auto& n : negatives)
            for (auto& v : n) v = rng.next_normal();

        auto grads = sgns_pair_objective_and_grad(center, context, negatives);
        std::vector<double> x;
        x.insert(x.end(), center.begin(), center.end());
        x.insert(x.end(), context.begin(), context.end());
        for (const auto& n : negatives) x.insert(x.end(), n.begin(), n.end());
        std::vector<double> analytic;
        analytic.insert(analytic.end(), grads.d_center.begin(), grads.d_center.end());
        analytic.insert(analytic.end(), grads.d_context.begin(), grads.d_context.end());
        for (const auto& n : grads.d_negatives) analytic.insert(analytic.end(), n.begin(), n.end());

        auto f = [&](const std::vector<double>& flat) {
            std::vector<double> c(flat.begin(), flat.begin() + d);
            std::vector<double> ctx(flat.begin() + d, flat.begin() + 2 * d);
            std::vector<std::vector<double>> negs;
            for (int k = 0; k < nneg; ++k)
                negs.emplace_back(flat.begin() + (2 + k) * d, flat.begin() + (3 + k) * d);
            return sgns_pair_objective_and_grad(c, ctx, negs).objective;
        };
        CHECK(testutil::max_gradient_error(f, x, analytic) <= 1e-4);
    }
}

TEST_CASE("sgns_train: zero epochs returns the seeded initialization") {
    SgnsConfig config;
    config.dim = 6;
    config.epochs = 0;
    config.seed = 21;
    std::vector<std::u32string> seqs{U"abcab", U"bca"};
    EmbeddingTable t1 = sgns_train(seqs, config);
    EmbeddingTable t2 = sgns_train(seqs, config);
    REQUIRE(t1.vocab_size() == 3);
    for (size_t i = 0; i < t1.vocab_size(); ++i)
        for (int j = 0; j < t1.dim(); ++j) {
            CHECK(t1.input_row(static_cast<int>(i))[j] == t2.input_row(static_cast<int>(i))[j]);
            CHECK(t1.output_row(static_cast<int>(i))[j] == 0.0);
        }
    CHECK_THROWS_AS(sgns_train({}, config), Error);
}

TEST_CASE("sgns_train: co-occurrence attraction on a repeated pair") {
    SgnsConfig config;
    config.dim = 8;
    config.window = 1;
    config.negatives = 2;
    config.epochs = 3;
    config.seed = 5;
    std::vector<std::u32string> seqs(1000, U"ab");
    EmbeddingTable before = sgns_train(seqs, SgnsConfig{8, 1, 2, 0, 0.025, 5});
    EmbeddingTable after = sgns_train(seqs, config);
    auto cos_in_out = [](const EmbeddingTable& t) {
        int a = t.token_id(U'a'), b = t.token_id(U'b');
        double dot = 0, na = 0, nb = 0;
        for (int j = 0; j < t.dim(); ++j) {
            dot += t.input_row(a)[j] * t.output_row(b)[j];
            na += t.input_row(a)[j] * t.input_row(a)[j];
            nb += t.output_row(b)[j] * t.output_row(b)[j];
        }
        if (na == 0.0 || nb == 0.0) return 0.0;
        return dot / std::sqrt(na * nb);
    };
    CHECK(cos_in_out(after) > cos_in_out(before));
}

TEST_CASE("sgns_train is bitwise deterministic per seed") {
    SgnsConfig config;
    config.dim = 5;
    config.epochs = 2;
    config.seed = 44;
    std::vector<std::u32string> seqs{U"abcdea", U"cdeab", U"aabb"};
    EmbeddingTable t1 = sgns_train(seqs, config);
    EmbeddingTable t2 = sgns_train(seqs, config);
    for (size_t i = 0; i < t1.vocab_size(); ++i)
        for (int j = 0; j < t1.dim(); ++j)
            CHECK(t1.input_row(static_cast<int>(i))[j] == t2.input_row(static_cast<int>(i))[j]);
}

TEST_CASE("sgns_train: planted clusters separate and the exact objective improves") {
    // Two token clusters with only intra-cluster co-occurrence.
    Rng rng(3);
    std::vector<std::u32string> seqs;
    for (int t = 0; t < 300; ++t) {
        std::u32string s;
        char32_t base = (t % 2 == 0) ? U'a' : U'n';
        for (int i = 0; i < 8; ++i) s.push_back(base + static_cast<char32_t>(rng.next_below(5)));
        seqs.push_back(s);
    }
    SgnsConfig config;
    config.dim = 12;
    config.window = 3;
    config.negatives = 4;
    config.epochs = 4;
    config.seed = 8;
    EmbeddingTable table = sgns_train(seqs, config);

    double intra = 0.0, inter = 0.0;
    int intra_n = 0, inter_n = 0;
    for (char32_t x = U'a'; x < U'a' + 5; ++x) {
        for (char32_t y = x + 1; y < U'a' + 5; ++y) {
            intra += cosine_similarity(table.input_vector(x), table.input_vector(y));
            ++intra_n;
        }
        for (char32_t y = U'n'; y < U'n' + 5; ++y) {
            inter += cosine_similarity(table.input_vector(x), table.input_vector(y));
            ++inter_n;
        }
    }
    CHECK(intra / intra_n > inter / inter_n);

    // Exact full-softmax objective on the tiny vocabulary must improve.
    SgnsConfig init = config;
    init.epochs = 0;
    EmbeddingTable at_init = sgns_train(seqs, init);
    CHECK(full_softmax_objective(table, seqs, config.window) >
          full_softmax_objective(at_init, seqs, config.window));
}

TEST_CASE("nearest_embedding_neighbors: forced, duplicates first, exhaustive oracle") {
    std::vector<char32_t> vocab{U'a', U'b'};
    EmbeddingTable two(vocab, 3);
    two.input_row(0)[0] = 1.0;
    two.input_row(1)[1] = 1.0;
    auto single = nearest_embedding_neighbors(two, U'a', 4);
    REQUIRE(single.size() == 1);
    CHECK(single[0].first == U'b');
    CHECK_THROWS_AS(nearest_embedding_neighbors(two, U'z', 1), Error);

    // Duplicated vectors rank first with cosine 1.
    std::vector<char32_t> vocab3{U'a', U'b', U'c'};
    EmbeddingTable three(vocab3, 2);
    three.input_row(0)[0] = 1.0;
    three.input_row(1)[0] = 1.0;
    three.input_row(2)[1] = 1.0;
    auto dup = nearest_embedding_neighbors(three, U'a', 2);
    CHECK(dup[0].first == U'b');
    CHECK(dup[0].second == doctest::Approx(1.0));

    // Exhaustive oracle on a random 100-token table.
    Rng rng(41);
    std::vector<char32_t> big;
    for (int i = 0; i < 100; ++i) big.push_back(static_cast<char32_t>(0x4E00 + i));
    EmbeddingTable table(big, 6);
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 6; ++j) table.input_row(i)[j] = rng.next_normal();
    auto top5 = nearest_embedding_neighbors(table, big[17], 5);
    REQUIRE(top5.size() == 5);
    std::vector<std::pair<double, char32_t>> scored;
    for (int i = 0; i < 100; ++i) {
        if (i == 17) continue;
        scored.emplace_back(
            cosine_similarity(table.input_vector(big[static_cast<size_t>(i)]),
                              table.input_vector(big[17])),
            big[static_cast<size_t>(i)]);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (size_t i = 0; i < 5; ++i) {
        CHECK(top5[i].first == scored[i].second);
        CHECK(top5[i].second == doctest::Approx(scored[i].first));
    }
}

TEST_CASE("embedding save/load: header checked, values round-trip exactly") {
    testutil::TempDir dir("emb_rt");
    Rng rng(47);
    std::vector<char32_t> vocab{U'智', U'障', U'微'};
    EmbeddingTable table(vocab, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) table.input_row(i)[j] = rng.next_normal();
    save_embedding(table, dir.file("t.emb"));
    EmbeddingTable loaded = load_embedding(dir.file("t.emb"));
    REQUIRE(loaded.vocab_size() == 3);
    REQUIRE(loaded.dim() == 4);
    CHECK(loaded.vocabulary() == table.vocabulary());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) CHECK(loaded.input_row(i)[j] == table.input_row(i)[j]);

    write_file(dir.file("bad.emb"), "2 4\n\xE6\x99\xBA 1 2 3 4\n");
    CHECK_THROWS_AS(load_embedding(dir.file("bad.emb")), Error);
}
