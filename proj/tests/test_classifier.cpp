#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "advgraph/classifier.hpp"
#include "advgraph/common.hpp"
#include "advgraph/io.hpp"
#include "advgraph/rng.hpp"
#include "test_util.hpp"

using namespace advgraph;

namespace {

EmbeddingTable random_table(const std::vector<char32_t>& vocab, int dim, uint64_t seed) {
    EmbeddingTable table(vocab, dim);
    Rng rng(seed);
    for (size_t i = 0; i < vocab.size(); ++i)
        for (int j = 0; j < dim; ++j) table.input_row(static_cast<int>(i))[j] = rng.next_normal();
    return table;
}

UnimodalEncoderParams random_encoder(const EncoderConfig& config, int dim, uint64_t seed) {
    UnimodalEncoderParams enc;
    enc.config = config;
    enc.embed_dim = dim;
    Rng rng(seed);
    for (int width : config.filter_widths) {
        std::vector<double> bank(static_cast<size_t>(config.filters_per_width) * width * dim);
        for (auto& v : bank) v = rng.next_normal() * 0.5;
        enc.filters.push_back(std::move(bank));
        std::vector<double> bias(static_cast<size_t>(config.filters_per_width));
        for (auto& v : bias) v = rng.next_normal() * 0.1;
        enc.biases.push_back(std::move(bias));
    }
    return enc;
}

// Straight-line conv + max-over-time reference, independent of the cached
// implementation.
std::vector<double> encode_oracle(const std::u32string& chars, const EmbeddingTable& table,
                                  const UnimodalEncoderParams& enc) {
    const int d = enc.embed_dim;
    int max_width = 1;
    for (int w : enc.config.filter_widths) max_width = std::max(max_width, w);
    const size_t padded = std::max(chars.size(), static_cast<size_t>(max_width));
    std::vector<std::vector<double>> x(padded, std::vector<double>(static_cast<size_t>(d), 0.0));
    for (size_t i = 0; i < chars.size(); ++i) {
        if (!table.contains(chars[i])) continue;
        auto row = table.input_vector(chars[i]);
        for (int j = 0; j < d; ++j) x[i][static_cast<size_t>(j)] = row[static_cast<size_t>(j)];
    }
    std::vector<double> out;
    for (size_t wi = 0; wi < enc.config.filter_widths.size(); ++wi) {
        const int width = enc.config.filter_widths[wi];
        for (int f = 0; f < enc.config.filters_per_width; ++f) {
            double best = -1e300;
            for (size_t t = 0; t + static_cast<size_t>(width) <= padded; ++t) {
                double acc = enc.biases[wi][static_cast<size_t>(f)];
                for (int u = 0; u < width; ++u)
                    for (int j = 0; j < d; ++j)
                        acc += enc.filters[wi][(static_cast<size_t>(f) * width + u) * d + j] *
                               x[t + static_cast<size_t>(u)][static_cast<size_t>(j)];
                best = std::max(best, acc);
            }
            out.push_back(std::max(0.0, best));
        }
    }
    return out;
}

Corpus separable_corpus() {
    // Disjoint character sets per class.
    Corpus corpus;
    Rng rng(91);
    for (int t = 0; t < 40; ++t) {
        std::u32string s0, s1;
        for (int i = 0; i < 6; ++i) {
            s0.push_back(static_cast<char32_t>(U'a' + rng.next_below(6)));
            s1.push_back(static_cast<char32_t>(U'n' + rng.next_below(6)));
        }
        corpus.texts.push_back({s0, 0});
        corpus.texts.push_back({s1, 1});
    }
    return corpus;
}

std::vector<char32_t> corpus_vocab() {
    std::vector<char32_t> vocab;
    for (char32_t c = U'a'; c < U'a' + 6; ++c) vocab.push_back(c);
    for (char32_t c = U'n'; c < U'n' + 6; ++c) vocab.push_back(c);
    return vocab;
}

} // namespace

TEST_CASE("encode: OOV degenerate is the bias-only response") {
    EncoderConfig config;
    config.filter_widths = {2};
    config.filters_per_width = 3;
    auto table = random_table({U'a'}, 4, 1);
    auto enc = random_encoder(config, 4, 2);
    enc.biases[0] = {0.5, -0.3, 0.0};
    auto out = encode(U"xyz", table, enc);  // every character unknown
    REQUIRE(out.size() == 3);
    CHECK(out[0] == doctest::Approx(0.5));
    CHECK(out[1] == 0.0);  // ReLU clips the negative bias
    CHECK(out[2] == 0.0);
    CHECK_THROWS_AS(encode(U"", table, enc), Error);
}

TEST_CASE("encode: single position with width-1 filters equals the filter response") {
    EncoderConfig config;
    config.filter_widths = {1};
    config.filters_per_width = 2;
    auto table = random_table({U'a'}, 3, 5);
    UnimodalEncoderParams enc;
    enc.config = config;
    enc.embed_dim = 3;
    enc.filters = {{1.0, 0.0, 0.0, 0.0, 1.0, 0.0}};  // f0 reads dim0, f1 reads dim1
    enc.biases = {{0.0, 0.0}};
    auto row = table.input_vector(U'a');
    auto out = encode(U"a", table, enc);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == doctest::Approx(std::max(0.0, row[0])));
    CHECK(out[1] == doctest::Approx(std::max(0.0, row[1])));
}

TEST_CASE("encode matches the straight-line oracle on random inputs") {
    EncoderConfig config;
    config.filter_widths = {2, 3, 4};
    config.filters_per_width = 5;
    auto table = random_table(corpus_vocab(), 6, 7);
    auto enc = random_encoder(config, 6, 8);
    Rng rng(9);
    for (int t = 0; t < 10; ++t) {
        std::u32string text;
        size_t len = 1 + rng.next_below(9);
        for (size_t i = 0; i < len; ++i)
            text.push_back(static_cast<char32_t>(U'a' + rng.next_below(20)));  // some OOV
        auto got = encode(text, table, enc);
        auto expected = encode_oracle(text, table, enc);
        REQUIRE(got.size() == expected.size());
        for (size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }
}

TEST_CASE("fuse: concatenation with graph branch first, ablation, slicing") {
    CHECK(fuse({1.0, 2.0}, {3.0}) == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(fuse({}, {5.0}) == std::vector<double>{5.0});
    CHECK(fuse({5.0}, {}) == std::vector<double>{5.0});
    Rng rng(11);
    std::vector<double> a(4), b(7);
    for (auto& v : a) v = rng.next_normal();
    for (auto& v : b) v = rng.next_normal();
    auto fused = fuse(a, b);
    CHECK(std::vector<double>(fused.begin(), fused.begin() + 4) == a);
    CHECK(std::vector<double>(fused.begin() + 4, fused.end()) == b);
}

TEST_CASE("classify: uniform ties, closed-form softmax, shift invariance") {
    ClassifierParams params;
    params.class_count = 4;
    EncoderConfig config;
    config.filter_widths = {1};
    config.filters_per_width = 2;
    params.semantic_encoder = random_encoder(config, 2, 3);
    params.head_w.assign(4 * 2, 0.0);
    params.head_b.assign(4, 0.0);
    Prediction uniform = classify({1.0, -1.0}, params);
    CHECK(uniform.label == 0);  // tie-break: lowest class id
    for (double p : uniform.distribution) CHECK(p == doctest::Approx(0.25));
    double sum = 0.0;
    for (double p : uniform.distribution) sum += p;
    CHECK(std::fabs(sum - 1.0) <= 1e-9);

    // C=2, logits (0, ln 3) -> (0.25, 0.75).
    ClassifierParams two;
    two.class_count = 2;
    two.semantic_encoder = random_encoder(config, 2, 3);
    two.head_w = {0.0, 0.0, 0.0, 0.0};
    two.head_b = {0.0, std::log(3.0)};
    Prediction p = classify({0.0, 0.0}, two);
    CHECK(p.label == 1);
    CHECK(p.distribution[0] == doctest::Approx(0.25));
    CHECK(p.distribution[1] == doctest::Approx(0.75));
    CHECK(p.confidence == doctest::Approx(0.75));

    two.head_b = {1000.0, 1000.0 + std::log(3.0)};
    Prediction shifted = classify({0.0, 0.0}, two);
    CHECK(shifted.label == p.label);
    CHECK(shifted.distribution[0] == doctest::Approx(p.distribution[0]));
    CHECK(shifted.distribution[1] == doctest::Approx(p.distribution[1]));

    two.head_b = {std::nan(""), 0.0};
    CHECK_THROWS_AS(classify({0.0, 0.0}, two), Error);
}

TEST_CASE("predict: determinism, compositional oracle, branch nulling") {
    EncoderConfig config;
    config.filter_widths = {2, 3};
    config.filters_per_width = 3;
    auto vocab = corpus_vocab();

    ModelBundle bundle;
    bundle.graph_table = random_table(vocab, 4, 13);
    bundle.semantic_table = random_table(vocab, 5, 14);
    bundle.params.class_count = 2;
    bundle.params.graph_encoder = random_encoder(config, 4, 15);
    bundle.params.semantic_encoder = random_encoder(config, 5, 16);
    const int fused_dim = bundle.params.fused_dim();
    Rng rng(17);
    bundle.params.head_w.resize(static_cast<size_t>(2 * fused_dim));
    for (auto& v : bundle.params.head_w) v = rng.next_normal() * 0.3;
    bundle.params.head_b = {0.1, -0.1};

    std::u32string text = U"abnopq";
    Prediction p1 = predict(text, bundle);
    Prediction p2 = predict(text, bundle);
    CHECK(p1.label == p2.label);
    CHECK(p1.distribution == p2.distribution);
    CHECK_THROWS_AS(predict(U"", bundle), Error);

    // Manual composition of encode + fuse + classify.
    auto eg = encode(text, *bundle.graph_table, *bundle.params.graph_encoder);
    auto es = encode(text, *bundle.semantic_table, *bundle.params.semantic_encoder);
    Prediction manual = classify(fuse(eg, es), bundle.params);
    CHECK(manual.label == p1.label);
    CHECK(manual.distribution == p1.distribution);

    // Zeroed graph table with zero graph biases: equals the semantic-only
    // model built from the same semantic encoder and head slice.
    ModelBundle nulled = bundle;
    nulled.graph_table = EmbeddingTable(vocab, 4);  // all-zero rows
    for (auto& b : nulled.params.graph_encoder->biases) std::fill(b.begin(), b.end(), 0.0);

    ModelBundle semantic_only;
    semantic_only.semantic_table = bundle.semantic_table;
    semantic_only.params.class_count = 2;
    semantic_only.params.semantic_encoder = bundle.params.semantic_encoder;
    const int gdim = bundle.params.graph_encoder->config.output_dim();
    const int sdim = bundle.params.semantic_encoder->config.output_dim();
    for (int c = 0; c < 2; ++c)
        for (int j = 0; j < sdim; ++j)
            semantic_only.params.head_w.push_back(
                bundle.params.head_w[static_cast<size_t>(c * fused_dim + gdim + j)]);
    semantic_only.params.head_b = bundle.params.head_b;

    Prediction full = predict(text, nulled);
    Prediction sem = predict(text, semantic_only);
    CHECK(full.label == sem.label);
    for (int c = 0; c < 2; ++c)
        CHECK(full.distribution[static_cast<size_t>(c)] ==
              doctest::Approx(sem.distribution[static_cast<size_t>(c)]).epsilon(1e-12));
}

TEST_CASE("classifier gradients match finite differences on the tiny configuration") {
    // d=4 embeddings, d_e=6 (widths {2,3} x 3 filters), C=2, N=3.
    EncoderConfig config;
    config.filter_widths = {2, 3};
    config.filters_per_width = 3;
    auto vocab = corpus_vocab();
    auto graph_table = random_table(vocab, 4, 23);
    auto semantic_table = random_table(vocab, 4, 24);

    Rng seeder(25);
    int checked = 0;
    for (uint64_t trial = 0; trial < 12 && checked < 5; ++trial) {
        ClassifierParams params;
        params.class_count = 2;
        params.graph_encoder = random_encoder(config, 4, 100 + trial);
        params.semantic_encoder = random_encoder(config, 4, 200 + trial);
        Rng rng(300 + trial);
        params.head_w.resize(static_cast<size_t>(2 * params.fused_dim()));
        for (auto& v : params.head_w) v = rng.next_normal() * 0.4;
        params.head_b = {rng.next_normal() * 0.1, rng.next_normal() * 0.1};

        LabeledText example{U"abn", static_cast<int>(seeder.next_below(2))};
        std::vector<double> analytic;
        classifier_loss_and_grad(params, &graph_table, &semantic_table, example, &analytic);
        auto f = [&](const std::vector<double>& flat) {
            ClassifierParams probe = unflatten_classifier_params(params, flat);
            return classifier_loss_and_grad(probe, &graph_table, &semantic_table, example,
                                            nullptr);
        };
        double err =
            testutil::max_gradient_error(f, flatten_classifier_params(params), analytic, 1e-5);
        CHECK(err <= 1e-4);
        ++checked;
    }
    CHECK(checked == 5);
}

TEST_CASE("train_classifier: separable corpus reaches training accuracy 1.0") {
    Corpus corpus = separable_corpus();
    auto vocab = corpus_vocab();
    auto graph_table = random_table(vocab, 4, 31);
    auto semantic_table = random_table(vocab, 4, 32);
    ClassifierTrainConfig config;
    config.encoder.filter_widths = {2, 3};
    config.encoder.filters_per_width = 4;
    config.class_count = 2;
    config.lr = 0.2;
    config.epochs = 30;
    config.batch = 8;
    config.seed = 33;
    ClassifierTrainStats stats;
    ClassifierParams params =
        train_classifier(corpus, &graph_table, &semantic_table, config, &stats);
    CHECK(stats.final_loss <= stats.initial_loss);

    ModelBundle bundle{graph_table, semantic_table, params};
    size_t correct = 0;
    for (const auto& t : corpus.texts)
        if (predict(t.chars, bundle).label == t.label) ++correct;
    CHECK(correct == corpus.texts.size());
}

TEST_CASE("train_classifier: zero epochs returns seeded params; deterministic per seed") {
    Corpus corpus = separable_corpus();
    auto vocab = corpus_vocab();
    auto semantic_table = random_table(vocab, 4, 35);
    ClassifierTrainConfig config;
    config.encoder.filter_widths = {2};
    config.encoder.filters_per_width = 3;
    config.use_graph = false;
    config.epochs = 0;
    config.seed = 36;
    auto p1 = flatten_classifier_params(
        train_classifier(corpus, nullptr, &semantic_table, config, nullptr));
    auto p2 = flatten_classifier_params(
        train_classifier(corpus, nullptr, &semantic_table, config, nullptr));
    CHECK(p1 == p2);

    config.epochs = 4;
    auto t1 = flatten_classifier_params(
        train_classifier(corpus, nullptr, &semantic_table, config, nullptr));
    auto t2 = flatten_classifier_params(
        train_classifier(corpus, nullptr, &semantic_table, config, nullptr));
    CHECK(t1 == t2);
    CHECK(t1 != p1);
}

TEST_CASE("train_classifier: label out of range fails before training") {
    Corpus corpus;
    corpus.texts.push_back({U"ab", 0});
    corpus.texts.push_back({U"cd", 5});
    auto semantic_table = random_table(corpus_vocab(), 4, 37);
    ClassifierTrainConfig config;
    config.use_graph = false;
    config.class_count = 2;
    CHECK_THROWS_AS(train_classifier(corpus, nullptr, &semantic_table, config, nullptr), Error);
}

TEST_CASE("frozen-embedding contract: tables byte-identical across two trainings") {
    testutil::TempDir dir("clf_frozen");
    Corpus corpus = separable_corpus();
    auto vocab = corpus_vocab();
    auto graph_table = random_table(vocab, 4, 39);
    auto semantic_table = random_table(vocab, 4, 40);
    save_embedding(graph_table, dir.file("g.emb"));
    const std::string before = read_file(dir.file("g.emb"));

    ClassifierTrainConfig config;
    config.encoder.filter_widths = {2};
    config.encoder.filters_per_width = 3;
    config.epochs = 3;

    // Two distinct tasks against the same graph table.
    train_classifier(corpus, &graph_table, &semantic_table, config, nullptr);
    Corpus task2 = separable_corpus();
    for (auto& t : task2.texts) t.label = 1 - t.label;
    train_classifier(task2, &graph_table, &semantic_table, config, nullptr);

    save_embedding(graph_table, dir.file("g.emb"));
    CHECK(read_file(dir.file("g.emb")) == before);
}

TEST_CASE("classifier params and bundles round-trip through disk") {
    testutil::TempDir dir("clf_rt");
    EncoderConfig config;
    config.filter_widths = {2, 3};
    config.filters_per_width = 3;
    auto vocab = corpus_vocab();

    ModelBundle bundle;
    bundle.graph_table = random_table(vocab, 4, 41);
    bundle.semantic_table = random_table(vocab, 5, 42);
    bundle.params.class_count = 2;
    bundle.params.graph_encoder = random_encoder(config, 4, 43);
    bundle.params.semantic_encoder = random_encoder(config, 5, 44);
    Rng rng(45);
    bundle.params.head_w.resize(static_cast<size_t>(2 * bundle.params.fused_dim()));
    for (auto& v : bundle.params.head_w) v = rng.next_normal();
    bundle.params.head_b = {0.25, -0.5};

    save_classifier_params(bundle.params, dir.file("clf.params"));
    ClassifierParams loaded = load_classifier_params(dir.file("clf.params"));
    CHECK(flatten_classifier_params(loaded) == flatten_classifier_params(bundle.params));

    save_bundle(bundle, dir.file("bundle"));
    ModelBundle loaded_bundle = load_bundle(dir.file("bundle"));
    std::u32string text = U"abno";
    Prediction a = predict(text, bundle);
    Prediction b = predict(text, loaded_bundle);
    CHECK(a.label == b.label);
    CHECK(a.distribution == b.distribution);

    // Tampering with a bundle file must be detected.
    std::string params_text = read_file(dir.file("bundle/classifier.params"));
    write_file(dir.file("bundle/classifier.params"), params_text + " ");
    CHECK_THROWS_AS(load_bundle(dir.file("bundle")), Error);
}
