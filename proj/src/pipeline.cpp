#include "advgraph/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "advgraph/attack.hpp"
#include "advgraph/classifier.hpp"
#include "advgraph/common.hpp"
#include "advgraph/corpus.hpp"
#include "advgraph/embedding.hpp"
#include "advgraph/eval.hpp"
#include "advgraph/glyph.hpp"
#include "advgraph/graph.hpp"
#include "advgraph/io.hpp"
#include "advgraph/phonetics.hpp"
#include "advgraph/rng.hpp"
#include "advgraph/synth.hpp"
#include "advgraph/utf8.hpp"

namespace advgraph {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

} // namespace

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    PipelineConfig config;
    auto lines = split_lines(read_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        require(eq != std::string::npos, "expected 'key = value' at ", path, ":", i + 1);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        require(!key.empty(), "empty key at ", path, ":", i + 1);
        config.values_[key] = value;
    }
    return config;
}

void PipelineConfig::apply_override(const std::string& assignment) {
    size_t eq = assignment.find('=');
    require(eq != std::string::npos && eq > 0, "override must be key=value: '", assignment, "'");
    values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

std::string PipelineConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string PipelineConfig::require_string(const std::string& key) const {
    auto it = values_.find(key);
    require(it != values_.end() && !it->second.empty(), "missing required config key '", key, "'");
    return it->second;
}

long long PipelineConfig::get_int(const std::string& key, long long fallback, long long min_value,
                                  long long max_value) const {
    auto it = values_.find(key);
    long long v = it == values_.end() ? fallback : parse_int(it->second, "config key " + key);
    require(v >= min_value && v <= max_value, "config key '", key, "' = ", v,
            " outside [", min_value, ", ", max_value, "]");
    return v;
}

double PipelineConfig::get_double(const std::string& key, double fallback, double min_value,
                                  double max_value) const {
    auto it = values_.find(key);
    double v = it == values_.end() ? fallback : parse_double(it->second, "config key " + key);
    require(v >= min_value && v <= max_value, "config key '", key, "' = ", v,
            " outside [", min_value, ", ", max_value, "]");
    return v;
}

bool PipelineConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "1" || it->second == "true") return true;
    if (it->second == "0" || it->second == "false") return false;
    fail("config key '", key, "' must be 0/1/true/false, got '", it->second, "'");
}

std::vector<int> PipelineConfig::get_int_list(const std::string& key,
                                              const std::string& fallback) const {
    std::string raw = get_string(key, fallback);
    std::vector<int> out;
    for (const auto& tok : split_fields(raw, ',')) {
        std::string t = trim(tok);
        if (t.empty()) continue;
        out.push_back(static_cast<int>(parse_int(t, "config key " + key)));
    }
    require(!out.empty(), "config key '", key, "' must list at least one integer");
    return out;
}

uint64_t PipelineConfig::seed() const {
    return static_cast<uint64_t>(get_int("seed", 42, 0, INT64_MAX));
}

int PipelineConfig::workers() const {
    return static_cast<int>(get_int("workers", 1, 1, 256));
}

namespace {

constexpr int kPipelineVersion = 1;

// ---- manifests -------------------------------------------------------

std::string fingerprint_path_hex(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        // Directory fingerprint: fold (relative path, content fingerprint)
        // pairs in sorted path order.
        std::vector<std::string> files;
        for (const auto& entry : fs::recursive_directory_iterator(path))
            if (entry.is_regular_file()) files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        std::string acc;
        for (const auto& f : files) {
            acc += fs::relative(f, path).string();
            acc += '\0';
            acc += fingerprint_hex(fingerprint_file(f));
            acc += '\0';
        }
        return fingerprint_hex(fingerprint_bytes(acc));
    }
    return fingerprint_hex(fingerprint_file(path));
}

void write_manifest(const std::string& stage, const std::string& artifact,
                    const std::vector<std::string>& inputs, const PipelineConfig& config) {
    nlohmann::json j;
    j["stage"] = stage;
    j["version"] = kPipelineVersion;
    j["seed"] = config.seed();
    j["artifact"] = artifact;
    j["artifact_fingerprint"] = fingerprint_path_hex(artifact);
    nlohmann::json in = nlohmann::json::object();
    for (const auto& path : inputs) in[path] = fingerprint_path_hex(path);
    j["inputs"] = in;
    write_file(artifact + ".manifest", j.dump(2) + "\n");
}

void require_input(const std::string& path, const std::string& what,
                   const std::string& producer) {
    if (file_exists(path)) return;
    if (producer.empty()) fail("missing ", what, ": ", path);
    fail("missing ", what, ": ", path, " (run '", producer, "' first)");
}

// ---- config-derived knobs --------------------------------------------

GlyphModelConfig glyph_model_config(const PipelineConfig& c) {
    GlyphModelConfig config;
    config.conv_channels.clear();
    for (int ch : c.get_int_list("glyph.conv_channels", "16,32")) config.conv_channels.push_back(ch);
    config.output_dim = static_cast<int>(c.get_int("glyph.dim", 64, 1, 4096));
    return config;
}

SgnsConfig sgns_config(const PipelineConfig& c, const std::string& prefix, uint64_t seed) {
    SgnsConfig config;
    config.dim = static_cast<int>(c.get_int(prefix + ".dim", 64, 1, 4096));
    config.window = static_cast<int>(c.get_int(prefix + ".window", 5, 1, 100));
    config.negatives = static_cast<int>(c.get_int(prefix + ".negatives", 5, 1, 100));
    config.epochs = static_cast<int>(c.get_int(prefix + ".epochs", 5, 0, 10000));
    config.lr = c.get_double(prefix + ".lr", 0.025, 1e-9, 10.0);
    config.seed = seed;
    return config;
}

CandidateSource candidate_source(const PipelineConfig& c) {
    std::string s = c.get_string("attack.source", "both");
    if (s == "graph-P" || s == "P") return CandidateSource::GraphP;
    if (s == "graph-G" || s == "G") return CandidateSource::GraphG;
    if (s == "both") return CandidateSource::Both;
    fail("config key 'attack.source' must be graph-P, graph-G, or both, got '", s, "'");
}

AttackConfig attack_config(const PipelineConfig& c, uint64_t seed) {
    AttackConfig config;
    config.budget = static_cast<int>(c.get_int("attack.budget", 4, 0, 1000000));
    config.source = candidate_source(c);
    config.seed = seed;
    std::string variant_file = c.get_string("variant_file", "");
    if (!variant_file.empty()) {
        require_input(variant_file, "external variant file", "");
        config.external_variants = load_variant_file(variant_file);
    }
    return config;
}

PerturbPopulation perturb_population(const PipelineConfig& c) {
    std::string s = c.get_string("attack.population", "successes");
    if (s == "successes") return PerturbPopulation::SuccessesOnly;
    if (s == "all") return PerturbPopulation::All;
    fail("config key 'attack.population' must be successes or all, got '", s, "'");
}

std::vector<char32_t> atlas_lexicon_charset(const GlyphAtlas& atlas, const PinyinLexicon& lex) {
    std::vector<char32_t> charset;
    for (char32_t ch : atlas.characters())
        if (lex.contains(ch)) charset.push_back(ch);
    return charset;
}

// ---- stages ----------------------------------------------------------

void stage_synth_glyphs(const PipelineConfig& c) {
    const std::string lexicon_path = c.require_string("lexicon");
    require_input(lexicon_path, "pinyin lexicon", "");
    const std::string atlas_path = c.require_string("atlas");
    const std::string triplet_path = c.require_string("triplets");

    PinyinLexicon lex = load_pinyin_lexicon(lexicon_path);
    auto charset = lex.characters();
    int family_size = static_cast<int>(c.get_int("synth.family_size", 4, 1, 64));
    double flip = c.get_double("synth.flip_fraction", 0.05, 0.0, 0.05);
    int count = static_cast<int>(c.get_int("synth.triplet_count", 2000, 1, 10000000));
    std::string family_source = c.get_string("synth.family_source", "shuffle");

    uint64_t seed = derive_seed(c.seed(), "stage:synth-glyphs");
    SyntheticGlyphData data;
    if (family_source == "shuffle") {
        data = synth_glyph_atlas(charset, family_size, flip, seed);
    } else if (family_source == "pinyin") {
        // Visual families follow the phonetic groups (first reading), so
        // the graph's P and G communities coincide.
        std::map<std::string, std::vector<char32_t>> groups;
        for (char32_t ch : charset) groups[lex.readings(ch)[0].syllable].push_back(ch);
        std::vector<std::vector<char32_t>> ordered;
        ordered.reserve(groups.size());
        for (auto& [syl, chars] : groups) ordered.push_back(chars);
        data = synth_glyph_atlas_grouped(ordered, family_size, flip, seed);
    } else {
        fail("config key 'synth.family_source' must be shuffle or pinyin, got '", family_source,
             "'");
    }
    auto triplets = synth_glyph_triplets(data.families, count, seed);

    save_glyph_atlas(data.atlas, atlas_path);
    save_glyph_triplets(triplets, triplet_path);
    write_manifest("synth-glyphs", atlas_path, {lexicon_path}, c);
    write_manifest("synth-glyphs", triplet_path, {lexicon_path}, c);
}

void stage_train_glyph(const PipelineConfig& c) {
    const std::string atlas_path = c.require_string("atlas");
    const std::string triplet_path = c.require_string("triplets");
    require_input(atlas_path, "glyph atlas", "synth-glyphs");
    require_input(triplet_path, "glyph triplet file", "synth-glyphs");
    const std::string model_path = c.require_string("glyph_model");

    GlyphAtlas atlas = load_glyph_atlas(atlas_path);
    auto triplets = load_glyph_triplets(triplet_path);

    GlyphTrainConfig config;
    config.model = glyph_model_config(c);
    config.alpha = c.get_double("glyph.alpha", 0.2, 0.0, 100.0);
    config.lr = c.get_double("glyph.lr", 0.05, 1e-9, 10.0);
    config.epochs = static_cast<int>(c.get_int("glyph.epochs", 5, 0, 10000));
    config.batch = static_cast<int>(c.get_int("glyph.batch", 32, 1, 1000000));
    config.seed = derive_seed(c.seed(), "stage:train-glyph");

    std::vector<double> losses;
    GlyphModelParams params = train_glyph_model(atlas, triplets, config, &losses);
    save_glyph_model(params, model_path);
    write_manifest("train-glyph", model_path, {atlas_path, triplet_path}, c);
    if (!losses.empty())
        std::printf("train-glyph: mean triplet loss %.6f -> %.6f over %d epochs\n", losses.front(),
                    losses.back(), config.epochs);
}

void stage_build_graph(const PipelineConfig& c) {
    const std::string atlas_path = c.require_string("atlas");
    const std::string lexicon_path = c.require_string("lexicon");
    const std::string model_path = c.require_string("glyph_model");
    require_input(atlas_path, "glyph atlas", "synth-glyphs");
    require_input(lexicon_path, "pinyin lexicon", "");
    require_input(model_path, "glyph model", "train-glyph");
    const std::string graph_path = c.require_string("graph");

    GlyphAtlas atlas = load_glyph_atlas(atlas_path);
    PinyinLexicon lex = load_pinyin_lexicon(lexicon_path);
    GlyphModelParams params = load_glyph_model(model_path);

    auto charset = atlas_lexicon_charset(atlas, lex);
    int k = static_cast<int>(c.get_int("graph.k", 10, 0, 10000));
    AdversarialGraph g = build_graph(charset, lex, params, atlas, k);
    save_graph(g, graph_path);
    write_manifest("build-graph", graph_path, {atlas_path, lexicon_path, model_path}, c);
    std::printf("build-graph: %zu nodes, %zu edges\n", g.node_count(), g.edge_count());
}

SyntheticSpec synthetic_spec(const PipelineConfig& c, const AdversarialGraph& g) {
    SyntheticSpec spec;
    spec.class_count = static_cast<int>(c.get_int("synth.classes", 2, 2, 64));
    for (int cls = 0; cls < spec.class_count; ++cls) {
        std::string key = "synth.keywords." + std::to_string(cls);
        spec.keywords.push_back(utf8_decode(c.require_string(key)));
    }
    std::string fillers = c.get_string("synth.fillers", "auto");
    if (fillers == "auto") {
        // Everything in the graph that is neither a keyword nor adjacent to
        // one; keeps planted variants out of the training distribution.
        std::set<char32_t> excluded;
        for (const auto& kws : spec.keywords) {
            for (char32_t ch : kws) {
                excluded.insert(ch);
                if (g.has_node(ch))
                    for (char32_t nb : g.neighbors(ch, RelationFilter::Any)) excluded.insert(nb);
            }
        }
        for (char32_t ch : g.nodes())
            if (excluded.count(ch) == 0) spec.fillers.push_back(ch);
    } else {
        spec.fillers = utf8_decode(fillers);
    }
    spec.train_per_class = static_cast<int>(c.get_int("synth.train_per_class", 100, 1, 10000000));
    spec.test_per_class = static_cast<int>(c.get_int("synth.test_per_class", 20, 0, 10000000));
    spec.min_length = static_cast<int>(c.get_int("synth.min_len", 10, 1, 100000));
    spec.max_length = static_cast<int>(c.get_int("synth.max_len", 30, 1, 100000));
    spec.min_keywords = static_cast<int>(c.get_int("synth.min_keywords", 1, 1, 1000));
    spec.max_keywords = static_cast<int>(c.get_int("synth.max_keywords", 3, 1, 1000));
    spec.obfuscation_rate = c.get_double("synth.obf_rate", 0.8, 0.0, 1.0);
    return spec;
}

void stage_synth(const PipelineConfig& c) {
    const std::string graph_path = c.require_string("graph");
    require_input(graph_path, "adversarial graph", "build-graph");
    const std::string train_path = c.require_string("train_corpus");
    const std::string test_path = c.require_string("test_corpus");
    const std::string obf_path = c.require_string("obf_corpus");

    AdversarialGraph g = load_graph(graph_path);
    SyntheticSpec spec = synthetic_spec(c, g);
    SyntheticCorpora corpora = synth_corpus(spec, g, derive_seed(c.seed(), "stage:synth"));
    save_corpus(corpora.train, train_path);
    save_corpus(corpora.test_clean, test_path);
    save_corpus(corpora.test_obfuscated, obf_path);
    write_manifest("synth", train_path, {graph_path}, c);
    write_manifest("synth", test_path, {graph_path}, c);
    write_manifest("synth", obf_path, {graph_path}, c);
    std::printf("synth: %zu train, %zu clean test, %zu obfuscated test texts\n",
                corpora.train.size(), corpora.test_clean.size(), corpora.test_obfuscated.size());
}

void stage_embed_graph(const PipelineConfig& c) {
    const std::string graph_path = c.require_string("graph");
    require_input(graph_path, "adversarial graph", "build-graph");
    const std::string embedding_path = c.require_string("graph_embedding");

    AdversarialGraph g = load_graph(graph_path);
    uint64_t seed = derive_seed(c.seed(), "stage:embed-graph");
    int r = static_cast<int>(c.get_int("embed.walks", 10, 1, 100000));
    int l = static_cast<int>(c.get_int("embed.walk_length", 40, 2, 100000));
    double p = c.get_double("embed.p", 1.0, 1e-9, 1e9);
    double q = c.get_double("embed.q", 1.0, 1e-9, 1e9);
    WalkSet walks = generate_walks(g, r, l, p, q, seed, c.workers());
    std::string walks_file = c.get_string("walks_file", "");
    if (!walks_file.empty()) save_walks(g, walks, walks_file);

    EmbeddingTable table =
        sgns_train(walks_as_token_sequences(g, walks), sgns_config(c, "embed", seed));
    save_embedding(table, embedding_path);
    write_manifest("embed-graph", embedding_path, {graph_path}, c);
}

void stage_embed_corpus(const PipelineConfig& c) {
    const std::string train_path = c.require_string("train_corpus");
    require_input(train_path, "training corpus", "synth");
    const std::string embedding_path = c.require_string("semantic_embedding");

    Corpus corpus = load_corpus(train_path);
    uint64_t seed = derive_seed(c.seed(), "stage:embed-corpus");
    EmbeddingTable table = sgns_train(corpus_to_sequences(corpus), sgns_config(c, "sem", seed));
    save_embedding(table, embedding_path);
    write_manifest("embed-corpus", embedding_path, {train_path}, c);
}

void stage_train_clf(const PipelineConfig& c) {
    const std::string train_path = c.require_string("train_corpus");
    require_input(train_path, "training corpus", "synth");
    const std::string model_dir = c.require_string("model_dir");

    ClassifierTrainConfig config;
    config.use_graph = c.get_bool("clf.use_graph", true);
    config.use_semantic = c.get_bool("clf.use_semantic", true);
    config.encoder.filter_widths = c.get_int_list("clf.widths", "2,3,4");
    config.encoder.filters_per_width = static_cast<int>(c.get_int("clf.filters", 32, 1, 10000));
    config.lr = c.get_double("clf.lr", 0.1, 1e-9, 10.0);
    config.epochs = static_cast<int>(c.get_int("clf.epochs", 20, 0, 10000));
    config.batch = static_cast<int>(c.get_int("clf.batch", 32, 1, 1000000));
    config.seed = derive_seed(c.seed(), "stage:train-clf");

    Corpus train = load_corpus(train_path);
    config.class_count = static_cast<int>(
        c.get_int("clf.classes", std::max(2, train.class_count()), 2, 4096));

    ModelBundle bundle;
    std::vector<std::string> inputs{train_path};
    if (config.use_graph) {
        const std::string path = c.require_string("graph_embedding");
        require_input(path, "graph embedding", "embed-graph");
        bundle.graph_table = load_embedding(path);
        inputs.push_back(path);
    }
    if (config.use_semantic) {
        const std::string path = c.require_string("semantic_embedding");
        require_input(path, "semantic embedding", "embed-corpus");
        bundle.semantic_table = load_embedding(path);
        inputs.push_back(path);
    }

    ClassifierTrainStats stats;
    bundle.params = train_classifier(
        train, bundle.graph_table ? &*bundle.graph_table : nullptr,
        bundle.semantic_table ? &*bundle.semantic_table : nullptr, config, &stats);
    save_bundle(bundle, model_dir);
    write_manifest("train-clf", model_dir, inputs, c);
    std::printf("train-clf: mean cross-entropy %.6f -> %.6f over %d epochs\n", stats.initial_loss,
                stats.final_loss, config.epochs);
}

void stage_attack(const PipelineConfig& c) {
    const std::string model_dir = c.require_string("model_dir");
    require_input(model_dir + "/manifest.json", "model bundle", "train-clf");
    const std::string graph_path = c.require_string("graph");
    require_input(graph_path, "adversarial graph", "build-graph");
    const std::string corpus_path = c.require_string("test_corpus");
    require_input(corpus_path, "test corpus", "synth");
    const std::string report_path = c.require_string("attack_report");

    ModelBundle bundle = load_bundle(model_dir);
    AdversarialGraph g = load_graph(graph_path);
    Corpus corpus = load_corpus(corpus_path);
    AttackConfig config = attack_config(c, derive_seed(c.seed(), "stage:attack"));

    PredictFn model = [&bundle](const std::u32string& chars) { return predict(chars, bundle); };
    AttackReport report = attack_corpus(corpus, model, g, config, c.workers());
    save_attack_report(report, report_path);
    write_manifest("attack", report_path, {model_dir, graph_path, corpus_path}, c);
    std::printf("attack: %zu texts attacked, ASR %.4f\n", report.results.size(), asr(report));
}

// Mean number of differing positions between paired corpora, over the
// subset of obfuscated texts the model classifies correctly.
std::optional<double> mean_variants_in_correct(const Corpus& clean, const Corpus& obf,
                                               const PredictFn& model) {
    if (clean.size() != obf.size()) return std::nullopt;
    size_t correct = 0, diffs = 0;
    for (size_t i = 0; i < obf.texts.size(); ++i) {
        if (clean.texts[i].chars.size() != obf.texts[i].chars.size()) return std::nullopt;
        Prediction p = model(obf.texts[i].chars);
        if (p.label != obf.texts[i].label) continue;
        ++correct;
        for (size_t j = 0; j < obf.texts[i].chars.size(); ++j)
            if (clean.texts[i].chars[j] != obf.texts[i].chars[j]) ++diffs;
    }
    if (correct == 0) return std::nullopt;
    return static_cast<double>(diffs) / static_cast<double>(correct);
}

void append_metric(std::string& table, nlohmann::json& records, const std::string& name,
                   const std::optional<double>& value) {
    char buf[160];
    if (value)
        std::snprintf(buf, sizeof(buf), "%-36s %12.6f\n", name.c_str(), *value);
    else
        std::snprintf(buf, sizeof(buf), "%-36s %12s\n", name.c_str(), "absent");
    table += buf;
    if (value)
        records[name] = *value;
    else
        records[name] = nullptr;
}

void stage_evaluate(const PipelineConfig& c) {
    const std::string model_dir = c.require_string("model_dir");
    require_input(model_dir + "/manifest.json", "model bundle", "train-clf");
    const std::string test_path = c.require_string("test_corpus");
    require_input(test_path, "test corpus", "synth");
    const std::string report_path = c.require_string("attack_report");
    require_input(report_path, "attack report", "attack");
    const std::string atlas_path = c.require_string("atlas");
    require_input(atlas_path, "glyph atlas", "synth-glyphs");
    const std::string lexicon_path = c.require_string("lexicon");
    require_input(lexicon_path, "pinyin lexicon", "");
    const std::string glyph_model_path = c.require_string("glyph_model");
    require_input(glyph_model_path, "glyph model", "train-glyph");
    const std::string eval_path = c.require_string("eval_report");

    ModelBundle bundle = load_bundle(model_dir);
    require(bundle.semantic_table.has_value() || bundle.graph_table.has_value(),
            "bundle has no embedding tables");
    Corpus test = load_corpus(test_path);
    AttackReport attack_report = load_attack_report(report_path);
    GlyphAtlas atlas = load_glyph_atlas(atlas_path);
    PinyinLexicon lex = load_pinyin_lexicon(lexicon_path);
    GlyphModelParams glyph_params = load_glyph_model(glyph_model_path);

    PredictFn model = [&bundle](const std::u32string& chars) { return predict(chars, bundle); };

    std::string table = "metric                                      value\n";
    nlohmann::json records = nlohmann::json::object();
    std::vector<std::string> inputs{model_dir, test_path, report_path,
                                    atlas_path, lexicon_path, glyph_model_path};

    CleanReport clean = clean_eval(model, test);
    append_metric(table, records, "clean_accuracy", clean.accuracy);
    append_metric(table, records, "clean_avg_conf", clean.avg_conf);

    const std::string obf_path = c.get_string("obf_corpus", "");
    if (!obf_path.empty() && file_exists(obf_path)) {
        Corpus obf = load_corpus(obf_path);
        CleanReport obf_report = clean_eval(model, obf);
        append_metric(table, records, "obfuscated_accuracy", obf_report.accuracy);
        append_metric(table, records, "obfuscated_avg_conf", obf_report.avg_conf);
        append_metric(table, records, "obfuscated_variants_in_correct",
                      mean_variants_in_correct(test, obf, model));
        inputs.push_back(obf_path);
    }

    // Semantic similarity uses the bundle's semantic table when present,
    // otherwise the graph table (documented proxy either way).
    const EmbeddingTable& sem_table =
        bundle.semantic_table ? *bundle.semantic_table : *bundle.graph_table;
    RobustnessReport rob = summarize_robustness(attack_report, glyph_params, atlas, lex,
                                                sem_table, perturb_population(c));
    append_metric(table, records, "attack_success_rate", rob.asr);
    append_metric(table, records, "avg_perturbation", rob.avg_perturbation);
    append_metric(table, records, "mean_adversarial_similarity",
                  rob.mean_adversarial_similarity);
    append_metric(table, records, "mean_semantic_similarity_proxy",
                  rob.mean_semantic_similarity);
    append_metric(table, records, "mean_queries_per_attack", rob.mean_queries);
    records["attacked"] = rob.attacked;
    records["successes"] = rob.successes;

    bool any_perturbation = false;
    for (const auto& r : attack_report.results)
        if (!r.perturbed_positions.empty()) any_perturbation = true;
    if (any_perturbation) {
        SensitivityDistribution dist = sensitivity_distribution(attack_report);
        append_metric(table, records, "sensitivity_median_drop", dist.median());
        records["sensitivity_samples"] = dist.samples.size();
        // Two-column plot data: drop value, empirical CDF.
        std::string cdf = "";
        for (size_t i = 0; i < dist.samples.size(); ++i) {
            cdf += format_double(dist.samples[i]);
            cdf += '\t';
            cdf += format_double(static_cast<double>(i + 1) /
                                 static_cast<double>(dist.samples.size()));
            cdf += '\n';
        }
        write_file(eval_path + ".cdf.tsv", cdf);
    }

    write_file(eval_path, table);
    write_file(eval_path + ".jsonl", records.dump() + "\n");
    write_manifest("evaluate", eval_path, inputs, c);
    std::printf("%s", table.c_str());
}

void stage_sweep(const PipelineConfig& c) {
    const std::string model_dir = c.require_string("model_dir");
    require_input(model_dir + "/manifest.json", "model bundle", "train-clf");
    const std::string graph_path = c.require_string("graph");
    require_input(graph_path, "adversarial graph", "build-graph");
    const std::string corpus_path = c.require_string("test_corpus");
    require_input(corpus_path, "test corpus", "synth");
    const std::string sweep_path = c.require_string("sweep_file");

    ModelBundle bundle = load_bundle(model_dir);
    AdversarialGraph g = load_graph(graph_path);
    Corpus corpus = load_corpus(corpus_path);
    AttackConfig base = attack_config(c, derive_seed(c.seed(), "stage:sweep"));
    std::vector<int> budgets = c.get_int_list("sweep.budgets", "0,1,2,3,4");
    require(std::is_sorted(budgets.begin(), budgets.end()),
            "config key 'sweep.budgets' must be ascending");

    PredictFn model = [&bundle](const std::u32string& chars) { return predict(chars, bundle); };
    auto curve = budget_sweep(corpus, model, g, base, budgets, c.workers());
    std::string out;
    for (const auto& [budget, value] : curve) {
        out += std::to_string(budget);
        out += '\t';
        out += format_double(value);
        out += '\n';
    }
    write_file(sweep_path, out);
    write_manifest("sweep", sweep_path, {model_dir, graph_path, corpus_path}, c);
}

void stage_report(const PipelineConfig& c) {
    // Gather every manifest reachable from the configured paths and check
    // the provenance chain: a path's fingerprint must be consistent across
    // all manifests that mention it, and must match the file on disk.
    const std::string report_path = c.require_string("report_file");
    std::vector<std::string> path_keys{"atlas",          "triplets",        "glyph_model",
                                       "graph",          "train_corpus",    "test_corpus",
                                       "obf_corpus",     "graph_embedding", "semantic_embedding",
                                       "model_dir",      "attack_report",   "eval_report",
                                       "sweep_file"};
    struct Claim {
        std::string fingerprint;
        std::string source;
    };
    std::map<std::string, std::vector<Claim>> claims;
    std::vector<std::string> manifest_lines;
    size_t manifests_found = 0;
    for (const auto& key : path_keys) {
        std::string path = c.get_string(key, "");
        if (path.empty() || !file_exists(path + ".manifest")) continue;
        ++manifests_found;
        nlohmann::json m = nlohmann::json::parse(read_file(path + ".manifest"));
        const std::string stage = m.at("stage").get<std::string>();
        claims[path].push_back({m.at("artifact_fingerprint").get<std::string>(), stage});
        for (const auto& [input, fp] : m.at("inputs").items())
            claims[input].push_back({fp.get<std::string>(), stage + " input"});
        char line[512];
        std::snprintf(line, sizeof(line), "%-14s %-40s %s\n", stage.c_str(), path.c_str(),
                      m.at("artifact_fingerprint").get<std::string>().c_str());
        manifest_lines.push_back(line);
    }
    require(manifests_found > 0, "report: no stage manifests found; run the pipeline first");

    for (const auto& [path, list] : claims) {
        for (const auto& claim : list) {
            require(claim.fingerprint == list.front().fingerprint,
                    "provenance mismatch for ", path, ": ", list.front().source, " recorded ",
                    list.front().fingerprint, " but ", claim.source, " recorded ",
                    claim.fingerprint);
        }
        if (file_exists(path)) {
            std::string current = fingerprint_path_hex(path);
            require(current == list.front().fingerprint, "artifact ", path,
                    " changed after its stage ran (manifest ", list.front().fingerprint,
                    ", current ", current, ")");
        }
    }

    std::string out = "pipeline provenance (stage, artifact, fingerprint)\n";
    std::sort(manifest_lines.begin(), manifest_lines.end());
    for (const auto& line : manifest_lines) out += line;
    out += "provenance chain: consistent\n";

    const std::string eval_path = c.get_string("eval_report", "");
    if (!eval_path.empty() && file_exists(eval_path)) {
        out += "\n";
        out += read_file(eval_path);
    }
    const std::string sweep_path = c.get_string("sweep_file", "");
    if (!sweep_path.empty() && file_exists(sweep_path)) {
        out += "\nbudget sweep (budget, ASR)\n";
        out += read_file(sweep_path);
    }
    write_file(report_path, out);
    std::printf("%s", out.c_str());
}

} // namespace

const std::vector<std::string>& pipeline_commands() {
    static const std::vector<std::string> commands{
        "synth-glyphs", "train-glyph", "build-graph", "synth",    "embed-graph",
        "embed-corpus", "train-clf",   "attack",      "evaluate", "sweep",
        "report"};
    return commands;
}

void run_stage(const std::string& command, const PipelineConfig& config) {
    if (command == "synth-glyphs") return stage_synth_glyphs(config);
    if (command == "train-glyph") return stage_train_glyph(config);
    if (command == "build-graph") return stage_build_graph(config);
    if (command == "synth") return stage_synth(config);
    if (command == "embed-graph") return stage_embed_graph(config);
    if (command == "embed-corpus") return stage_embed_corpus(config);
    if (command == "train-clf") return stage_train_clf(config);
    if (command == "attack") return stage_attack(config);
    if (command == "evaluate") return stage_evaluate(config);
    if (command == "sweep") return stage_sweep(config);
    if (command == "report") return stage_report(config);
    fail("unknown command '", command, "'");
}

} // namespace advgraph
