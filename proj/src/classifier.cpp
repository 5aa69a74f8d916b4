#include "advgraph/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "advgraph/common.hpp"
#include "advgraph/io.hpp"
#include "advgraph/rng.hpp"
#include "advgraph/tensor_io.hpp"
#include "advgraph/utf8.hpp"

namespace advgraph {

namespace {

// Embedded sequence, right-padded with zero rows up to the largest filter
// width. Unknown characters also map to the zero row.
std::vector<double> embed_sequence(const std::u32string& chars, const EmbeddingTable& table,
                                   int max_width, size_t* padded_len_out) {
    const int d = table.dim();
    const size_t padded = std::max(chars.size(), static_cast<size_t>(max_width));
    std::vector<double> x(padded * static_cast<size_t>(d), 0.0);
    for (size_t i = 0; i < chars.size(); ++i) {
        auto id = table.try_token_id(chars[i]);
        if (!id) continue;
        const double* row = table.input_row(*id);
        std::copy(row, row + d, x.begin() + static_cast<long>(i * static_cast<size_t>(d)));
    }
    *padded_len_out = padded;
    return x;
}

struct EncoderCache {
    std::vector<double> embedded;  // padded_len x d
    size_t padded_len = 0;
    // Per width bank: pre-activations [nf][positions] and argmax positions.
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<int>> argmax;
    std::vector<double> output;
};

EncoderCache encode_cached(const std::u32string& chars, const EmbeddingTable& table,
                           const UnimodalEncoderParams& enc) {
    require(!chars.empty(), "encode: empty sequence");
    require(enc.embed_dim == table.dim(), "encoder expects embedding dim ", enc.embed_dim,
            ", table has ", table.dim());
    const int d = enc.embed_dim;
    const int nf = enc.config.filters_per_width;
    int max_width = 1;
    for (int w : enc.config.filter_widths) {
        require(w >= 1, "filter width must be >= 1");
        max_width = std::max(max_width, w);
    }
    EncoderCache cache;
    cache.embedded = embed_sequence(chars, table, max_width, &cache.padded_len);
    cache.output.reserve(static_cast<size_t>(enc.config.output_dim()));
    for (size_t wi = 0; wi < enc.config.filter_widths.size(); ++wi) {
        const int width = enc.config.filter_widths[wi];
        const int positions = static_cast<int>(cache.padded_len) - width + 1;
        const auto& bank = enc.filters[wi];
        const auto& bias = enc.biases[wi];
        std::vector<double> pre(static_cast<size_t>(nf) * positions);
        std::vector<int> argmax(static_cast<size_t>(nf));
        for (int f = 0; f < nf; ++f) {
            const double* fw = &bank[static_cast<size_t>(f) * width * d];
            double best = -1e300;
            int best_t = 0;
            for (int t = 0; t < positions; ++t) {
                double acc = bias[static_cast<size_t>(f)];
                const double* xrow = &cache.embedded[static_cast<size_t>(t) * d];
                for (int u = 0; u < width * d; ++u) acc += fw[u] * xrow[u];
                pre[static_cast<size_t>(f) * positions + t] = acc;
                if (acc > best) {
                    best = acc;
                    best_t = t;
                }
            }
            argmax[static_cast<size_t>(f)] = best_t;
            cache.output.push_back(std::max(0.0, best));
        }
        cache.pre.push_back(std::move(pre));
        cache.argmax.push_back(std::move(argmax));
    }
    return cache;
}

void encoder_backward(const UnimodalEncoderParams& enc, const EncoderCache& cache,
                      const double* d_out, UnimodalEncoderParams& grad) {
    const int d = enc.embed_dim;
    const int nf = enc.config.filters_per_width;
    int offset = 0;
    for (size_t wi = 0; wi < enc.config.filter_widths.size(); ++wi) {
        const int width = enc.config.filter_widths[wi];
        const int positions = static_cast<int>(cache.padded_len) - width + 1;
        for (int f = 0; f < nf; ++f) {
            const double g = d_out[offset + f];
            if (g == 0.0) continue;
            const int t = cache.argmax[wi][static_cast<size_t>(f)];
            if (cache.pre[wi][static_cast<size_t>(f) * positions + t] <= 0.0) continue;
            grad.biases[wi][static_cast<size_t>(f)] += g;
            double* gw = &grad.filters[wi][static_cast<size_t>(f) * width * d];
            const double* xrow = &cache.embedded[static_cast<size_t>(t) * d];
            for (int u = 0; u < width * d; ++u) gw[u] += g * xrow[u];
        }
        offset += nf;
    }
}

UnimodalEncoderParams init_encoder(const EncoderConfig& config, int embed_dim, Rng& rng) {
    UnimodalEncoderParams enc;
    enc.config = config;
    enc.embed_dim = embed_dim;
    require(config.filters_per_width >= 1, "filters_per_width must be >= 1");
    require(!config.filter_widths.empty(), "encoder needs at least one filter width");
    for (int width : config.filter_widths) {
        require(width >= 1, "filter width must be >= 1");
        const size_t n = static_cast<size_t>(config.filters_per_width) * width * embed_dim;
        std::vector<double> bank(n);
        double scale = std::sqrt(2.0 / (static_cast<double>(width) * embed_dim));
        for (auto& v : bank) v = rng.next_normal() * scale;
        enc.filters.push_back(std::move(bank));
        enc.biases.emplace_back(static_cast<size_t>(config.filters_per_width), 0.0);
    }
    return enc;
}

UnimodalEncoderParams zero_like(const UnimodalEncoderParams& enc) {
    UnimodalEncoderParams z;
    z.config = enc.config;
    z.embed_dim = enc.embed_dim;
    for (const auto& f : enc.filters) z.filters.emplace_back(f.size(), 0.0);
    for (const auto& b : enc.biases) z.biases.emplace_back(b.size(), 0.0);
    return z;
}

ClassifierParams zero_like(const ClassifierParams& p) {
    ClassifierParams z;
    z.class_count = p.class_count;
    if (p.graph_encoder) z.graph_encoder = zero_like(*p.graph_encoder);
    if (p.semantic_encoder) z.semantic_encoder = zero_like(*p.semantic_encoder);
    z.head_w.assign(p.head_w.size(), 0.0);
    z.head_b.assign(p.head_b.size(), 0.0);
    return z;
}

std::vector<double> softmax_stable(const std::vector<double>& logits) {
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

} // namespace

int ClassifierParams::fused_dim() const {
    int dim = 0;
    if (graph_encoder) dim += graph_encoder->config.output_dim();
    if (semantic_encoder) dim += semantic_encoder->config.output_dim();
    return dim;
}

std::vector<double> encode(const std::u32string& chars, const EmbeddingTable& table,
                           const UnimodalEncoderParams& enc) {
    return encode_cached(chars, table, enc).output;
}

std::vector<double> fuse(const std::vector<double>& graph_vec,
                         const std::vector<double>& semantic_vec) {
    std::vector<double> out;
    out.reserve(graph_vec.size() + semantic_vec.size());
    out.insert(out.end(), graph_vec.begin(), graph_vec.end());
    out.insert(out.end(), semantic_vec.begin(), semantic_vec.end());
    return out;
}

Prediction classify(const std::vector<double>& fused, const ClassifierParams& params) {
    const int c = params.class_count;
    require(c >= 1, "classifier has no classes");
    require(static_cast<size_t>(params.fused_dim()) == fused.size(),
            "fused vector length ", fused.size(), " does not match head input ",
            params.fused_dim());
    std::vector<double> logits(static_cast<size_t>(c));
    for (int i = 0; i < c; ++i) {
        double acc = params.head_b[static_cast<size_t>(i)];
        const double* wrow = &params.head_w[static_cast<size_t>(i) * fused.size()];
        for (size_t j = 0; j < fused.size(); ++j) acc += wrow[j] * fused[j];
        require(std::isfinite(acc), "non-finite logit");
        logits[static_cast<size_t>(i)] = acc;
    }
    Prediction pred;
    pred.distribution = softmax_stable(logits);
    pred.label = 0;
    for (int i = 1; i < c; ++i)
        if (pred.distribution[static_cast<size_t>(i)] >
            pred.distribution[static_cast<size_t>(pred.label)])
            pred.label = i;
    pred.confidence = pred.distribution[static_cast<size_t>(pred.label)];
    return pred;
}

Prediction predict(const std::u32string& chars, const ModelBundle& bundle) {
    require(!chars.empty(), "predict: empty text");
    std::vector<double> eg, es;
    if (bundle.params.graph_encoder) {
        require(bundle.graph_table.has_value(), "bundle has a graph encoder but no graph table");
        eg = encode(chars, *bundle.graph_table, *bundle.params.graph_encoder);
    }
    if (bundle.params.semantic_encoder) {
        require(bundle.semantic_table.has_value(),
                "bundle has a semantic encoder but no semantic table");
        es = encode(chars, *bundle.semantic_table, *bundle.params.semantic_encoder);
    }
    return classify(fuse(eg, es), bundle.params);
}

std::vector<double> flatten_classifier_params(const ClassifierParams& params) {
    std::vector<double> flat;
    auto push_encoder = [&flat](const UnimodalEncoderParams& enc) {
        for (const auto& f : enc.filters) flat.insert(flat.end(), f.begin(), f.end());
        for (const auto& b : enc.biases) flat.insert(flat.end(), b.begin(), b.end());
    };
    if (params.graph_encoder) push_encoder(*params.graph_encoder);
    if (params.semantic_encoder) push_encoder(*params.semantic_encoder);
    flat.insert(flat.end(), params.head_w.begin(), params.head_w.end());
    flat.insert(flat.end(), params.head_b.begin(), params.head_b.end());
    return flat;
}

ClassifierParams unflatten_classifier_params(const ClassifierParams& reference,
                                             const std::vector<double>& flat) {
    ClassifierParams p = reference;
    size_t pos = 0;
    auto take = [&](std::vector<double>& dst) {
        require(pos + dst.size() <= flat.size(), "flat parameter vector too short");
        std::copy(flat.begin() + static_cast<long>(pos),
                  flat.begin() + static_cast<long>(pos + dst.size()), dst.begin());
        pos += dst.size();
    };
    auto take_encoder = [&](UnimodalEncoderParams& enc) {
        for (auto& f : enc.filters) take(f);
        for (auto& b : enc.biases) take(b);
    };
    if (p.graph_encoder) take_encoder(*p.graph_encoder);
    if (p.semantic_encoder) take_encoder(*p.semantic_encoder);
    take(p.head_w);
    take(p.head_b);
    require(pos == flat.size(), "flat parameter vector too long");
    return p;
}

double classifier_loss_and_grad(const ClassifierParams& params, const EmbeddingTable* graph_table,
                                const EmbeddingTable* semantic_table, const LabeledText& example,
                                std::vector<double>* grad_out) {
    require(example.label >= 0 && example.label < params.class_count,
            "label out of range: ", example.label);
    std::optional<EncoderCache> gcache, scache;
    std::vector<double> eg, es;
    if (params.graph_encoder) {
        require(graph_table != nullptr, "graph encoder present but no graph table");
        gcache = encode_cached(example.chars, *graph_table, *params.graph_encoder);
        eg = gcache->output;
    }
    if (params.semantic_encoder) {
        require(semantic_table != nullptr, "semantic encoder present but no semantic table");
        scache = encode_cached(example.chars, *semantic_table, *params.semantic_encoder);
        es = scache->output;
    }
    std::vector<double> fused = fuse(eg, es);
    Prediction pred = classify(fused, params);
    const double loss =
        -std::log(std::max(pred.distribution[static_cast<size_t>(example.label)], 1e-300));
    if (!grad_out) return loss;

    ClassifierParams grad = zero_like(params);
    const int c = params.class_count;
    std::vector<double> d_fused(fused.size(), 0.0);
    for (int i = 0; i < c; ++i) {
        double g = pred.distribution[static_cast<size_t>(i)] - (i == example.label ? 1.0 : 0.0);
        grad.head_b[static_cast<size_t>(i)] += g;
        double* gw = &grad.head_w[static_cast<size_t>(i) * fused.size()];
        const double* w = &params.head_w[static_cast<size_t>(i) * fused.size()];
        for (size_t j = 0; j < fused.size(); ++j) {
            gw[j] += g * fused[j];
            d_fused[j] += g * w[j];
        }
    }
    size_t offset = 0;
    if (params.graph_encoder) {
        encoder_backward(*params.graph_encoder, *gcache, d_fused.data(), *grad.graph_encoder);
        offset += eg.size();
    }
    if (params.semantic_encoder) {
        encoder_backward(*params.semantic_encoder, *scache, d_fused.data() + offset,
                         *grad.semantic_encoder);
    }
    *grad_out = flatten_classifier_params(grad);
    return loss;
}

ClassifierParams train_classifier(const Corpus& train, const EmbeddingTable* graph_table,
                                  const EmbeddingTable* semantic_table,
                                  const ClassifierTrainConfig& config,
                                  ClassifierTrainStats* stats) {
    require(!train.texts.empty(), "train_classifier: empty corpus");
    require(config.class_count >= 2, "train_classifier: need at least 2 classes");
    require(config.lr > 0.0, "train_classifier: lr must be positive");
    require(config.epochs >= 0, "train_classifier: epochs must be >= 0");
    require(config.batch >= 1, "train_classifier: batch must be >= 1");
    require(config.use_graph || config.use_semantic,
            "train_classifier: at least one branch must be enabled");
    if (config.use_graph)
        require(graph_table != nullptr, "train_classifier: graph branch enabled without a table");
    if (config.use_semantic)
        require(semantic_table != nullptr,
                "train_classifier: semantic branch enabled without a table");
    for (const auto& t : train.texts)
        require(t.label >= 0 && t.label < config.class_count,
                "label out of range before training: ", t.label);

    ClassifierParams params;
    params.class_count = config.class_count;
    Rng rng(derive_seed(config.seed, "clf-init"));
    if (config.use_graph)
        params.graph_encoder = init_encoder(config.encoder, graph_table->dim(), rng);
    if (config.use_semantic)
        params.semantic_encoder = init_encoder(config.encoder, semantic_table->dim(), rng);
    const size_t fused = static_cast<size_t>(params.fused_dim());
    params.head_w.resize(static_cast<size_t>(config.class_count) * fused);
    double hscale = std::sqrt(1.0 / static_cast<double>(fused));
    for (auto& v : params.head_w) v = rng.next_normal() * hscale;
    params.head_b.assign(static_cast<size_t>(config.class_count), 0.0);

    const EmbeddingTable* gt = config.use_graph ? graph_table : nullptr;
    const EmbeddingTable* st = config.use_semantic ? semantic_table : nullptr;

    auto mean_loss = [&]() {
        double acc = 0.0;
        for (const auto& t : train.texts)
            acc += classifier_loss_and_grad(params, gt, st, t, nullptr);
        return acc / static_cast<double>(train.texts.size());
    };
    if (stats) {
        stats->initial_loss = mean_loss();
        stats->epoch_batch_mean_loss.clear();
    }

    std::vector<size_t> order(train.texts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> grad;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng erng(derive_seed(config.seed, "clf-epoch", static_cast<uint64_t>(epoch)));
        erng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch)) {
            const size_t end =
                std::min(order.size(), start + static_cast<size_t>(config.batch));
            std::vector<double> flat = flatten_classifier_params(params);
            std::vector<double> grad_sum(flat.size(), 0.0);
            for (size_t i = start; i < end; ++i) {
                epoch_loss +=
                    classifier_loss_and_grad(params, gt, st, train.texts[order[i]], &grad);
                for (size_t j = 0; j < grad.size(); ++j) grad_sum[j] += grad[j];
            }
            const double scale = config.lr / static_cast<double>(end - start);
            for (size_t j = 0; j < flat.size(); ++j) flat[j] -= scale * grad_sum[j];
            params = unflatten_classifier_params(params, flat);
        }
        if (stats)
            stats->epoch_batch_mean_loss.push_back(epoch_loss /
                                                   static_cast<double>(train.texts.size()));
    }
    if (stats) stats->final_loss = mean_loss();
    return params;
}

namespace {

void encoder_to_tensors(const std::string& prefix, const UnimodalEncoderParams& enc,
                        TensorFile& tf) {
    for (size_t wi = 0; wi < enc.config.filter_widths.size(); ++wi) {
        const int width = enc.config.filter_widths[wi];
        Tensor w{{static_cast<size_t>(enc.config.filters_per_width), static_cast<size_t>(width),
                  static_cast<size_t>(enc.embed_dim)},
                 enc.filters[wi]};
        Tensor b{{static_cast<size_t>(enc.config.filters_per_width)}, enc.biases[wi]};
        tf.tensors.emplace_back(prefix + ".conv" + std::to_string(width) + ".w", std::move(w));
        tf.tensors.emplace_back(prefix + ".conv" + std::to_string(width) + ".b", std::move(b));
    }
}

UnimodalEncoderParams encoder_from_tensors(const std::string& prefix,
                                           const std::vector<int>& widths, int filters_per_width,
                                           int embed_dim, const TensorFile& tf) {
    UnimodalEncoderParams enc;
    enc.config.filter_widths = widths;
    enc.config.filters_per_width = filters_per_width;
    enc.embed_dim = embed_dim;
    for (int width : widths) {
        enc.filters.push_back(tf.get(prefix + ".conv" + std::to_string(width) + ".w").data);
        enc.biases.push_back(tf.get(prefix + ".conv" + std::to_string(width) + ".b").data);
    }
    return enc;
}

} // namespace

void save_classifier_params(const ClassifierParams& params, const std::string& path) {
    TensorFile tf;
    tf.meta["kind"] = {"classifier"};
    tf.meta["class_count"] = {std::to_string(params.class_count)};
    const EncoderConfig* cfg = nullptr;
    if (params.graph_encoder) cfg = &params.graph_encoder->config;
    if (params.semantic_encoder) cfg = &params.semantic_encoder->config;
    require(cfg != nullptr, "classifier has no encoders");
    std::vector<std::string> widths;
    for (int w : cfg->filter_widths) widths.push_back(std::to_string(w));
    tf.meta["filter_widths"] = widths;
    tf.meta["filters_per_width"] = {std::to_string(cfg->filters_per_width)};
    tf.meta["use_graph"] = {params.graph_encoder ? "1" : "0"};
    tf.meta["use_semantic"] = {params.semantic_encoder ? "1" : "0"};
    if (params.graph_encoder) {
        tf.meta["graph_dim"] = {std::to_string(params.graph_encoder->embed_dim)};
        encoder_to_tensors("g", *params.graph_encoder, tf);
    }
    if (params.semantic_encoder) {
        tf.meta["semantic_dim"] = {std::to_string(params.semantic_encoder->embed_dim)};
        encoder_to_tensors("s", *params.semantic_encoder, tf);
    }
    Tensor hw{{static_cast<size_t>(params.class_count), static_cast<size_t>(params.fused_dim())},
              params.head_w};
    Tensor hb{{static_cast<size_t>(params.class_count)}, params.head_b};
    tf.tensors.emplace_back("head.w", std::move(hw));
    tf.tensors.emplace_back("head.b", std::move(hb));
    save_tensor_file(tf, path);
}

ClassifierParams load_classifier_params(const std::string& path) {
    TensorFile tf = load_tensor_file(path);
    auto kind = tf.meta.find("kind");
    require(kind != tf.meta.end() && kind->second == std::vector<std::string>{"classifier"},
            "not a classifier parameter file: ", path);
    ClassifierParams p;
    p.class_count = static_cast<int>(parse_int(tf.meta.at("class_count").at(0), path));
    std::vector<int> widths;
    for (const auto& w : tf.meta.at("filter_widths"))
        widths.push_back(static_cast<int>(parse_int(w, path)));
    int fpw = static_cast<int>(parse_int(tf.meta.at("filters_per_width").at(0), path));
    if (tf.meta.at("use_graph").at(0) == "1") {
        int dim = static_cast<int>(parse_int(tf.meta.at("graph_dim").at(0), path));
        p.graph_encoder = encoder_from_tensors("g", widths, fpw, dim, tf);
    }
    if (tf.meta.at("use_semantic").at(0) == "1") {
        int dim = static_cast<int>(parse_int(tf.meta.at("semantic_dim").at(0), path));
        p.semantic_encoder = encoder_from_tensors("s", widths, fpw, dim, tf);
    }
    p.head_w = tf.get("head.w").data;
    p.head_b = tf.get("head.b").data;
    require(p.head_w.size() ==
                static_cast<size_t>(p.class_count) * static_cast<size_t>(p.fused_dim()),
            "head tensor size mismatch in ", path);
    return p;
}

void save_bundle(const ModelBundle& bundle, const std::string& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["bundle_version"] = 1;
    manifest["class_count"] = bundle.params.class_count;
    manifest["fused_dim"] = bundle.params.fused_dim();
    if (bundle.graph_table) {
        save_embedding(*bundle.graph_table, dir + "/graph.emb");
        manifest["graph"] = {{"file", "graph.emb"},
                             {"dim", bundle.graph_table->dim()},
                             {"vocab", bundle.graph_table->vocab_size()},
                             {"fingerprint", fingerprint_hex(fingerprint_file(dir + "/graph.emb"))}};
    } else {
        manifest["graph"] = nullptr;
    }
    if (bundle.semantic_table) {
        save_embedding(*bundle.semantic_table, dir + "/semantic.emb");
        manifest["semantic"] = {
            {"file", "semantic.emb"},
            {"dim", bundle.semantic_table->dim()},
            {"vocab", bundle.semantic_table->vocab_size()},
            {"fingerprint", fingerprint_hex(fingerprint_file(dir + "/semantic.emb"))}};
    } else {
        manifest["semantic"] = nullptr;
    }
    save_classifier_params(bundle.params, dir + "/classifier.params");
    manifest["params_fingerprint"] = fingerprint_hex(fingerprint_file(dir + "/classifier.params"));
    write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

ModelBundle load_bundle(const std::string& dir) {
    require(file_exists(dir + "/manifest.json"), "missing bundle manifest: ", dir,
            "/manifest.json");
    nlohmann::json manifest = nlohmann::json::parse(read_file(dir + "/manifest.json"));
    ModelBundle bundle;
    if (!manifest.at("graph").is_null()) {
        const std::string file = dir + "/" + manifest["graph"].at("file").get<std::string>();
        require(fingerprint_hex(fingerprint_file(file)) ==
                    manifest["graph"].at("fingerprint").get<std::string>(),
                "graph embedding fingerprint mismatch in bundle ", dir);
        bundle.graph_table = load_embedding(file);
    }
    if (!manifest.at("semantic").is_null()) {
        const std::string file = dir + "/" + manifest["semantic"].at("file").get<std::string>();
        require(fingerprint_hex(fingerprint_file(file)) ==
                    manifest["semantic"].at("fingerprint").get<std::string>(),
                "semantic embedding fingerprint mismatch in bundle ", dir);
        bundle.semantic_table = load_embedding(file);
    }
    bundle.params = load_classifier_params(dir + "/classifier.params");
    require(fingerprint_hex(fingerprint_file(dir + "/classifier.params")) ==
                manifest.at("params_fingerprint").get<std::string>(),
            "classifier parameter fingerprint mismatch in bundle ", dir);
    return bundle;
}

} // namespace advgraph
