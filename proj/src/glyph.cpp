#include "advgraph/glyph.hpp"

#include <algorithm>
#include <cmath>

#include "advgraph/common.hpp"
#include "advgraph/io.hpp"
#include "advgraph/rng.hpp"
#include "advgraph/tensor_io.hpp"
#include "advgraph/utf8.hpp"

namespace advgraph {

void GlyphAtlas::add(const GlyphBitmap& bitmap) {
    auto [it, inserted] = entries_.emplace(bitmap.ch, bitmap);
    require(inserted, "duplicate character in atlas: '", utf8_encode(bitmap.ch), "'");
}

const GlyphBitmap& GlyphAtlas::bitmap(char32_t ch) const {
    auto it = entries_.find(ch);
    if (it == entries_.end()) fail("character not in atlas: '", utf8_encode(ch), "'");
    return it->second;
}

std::vector<char32_t> GlyphAtlas::characters() const {
    std::vector<char32_t> out;
    out.reserve(entries_.size());
    for (const auto& [ch, _] : entries_) out.push_back(ch);
    return out;
}

GlyphAtlas load_glyph_atlas(const std::string& path) {
    auto lines = split_lines(read_file(path));
    require(!lines.empty(), "empty atlas file: ", path);
    auto header = split_fields(lines[0], ' ');
    require(header.size() == 2 && header[0] == "GLYPH24",
            "malformed atlas header in ", path, " (expected 'GLYPH24 <count>')");
    size_t count = static_cast<size_t>(parse_int(header[1], path + " header"));
    GlyphAtlas atlas;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        auto fields = split_fields(lines[i], '\t');
        require(fields.size() == 2, "expected <char><TAB><pixels> at ", where);
        std::u32string ch = utf8_decode(fields[0]);
        require(ch.size() == 1, "character field must be a single code point at ", where);
        auto values = split_fields(fields[1], ' ');
        require(values.size() == kGlyphPixels, "expected ", kGlyphPixels, " pixels, got ",
                values.size(), " at ", where);
        GlyphBitmap bm;
        bm.ch = ch[0];
        for (size_t k = 0; k < values.size(); ++k) {
            long long v = parse_int(values[k], where);
            require(v >= 0 && v <= 255, "pixel value out of range at ", where);
            bm.pixels[k] = static_cast<uint8_t>(v);
        }
        if (atlas.contains(bm.ch))
            fail("duplicate character '", fields[0], "' at ", where);
        atlas.add(bm);
    }
    require(atlas.size() == count, "atlas header declares ", count, " characters but file has ",
            atlas.size(), ": ", path);
    return atlas;
}

void save_glyph_atlas(const GlyphAtlas& atlas, const std::string& path) {
    std::string out = "GLYPH24 " + std::to_string(atlas.size()) + "\n";
    for (char32_t ch : atlas.characters()) {
        const GlyphBitmap& bm = atlas.bitmap(ch);
        out += utf8_encode(ch);
        out += '\t';
        for (int k = 0; k < kGlyphPixels; ++k) {
            if (k) out += ' ';
            out += std::to_string(bm.pixels[k]);
        }
        out += '\n';
    }
    write_file(path, out);
}

std::vector<GlyphTriplet> load_glyph_triplets(const std::string& path) {
    std::vector<GlyphTriplet> out;
    auto lines = split_lines(read_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty() || lines[i][0] == '#') continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        auto fields = split_fields(lines[i], '\t');
        require(fields.size() == 3, "expected three tab-separated characters at ", where);
        GlyphTriplet t;
        char32_t* slots[3] = {&t.anchor, &t.positive, &t.negative};
        for (int k = 0; k < 3; ++k) {
            std::u32string ch = utf8_decode(fields[k]);
            require(ch.size() == 1, "field must be a single code point at ", where);
            *slots[k] = ch[0];
        }
        require(t.anchor != t.negative, "anchor equals negative at ", where);
        out.push_back(t);
    }
    return out;
}

void save_glyph_triplets(const std::vector<GlyphTriplet>& triplets, const std::string& path) {
    std::string out;
    for (const auto& t : triplets) {
        out += utf8_encode(t.anchor);
        out += '\t';
        out += utf8_encode(t.positive);
        out += '\t';
        out += utf8_encode(t.negative);
        out += '\n';
    }
    write_file(path, out);
}

namespace {

constexpr int kKernel = 3;

struct LayerShape {
    int in_ch, in_side;
    int out_ch;
    int conv_side;  // in_side - 2
    int pool_side;  // conv_side / 2
};

std::vector<LayerShape> layer_shapes(const GlyphModelConfig& config) {
    std::vector<LayerShape> shapes;
    int side = kGlyphSide;
    int ch = 1;
    for (int out_ch : config.conv_channels) {
        require(out_ch > 0, "conv channel count must be positive");
        require(side >= kKernel, "glyph model too deep for 24x24 input");
        LayerShape s;
        s.in_ch = ch;
        s.in_side = side;
        s.out_ch = out_ch;
        s.conv_side = side - (kKernel - 1);
        s.pool_side = s.conv_side / 2;
        require(s.pool_side >= 1, "glyph model too deep for 24x24 input");
        shapes.push_back(s);
        side = s.pool_side;
        ch = out_ch;
    }
    return shapes;
}

size_t flat_size(const GlyphModelConfig& config) {
    auto shapes = layer_shapes(config);
    if (shapes.empty()) return static_cast<size_t>(kGlyphPixels);
    const auto& last = shapes.back();
    return static_cast<size_t>(last.out_ch) * last.pool_side * last.pool_side;
}

std::vector<double> bitmap_input(const GlyphBitmap& bm) {
    std::vector<double> in(kGlyphPixels);
    for (int i = 0; i < kGlyphPixels; ++i) in[i] = bm.pixels[i] / 255.0;
    return in;
}

void validate_finite(const GlyphModelParams& p) {
    auto check = [](const std::vector<double>& v) {
        for (double x : v)
            require(std::isfinite(x), "non-finite glyph model parameter");
    };
    for (const auto& w : p.conv_weights) check(w);
    for (const auto& b : p.conv_biases) check(b);
    check(p.dense);
}

struct ForwardCache {
    // Per layer: input map, pre-ReLU conv map, pooled map, argmax into conv map.
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> conv_pre;
    std::vector<std::vector<double>> pooled;
    std::vector<std::vector<int>> pool_argmax;
    std::vector<double> flat;
    std::vector<double> output;
};

ForwardCache forward_cached(const GlyphBitmap& bm, const GlyphModelParams& p) {
    auto shapes = layer_shapes(p.config);
    ForwardCache cache;
    std::vector<double> cur = bitmap_input(bm);
    for (size_t l = 0; l < shapes.size(); ++l) {
        const LayerShape& s = shapes[l];
        const auto& w = p.conv_weights[l];
        const auto& b = p.conv_biases[l];
        const int cs = s.conv_side, is = s.in_side;
        std::vector<double> conv(static_cast<size_t>(s.out_ch) * cs * cs);
        for (int oc = 0; oc < s.out_ch; ++oc) {
            for (int y = 0; y < cs; ++y) {
                for (int x = 0; x < cs; ++x) {
                    double acc = b[oc];
                    for (int ic = 0; ic < s.in_ch; ++ic) {
                        const double* wbase =
                            &w[((static_cast<size_t>(oc) * s.in_ch + ic) * kKernel) * kKernel];
                        const double* ibase = &cur[static_cast<size_t>(ic) * is * is];
                        for (int ky = 0; ky < kKernel; ++ky)
                            for (int kx = 0; kx < kKernel; ++kx)
                                acc += wbase[ky * kKernel + kx] * ibase[(y + ky) * is + (x + kx)];
                    }
                    conv[(static_cast<size_t>(oc) * cs + y) * cs + x] = acc;
                }
            }
        }
        const int ps = s.pool_side;
        std::vector<double> pooled(static_cast<size_t>(s.out_ch) * ps * ps);
        std::vector<int> argmax(pooled.size());
        for (int oc = 0; oc < s.out_ch; ++oc) {
            for (int py = 0; py < ps; ++py) {
                for (int px = 0; px < ps; ++px) {
                    double best = -1.0;  // ReLU output is >= 0
                    int best_idx = -1;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            int idx = (oc * cs + (2 * py + dy)) * cs + (2 * px + dx);
                            double v = std::max(0.0, conv[idx]);
                            if (v > best) {
                                best = v;
                                best_idx = idx;
                            }
                        }
                    }
                    pooled[(static_cast<size_t>(oc) * ps + py) * ps + px] = best;
                    argmax[(static_cast<size_t>(oc) * ps + py) * ps + px] = best_idx;
                }
            }
        }
        cache.inputs.push_back(std::move(cur));
        cache.conv_pre.push_back(std::move(conv));
        cache.pool_argmax.push_back(std::move(argmax));
        cache.pooled.push_back(pooled);
        cur = std::move(pooled);
    }
    cache.flat = cur;
    const size_t fs = cache.flat.size();
    const int d = p.config.output_dim;
    cache.output.assign(d, 0.0);
    for (int o = 0; o < d; ++o) {
        double acc = 0.0;
        const double* wrow = &p.dense[static_cast<size_t>(o) * fs];
        for (size_t j = 0; j < fs; ++j) acc += wrow[j] * cache.flat[j];
        cache.output[o] = acc;
    }
    return cache;
}

// Accumulates parameter gradients for one upstream gradient d_out; the
// returned input gradient is discarded at the bitmap boundary.
void backward_accumulate(const GlyphModelParams& p, const ForwardCache& cache,
                         const std::vector<double>& d_out, GlyphModelParams& grad) {
    auto shapes = layer_shapes(p.config);
    const size_t fs = cache.flat.size();
    std::vector<double> d_flat(fs, 0.0);
    for (int o = 0; o < p.config.output_dim; ++o) {
        const double g = d_out[o];
        const double* wrow = &p.dense[static_cast<size_t>(o) * fs];
        double* grow = &grad.dense[static_cast<size_t>(o) * fs];
        for (size_t j = 0; j < fs; ++j) {
            grow[j] += g * cache.flat[j];
            d_flat[j] += g * wrow[j];
        }
    }
    std::vector<double> d_cur = std::move(d_flat);
    for (int l = static_cast<int>(shapes.size()) - 1; l >= 0; --l) {
        const LayerShape& s = shapes[l];
        const int cs = s.conv_side, is = s.in_side, ps = s.pool_side;
        // Pool + ReLU backward: gradient lands on the winning conv cell if
        // that cell was strictly positive.
        std::vector<double> d_conv(static_cast<size_t>(s.out_ch) * cs * cs, 0.0);
        for (size_t i = 0; i < d_cur.size(); ++i) {
            int idx = cache.pool_argmax[l][i];
            if (cache.conv_pre[l][idx] > 0.0) d_conv[idx] += d_cur[i];
        }
        (void)ps;
        std::vector<double> d_in(static_cast<size_t>(s.in_ch) * is * is, 0.0);
        const auto& w = p.conv_weights[l];
        auto& gw = grad.conv_weights[l];
        auto& gb = grad.conv_biases[l];
        const auto& in = cache.inputs[l];
        for (int oc = 0; oc < s.out_ch; ++oc) {
            for (int y = 0; y < cs; ++y) {
                for (int x = 0; x < cs; ++x) {
                    const double g = d_conv[(static_cast<size_t>(oc) * cs + y) * cs + x];
                    if (g == 0.0) continue;
                    gb[oc] += g;
                    for (int ic = 0; ic < s.in_ch; ++ic) {
                        const size_t wbase =
                            ((static_cast<size_t>(oc) * s.in_ch + ic) * kKernel) * kKernel;
                        const size_t ibase = static_cast<size_t>(ic) * is * is;
                        for (int ky = 0; ky < kKernel; ++ky) {
                            for (int kx = 0; kx < kKernel; ++kx) {
                                gw[wbase + ky * kKernel + kx] +=
                                    g * in[ibase + (y + ky) * is + (x + kx)];
                                d_in[ibase + (y + ky) * is + (x + kx)] +=
                                    g * w[wbase + ky * kKernel + kx];
                            }
                        }
                    }
                }
            }
        }
        d_cur = std::move(d_in);
    }
}

GlyphModelParams zero_like(const GlyphModelParams& p) {
    GlyphModelParams z;
    z.config = p.config;
    for (const auto& w : p.conv_weights) z.conv_weights.emplace_back(w.size(), 0.0);
    for (const auto& b : p.conv_biases) z.conv_biases.emplace_back(b.size(), 0.0);
    z.dense.assign(p.dense.size(), 0.0);
    return z;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double cosine_or_zero(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

} // namespace

size_t GlyphModelParams::parameter_count() const {
    size_t n = dense.size();
    for (const auto& w : conv_weights) n += w.size();
    for (const auto& b : conv_biases) n += b.size();
    return n;
}

GlyphModelParams init_glyph_model(const GlyphModelConfig& config, uint64_t seed) {
    require(config.output_dim >= 1, "glyph output dimension must be >= 1");
    auto shapes = layer_shapes(config);
    GlyphModelParams p;
    p.config = config;
    Rng rng(seed);
    for (const auto& s : shapes) {
        double scale = std::sqrt(2.0 / (s.in_ch * kKernel * kKernel));
        std::vector<double> w(static_cast<size_t>(s.out_ch) * s.in_ch * kKernel * kKernel);
        for (auto& v : w) v = rng.next_normal() * scale;
        p.conv_weights.push_back(std::move(w));
        p.conv_biases.emplace_back(s.out_ch, 0.0);
    }
    const size_t fs = flat_size(config);
    p.dense.resize(static_cast<size_t>(config.output_dim) * fs);
    double dscale = std::sqrt(1.0 / static_cast<double>(fs));
    for (auto& v : p.dense) v = rng.next_normal() * dscale;
    return p;
}

void save_glyph_model(const GlyphModelParams& params, const std::string& path) {
    TensorFile tf;
    std::vector<std::string> channels;
    for (int c : params.config.conv_channels) channels.push_back(std::to_string(c));
    tf.meta["kind"] = {"glyph-model"};
    tf.meta["conv_channels"] = channels;
    tf.meta["output_dim"] = {std::to_string(params.config.output_dim)};
    auto shapes = layer_shapes(params.config);
    for (size_t l = 0; l < shapes.size(); ++l) {
        const auto& s = shapes[l];
        Tensor w{{static_cast<size_t>(s.out_ch), static_cast<size_t>(s.in_ch), kKernel, kKernel},
                 params.conv_weights[l]};
        Tensor b{{static_cast<size_t>(s.out_ch)}, params.conv_biases[l]};
        tf.tensors.emplace_back("conv" + std::to_string(l) + ".w", std::move(w));
        tf.tensors.emplace_back("conv" + std::to_string(l) + ".b", std::move(b));
    }
    Tensor d{{static_cast<size_t>(params.config.output_dim), flat_size(params.config)},
             params.dense};
    tf.tensors.emplace_back("dense.w", std::move(d));
    save_tensor_file(tf, path);
}

GlyphModelParams load_glyph_model(const std::string& path) {
    TensorFile tf = load_tensor_file(path);
    auto kind = tf.meta.find("kind");
    require(kind != tf.meta.end() && kind->second == std::vector<std::string>{"glyph-model"},
            "not a glyph model file: ", path);
    GlyphModelParams p;
    p.config.conv_channels.clear();
    for (const auto& c : tf.meta.at("conv_channels"))
        p.config.conv_channels.push_back(static_cast<int>(parse_int(c, path)));
    p.config.output_dim = static_cast<int>(parse_int(tf.meta.at("output_dim").at(0), path));
    auto shapes = layer_shapes(p.config);
    for (size_t l = 0; l < shapes.size(); ++l) {
        p.conv_weights.push_back(tf.get("conv" + std::to_string(l) + ".w").data);
        p.conv_biases.push_back(tf.get("conv" + std::to_string(l) + ".b").data);
    }
    p.dense = tf.get("dense.w").data;
    require(p.dense.size() == static_cast<size_t>(p.config.output_dim) * flat_size(p.config),
            "dense tensor size mismatch in ", path);
    return p;
}

std::vector<double> glyph_forward(const GlyphBitmap& bitmap, const GlyphModelParams& params) {
    validate_finite(params);
    return forward_cached(bitmap, params).output;
}

double triplet_loss(const std::vector<double>& a, const std::vector<double>& p,
                    const std::vector<double>& n, double alpha) {
    require(a.size() == p.size() && a.size() == n.size(),
            "triplet_loss: vector length mismatch");
    require(alpha >= 0.0, "triplet_loss: alpha must be >= 0");
    double pre = squared_distance(a, p) - squared_distance(a, n) + alpha;
    return pre > 0.0 ? pre : 0.0;
}

TripletLossGrads triplet_loss_grads(const std::vector<double>& a, const std::vector<double>& p,
                                    const std::vector<double>& n, double alpha) {
    TripletLossGrads g;
    g.loss = triplet_loss(a, p, n, alpha);
    g.d_anchor.assign(a.size(), 0.0);
    g.d_positive.assign(a.size(), 0.0);
    g.d_negative.assign(a.size(), 0.0);
    double pre = squared_distance(a, p) - squared_distance(a, n) + alpha;
    if (pre <= 0.0) return g;
    for (size_t i = 0; i < a.size(); ++i) {
        g.d_anchor[i] = 2.0 * (n[i] - p[i]);
        g.d_positive[i] = -2.0 * (a[i] - p[i]);
        g.d_negative[i] = 2.0 * (a[i] - n[i]);
    }
    return g;
}

std::vector<double> flatten_glyph_params(const GlyphModelParams& params) {
    std::vector<double> flat;
    flat.reserve(params.parameter_count());
    for (const auto& w : params.conv_weights) flat.insert(flat.end(), w.begin(), w.end());
    for (const auto& b : params.conv_biases) flat.insert(flat.end(), b.begin(), b.end());
    flat.insert(flat.end(), params.dense.begin(), params.dense.end());
    return flat;
}

GlyphModelParams unflatten_glyph_params(const GlyphModelConfig& config,
                                        const std::vector<double>& flat) {
    GlyphModelParams p = init_glyph_model(config, 0);
    size_t pos = 0;
    auto take = [&](std::vector<double>& dst) {
        require(pos + dst.size() <= flat.size(), "flat parameter vector too short");
        std::copy(flat.begin() + pos, flat.begin() + pos + dst.size(), dst.begin());
        pos += dst.size();
    };
    for (auto& w : p.conv_weights) take(w);
    for (auto& b : p.conv_biases) take(b);
    take(p.dense);
    require(pos == flat.size(), "flat parameter vector too long");
    return p;
}

double glyph_model_triplet_loss_and_grad(const GlyphModelParams& params, const GlyphAtlas& atlas,
                                         const GlyphTriplet& triplet, double alpha,
                                         std::vector<double>* grad_out) {
    ForwardCache ca = forward_cached(atlas.bitmap(triplet.anchor), params);
    ForwardCache cp = forward_cached(atlas.bitmap(triplet.positive), params);
    ForwardCache cn = forward_cached(atlas.bitmap(triplet.negative), params);
    TripletLossGrads tg = triplet_loss_grads(ca.output, cp.output, cn.output, alpha);
    if (grad_out) {
        GlyphModelParams grad = zero_like(params);
        if (tg.loss > 0.0) {
            backward_accumulate(params, ca, tg.d_anchor, grad);
            backward_accumulate(params, cp, tg.d_positive, grad);
            backward_accumulate(params, cn, tg.d_negative, grad);
        }
        *grad_out = flatten_glyph_params(grad);
    }
    return tg.loss;
}

GlyphModelParams train_glyph_model(const GlyphAtlas& atlas,
                                   const std::vector<GlyphTriplet>& triplets,
                                   const GlyphTrainConfig& config,
                                   std::vector<double>* epoch_mean_loss) {
    require(config.alpha >= 0.0, "glyph training: alpha must be >= 0");
    require(config.lr > 0.0, "glyph training: lr must be positive");
    require(config.epochs >= 0, "glyph training: epochs must be >= 0");
    require(config.batch >= 1, "glyph training: batch must be >= 1");
    for (const auto& t : triplets) {
        for (char32_t ch : {t.anchor, t.positive, t.negative})
            require(atlas.contains(ch), "triplet references unknown character: '",
                    utf8_encode(ch), "'");
        require(t.anchor != t.negative, "triplet anchor equals negative");
    }

    GlyphModelParams params = init_glyph_model(config.model, derive_seed(config.seed, "glyph-init"));
    if (epoch_mean_loss) epoch_mean_loss->clear();

    auto mean_loss = [&]() {
        if (triplets.empty()) return 0.0;
        double acc = 0.0;
        for (const auto& t : triplets) {
            auto a = glyph_forward(atlas.bitmap(t.anchor), params);
            auto p = glyph_forward(atlas.bitmap(t.positive), params);
            auto n = glyph_forward(atlas.bitmap(t.negative), params);
            acc += triplet_loss(a, p, n, config.alpha);
        }
        return acc / static_cast<double>(triplets.size());
    };

    if (epoch_mean_loss) epoch_mean_loss->push_back(mean_loss());
    if (triplets.empty()) return params;

    std::vector<size_t> order(triplets.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, "glyph-epoch", static_cast<uint64_t>(epoch)));
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += config.batch) {
            size_t end = std::min(order.size(), start + config.batch);
            std::vector<double> grad_sum(flatten_glyph_params(params).size(), 0.0);
            std::vector<double> grad;
            for (size_t i = start; i < end; ++i) {
                glyph_model_triplet_loss_and_grad(params, atlas, triplets[order[i]], config.alpha,
                                                  &grad);
                for (size_t j = 0; j < grad.size(); ++j) grad_sum[j] += grad[j];
            }
            const double scale = config.lr / static_cast<double>(end - start);
            std::vector<double> flat = flatten_glyph_params(params);
            for (size_t j = 0; j < flat.size(); ++j) flat[j] -= scale * grad_sum[j];
            params = unflatten_glyph_params(config.model, flat);
        }
        if (epoch_mean_loss) epoch_mean_loss->push_back(mean_loss());
    }
    return params;
}

double glyph_similarity(char32_t x, char32_t y, const GlyphModelParams& params,
                        const GlyphAtlas& atlas) {
    const GlyphBitmap& bx = atlas.bitmap(x);
    const GlyphBitmap& by = atlas.bitmap(y);
    if (x == y) return 1.0;
    auto hx = glyph_forward(bx, params);
    auto hy = glyph_forward(by, params);
    return (1.0 + cosine_or_zero(hx, hy)) / 2.0;
}

std::vector<std::pair<char32_t, std::vector<double>>> all_glyph_vectors(
    const GlyphModelParams& params, const GlyphAtlas& atlas) {
    std::vector<std::pair<char32_t, std::vector<double>>> out;
    out.reserve(atlas.size());
    for (char32_t ch : atlas.characters())
        out.emplace_back(ch, glyph_forward(atlas.bitmap(ch), params));
    return out;
}

std::vector<std::pair<char32_t, double>> top_k_glyph_neighbors(char32_t x, int k,
                                                               const GlyphModelParams& params,
                                                               const GlyphAtlas& atlas) {
    require(k >= 1, "top_k_glyph_neighbors: k must be >= 1");
    require(atlas.contains(x), "character not in atlas: '", utf8_encode(x), "'");
    auto vectors = all_glyph_vectors(params, atlas);
    const std::vector<double>* hx = nullptr;
    for (const auto& [ch, v] : vectors)
        if (ch == x) hx = &v;
    std::vector<std::pair<char32_t, double>> scored;
    scored.reserve(vectors.size());
    for (const auto& [ch, v] : vectors) {
        if (ch == x) continue;
        scored.emplace_back(ch, (1.0 + cosine_or_zero(*hx, v)) / 2.0);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > static_cast<size_t>(k)) scored.resize(static_cast<size_t>(k));
    return scored;
}

} // namespace advgraph
