#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace advgraph {

inline constexpr int kGlyphSide = 24;
inline constexpr int kGlyphPixels = kGlyphSide * kGlyphSide;

// 24x24 grayscale character image, row-major, intensities in [0,255].
struct GlyphBitmap {
    char32_t ch = 0;
    std::array<uint8_t, kGlyphPixels> pixels{};
};

class GlyphAtlas {
public:
    void add(const GlyphBitmap& bitmap);
    const GlyphBitmap& bitmap(char32_t ch) const;
    bool contains(char32_t ch) const { return entries_.count(ch) > 0; }
    size_t size() const { return entries_.size(); }
    std::vector<char32_t> characters() const;

private:
    std::map<char32_t, GlyphBitmap> entries_;
};

// Atlas file: header `GLYPH24 <count>`, then per character one record:
// the character, a tab, 576 space-separated integers 0-255 (row-major).
GlyphAtlas load_glyph_atlas(const std::string& path);
void save_glyph_atlas(const GlyphAtlas& atlas, const std::string& path);

struct GlyphTriplet {
    char32_t anchor = 0;
    char32_t positive = 0;
    char32_t negative = 0;
};

// Triplet file: one triplet per line, three tab-separated characters.
std::vector<GlyphTriplet> load_glyph_triplets(const std::string& path);
void save_glyph_triplets(const std::vector<GlyphTriplet>& triplets, const std::string& path);

// Network layout: per conv entry one 3x3 valid convolution + ReLU + 2x2
// max-pool, then a flatten and a bias-free dense projection to output_dim.
struct GlyphModelConfig {
    std::vector<int> conv_channels{16, 32};
    int output_dim = 64;
};

struct GlyphModelParams {
    GlyphModelConfig config;
    // conv_weights[l] is [out_ch][in_ch][3][3] flattened; conv_biases[l] is [out_ch].
    std::vector<std::vector<double>> conv_weights;
    std::vector<std::vector<double>> conv_biases;
    // dense is [output_dim][flattened_map] flattened.
    std::vector<double> dense;

    size_t parameter_count() const;
};

GlyphModelParams init_glyph_model(const GlyphModelConfig& config, uint64_t seed);

void save_glyph_model(const GlyphModelParams& params, const std::string& path);
GlyphModelParams load_glyph_model(const std::string& path);

// Deterministic forward pass h(x). Throws if any parameter is non-finite.
std::vector<double> glyph_forward(const GlyphBitmap& bitmap, const GlyphModelParams& params);

// Hinge triplet objective max(0, |a-p|^2 - |a-n|^2 + alpha).
double triplet_loss(const std::vector<double>& a, const std::vector<double>& p,
                    const std::vector<double>& n, double alpha);

struct TripletLossGrads {
    double loss = 0.0;
    std::vector<double> d_anchor, d_positive, d_negative;
};
TripletLossGrads triplet_loss_grads(const std::vector<double>& a, const std::vector<double>& p,
                                    const std::vector<double>& n, double alpha);

// Flat-parameter view used by the trainer and by gradient checks.
std::vector<double> flatten_glyph_params(const GlyphModelParams& params);
GlyphModelParams unflatten_glyph_params(const GlyphModelConfig& config,
                                        const std::vector<double>& flat);

// Loss of one triplet through the full model, with the analytic gradient
// w.r.t. every parameter (same flat layout as flatten_glyph_params).
double glyph_model_triplet_loss_and_grad(const GlyphModelParams& params, const GlyphAtlas& atlas,
                                         const GlyphTriplet& triplet, double alpha,
                                         std::vector<double>* grad_out);

struct GlyphTrainConfig {
    double alpha = 0.2;
    double lr = 0.05;
    int epochs = 10;
    int batch = 32;
    uint64_t seed = 0;
    GlyphModelConfig model;
};

// Mini-batch SGD over the triplet set. epoch_mean_loss (optional) receives
// epochs+1 entries: mean loss before training, then after each epoch.
GlyphModelParams train_glyph_model(const GlyphAtlas& atlas,
                                   const std::vector<GlyphTriplet>& triplets,
                                   const GlyphTrainConfig& config,
                                   std::vector<double>* epoch_mean_loss = nullptr);

// (1 + cosine(h(x), h(y))) / 2. Self-similarity is exactly 1; if exactly
// one of the two vectors is all-zero the cosine is taken as 0.
double glyph_similarity(char32_t x, char32_t y, const GlyphModelParams& params,
                        const GlyphAtlas& atlas);

// Top-k by glyph similarity, descending, self excluded, ties broken by
// ascending code point. Returns min(k, atlas size - 1) entries.
std::vector<std::pair<char32_t, double>> top_k_glyph_neighbors(char32_t x, int k,
                                                               const GlyphModelParams& params,
                                                               const GlyphAtlas& atlas);

// All glyph vectors of the atlas in code-point order; shared by
// top_k_glyph_neighbors and the graph builder.
std::vector<std::pair<char32_t, std::vector<double>>> all_glyph_vectors(
    const GlyphModelParams& params, const GlyphAtlas& atlas);

} // namespace advgraph
