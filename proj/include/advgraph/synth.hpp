#pragma once

#include <cstdint>
#include <vector>

#include "advgraph/corpus.hpp"
#include "advgraph/glyph.hpp"
#include "advgraph/graph.hpp"

namespace advgraph {

// Synthetic classification task: class keywords planted among filler
// characters. Stands in for the real-corpus experiments.
struct SyntheticSpec {
    int class_count = 2;
    std::vector<std::u32string> keywords;  // one set per class, disjoint
    std::u32string fillers;                // disjoint from all keywords
    int train_per_class = 100;
    int test_per_class = 20;
    int min_length = 10;
    int max_length = 30;
    int min_keywords = 1;
    int max_keywords = 3;
    // Probability that each keyword occurrence in an obfuscated text is
    // replaced by a graph variant; at least one replacement is forced.
    double obfuscation_rate = 0.8;
};

struct SyntheticCorpora {
    Corpus train;
    Corpus test_clean;
    Corpus test_obfuscated;
};

// Every keyword character must have at least one graph neighbor (errors
// naming the first that does not). Deterministic per seed.
SyntheticCorpora synth_corpus(const SyntheticSpec& spec, const AdversarialGraph& g,
                              uint64_t seed);

// Synthetic glyph fixtures: characters are grouped into visual families;
// each family shares a random base pattern and members differ by flipping
// at most flip_fraction of the pixels. Triplets take anchor and positive
// from one family and the negative from another.
struct SyntheticGlyphData {
    GlyphAtlas atlas;
    std::vector<std::vector<char32_t>> families;
};

SyntheticGlyphData synth_glyph_atlas(const std::vector<char32_t>& charset, int family_size,
                                     double flip_fraction, uint64_t seed);

// Same bitmap construction but with caller-provided character groups (for
// example pinyin homophone groups); each group is split into balanced
// chunks of at most max_family_size members, and every chunk becomes one
// visual family.
SyntheticGlyphData synth_glyph_atlas_grouped(const std::vector<std::vector<char32_t>>& groups,
                                             int max_family_size, double flip_fraction,
                                             uint64_t seed);

std::vector<GlyphTriplet> synth_glyph_triplets(const std::vector<std::vector<char32_t>>& families,
                                               int count, uint64_t seed);

} // namespace advgraph
