#include "advgraph/synth.hpp"

#include <algorithm>
#include <set>

#include "advgraph/common.hpp"
#include "advgraph/rng.hpp"
#include "advgraph/utf8.hpp"

namespace advgraph {

namespace {

struct GeneratedText {
    std::u32string chars;
    std::vector<size_t> keyword_positions;
};

GeneratedText generate_text(const SyntheticSpec& spec, int cls, Rng& rng) {
    const int span = spec.max_length - spec.min_length + 1;
    const size_t length =
        static_cast<size_t>(spec.min_length) + static_cast<size_t>(rng.next_below(span));
    int kw_hi = std::min(spec.max_keywords, static_cast<int>(length));
    int kw_lo = std::min(spec.min_keywords, kw_hi);
    const int n_kw = kw_lo + static_cast<int>(rng.next_below(
                                 static_cast<uint64_t>(kw_hi - kw_lo + 1)));

    std::vector<size_t> positions(length);
    for (size_t i = 0; i < length; ++i) positions[i] = i;
    rng.shuffle(positions);
    positions.resize(static_cast<size_t>(n_kw));
    std::sort(positions.begin(), positions.end());

    const std::u32string& kws = spec.keywords[static_cast<size_t>(cls)];
    GeneratedText out;
    out.chars.resize(length);
    out.keyword_positions = positions;
    size_t next_kw = 0;
    for (size_t i = 0; i < length; ++i) {
        if (next_kw < positions.size() && positions[next_kw] == i) {
            out.chars[i] = kws[rng.next_below(kws.size())];
            ++next_kw;
        } else {
            out.chars[i] = spec.fillers[rng.next_below(spec.fillers.size())];
        }
    }
    return out;
}

} // namespace

SyntheticCorpora synth_corpus(const SyntheticSpec& spec, const AdversarialGraph& g,
                              uint64_t seed) {
    require(spec.class_count >= 2, "synth_corpus: need at least 2 classes");
    require(spec.keywords.size() == static_cast<size_t>(spec.class_count),
            "synth_corpus: one keyword set per class required");
    require(!spec.fillers.empty(), "synth_corpus: empty filler pool");
    require(spec.min_length >= 1 && spec.min_length <= spec.max_length,
            "synth_corpus: invalid length range");
    require(spec.min_keywords >= 1 && spec.min_keywords <= spec.max_keywords,
            "synth_corpus: invalid keyword count range");
    require(spec.train_per_class >= 1 && spec.test_per_class >= 0,
            "synth_corpus: invalid corpus sizes");
    require(spec.obfuscation_rate > 0.0 && spec.obfuscation_rate <= 1.0,
            "synth_corpus: obfuscation rate must be in (0, 1] (every obfuscated text needs at "
            "least one variant)");

    std::set<char32_t> seen;
    for (const auto& kws : spec.keywords) {
        require(!kws.empty(), "synth_corpus: empty keyword set");
        for (char32_t ch : kws) {
            require(seen.insert(ch).second, "synth_corpus: keyword '", utf8_encode(ch),
                    "' appears in more than one class");
            require(g.has_node(ch) && !g.neighbors(ch, RelationFilter::Any).empty(),
                    "synth_corpus: keyword '", utf8_encode(ch), "' has no graph variants");
        }
    }
    for (char32_t ch : spec.fillers)
        require(seen.count(ch) == 0, "synth_corpus: filler '", utf8_encode(ch),
                "' collides with a keyword");

    SyntheticCorpora out;
    for (int cls = 0; cls < spec.class_count; ++cls) {
        for (int t = 0; t < spec.train_per_class; ++t) {
            Rng rng(derive_seed(seed, "synth-train", static_cast<uint64_t>(cls),
                                static_cast<uint64_t>(t)));
            out.train.texts.push_back({generate_text(spec, cls, rng).chars, cls});
        }
    }
    for (int cls = 0; cls < spec.class_count; ++cls) {
        for (int t = 0; t < spec.test_per_class; ++t) {
            Rng rng(derive_seed(seed, "synth-test", static_cast<uint64_t>(cls),
                                static_cast<uint64_t>(t)));
            GeneratedText gen = generate_text(spec, cls, rng);
            out.test_clean.texts.push_back({gen.chars, cls});

            Rng orng(derive_seed(seed, "synth-obf", static_cast<uint64_t>(cls),
                                 static_cast<uint64_t>(t)));
            std::u32string obf = gen.chars;
            std::vector<size_t> replaced;
            for (size_t pos : gen.keyword_positions) {
                if (orng.next_double() >= spec.obfuscation_rate) continue;
                auto variants = g.neighbors(obf[pos], RelationFilter::Any);
                obf[pos] = variants[orng.next_below(variants.size())];
                replaced.push_back(pos);
            }
            if (replaced.empty()) {
                size_t pos =
                    gen.keyword_positions[orng.next_below(gen.keyword_positions.size())];
                auto variants = g.neighbors(obf[pos], RelationFilter::Any);
                obf[pos] = variants[orng.next_below(variants.size())];
            }
            out.test_obfuscated.texts.push_back({obf, cls});
        }
    }
    return out;
}

namespace {

void add_family(SyntheticGlyphData& out, const std::vector<char32_t>& members, int flips,
                uint64_t family_seed) {
    Rng rng(family_seed);
    std::array<uint8_t, kGlyphPixels> base;
    for (auto& px : base) px = rng.next_below(2) ? 255 : 0;
    std::vector<char32_t> family;
    for (char32_t ch : members) {
        GlyphBitmap bm;
        bm.ch = ch;
        bm.pixels = base;
        for (int f = 0; f < flips; ++f) {
            size_t px = static_cast<size_t>(rng.next_below(kGlyphPixels));
            bm.pixels[px] = static_cast<uint8_t>(255 - bm.pixels[px]);
        }
        out.atlas.add(bm);
        family.push_back(ch);
    }
    out.families.push_back(std::move(family));
}

} // namespace

SyntheticGlyphData synth_glyph_atlas(const std::vector<char32_t>& charset, int family_size,
                                     double flip_fraction, uint64_t seed) {
    require(!charset.empty(), "synth_glyph_atlas: empty charset");
    require(family_size >= 1, "synth_glyph_atlas: family size must be >= 1");
    require(flip_fraction >= 0.0 && flip_fraction <= 0.05,
            "synth_glyph_atlas: flip fraction must be in [0, 0.05]");
    std::set<char32_t> dedup(charset.begin(), charset.end());
    require(dedup.size() == charset.size(), "synth_glyph_atlas: duplicate charset character");

    std::vector<char32_t> order(charset);
    Rng shuffle_rng(derive_seed(seed, "glyph-families"));
    shuffle_rng.shuffle(order);

    SyntheticGlyphData out;
    const int flips = std::max(1, static_cast<int>(flip_fraction * kGlyphPixels));
    size_t i = 0;
    size_t family_idx = 0;
    while (i < order.size()) {
        const size_t end = std::min(order.size(), i + static_cast<size_t>(family_size));
        add_family(out, {order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(end)},
                   flips, derive_seed(seed, "glyph-family", family_idx));
        i = end;
        ++family_idx;
    }
    return out;
}

SyntheticGlyphData synth_glyph_atlas_grouped(const std::vector<std::vector<char32_t>>& groups,
                                             int max_family_size, double flip_fraction,
                                             uint64_t seed) {
    require(!groups.empty(), "synth_glyph_atlas_grouped: no groups");
    require(max_family_size >= 1, "synth_glyph_atlas_grouped: family size must be >= 1");
    require(flip_fraction >= 0.0 && flip_fraction <= 0.05,
            "synth_glyph_atlas_grouped: flip fraction must be in [0, 0.05]");
    SyntheticGlyphData out;
    const int flips = std::max(1, static_cast<int>(flip_fraction * kGlyphPixels));
    size_t family_idx = 0;
    for (const auto& group : groups) {
        require(!group.empty(), "synth_glyph_atlas_grouped: empty group");
        const size_t chunks =
            (group.size() + static_cast<size_t>(max_family_size) - 1) /
            static_cast<size_t>(max_family_size);
        for (size_t c = 0; c < chunks; ++c) {
            const size_t start = group.size() * c / chunks;
            const size_t end = group.size() * (c + 1) / chunks;
            add_family(out,
                       {group.begin() + static_cast<long>(start),
                        group.begin() + static_cast<long>(end)},
                       flips, derive_seed(seed, "glyph-family", family_idx));
            ++family_idx;
        }
    }
    return out;
}

std::vector<GlyphTriplet> synth_glyph_triplets(const std::vector<std::vector<char32_t>>& families,
                                               int count, uint64_t seed) {
    require(count >= 0, "synth_glyph_triplets: count must be >= 0");
    std::vector<size_t> eligible;
    for (size_t f = 0; f < families.size(); ++f)
        if (families[f].size() >= 2) eligible.push_back(f);
    require(!eligible.empty() && families.size() >= 2,
            "synth_glyph_triplets: need one family of size >= 2 and a second family");

    std::vector<GlyphTriplet> out;
    out.reserve(static_cast<size_t>(count));
    Rng rng(derive_seed(seed, "glyph-triplets"));
    for (int i = 0; i < count; ++i) {
        const auto& fam = families[eligible[rng.next_below(eligible.size())]];
        size_t a = static_cast<size_t>(rng.next_below(fam.size()));
        size_t p;
        do {
            p = static_cast<size_t>(rng.next_below(fam.size()));
        } while (p == a);
        const std::vector<char32_t>* other;
        do {
            other = &families[rng.next_below(families.size())];
        } while (other == &fam);
        GlyphTriplet t;
        t.anchor = fam[a];
        t.positive = fam[p];
        t.negative = (*other)[rng.next_below(other->size())];
        out.push_back(t);
    }
    return out;
}

} // namespace advgraph
