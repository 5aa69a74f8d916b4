#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace advgraph {

class GlyphAtlas;
struct GlyphModelParams;
class PinyinLexicon;

// Edge relation labels: phonetic, glyph, or both.
enum EdgeRelation : uint8_t {
    kRelationP = 1,
    kRelationG = 2,
};

enum class RelationFilter { P, G, Any };

// Undirected character graph; edges carry a non-empty relation set.
// Immutable once built (the builder and loader are the only writers).
class AdversarialGraph {
public:
    int add_node(char32_t ch);  // error on duplicate
    void add_edge(char32_t a, char32_t b, uint8_t relations);  // unions relations

    size_t node_count() const { return nodes_.size(); }
    size_t edge_count() const { return edge_relations_.size(); }
    const std::vector<char32_t>& nodes() const { return nodes_; }

    bool has_node(char32_t ch) const { return index_.count(ch) > 0; }
    int node_id(char32_t ch) const;       // error if absent
    char32_t node_char(int id) const { return nodes_.at(static_cast<size_t>(id)); }

    bool has_edge(int a, int b) const;
    uint8_t edge_relations(int a, int b) const;  // 0 if no edge

    // Neighbor ids of a node, sorted by neighbor code point.
    const std::vector<int>& neighbor_ids(int id) const;

    // Characters adjacent to x whose relation set intersects the filter,
    // sorted by code point. Errors on an unknown node.
    std::vector<char32_t> neighbors(char32_t x, RelationFilter filter) const;

    // All edges as (a, b, relations) with a < b by code point, ordered by
    // (a, b) code point. Deterministic serialization order.
    std::vector<std::tuple<char32_t, char32_t, uint8_t>> edges() const;

private:
    static uint64_t edge_key(int a, int b);

    std::vector<char32_t> nodes_;
    std::unordered_map<char32_t, int> index_;
    std::vector<std::vector<int>> adjacency_;  // sorted by neighbor code point
    std::unordered_map<uint64_t, uint8_t> edge_relations_;
};

// Builds G_adv over the charset: a P edge joins every pair judged
// phonetically similar; each node contributes a G edge to its top
// glyph_k visually similar characters (the union symmetrizes the top-k
// relation); pairs satisfying both carry both labels. glyph_k = 0
// disables glyph edges.
AdversarialGraph build_graph(const std::vector<char32_t>& charset, const PinyinLexicon& lex,
                             const GlyphModelParams& glyph_params, const GlyphAtlas& atlas,
                             int glyph_k);

// Edge-list file: header `ADVGRAPH 1`, `N <char>` per node, then
// `E <a> <b> <P|G|PG>` per undirected edge.
void save_graph(const AdversarialGraph& g, const std::string& path);
AdversarialGraph load_graph(const std::string& path);

} // namespace advgraph
