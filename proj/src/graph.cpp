#include "advgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "advgraph/common.hpp"
#include "advgraph/glyph.hpp"
#include "advgraph/io.hpp"
#include "advgraph/phonetics.hpp"
#include "advgraph/utf8.hpp"

namespace advgraph {

uint64_t AdversarialGraph::edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) |
           static_cast<uint32_t>(b);
}

int AdversarialGraph::add_node(char32_t ch) {
    require(index_.count(ch) == 0, "duplicate graph node: '", utf8_encode(ch), "'");
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(ch);
    index_[ch] = id;
    adjacency_.emplace_back();
    return id;
}

void AdversarialGraph::add_edge(char32_t a, char32_t b, uint8_t relations) {
    require(relations != 0, "edge relation set must be non-empty");
    require(a != b, "self-loop rejected: '", utf8_encode(a), "'");
    int ia = node_id(a), ib = node_id(b);
    auto [it, inserted] = edge_relations_.try_emplace(edge_key(ia, ib), relations);
    if (!inserted) {
        it->second |= relations;
        return;
    }
    auto insert_sorted = [this](int from, int to) {
        auto& list = adjacency_[static_cast<size_t>(from)];
        char32_t ch = nodes_[static_cast<size_t>(to)];
        auto pos = std::lower_bound(list.begin(), list.end(), to, [this, ch](int lhs, int) {
            return nodes_[static_cast<size_t>(lhs)] < ch;
        });
        list.insert(pos, to);
    };
    insert_sorted(ia, ib);
    insert_sorted(ib, ia);
}

int AdversarialGraph::node_id(char32_t ch) const {
    auto it = index_.find(ch);
    if (it == index_.end()) fail("unknown graph node: '", utf8_encode(ch), "'");
    return it->second;
}

bool AdversarialGraph::has_edge(int a, int b) const {
    return edge_relations_.count(edge_key(a, b)) > 0;
}

uint8_t AdversarialGraph::edge_relations(int a, int b) const {
    auto it = edge_relations_.find(edge_key(a, b));
    return it == edge_relations_.end() ? 0 : it->second;
}

const std::vector<int>& AdversarialGraph::neighbor_ids(int id) const {
    return adjacency_.at(static_cast<size_t>(id));
}

std::vector<char32_t> AdversarialGraph::neighbors(char32_t x, RelationFilter filter) const {
    int id = node_id(x);
    uint8_t mask = filter == RelationFilter::P   ? kRelationP
                   : filter == RelationFilter::G ? kRelationG
                                                 : (kRelationP | kRelationG);
    std::vector<char32_t> out;
    for (int nb : adjacency_[static_cast<size_t>(id)]) {
        if (edge_relations(id, nb) & mask) out.push_back(nodes_[static_cast<size_t>(nb)]);
    }
    return out;
}

std::vector<std::tuple<char32_t, char32_t, uint8_t>> AdversarialGraph::edges() const {
    std::vector<std::tuple<char32_t, char32_t, uint8_t>> out;
    out.reserve(edge_relations_.size());
    for (const auto& [key, rel] : edge_relations_) {
        char32_t a = nodes_[static_cast<size_t>(key >> 32)];
        char32_t b = nodes_[static_cast<size_t>(key & 0xFFFFFFFFu)];
        if (a > b) std::swap(a, b);
        out.emplace_back(a, b, rel);
    }
    std::sort(out.begin(), out.end());
    return out;
}

AdversarialGraph build_graph(const std::vector<char32_t>& charset, const PinyinLexicon& lex,
                             const GlyphModelParams& glyph_params, const GlyphAtlas& atlas,
                             int glyph_k) {
    require(!charset.empty(), "build_graph: empty charset");
    require(glyph_k >= 0, "build_graph: glyph neighbor count must be >= 0");
    AdversarialGraph g;
    for (char32_t ch : charset) {
        require(atlas.contains(ch), "charset character missing from atlas: '", utf8_encode(ch),
                "'");
        g.add_node(ch);
    }

    const size_t n = charset.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (phonetically_similar(charset[i], charset[j], lex))
                g.add_edge(charset[i], charset[j], kRelationP);

    if (glyph_k > 0 && n > 1) {
        // One forward pass per charset character; top-k over the charset
        // (not the full atlas), then symmetrized by edge union.
        std::vector<std::vector<double>> vectors(n);
        for (size_t i = 0; i < n; ++i)
            vectors[i] = glyph_forward(atlas.bitmap(charset[i]), glyph_params);
        auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (size_t t = 0; t < a.size(); ++t) {
                dot += a[t] * b[t];
                na += a[t] * a[t];
                nb += b[t] * b[t];
            }
            if (na == 0.0 || nb == 0.0) return 0.0;
            return dot / std::sqrt(na * nb);
        };
        for (size_t i = 0; i < n; ++i) {
            std::vector<std::pair<double, char32_t>> scored;
            scored.reserve(n - 1);
            for (size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                scored.emplace_back((1.0 + cosine(vectors[i], vectors[j])) / 2.0, charset[j]);
            }
            size_t k = std::min(static_cast<size_t>(glyph_k), scored.size());
            std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(k), scored.end(),
                              [](const auto& a, const auto& b) {
                                  if (a.first != b.first) return a.first > b.first;
                                  return a.second < b.second;
                              });
            for (size_t t = 0; t < k; ++t) g.add_edge(charset[i], scored[t].second, kRelationG);
        }
    }
    return g;
}

namespace {
std::string relation_token(uint8_t rel) {
    switch (rel) {
        case kRelationP: return "P";
        case kRelationG: return "G";
        case kRelationP | kRelationG: return "PG";
        default: fail("invalid relation set");
    }
}

uint8_t parse_relation(const std::string& tok, const std::string& where) {
    if (tok == "P") return kRelationP;
    if (tok == "G") return kRelationG;
    if (tok == "PG") return kRelationP | kRelationG;
    fail("unknown relation token '", tok, "' at ", where);
}
} // namespace

void save_graph(const AdversarialGraph& g, const std::string& path) {
    std::string out = "ADVGRAPH 1\n";
    for (char32_t ch : g.nodes()) out += "N " + utf8_encode(ch) + "\n";
    for (const auto& [a, b, rel] : g.edges())
        out += "E " + utf8_encode(a) + " " + utf8_encode(b) + " " + relation_token(rel) + "\n";
    write_file(path, out);
}

AdversarialGraph load_graph(const std::string& path) {
    auto lines = split_lines(read_file(path));
    require(!lines.empty() && lines[0] == "ADVGRAPH 1", "malformed graph header in ", path);
    AdversarialGraph g;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        auto fields = split_fields(lines[i], ' ');
        if (fields[0] == "N") {
            require(fields.size() == 2, "malformed node line at ", where);
            std::u32string ch = utf8_decode(fields[1]);
            require(ch.size() == 1, "node must be a single code point at ", where);
            require(!g.has_node(ch[0]), "duplicate node '", fields[1], "' at ", where);
            g.add_node(ch[0]);
        } else if (fields[0] == "E") {
            require(fields.size() == 4, "malformed edge line at ", where);
            std::u32string a = utf8_decode(fields[1]);
            std::u32string b = utf8_decode(fields[2]);
            require(a.size() == 1 && b.size() == 1, "edge endpoints must be single code points at ",
                    where);
            require(g.has_node(a[0]) && g.has_node(b[0]), "edge endpoint not declared at ", where);
            require(a[0] != b[0], "self-loop at ", where);
            g.add_edge(a[0], b[0], parse_relation(fields[3], where));
        } else {
            fail("unknown record '", fields[0], "' at ", where);
        }
    }
    return g;
}

} // namespace advgraph
