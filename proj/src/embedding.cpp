#include "advgraph/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "advgraph/common.hpp"
#include "advgraph/io.hpp"
#include "advgraph/parallel.hpp"
#include "advgraph/rng.hpp"
#include "advgraph/utf8.hpp"

namespace advgraph {

namespace {

double log_sigmoid(double z) {
    // Stable log(1/(1+exp(-z))).
    return z < 0.0 ? z - std::log1p(std::exp(z)) : -std::log1p(std::exp(-z));
}

double sigmoid(double z) {
    return z < 0.0 ? std::exp(z) / (1.0 + std::exp(z)) : 1.0 / (1.0 + std::exp(-z));
}

double dot(const double* a, const double* b, int d) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace

std::vector<std::pair<int, double>> transition_distribution(const TransitionModel& tm,
                                                            std::optional<int> prev, int cur) {
    require(tm.graph != nullptr, "transition model has no graph");
    require(tm.p > 0.0 && tm.q > 0.0, "node2vec parameters p, q must be positive");
    const AdversarialGraph& g = *tm.graph;
    const auto& nbrs = g.neighbor_ids(cur);
    require(!nbrs.empty(), "transition_distribution: node '",
            utf8_encode(g.node_char(cur)), "' has no neighbors");
    std::vector<std::pair<int, double>> dist;
    dist.reserve(nbrs.size());
    double total = 0.0;
    for (int nb : nbrs) {
        double w;
        if (!prev) {
            w = 1.0;
        } else if (nb == *prev) {
            w = 1.0 / tm.p;
        } else if (g.has_edge(nb, *prev)) {
            w = 1.0;
        } else {
            w = 1.0 / tm.q;
        }
        dist.emplace_back(nb, w);
        total += w;
    }
    for (auto& [_, w] : dist) w /= total;
    return dist;
}

WalkSet generate_walks(const AdversarialGraph& g, int r, int l, double p, double q, uint64_t seed,
                       int workers) {
    require(r >= 1, "generate_walks: walks per node must be >= 1");
    require(l >= 2, "generate_walks: walk length must be >= 2");
    TransitionModel tm{&g, p, q};
    WalkSet ws;
    ws.walk_length = l;
    ws.walks_per_node = r;
    const size_t n = g.node_count();
    ws.sequences.assign(n * static_cast<size_t>(r), {});
    parallel_for(n * static_cast<size_t>(r), workers, [&](size_t task) {
        const size_t node = task / static_cast<size_t>(r);
        const size_t walk = task % static_cast<size_t>(r);
        Rng rng(derive_seed(seed, "walk", node, walk));
        std::vector<int> seq;
        seq.reserve(static_cast<size_t>(l));
        int cur = static_cast<int>(node);
        seq.push_back(cur);
        std::optional<int> prev;
        while (seq.size() < static_cast<size_t>(l)) {
            if (g.neighbor_ids(cur).empty()) break;  // dead end terminates the walk
            auto dist = transition_distribution(tm, prev, cur);
            double rnd = rng.next_double();
            double acc = 0.0;
            int next = dist.back().first;
            for (const auto& [nb, pr] : dist) {
                acc += pr;
                if (rnd < acc) {
                    next = nb;
                    break;
                }
            }
            prev = cur;
            cur = next;
            seq.push_back(cur);
        }
        ws.sequences[task] = std::move(seq);
    });
    return ws;
}

std::vector<std::u32string> walks_as_token_sequences(const AdversarialGraph& g, const WalkSet& w) {
    std::vector<std::u32string> out;
    out.reserve(w.sequences.size());
    for (const auto& seq : w.sequences) {
        std::u32string s;
        s.reserve(seq.size());
        for (int id : seq) s.push_back(g.node_char(id));
        out.push_back(std::move(s));
    }
    return out;
}

void save_walks(const AdversarialGraph& g, const WalkSet& w, const std::string& path) {
    std::string out;
    for (const auto& seq : w.sequences) {
        for (size_t i = 0; i < seq.size(); ++i) {
            if (i) out += ' ';
            out += utf8_encode(g.node_char(seq[i]));
        }
        out += '\n';
    }
    write_file(path, out);
}

std::vector<std::u32string> corpus_to_sequences(const Corpus& corpus) {
    std::vector<std::u32string> out;
    out.reserve(corpus.texts.size());
    for (const auto& t : corpus.texts) out.push_back(t.chars);
    return out;
}

EmbeddingTable::EmbeddingTable(std::vector<char32_t> vocabulary, int dim)
    : vocabulary_(std::move(vocabulary)), dim_(dim) {
    require(dim >= 1, "embedding dimension must be >= 1");
    for (size_t i = 0; i < vocabulary_.size(); ++i) {
        auto [it, inserted] = index_.emplace(vocabulary_[i], static_cast<int>(i));
        require(inserted, "duplicate token in vocabulary: '", utf8_encode(vocabulary_[i]), "'");
    }
    input_.assign(vocabulary_.size() * static_cast<size_t>(dim_), 0.0);
    output_.assign(vocabulary_.size() * static_cast<size_t>(dim_), 0.0);
}

int EmbeddingTable::token_id(char32_t token) const {
    auto it = index_.find(token);
    if (it == index_.end()) fail("unknown token: '", utf8_encode(token), "'");
    return it->second;
}

std::optional<int> EmbeddingTable::try_token_id(char32_t token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<double> EmbeddingTable::input_vector(char32_t token) const {
    int id = token_id(token);
    return std::vector<double>(input_row(id), input_row(id) + dim_);
}

EmbeddingTable sgns_train(const std::vector<std::u32string>& sequences, const SgnsConfig& config) {
    require(!sequences.empty(), "sgns_train: empty sequence list");
    require(config.dim >= 1, "sgns_train: dim must be >= 1");
    require(config.window >= 1, "sgns_train: window must be >= 1");
    require(config.negatives >= 1, "sgns_train: negatives must be >= 1");
    require(config.epochs >= 0, "sgns_train: epochs must be >= 0");
    require(config.lr > 0.0, "sgns_train: lr must be positive");

    // Vocabulary in first-appearance order.
    std::vector<char32_t> vocab;
    std::unordered_map<char32_t, int> index;
    std::vector<int64_t> counts;
    for (const auto& seq : sequences) {
        for (char32_t tok : seq) {
            auto [it, inserted] = index.emplace(tok, static_cast<int>(vocab.size()));
            if (inserted) {
                vocab.push_back(tok);
                counts.push_back(0);
            }
            counts[static_cast<size_t>(it->second)] += 1;
        }
    }
    require(!vocab.empty(), "sgns_train: sequences contain no tokens");

    EmbeddingTable table(vocab, config.dim);
    const int d = config.dim;
    Rng rng(derive_seed(config.seed, "sgns-init"));
    for (size_t i = 0; i < vocab.size(); ++i) {
        double* row = table.input_row(static_cast<int>(i));
        for (int j = 0; j < d; ++j) row[j] = (rng.next_double() - 0.5) / d;
    }

    // unigram^0.75 noise distribution, cumulative for binary search.
    std::vector<double> noise_cdf(vocab.size());
    double total = 0.0;
    for (size_t i = 0; i < vocab.size(); ++i) {
        total += std::pow(static_cast<double>(counts[i]), 0.75);
        noise_cdf[i] = total;
    }

    auto sample_noise = [&](Rng& r) {
        double x = r.next_double() * total;
        auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), x);
        size_t idx = static_cast<size_t>(it - noise_cdf.begin());
        if (idx >= vocab.size()) idx = vocab.size() - 1;
        return static_cast<int>(idx);
    };

    std::vector<double> d_center(static_cast<size_t>(d));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng erng(derive_seed(config.seed, "sgns-epoch", static_cast<uint64_t>(epoch)));
        for (const auto& seq : sequences) {
            const int n = static_cast<int>(seq.size());
            for (int i = 0; i < n; ++i) {
                const int center = index.at(seq[static_cast<size_t>(i)]);
                double* x = table.input_row(center);
                const int lo = std::max(0, i - config.window);
                const int hi = std::min(n - 1, i + config.window);
                for (int j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    const int context = index.at(seq[static_cast<size_t>(j)]);
                    std::fill(d_center.begin(), d_center.end(), 0.0);
                    // Positive update.
                    double* v = table.output_row(context);
                    double g = (1.0 - sigmoid(dot(v, x, d))) * config.lr;
                    for (int t = 0; t < d; ++t) {
                        d_center[static_cast<size_t>(t)] += g * v[t];
                        v[t] += g * x[t];
                    }
                    // Negative updates; a draw equal to the positive target
                    // is consumed but skipped.
                    for (int k = 0; k < config.negatives; ++k) {
                        int neg = sample_noise(erng);
                        if (neg == context) continue;
                        double* nv = table.output_row(neg);
                        double gn = -sigmoid(dot(nv, x, d)) * config.lr;
                        for (int t = 0; t < d; ++t) {
                            d_center[static_cast<size_t>(t)] += gn * nv[t];
                            nv[t] += gn * x[t];
                        }
                    }
                    for (int t = 0; t < d; ++t) x[t] += d_center[static_cast<size_t>(t)];
                }
            }
        }
    }
    return table;
}

SgnsPairGrads sgns_pair_objective_and_grad(const std::vector<double>& center,
                                           const std::vector<double>& context,
                                           const std::vector<std::vector<double>>& negatives) {
    const size_t d = center.size();
    require(context.size() == d, "sgns_pair: dimension mismatch");
    for (const auto& n : negatives) require(n.size() == d, "sgns_pair: dimension mismatch");

    SgnsPairGrads out;
    out.d_center.assign(d, 0.0);
    out.d_context.assign(d, 0.0);
    out.d_negatives.assign(negatives.size(), std::vector<double>(d, 0.0));

    double zpos = 0.0;
    for (size_t i = 0; i < d; ++i) zpos += context[i] * center[i];
    out.objective = log_sigmoid(zpos);
    const double gpos = 1.0 - sigmoid(zpos);
    for (size_t i = 0; i < d; ++i) {
        out.d_center[i] += gpos * context[i];
        out.d_context[i] += gpos * center[i];
    }
    for (size_t k = 0; k < negatives.size(); ++k) {
        double zneg = 0.0;
        for (size_t i = 0; i < d; ++i) zneg += negatives[k][i] * center[i];
        out.objective += log_sigmoid(-zneg);
        const double gneg = -sigmoid(zneg);
        for (size_t i = 0; i < d; ++i) {
            out.d_center[i] += gneg * negatives[k][i];
            out.d_negatives[k][i] = gneg * center[i];
        }
    }
    return out;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "cosine_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

std::vector<std::pair<char32_t, double>> nearest_embedding_neighbors(const EmbeddingTable& table,
                                                                     char32_t token, int k) {
    require(k >= 1, "nearest_embedding_neighbors: k must be >= 1");
    const int id = table.token_id(token);
    std::vector<double> x(table.input_row(id), table.input_row(id) + table.dim());
    std::vector<std::pair<char32_t, double>> scored;
    scored.reserve(table.vocab_size());
    for (size_t i = 0; i < table.vocab_size(); ++i) {
        if (static_cast<int>(i) == id) continue;
        std::vector<double> y(table.input_row(static_cast<int>(i)),
                              table.input_row(static_cast<int>(i)) + table.dim());
        scored.emplace_back(table.vocabulary()[i], cosine_similarity(x, y));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > static_cast<size_t>(k)) scored.resize(static_cast<size_t>(k));
    return scored;
}

void save_embedding(const EmbeddingTable& table, const std::string& path) {
    std::string out = std::to_string(table.vocab_size()) + " " + std::to_string(table.dim()) + "\n";
    for (size_t i = 0; i < table.vocab_size(); ++i) {
        out += utf8_encode(table.vocabulary()[i]);
        const double* row = table.input_row(static_cast<int>(i));
        for (int j = 0; j < table.dim(); ++j) {
            out += ' ';
            out += format_double(row[j]);
        }
        out += '\n';
    }
    write_file(path, out);
}

EmbeddingTable load_embedding(const std::string& path) {
    auto lines = split_lines(read_file(path));
    require(!lines.empty(), "empty embedding file: ", path);
    auto header = split_fields(lines[0], ' ');
    require(header.size() == 2, "malformed embedding header in ", path);
    size_t vocab_size = static_cast<size_t>(parse_int(header[0], path + " header"));
    int dim = static_cast<int>(parse_int(header[1], path + " header"));
    std::vector<char32_t> vocab;
    std::vector<std::vector<double>> rows;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        auto fields = split_fields(lines[i], ' ');
        require(fields.size() == static_cast<size_t>(dim) + 1, "expected token and ", dim,
                " values at ", where);
        std::u32string tok = utf8_decode(fields[0]);
        require(tok.size() == 1, "token must be a single code point at ", where);
        vocab.push_back(tok[0]);
        std::vector<double> row;
        row.reserve(static_cast<size_t>(dim));
        for (int j = 0; j < dim; ++j) row.push_back(parse_double(fields[static_cast<size_t>(j) + 1], where));
        rows.push_back(std::move(row));
    }
    require(vocab.size() == vocab_size, "embedding header declares ", vocab_size,
            " tokens but file has ", vocab.size(), ": ", path);
    EmbeddingTable table(vocab, dim);
    for (size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), table.input_row(static_cast<int>(i)));
    return table;
}

} // namespace advgraph
