#include "advgraph/corpus.hpp"

#include <algorithm>

#include "advgraph/common.hpp"
#include "advgraph/io.hpp"
#include "advgraph/utf8.hpp"

namespace advgraph {

int Corpus::class_count() const {
    int c = 0;
    for (const auto& t : texts) c = std::max(c, t.label + 1);
    return c;
}

Corpus load_corpus(const std::string& path) {
    Corpus corpus;
    auto lines = split_lines(read_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        auto fields = split_fields(lines[i], '\t');
        require(fields.size() == 2, "expected <label><TAB><text> at ", where);
        LabeledText t;
        long long label = parse_int(fields[0], where);
        require(label >= 0, "negative label at ", where);
        t.label = static_cast<int>(label);
        t.chars = utf8_decode(fields[1]);
        require(!t.chars.empty(), "empty text at ", where);
        corpus.texts.push_back(std::move(t));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::string out;
    for (const auto& t : corpus.texts) {
        out += std::to_string(t.label);
        out += '\t';
        out += utf8_encode(t.chars);
        out += '\n';
    }
    write_file(path, out);
}

} // namespace advgraph
