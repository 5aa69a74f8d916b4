#pragma once

#include <string>
#include <vector>

namespace advgraph {

struct LabeledText {
    std::u32string chars;
    int label = 0;
};

struct Corpus {
    std::vector<LabeledText> texts;

    size_t size() const { return texts.size(); }
    // Highest label + 1; 0 for an empty corpus.
    int class_count() const;
};

// Corpus file: UTF-8 text, one example per line: `<label><TAB><text>`.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

} // namespace advgraph
