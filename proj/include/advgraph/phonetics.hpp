#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace advgraph {

// One pinyin reading: toneless syllable over [a-z] plus an optional tone
// digit 1-5. Polyphonic characters carry several readings.
struct PinyinReading {
    std::string syllable;
    std::optional<int> tone;

    bool operator==(const PinyinReading&) const = default;
};

class PinyinLexicon {
public:
    // Adds a reading for a character; duplicates are dropped. Throws on an
    // invalid syllable (empty, non-[a-z], longer than 7) or tone.
    void add(char32_t ch, const PinyinReading& reading);

    // All readings in file order; empty if the character is unlisted.
    const std::vector<PinyinReading>& readings(char32_t ch) const;

    bool contains(char32_t ch) const { return entries_.count(ch) > 0; }
    size_t size() const { return entries_.size(); }
    std::vector<char32_t> characters() const;

private:
    std::map<char32_t, std::vector<PinyinReading>> entries_;
};

// All readings of a character in lexicon file order; empty for a
// character without an entry (no phonetic edges form for it).
inline const std::vector<PinyinReading>& to_pinyin(char32_t x, const PinyinLexicon& lex) {
    return lex.readings(x);
}

// Parses "zhi4" / "zhi" into a reading. context names the source location
// for error messages.
PinyinReading parse_reading(const std::string& token, const std::string& context);

// Lexicon file: one character per line, `<char><TAB><r1>,<r2>,...`.
// Blank lines and lines starting with '#' are skipped.
PinyinLexicon load_pinyin_lexicon(const std::string& path);
void save_pinyin_lexicon(const PinyinLexicon& lex, const std::string& path);

// The restricted rule: true iff a == b, or the longer string becomes the
// shorter by deleting exactly one character. No substitutions, no
// insertions beyond that single removal. Throws on empty input.
bool restricted_edit_distance_leq1(const std::string& a, const std::string& b);

// True iff some reading pair of x and y matches on toneless syllables
// under the restricted rule. Characters without readings match nothing.
bool phonetically_similar(char32_t x, char32_t y, const PinyinLexicon& lex);

// Two-level phonetic similarity score used by the evaluation metrics:
// 1.0 for an exact syllable match, 0.8 for a single-removal match, else 0.
double phonetic_score(char32_t x, char32_t y, const PinyinLexicon& lex);

} // namespace advgraph
