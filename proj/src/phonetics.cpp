#include "advgraph/phonetics.hpp"

#include <algorithm>

#include "advgraph/common.hpp"
#include "advgraph/io.hpp"
#include "advgraph/utf8.hpp"

namespace advgraph {

void PinyinLexicon::add(char32_t ch, const PinyinReading& reading) {
    require(!reading.syllable.empty(), "empty pinyin syllable");
    require(reading.syllable.size() <= 7, "pinyin syllable too long: ", reading.syllable);
    for (char c : reading.syllable)
        require(c >= 'a' && c <= 'z', "pinyin syllable must be lowercase a-z: ", reading.syllable);
    if (reading.tone)
        require(*reading.tone >= 1 && *reading.tone <= 5, "pinyin tone out of range");
    auto& list = entries_[ch];
    if (std::find(list.begin(), list.end(), reading) == list.end()) list.push_back(reading);
}

const std::vector<PinyinReading>& PinyinLexicon::readings(char32_t ch) const {
    static const std::vector<PinyinReading> empty;
    auto it = entries_.find(ch);
    return it == entries_.end() ? empty : it->second;
}

std::vector<char32_t> PinyinLexicon::characters() const {
    std::vector<char32_t> out;
    out.reserve(entries_.size());
    for (const auto& [ch, _] : entries_) out.push_back(ch);
    return out;
}

PinyinReading parse_reading(const std::string& token, const std::string& context) {
    require(!token.empty(), "empty pinyin reading in ", context);
    PinyinReading r;
    std::string body = token;
    char last = token.back();
    if (last >= '1' && last <= '5') {
        r.tone = last - '0';
        body = token.substr(0, token.size() - 1);
    }
    require(!body.empty(), "tone digit without syllable in ", context);
    for (char c : body)
        require(c >= 'a' && c <= 'z', "invalid pinyin syllable '", token, "' in ", context);
    require(body.size() <= 7, "pinyin syllable too long '", token, "' in ", context);
    r.syllable = body;
    return r;
}

PinyinLexicon load_pinyin_lexicon(const std::string& path) {
    PinyinLexicon lex;
    auto lines = split_lines(read_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        auto fields = split_fields(line, '\t');
        require(fields.size() == 2, "expected <char><TAB><readings> at ", where);
        std::u32string ch = utf8_decode(fields[0]);
        require(ch.size() == 1, "character field must be a single code point at ", where);
        auto tokens = split_fields(fields[1], ',');
        require(!tokens.empty() && !fields[1].empty(), "missing readings at ", where);
        for (const auto& tok : tokens) lex.add(ch[0], parse_reading(tok, where));
    }
    return lex;
}

void save_pinyin_lexicon(const PinyinLexicon& lex, const std::string& path) {
    std::string out;
    for (char32_t ch : lex.characters()) {
        out += utf8_encode(ch);
        out += '\t';
        const auto& rs = lex.readings(ch);
        for (size_t i = 0; i < rs.size(); ++i) {
            if (i) out += ',';
            out += rs[i].syllable;
            if (rs[i].tone) out += static_cast<char>('0' + *rs[i].tone);
        }
        out += '\n';
    }
    write_file(path, out);
}

bool restricted_edit_distance_leq1(const std::string& a, const std::string& b) {
    require(!a.empty() && !b.empty(), "restricted_edit_distance_leq1: empty input");
    if (a == b) return true;
    const std::string& longer = a.size() > b.size() ? a : b;
    const std::string& shorter = a.size() > b.size() ? b : a;
    if (longer.size() != shorter.size() + 1) return false;
    // Single-deletion check: advance both until the first mismatch, skip one
    // character of the longer string, and require the tails to match.
    size_t i = 0;
    while (i < shorter.size() && longer[i] == shorter[i]) ++i;
    return longer.compare(i + 1, std::string::npos, shorter, i, std::string::npos) == 0;
}

bool phonetically_similar(char32_t x, char32_t y, const PinyinLexicon& lex) {
    for (const auto& rx : lex.readings(x))
        for (const auto& ry : lex.readings(y))
            if (restricted_edit_distance_leq1(rx.syllable, ry.syllable)) return true;
    return false;
}

double phonetic_score(char32_t x, char32_t y, const PinyinLexicon& lex) {
    double best = 0.0;
    for (const auto& rx : lex.readings(x)) {
        for (const auto& ry : lex.readings(y)) {
            if (rx.syllable == ry.syllable) return 1.0;
            if (restricted_edit_distance_leq1(rx.syllable, ry.syllable)) best = std::max(best, 0.8);
        }
    }
    return best;
}

} // namespace advgraph
