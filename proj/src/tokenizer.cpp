#include <cctype>

#include "medfuse/error.hpp"
#include "medfuse/text.hpp"

namespace medfuse {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

}  // namespace

std::vector<TokenSpan> tokenize_text(const std::string& text) {
    std::vector<TokenSpan> tokens;
    const std::size_t n = text.size();
    std::size_t i = 0;
    std::string current;
    std::size_t start = 0;

    auto flush = [&](std::size_t end) {
        if (!current.empty()) {
            tokens.push_back({current, start, end});
            current.clear();
        }
    };

    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            flush(i);
            ++i;
            continue;
        }
        if (is_word_char(c)) {
            if (current.empty()) start = i;
            current.push_back(static_cast<char>(std::tolower(c)));
            ++i;
            continue;
        }
        // '.' between digits keeps a decimal literal (or dotted number) whole.
        if (c == '.' && i > 0 && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
            std::isdigit(static_cast<unsigned char>(text[i + 1])) && !current.empty()) {
            current.push_back('.');
            ++i;
            continue;
        }
        flush(i);
        tokens.push_back({std::string(1, static_cast<char>(std::tolower(c))), i, i + 1});
        ++i;
    }
    flush(n);
    return tokens;
}

TokenizedInput tokenize(const std::string& text, const Vocab& vocab, std::size_t max_len) {
    if (max_len == 0) throw ConfigError("tokenize: max_len must be positive");
    TokenizedInput out;
    std::vector<TokenSpan> spans = tokenize_text(text);
    if (spans.size() > max_len) spans.resize(max_len);  // truncate from the end
    out.n_real = spans.size();
    out.ids.assign(max_len, Vocab::kPad);
    out.mask.assign(max_len, 0);
    for (std::size_t p = 0; p < spans.size(); ++p) {
        out.ids[p] = vocab.id(spans[p].token);
        out.mask[p] = 1;
    }
    out.spans = std::move(spans);
    return out;
}

}  // namespace medfuse
