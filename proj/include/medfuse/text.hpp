#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace medfuse {

// Token with byte offsets into the original (pre-lowercasing) text.
struct TokenSpan {
    std::string token;  // lowercased
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Rule tokenizer: lowercase, split on whitespace, split punctuation into
// single-character tokens, except that decimal literals ("1.450") stay whole.
// "Name:value" therefore becomes name tokens, ":", value token.
std::vector<TokenSpan> tokenize_text(const std::string& text);

// Corpus-built vocabulary with dense ids; [PAD]=0 and [UNK]=1 are reserved.
// Construction is frequency-descending with lexicographic tie-break, so it is
// deterministic for a given corpus.
class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    static Vocab build(const std::vector<std::string>& corpus, std::size_t min_freq,
                       std::size_t max_size);

    int id(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? kUnk : it->second;
    }
    const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return id_to_token_.size(); }

    // FNV-1a over the newline-joined token list; checkpoint compatibility key.
    std::uint64_t hash() const;

    // File format: two header lines (format version, size), then one token
    // per line in id order.
    std::string to_file_string() const;
    static Vocab from_file_string(const std::string& content);
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

private:
    static Vocab from_tokens(std::vector<std::string> tokens);

    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

struct TokenizedInput {
    std::vector<int> ids;               // length max_len, PAD-padded
    std::vector<std::uint8_t> mask;     // 1 = real token, 0 = PAD
    std::vector<TokenSpan> spans;       // real tokens only (pre-truncation cut)
    std::size_t n_real = 0;
};

// Lowercase/split/ids with truncation-from-the-end to max_len and PAD fill.
TokenizedInput tokenize(const std::string& text, const Vocab& vocab, std::size_t max_len);

}  // namespace medfuse
