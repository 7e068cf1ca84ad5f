#include <algorithm>
#include <sstream>

#include "medfuse/error.hpp"
#include "medfuse/text.hpp"
#include "medfuse/util.hpp"

namespace medfuse {

namespace {
constexpr const char* kFormatVersion = "medfuse-vocab-v1";
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    Vocab v;
    v.id_to_token_ = std::move(tokens);
    for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
        v.token_to_id_[v.id_to_token_[i]] = static_cast<int>(i);
    }
    return v;
}

Vocab Vocab::build(const std::vector<std::string>& corpus, std::size_t min_freq,
                   std::size_t max_size) {
    if (max_size < 2) throw ConfigError("vocab: max_size must be at least 2 (reserved tokens)");
    if (corpus.empty()) throw DataError("vocab: corpus must be non-empty");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& text : corpus) {
        for (const auto& span : tokenize_text(text)) ++counts[span.token];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked;
    ranked.reserve(counts.size());
    for (auto& [tok, cnt] : counts) {
        if (cnt >= min_freq) ranked.emplace_back(tok, cnt);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> tokens{"[PAD]", "[UNK]"};
    const std::size_t budget = max_size - 2;
    for (std::size_t i = 0; i < ranked.size() && i < budget; ++i) {
        tokens.push_back(ranked[i].first);
    }
    return from_tokens(std::move(tokens));
}

std::uint64_t Vocab::hash() const {
    std::string joined;
    for (const auto& t : id_to_token_) {
        joined += t;
        joined += '\n';
    }
    return fnv1a64(joined);
}

std::string Vocab::to_file_string() const {
    std::string out = std::string(kFormatVersion) + "\n" + std::to_string(size()) + "\n";
    for (const auto& t : id_to_token_) {
        out += t;
        out += '\n';
    }
    return out;
}

Vocab Vocab::from_file_string(const std::string& content) {
    std::istringstream in(content);
    std::string header;
    if (!std::getline(in, header) || header != kFormatVersion) {
        throw DataError("vocab file: bad or missing format header");
    }
    std::string size_line;
    if (!std::getline(in, size_line)) throw DataError("vocab file: missing size line");
    std::size_t expected = 0;
    try {
        expected = std::stoul(size_line);
    } catch (const std::exception&) {
        throw DataError("vocab file: bad size line: " + size_line);
    }
    std::vector<std::string> tokens;
    tokens.reserve(expected);
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    if (tokens.size() != expected) {
        throw DataError("vocab file: expected " + std::to_string(expected) + " tokens, found " +
                        std::to_string(tokens.size()));
    }
    if (tokens.size() < 2 || tokens[0] != "[PAD]" || tokens[1] != "[UNK]") {
        throw DataError("vocab file: reserved tokens [PAD]/[UNK] missing");
    }
    return from_tokens(std::move(tokens));
}

void Vocab::save(const std::string& path) const { write_file(path, to_file_string()); }

Vocab Vocab::load(const std::string& path) {
    try {
        return from_file_string(read_file(path));
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + " [" + path + "]");
    }
}

}  // namespace medfuse
