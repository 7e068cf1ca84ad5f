#include "medfuse/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "medfuse/util.hpp"

namespace medfuse {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr const char* kMagic = "medfuse-checkpoint-v1\n";

void append_u64(std::string& out, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

std::uint64_t read_u64(const std::string& bytes, std::size_t off) {
    std::uint64_t v = 0;
    std::memcpy(&v, bytes.data() + off, 8);
    return v;
}

}  // namespace

std::string checkpoint_to_bytes(const Model& model) {
    nlohmann::ordered_json header;
    header["format_version"] = 1;
    header["medfuse_version"] = kVersion;
    header["config"] = model.cfg.to_json();
    header["vocab_hash"] = to_hex(model.vocab.hash());
    header["catalog"] = model.catalog;
    header["norm_stats"] = {{"mean", model.stats.mean},
                            {"sd", model.stats.sd},
                            {"count", model.stats.count}};
    nlohmann::ordered_json dir = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        dir.push_back({{"name", model.params.name(i)},
                       {"shape", model.params.tensor(i).shape()}});
    }
    header["tensors"] = std::move(dir);

    const std::string header_str = header.dump();
    std::string out = kMagic;
    append_u64(out, header_str.size());
    out += header_str;
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        const Tensor& t = model.params.tensor(i);
        const auto* bytes = reinterpret_cast<const char*>(t.data());
        out.append(bytes, t.size() * sizeof(double));
    }
    return out;
}

Model checkpoint_from_bytes(const std::string& bytes, Vocab vocab) {
    const std::size_t magic_len = std::strlen(kMagic);
    if (bytes.size() < magic_len + 8 || bytes.compare(0, magic_len, kMagic) != 0) {
        throw DataError("checkpoint: bad magic (not a medfuse checkpoint)");
    }
    const std::uint64_t header_len = read_u64(bytes, magic_len);
    const std::size_t header_off = magic_len + 8;
    if (bytes.size() < header_off + header_len) {
        throw DataError("checkpoint: truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(header_off, header_len));
    } catch (const std::exception& e) {
        throw DataError(std::string("checkpoint: bad header JSON: ") + e.what());
    }

    if (header.value("format_version", 0) != 1) {
        throw DataError("checkpoint: unsupported format version");
    }
    const ModelConfig cfg = ModelConfig::from_json(header.at("config"));
    const std::string stored_hash = header.at("vocab_hash").get<std::string>();
    if (stored_hash != to_hex(vocab.hash())) {
        throw DataError("checkpoint: vocabulary hash mismatch (expected " + stored_hash +
                        ", vocabulary file has " + to_hex(vocab.hash()) + ")");
    }

    NormStats stats;
    const auto& ns = header.at("norm_stats");
    stats.mean = ns.at("mean").get<std::vector<double>>();
    stats.sd = ns.at("sd").get<std::vector<double>>();
    stats.count = ns.at("count").get<std::vector<std::uint64_t>>();
    auto catalog = header.at("catalog").get<std::vector<std::string>>();

    Model model = init_model(cfg, std::move(vocab), std::move(stats), std::move(catalog), 0);

    const auto& dir = header.at("tensors");
    if (dir.size() != model.params.size()) {
        throw DataError("checkpoint: tensor count " + std::to_string(dir.size()) +
                        " does not match model (" + std::to_string(model.params.size()) + ")");
    }
    std::size_t off = header_off + header_len;
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        const std::string name = dir[i].at("name").get<std::string>();
        const auto shape = dir[i].at("shape").get<std::vector<std::size_t>>();
        Tensor& t = model.params.tensor(i);
        if (name != model.params.name(i)) {
            throw DataError("checkpoint: tensor " + std::to_string(i) + " is " + name +
                            ", expected " + model.params.name(i));
        }
        if (shape != t.shape()) {
            throw DataError("checkpoint: tensor " + name + " has shape mismatch");
        }
        const std::size_t nbytes = t.size() * sizeof(double);
        if (bytes.size() < off + nbytes) throw DataError("checkpoint: truncated tensor data");
        std::memcpy(t.data(), bytes.data() + off, nbytes);
        off += nbytes;
    }
    if (off != bytes.size()) throw DataError("checkpoint: trailing bytes after tensor data");
    return model;
}

void save_checkpoint(const Model& model, const std::string& path) {
    write_file(path, checkpoint_to_bytes(model));
}

Model load_checkpoint(const std::string& path, const Vocab& vocab) {
    try {
        return checkpoint_from_bytes(read_file(path), vocab);
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + " [" + path + "]");
    }
}

}  // namespace medfuse
