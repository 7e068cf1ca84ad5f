#include "medfuse/model.hpp"

#include <cmath>

#include "medfuse/rng.hpp"

namespace medfuse {

std::string to_string(Mode m) {
    switch (m) {
        case Mode::fusion: return "fusion";
        case Mode::text_only: return "text_only";
        case Mode::labs_only: return "labs_only";
        case Mode::labs_text: return "labs_text";
    }
    return "fusion";
}

Mode mode_from_string(const std::string& s) {
    if (s == "fusion") return Mode::fusion;
    if (s == "text_only") return Mode::text_only;
    if (s == "labs_only") return Mode::labs_only;
    if (s == "labs_text") return Mode::labs_text;
    throw ConfigError("unknown mode: " + s);
}

std::string to_string(Task t) { return t == Task::binary ? "binary" : "multiclass"; }

Task task_from_string(const std::string& s) {
    if (s == "binary") return Task::binary;
    if (s == "multiclass") return Task::multiclass;
    throw ConfigError("unknown task: " + s);
}

std::string to_string(Pooling p) { return p == Pooling::mean ? "mean" : "first"; }

Pooling pooling_from_string(const std::string& s) {
    if (s == "mean") return Pooling::mean;
    if (s == "first") return Pooling::first;
    throw ConfigError("unknown pooling: " + s);
}

void ModelConfig::validate() const {
    if (text.d_model == 0 || text.max_len == 0 || text.ffn_mult == 0) {
        throw ConfigError("model: text encoder dimensions must be positive");
    }
    if (uses_text()) {
        if (text.n_layers == 0 || text.n_heads == 0) {
            throw ConfigError("model: text encoder needs at least one layer and head");
        }
        if (text.d_model % text.n_heads != 0) {
            throw ConfigError("model: d_model must be divisible by n_heads");
        }
        if (text.vocab_size < 2) throw ConfigError("model: vocab_size must be at least 2");
    }
    if (mode == Mode::fusion) {
        if (fusion_heads == 0 || text.d_model % fusion_heads != 0) {
            throw ConfigError("model: d_model must be divisible by fusion_heads");
        }
    }
    if (uses_labs() && (labs.hidden1 == 0 || labs.hidden2 == 0)) {
        throw ConfigError("model: lab encoder hidden sizes must be positive");
    }
    if (head_hidden == 0) throw ConfigError("model: head_hidden must be positive");
    if (text.ln_eps <= 0.0) throw ConfigError("model: ln_eps must be positive");
}

nlohmann::ordered_json ModelConfig::to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = medfuse::to_string(mode);
    j["task"] = medfuse::to_string(task);
    j["text"] = {{"n_layers", text.n_layers}, {"n_heads", text.n_heads},
                 {"d_model", text.d_model},   {"ffn_mult", text.ffn_mult},
                 {"max_len", text.max_len},   {"vocab_size", text.vocab_size},
                 {"min_freq", text.min_freq}, {"pooling", medfuse::to_string(text.pooling)},
                 {"ln_eps", text.ln_eps}};
    j["labs"] = {{"hidden1", labs.hidden1}, {"hidden2", labs.hidden2}};
    j["fusion_heads"] = fusion_heads;
    j["head_hidden"] = head_hidden;
    j["text_input"] = medfuse::to_string(text_input);
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.mode = mode_from_string(j.value("mode", medfuse::to_string(cfg.mode)));
    cfg.task = task_from_string(j.value("task", medfuse::to_string(cfg.task)));
    if (j.contains("text")) {
        const auto& t = j.at("text");
        cfg.text.n_layers = t.value("n_layers", cfg.text.n_layers);
        cfg.text.n_heads = t.value("n_heads", cfg.text.n_heads);
        cfg.text.d_model = t.value("d_model", cfg.text.d_model);
        cfg.text.ffn_mult = t.value("ffn_mult", cfg.text.ffn_mult);
        cfg.text.max_len = t.value("max_len", cfg.text.max_len);
        cfg.text.vocab_size = t.value("vocab_size", cfg.text.vocab_size);
        cfg.text.min_freq = t.value("min_freq", cfg.text.min_freq);
        cfg.text.pooling = pooling_from_string(
            t.value("pooling", std::string(medfuse::to_string(cfg.text.pooling))));
        cfg.text.ln_eps = t.value("ln_eps", cfg.text.ln_eps);
    }
    if (j.contains("labs")) {
        const auto& l = j.at("labs");
        cfg.labs.hidden1 = l.value("hidden1", cfg.labs.hidden1);
        cfg.labs.hidden2 = l.value("hidden2", cfg.labs.hidden2);
    }
    cfg.fusion_heads = j.value("fusion_heads", cfg.fusion_heads);
    cfg.head_hidden = j.value("head_hidden", cfg.head_hidden);
    cfg.text_input =
        input_mode_from_string(j.value("text_input", medfuse::to_string(cfg.text_input)));
    cfg.validate();
    return cfg;
}

InputMode effective_text_input(const ModelConfig& cfg) {
    return cfg.mode == Mode::labs_text ? InputMode::labs_text_only : cfg.text_input;
}

namespace {

class Initializer {
public:
    Initializer(ParamStore& store, std::uint64_t seed)
        : store_(store), rng_(Rng::mix(seed, "init")) {}

    std::size_t weight(const std::string& name, std::size_t r, std::size_t c) {
        Tensor t = Tensor::zeros({r, c});
        for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng_.normal(0.0, 0.02);
        return store_.add(name, std::move(t));
    }

    std::size_t zeros(const std::string& name, std::size_t c) {
        return store_.add(name, Tensor::zeros({1, c}));
    }

    std::size_t ones(const std::string& name, std::size_t c) {
        return store_.add(name, Tensor::full({1, c}, 1.0));
    }

private:
    ParamStore& store_;
    Rng rng_;
};

}  // namespace

Model init_model(const ModelConfig& cfg, Vocab vocab, NormStats stats,
                 std::vector<std::string> catalog, std::uint64_t seed) {
    cfg.validate();
    Model model;
    model.cfg = cfg;
    model.vocab = std::move(vocab);
    model.stats = std::move(stats);
    model.catalog = std::move(catalog);
    if (model.cfg.uses_labs() && model.stats.size() != model.catalog.size()) {
        throw ShapeError("init_model: norm stats do not match catalog size");
    }

    Initializer init(model.params, seed);
    const std::size_t d = cfg.text.d_model;

    if (cfg.uses_text()) {
        if (model.vocab.size() > cfg.text.vocab_size) {
            throw ConfigError("init_model: vocabulary exceeds configured vocab_size");
        }
        model.text_idx.embed = init.weight("text.embedding", model.vocab.size(), d);
        model.text_idx.pos = init.weight("text.position", cfg.text.max_len, d);
        for (std::size_t l = 0; l < cfg.text.n_layers; ++l) {
            const std::string p = "text.layer" + std::to_string(l) + ".";
            TextLayerIdx ix;
            ix.ln1_g = init.ones(p + "ln1.gamma", d);
            ix.ln1_b = init.zeros(p + "ln1.beta", d);
            ix.wq = init.weight(p + "attn.wq", d, d);
            ix.bq = init.zeros(p + "attn.bq", d);
            ix.wk = init.weight(p + "attn.wk", d, d);
            ix.bk = init.zeros(p + "attn.bk", d);
            ix.wv = init.weight(p + "attn.wv", d, d);
            ix.bv = init.zeros(p + "attn.bv", d);
            ix.wo = init.weight(p + "attn.wo", d, d);
            ix.bo = init.zeros(p + "attn.bo", d);
            ix.ln2_g = init.ones(p + "ln2.gamma", d);
            ix.ln2_b = init.zeros(p + "ln2.beta", d);
            ix.ffn_w1 = init.weight(p + "ffn.w1", d, cfg.text.ffn_mult * d);
            ix.ffn_b1 = init.zeros(p + "ffn.b1", cfg.text.ffn_mult * d);
            ix.ffn_w2 = init.weight(p + "ffn.w2", cfg.text.ffn_mult * d, d);
            ix.ffn_b2 = init.zeros(p + "ffn.b2", d);
            model.text_idx.layers.push_back(ix);
        }
        model.text_idx.final_g = init.ones("text.final_norm.gamma", d);
        model.text_idx.final_b = init.zeros("text.final_norm.beta", d);
    }

    if (cfg.uses_labs()) {
        const std::size_t k2 = 2 * model.catalog.size();
        model.labs_idx.w1 = init.weight("labs.w1", k2, cfg.labs.hidden1);
        model.labs_idx.b1 = init.zeros("labs.b1", cfg.labs.hidden1);
        model.labs_idx.w2 = init.weight("labs.w2", cfg.labs.hidden1, cfg.labs.hidden2);
        model.labs_idx.b2 = init.zeros("labs.b2", cfg.labs.hidden2);
        model.labs_idx.w3 = init.weight("labs.w3", cfg.labs.hidden2, d);
        model.labs_idx.b3 = init.zeros("labs.b3", d);
    }

    if (cfg.mode == Mode::fusion) {
        model.fusion_idx.wq = init.weight("fusion.attn.wq", d, d);
        model.fusion_idx.bq = init.zeros("fusion.attn.bq", d);
        model.fusion_idx.wk = init.weight("fusion.attn.wk", d, d);
        model.fusion_idx.bk = init.zeros("fusion.attn.bk", d);
        model.fusion_idx.wv = init.weight("fusion.attn.wv", d, d);
        model.fusion_idx.bv = init.zeros("fusion.attn.bv", d);
        model.fusion_idx.wo = init.weight("fusion.attn.wo", d, d);
        model.fusion_idx.bo = init.zeros("fusion.attn.bo", d);
    }

    model.head_idx.w1 = init.weight("head.w1", cfg.head_input_width(), cfg.head_hidden);
    model.head_idx.b1 = init.zeros("head.b1", cfg.head_hidden);
    model.head_idx.w2 = init.weight("head.w2", cfg.head_hidden, cfg.n_classes());
    model.head_idx.b2 = init.zeros("head.b2", cfg.n_classes());
    return model;
}

ForwardGraph model_forward(Tape& tape, const std::vector<Var>& vars, const Model& model,
                           const EncounterRecord& record, AttentionProbe* fusion_probe) {
    ForwardGraph g;
    if (model.cfg.uses_text()) {
        const std::string input = build_input(record, effective_text_input(model.cfg));
        g.toks = tokenize(input, model.vocab, model.cfg.text.max_len);
        g.text_emb = text_encoder_forward(tape, vars, model, g.toks, nullptr, &g.token_states);
    }
    if (model.cfg.uses_labs()) {
        if (model.cfg.mode == Mode::labs_only && record.panel.empty()) {
            throw DataError("forward: labs_only requires a non-empty panel (patient " +
                            record.patient_id + ")");
        }
        g.labvec = vectorize_panel(record.panel, model.stats, model.catalog);
        g.lab_emb = lab_encoder_forward(tape, vars, model, g.labvec);
    }

    Var features;
    switch (model.cfg.mode) {
        case Mode::fusion:
            features = fusion_forward(tape, vars, model, g.text_emb, g.lab_emb, fusion_probe);
            break;
        case Mode::labs_only:
            features = g.lab_emb;
            break;
        default:
            features = g.text_emb;
            break;
    }
    g.logits = head_forward(tape, vars, model, features);
    g.probs = tape.softmax(g.logits, 1);
    return g;
}

ForwardGraph model_forward_cached(Tape& tape, const std::vector<Var>& vars, const Model& model,
                                  const std::optional<Tensor>& text_emb,
                                  const std::optional<TokenizedInput>& toks,
                                  const std::optional<Tensor>& lab_emb,
                                  const std::optional<LabVector>& labvec) {
    ForwardGraph g;
    if (model.cfg.uses_text()) {
        if (text_emb) {
            g.text_emb = tape.leaf(*text_emb);
        } else if (toks) {
            g.toks = *toks;
            g.text_emb = text_encoder_forward(tape, vars, model, g.toks, nullptr, &g.token_states);
        } else {
            throw ContractError("model_forward_cached: text branch input missing");
        }
    }
    if (model.cfg.uses_labs()) {
        if (lab_emb) {
            g.lab_emb = tape.leaf(*lab_emb);
        } else if (labvec) {
            g.labvec = *labvec;
            g.lab_emb = lab_encoder_forward(tape, vars, model, g.labvec);
        } else {
            throw ContractError("model_forward_cached: lab branch input missing");
        }
    }
    Var features;
    switch (model.cfg.mode) {
        case Mode::fusion:
            features = fusion_forward(tape, vars, model, g.text_emb, g.lab_emb);
            break;
        case Mode::labs_only:
            features = g.lab_emb;
            break;
        default:
            features = g.text_emb;
            break;
    }
    g.logits = head_forward(tape, vars, model, features);
    g.probs = tape.softmax(g.logits, 1);
    return g;
}

std::vector<double> Model::forward_probs(const EncounterRecord& record) const {
    Tape tape;
    const std::vector<Var> vars = params.tape_vars(tape);
    const ForwardGraph g = model_forward(tape, vars, *this, record);
    return tape.value(g.probs).values();
}

}  // namespace medfuse
