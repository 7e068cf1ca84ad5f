#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medfuse/labs.hpp"
#include "medfuse/params.hpp"
#include "medfuse/tape.hpp"
#include "medfuse/text.hpp"
#include "medfuse/textualize.hpp"

namespace medfuse {

enum class Mode { fusion, text_only, labs_only, labs_text };
enum class Task { binary, multiclass };
enum class Pooling { mean, first };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);
std::string to_string(Task t);
Task task_from_string(const std::string& s);
std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);

struct TextEncoderConfig {
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_model = 128;
    std::size_t ffn_mult = 4;
    std::size_t max_len = 256;
    std::size_t vocab_size = 8192;
    std::size_t min_freq = 1;
    Pooling pooling = Pooling::mean;
    double ln_eps = 1e-5;
};

struct LabEncoderConfig {
    std::size_t hidden1 = 256;
    std::size_t hidden2 = 128;
};

struct ModelConfig {
    Mode mode = Mode::fusion;
    Task task = Task::binary;
    TextEncoderConfig text;
    LabEncoderConfig labs;
    std::size_t fusion_heads = 4;
    std::size_t head_hidden = 128;
    // Text fed to the encoder; defaults to clinical notes except in labs_text
    // mode, which uses the serialized panel.
    InputMode text_input = InputMode::notes_only;

    std::size_t n_classes() const { return task == Task::binary ? 2 : 5; }
    bool uses_text() const { return mode != Mode::labs_only; }
    bool uses_labs() const { return mode == Mode::fusion || mode == Mode::labs_only; }
    std::size_t head_input_width() const {
        return mode == Mode::fusion ? 3 * text.d_model : text.d_model;
    }
    void validate() const;  // throws ConfigError

    nlohmann::ordered_json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

// Applies labs_text's serialized-panel input and leaves the other modes on
// their configured text input.
InputMode effective_text_input(const ModelConfig& cfg);

struct TextLayerIdx {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln2_g, ln2_b, ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct TextIdx {
    std::size_t embed, pos, final_g, final_b;
    std::vector<TextLayerIdx> layers;
};

struct LabsIdx {
    std::size_t w1, b1, w2, b2, w3, b3;
};

struct FusionIdx {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
};

struct HeadIdx {
    std::size_t w1, b1, w2, b2;
};

// Trained artifact: configuration, vocabulary, normalization stats, catalog
// and the parameter store. The catalog is carried explicitly so checkpoints
// stay self-describing if the built-in list ever changes.
struct Model {
    ModelConfig cfg;
    Vocab vocab;
    NormStats stats;
    std::vector<std::string> catalog;
    ParamStore params;
    TextIdx text_idx;
    LabsIdx labs_idx;
    FusionIdx fusion_idx;
    HeadIdx head_idx;

    std::vector<double> forward_probs(const EncounterRecord& record) const;
};

Model init_model(const ModelConfig& cfg, Vocab vocab, NormStats stats,
                 std::vector<std::string> catalog, std::uint64_t seed);

// Per-head attention matrices captured for inspection (tests, attention
// dumps). Raw attention weights are reported separately from Shapley values,
// never mixed into one attribution.
struct AttentionProbe {
    std::vector<Tensor> matrices;  // one [rows x cols] per head, layer-major
};

// Graph builders. vars must come from model.params.tape_vars(tape).
// token_states_out, when given, receives the embed+position node (the input
// states used by gradient-times-input prescreens).
Var text_encoder_forward(Tape& tape, const std::vector<Var>& vars, const Model& model,
                         const TokenizedInput& toks, AttentionProbe* probe = nullptr,
                         Var* token_states_out = nullptr);
Var lab_encoder_forward(Tape& tape, const std::vector<Var>& vars, const Model& model,
                        const LabVector& labvec);
Var fusion_forward(Tape& tape, const std::vector<Var>& vars, const Model& model, Var text_emb,
                   Var lab_emb, AttentionProbe* probe = nullptr);
Var head_forward(Tape& tape, const std::vector<Var>& vars, const Model& model, Var features);

struct ForwardGraph {
    Var logits;
    Var probs;
    Var text_emb;                // pooled text embedding node (text modes only)
    Var lab_emb;                 // lab embedding node (lab modes only)
    Var token_states;            // embedded token matrix node (text modes only)
    TokenizedInput toks;         // text modes only
    LabVector labvec;            // lab modes only
};

// Full forward for a record under the model's mode. Throws DataError when the
// record lacks the mode's required input.
ForwardGraph model_forward(Tape& tape, const std::vector<Var>& vars, const Model& model,
                           const EncounterRecord& record, AttentionProbe* fusion_probe = nullptr);

// Forward with one or both branch embeddings replaced by precomputed values.
// This is both the ablation fast path and the seam where an external text
// embedder can be plugged in place of the built-in encoder.
ForwardGraph model_forward_cached(Tape& tape, const std::vector<Var>& vars, const Model& model,
                                  const std::optional<Tensor>& text_emb,
                                  const std::optional<TokenizedInput>& toks,
                                  const std::optional<Tensor>& lab_emb,
                                  const std::optional<LabVector>& labvec);

}  // namespace medfuse
