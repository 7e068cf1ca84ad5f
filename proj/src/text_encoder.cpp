#include <cmath>

#include "medfuse/model.hpp"

namespace medfuse {

namespace {

struct AttnParamIdx {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
};

// Multi-head scaled dot-product self-attention over x [L x d] with key
// padding mask. Per-head attention rows sum to 1; masked key columns are
// exactly 0.
Var multi_head_self_attention(Tape& tape, const std::vector<Var>& vars, Var x,
                              const AttnParamIdx& ix, std::size_t n_heads,
                              const std::vector<std::uint8_t>& key_mask, AttentionProbe* probe) {
    const std::size_t d = tape.value(x).cols();
    const std::size_t dh = d / n_heads;
    Var q = tape.add_rowvec(tape.matmul(x, vars[ix.wq]), vars[ix.bq]);
    Var k = tape.add_rowvec(tape.matmul(x, vars[ix.wk]), vars[ix.bk]);
    Var v = tape.add_rowvec(tape.matmul(x, vars[ix.wv]), vars[ix.bv]);
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> contexts;
    contexts.reserve(n_heads);
    for (std::size_t h = 0; h < n_heads; ++h) {
        Var qh = tape.slice_cols(q, h * dh, (h + 1) * dh);
        Var kh = tape.slice_cols(k, h * dh, (h + 1) * dh);
        Var vh = tape.slice_cols(v, h * dh, (h + 1) * dh);
        Var scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
        Var probs = tape.masked_softmax_rows(scores, key_mask);
        if (probe) probe->matrices.push_back(tape.value(probs));
        contexts.push_back(tape.matmul(probs, vh));
    }
    Var ctx = n_heads == 1 ? contexts[0] : tape.concat_cols(contexts);
    return tape.add_rowvec(tape.matmul(ctx, vars[ix.wo]), vars[ix.bo]);
}

}  // namespace

Var text_encoder_forward(Tape& tape, const std::vector<Var>& vars, const Model& model,
                         const TokenizedInput& toks, AttentionProbe* probe,
                         Var* token_states_out) {
    const TextEncoderConfig& tc = model.cfg.text;
    if (toks.ids.empty() || toks.ids.size() > tc.max_len) {
        throw ShapeError("encode_text: sequence length " + std::to_string(toks.ids.size()) +
                         " outside [1, " + std::to_string(tc.max_len) + "]");
    }
    if (toks.mask.size() != toks.ids.size()) {
        throw ShapeError("encode_text: mask length does not match ids");
    }
    if (toks.n_real == 0) throw DataError("encode_text: input has no content tokens");

    const TextIdx& ix = model.text_idx;
    const std::size_t len = toks.ids.size();
    Var x = tape.embed(vars[ix.embed], toks.ids);
    x = tape.add(x, tape.slice_rows(vars[ix.pos], 0, len));
    if (token_states_out) *token_states_out = x;

    for (const TextLayerIdx& layer : ix.layers) {
        Var xn = tape.layer_norm(x, vars[layer.ln1_g], vars[layer.ln1_b], tc.ln_eps);
        const AttnParamIdx attn{layer.wq, layer.bq, layer.wk, layer.bk,
                                layer.wv, layer.bv, layer.wo, layer.bo};
        Var a = multi_head_self_attention(tape, vars, xn, attn, tc.n_heads, toks.mask, probe);
        x = tape.add(x, a);
        Var xn2 = tape.layer_norm(x, vars[layer.ln2_g], vars[layer.ln2_b], tc.ln_eps);
        Var h = tape.gelu(tape.add_rowvec(tape.matmul(xn2, vars[layer.ffn_w1]), vars[layer.ffn_b1]));
        Var f = tape.add_rowvec(tape.matmul(h, vars[layer.ffn_w2]), vars[layer.ffn_b2]);
        x = tape.add(x, f);
    }
    x = tape.layer_norm(x, vars[ix.final_g], vars[ix.final_b], tc.ln_eps);

    if (tc.pooling == Pooling::first) return tape.slice_rows(x, 0, 1);
    return tape.masked_mean_rows(x, toks.mask);
}

Var fusion_forward(Tape& tape, const std::vector<Var>& vars, const Model& model, Var text_emb,
                   Var lab_emb, AttentionProbe* probe) {
    const std::size_t d = model.cfg.text.d_model;
    if (tape.value(text_emb).cols() != d || tape.value(text_emb).rows() != 1 ||
        tape.value(lab_emb).cols() != d || tape.value(lab_emb).rows() != 1) {
        throw ShapeError("fuse: embeddings must be [1 x " + std::to_string(d) + "], got " +
                         tape.value(text_emb).shape_str() + " and " +
                         tape.value(lab_emb).shape_str());
    }
    // The two modality embeddings form a 2-token sequence; self-attention over
    // it computes genuine cross-modal weights.
    Var seq = tape.concat_rows({text_emb, lab_emb});
    const FusionIdx& fx = model.fusion_idx;
    const AttnParamIdx attn{fx.wq, fx.bq, fx.wk, fx.bk, fx.wv, fx.bv, fx.wo, fx.bo};
    const std::vector<std::uint8_t> both{1, 1};
    Var attended = multi_head_self_attention(tape, vars, seq, attn, model.cfg.fusion_heads, both,
                                             probe);
    Var summary = tape.mean_rows(attended);
    return tape.concat_cols({summary, text_emb, lab_emb});
}

Var head_forward(Tape& tape, const std::vector<Var>& vars, const Model& model, Var features) {
    const HeadIdx& hx = model.head_idx;
    if (tape.value(features).cols() != model.cfg.head_input_width()) {
        throw ShapeError("classify: feature width " +
                         std::to_string(tape.value(features).cols()) + " does not match head " +
                         std::to_string(model.cfg.head_input_width()));
    }
    Var h = tape.relu(tape.add(tape.matmul(features, vars[hx.w1]), vars[hx.b1]));
    return tape.add(tape.matmul(h, vars[hx.w2]), vars[hx.b2]);
}

}  // namespace medfuse
