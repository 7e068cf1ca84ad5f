#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medfuse/model.hpp"
#include "medfuse/shapley.hpp"

namespace medfuse {

enum class Granularity { token, lab_item };

std::string to_string(Granularity g);
Granularity granularity_from_string(const std::string& s);

struct AttributionFeature {
    std::string name;          // token text or lab item name
    long span_begin = -1;      // byte offsets into input_text (tokens only)
    long span_end = -1;
    double phi = 0.0;
    double std_error = 0.0;    // sampled mode only
};

struct AttributionReport {
    std::string patient_id;
    std::string date;
    Granularity granularity = Granularity::lab_item;
    std::string method;            // "exact" or "sampled"
    std::size_t n_samples = 0;     // sampled mode
    std::uint64_t seed = 0;        // sampled mode
    double base_value = 0.0;       // v(empty): all features ablated
    double full_value = 0.0;       // v(N): nothing ablated
    int explained_class = 1;       // class whose probability is the game value
    std::string input_text;        // text fed to the encoder (token mode)
    bool prescreened = false;
    std::size_t n_candidates = 0;  // features before any prescreen
    std::vector<AttributionFeature> features;  // ranked by |phi| descending

    nlohmann::ordered_json to_json() const;
    static AttributionReport from_json(const nlohmann::json& j);
};

struct ExplainConfig {
    std::size_t exact_limit = 12;
    std::size_t prescreen_k = 32;   // token prescreen size
    std::size_t n_samples = 500;    // sampled fallback
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool force_exact = false;       // error instead of falling back to sampling
};

// Shapley attribution of the model's class probability for one record.
// Ablation keeps shapes fixed: tokens are replaced by [UNK] with the padding
// mask unchanged; lab items get value 0 and mask 0. The untouched modality's
// embedding is computed once and reused across subset evaluations.
AttributionReport explain_record(const Model& model, const EncounterRecord& record,
                                 Granularity granularity, const ExplainConfig& cfg = {});

// Raw fusion attention weights for a record, exposed separately from Shapley
// reports (one matrix per head, rows = [text, lab] queries).
nlohmann::ordered_json fusion_attention_json(const Model& model, const EncounterRecord& record);

}  // namespace medfuse
