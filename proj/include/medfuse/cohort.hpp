#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medfuse/error.hpp"

namespace medfuse {

// Blood test item catalog. Order is the lab-vector index convention used by
// the numeric lab path; panels may carry extra items beyond it.
const std::vector<std::string>& lab_catalog();
int catalog_index(const std::string& item_name);  // -1 when absent

enum class BinaryLabel { negative = 0, positive = 1, unlabeled = 2 };
enum class MultiLabel {
    diabetes_only = 0,
    diabetes_hypertension = 1,
    diabetes_hyperlipidemia = 2,
    hypertension_only = 3,
    other = 4,
    unlabeled = 5,
};
inline constexpr int kMultiClassCount = 5;

std::string to_string(BinaryLabel l);
std::string to_string(MultiLabel l);
BinaryLabel binary_label_from_string(const std::string& s);
MultiLabel multi_label_from_string(const std::string& s);

struct LabEntry {
    std::string name;
    std::string raw;    // decimal string exactly as recorded, e.g. "1.450"
    double value = 0.0; // parsed numeric value of raw
    std::string unit;   // optional tag, not part of the cohort file format
};

// Ordered lab panel. Names are unique, contain no ':' and no ", ", and raw
// values are finite decimal strings, so serialized panels parse back exactly.
class LabPanel {
public:
    void insert(const std::string& name, const std::string& raw, const std::string& unit = "");
    bool has(const std::string& name) const { return find(name) != nullptr; }
    const LabEntry* find(const std::string& name) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    // Throws DataError describing the violation.
    static void validate_name(const std::string& name);

private:
    std::vector<LabEntry> entries_;
};

struct EncounterRecord {
    std::string patient_id;
    std::string date;  // ISO-8601 day
    std::string note_text;
    LabPanel panel;
    BinaryLabel label_binary = BinaryLabel::unlabeled;
    MultiLabel label_multiclass = MultiLabel::unlabeled;
    bool onset_flag = false;
};

// Diabetes rule: positive when any mapped glucose item is >= fpg_threshold
// (mg/dL) or any mapped HbA1c item is >= hba1c_threshold (percent).
struct LabelRule {
    double fpg_threshold = 126.0;
    double hba1c_threshold = 6.5;
    std::vector<std::string> glucose_items{"Glucose AC", "Glucose AC (POCT)"};
    std::vector<std::string> hba1c_items{"HbA1c"};
};

BinaryLabel assign_binary_label(const LabPanel& panel, const LabelRule& rule);

struct ConditionFlags {
    bool diabetes = false;
    bool hypertension = false;
    bool hyperlipidemia = false;
};

// Deterministic flag -> class mapping. Diabetes pairings outrank
// hypertension_only; the triple combination maps to diabetes_hypertension.
// Hyperlipidemia alone (or with hypertension absent diabetes, hyperlipidemia
// being secondary there) falls through per the table in the implementation.
MultiLabel assign_multiclass_label(const ConditionFlags& flags);

// --- synthetic cohort ------------------------------------------------------

struct LabItemSpec {
    std::string name;
    double mean = 0.0;
    double sd = 1.0;
    // Additive mean shifts while the matching condition is active.
    double diabetes_shift = 0.0;
    double hypertension_shift = 0.0;
    double hyperlipidemia_shift = 0.0;
    int decimals = 1;           // raw-string formatting precision
    double missing_rate = -1.0; // negative -> SynthConfig::missingness
};

struct NoteBank {
    std::vector<std::string> neutral;
    std::vector<std::string> diabetes;
    std::vector<std::string> hypertension;
    std::vector<std::string> hyperlipidemia;
    std::vector<std::string> confounder;  // mild symptom text for negatives
    double symptom_rate = 0.8;            // P(condition sentence | condition active)
    double confounder_rate = 0.05;        // P(confounder sentence | no diabetes)
};

// Class mixture order matches MultiLabel: {diabetes_only,
// diabetes_hypertension, diabetes_hyperlipidemia, hypertension_only, other}.
// positive_rate drives the diabetes flag; the mixture is applied
// conditionally on the flag's side, renormalized.
struct SynthConfig {
    std::size_t n_patients = 1000;
    double positive_rate = 0.2;
    double missingness = 0.3;
    std::array<double, 5> class_mix{0.10, 0.06, 0.04, 0.15, 0.65};
    std::vector<LabItemSpec> items;  // defaulted by default_synth_config()
    NoteBank notes;
    int encounters_min = 1;
    int encounters_max = 1;
    int window_days = 1826;  // five years
    int onset_window_days = 180;
    // When true, diabetic patients' encounters may predate onset (labs drawn
    // from the non-diabetic side, diabetes excluded from effective flags).
    // When false, diabetic encounters are sampled at or after onset, so the
    // record-level positive fraction tracks positive_rate.
    bool pre_onset_encounters = false;
    LabelRule rule;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

SynthConfig default_synth_config();

std::vector<EncounterRecord> generate_cohort(const SynthConfig& config, std::size_t n_threads = 1);

nlohmann::ordered_json synth_config_to_json(const SynthConfig& config);
// Fields present in j override base; items/note pools replace wholesale.
SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base);

// Patient-level split: no patient id appears on both sides; train patient
// count is round(ratio * patients). Seed-deterministic.
std::pair<std::vector<EncounterRecord>, std::vector<EncounterRecord>>
split_cohort(const std::vector<EncounterRecord>& records, double ratio, std::uint64_t seed);

// --- cohort file (one JSON object per line) --------------------------------
// Fields: patient_id, date, note_text, labs (name -> decimal string),
// label_binary, label_multiclass, onset_flag. Field names and lab order are
// part of the format contract; writing is byte-deterministic.

std::string cohort_to_jsonl(const std::vector<EncounterRecord>& records);
std::vector<EncounterRecord> cohort_from_jsonl(const std::string& content);
void write_cohort(const std::string& path, const std::vector<EncounterRecord>& records);
std::vector<EncounterRecord> read_cohort(const std::string& path);

}  // namespace medfuse
