#include "medfuse/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "medfuse/rng.hpp"
#include "medfuse/threadpool.hpp"
#include "medfuse/util.hpp"

namespace medfuse {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string>& lab_catalog() {
    static const std::vector<std::string> items = {
        "eGFR (MDRD)", "CRP", "High Sensitivity CRP", "HDL Cholesterol", "LDL Cholesterol",
        "Glucose PC 120min", "Glucose PC 90min", "Glucose random", "Apolipoprotein A1",
        "Glucose PC 15 min", "Cholesterol T", "Creatinine", "Glucose random (POCT)", "Na",
        "Glucose PC", "Glucose AC", "HGH (Growth Hormone)", "Total LDH", "Glucose PC 180min",
        "HbA1c", "C-Peptide 6min", "Glucose PC 60min", "BUN", "Glucose AC (POCT)", "K",
        "eGFR (CKD-EPI Cystatin C)", "Glucose PC 30min", "Creatinine (POCT)", "ALT (SGPT)",
        "AST (SGOT)", "Triglyceride",
    };
    return items;
}

int catalog_index(const std::string& item_name) {
    static const std::unordered_map<std::string, int> index = [] {
        std::unordered_map<std::string, int> m;
        const auto& items = lab_catalog();
        for (std::size_t i = 0; i < items.size(); ++i) m[items[i]] = static_cast<int>(i);
        return m;
    }();
    auto it = index.find(item_name);
    return it == index.end() ? -1 : it->second;
}

std::string to_string(BinaryLabel l) {
    switch (l) {
        case BinaryLabel::negative: return "negative";
        case BinaryLabel::positive: return "positive";
        case BinaryLabel::unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

std::string to_string(MultiLabel l) {
    switch (l) {
        case MultiLabel::diabetes_only: return "diabetes_only";
        case MultiLabel::diabetes_hypertension: return "diabetes_hypertension";
        case MultiLabel::diabetes_hyperlipidemia: return "diabetes_hyperlipidemia";
        case MultiLabel::hypertension_only: return "hypertension_only";
        case MultiLabel::other: return "other";
        case MultiLabel::unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

BinaryLabel binary_label_from_string(const std::string& s) {
    if (s == "negative") return BinaryLabel::negative;
    if (s == "positive") return BinaryLabel::positive;
    if (s == "unlabeled") return BinaryLabel::unlabeled;
    throw DataError("unknown binary label: " + s);
}

MultiLabel multi_label_from_string(const std::string& s) {
    if (s == "diabetes_only") return MultiLabel::diabetes_only;
    if (s == "diabetes_hypertension") return MultiLabel::diabetes_hypertension;
    if (s == "diabetes_hyperlipidemia") return MultiLabel::diabetes_hyperlipidemia;
    if (s == "hypertension_only") return MultiLabel::hypertension_only;
    if (s == "other") return MultiLabel::other;
    if (s == "unlabeled") return MultiLabel::unlabeled;
    throw DataError("unknown multiclass label: " + s);
}

void LabPanel::validate_name(const std::string& name) {
    if (name.empty()) throw DataError("lab item name must be non-empty");
    if (name.find(':') != std::string::npos) {
        throw DataError("lab item name must not contain ':': " + name);
    }
    if (name.find(", ") != std::string::npos) {
        throw DataError("lab item name must not contain ', ': " + name);
    }
}

void LabPanel::insert(const std::string& name, const std::string& raw, const std::string& unit) {
    validate_name(name);
    if (has(name)) throw DataError("duplicate lab item: " + name);
    double value = 0.0;
    if (!parse_decimal(raw, value)) {
        throw DataError("lab item " + name + ": value is not a finite decimal: \"" + raw + "\"");
    }
    entries_.push_back(LabEntry{name, raw, value, unit});
}

const LabEntry* LabPanel::find(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

BinaryLabel assign_binary_label(const LabPanel& panel, const LabelRule& rule) {
    bool any_mapped = false;
    bool positive = false;
    auto scan = [&](const std::vector<std::string>& names, double threshold) {
        for (const auto& name : names) {
            const LabEntry* e = panel.find(name);
            if (!e) continue;
            if (!std::isfinite(e->value)) {
                throw DataError("label rule: non-numeric value for item " + name);
            }
            any_mapped = true;
            if (e->value >= threshold) positive = true;
        }
    };
    scan(rule.glucose_items, rule.fpg_threshold);
    scan(rule.hba1c_items, rule.hba1c_threshold);
    if (positive) return BinaryLabel::positive;
    return any_mapped ? BinaryLabel::negative : BinaryLabel::unlabeled;
}

MultiLabel assign_multiclass_label(const ConditionFlags& flags) {
    if (flags.diabetes && flags.hypertension) return MultiLabel::diabetes_hypertension;
    if (flags.diabetes && flags.hyperlipidemia) return MultiLabel::diabetes_hyperlipidemia;
    if (flags.diabetes) return MultiLabel::diabetes_only;
    if (flags.hypertension) return MultiLabel::hypertension_only;
    return MultiLabel::other;
}

// --- synthetic cohort ------------------------------------------------------

SynthConfig default_synth_config() {
    SynthConfig c;
    c.items = {
        // name, mean, sd, diabetes/hypertension/hyperlipidemia shifts, decimals
        {"Glucose AC", 95.0, 15.0, 55.0, 0.0, 0.0, 0, -1.0},
        {"HbA1c", 5.4, 0.5, 2.1, 0.0, 0.0, 1, -1.0},
        {"HDL Cholesterol", 55.0, 12.0, 0.0, 0.0, -12.0, 0, -1.0},
        {"LDL Cholesterol", 105.0, 25.0, 8.0, 0.0, 45.0, 0, -1.0},
        {"Triglyceride", 110.0, 40.0, 25.0, 0.0, 90.0, 0, -1.0},
        {"Cholesterol T", 180.0, 30.0, 0.0, 0.0, 50.0, 0, -1.0},
        {"Creatinine", 0.95, 0.2, 0.0, 0.25, 0.0, 2, -1.0},
        {"BUN", 16.0, 5.0, 0.0, 6.0, 0.0, 0, -1.0},
        {"Na", 140.0, 2.5, 0.0, 1.5, 0.0, 0, -1.0},
        {"K", 4.3, 0.4, 0.0, 0.0, 0.0, 1, -1.0},
        {"eGFR (MDRD)", 90.0, 15.0, -6.0, -18.0, 0.0, 0, -1.0},
    };
    c.notes.neutral = {
        "Patient presents for routine follow up with stable vital signs.",
        "Seen in outpatient clinic for scheduled review of chronic medications.",
        "Annual health examination, no acute complaints at this visit.",
        "Follow up visit after recent laboratory testing, records reviewed.",
        "Patient returns for periodic check, reports adherence to current regimen.",
    };
    c.notes.diabetes = {
        "Reports increased thirst and frequent urination over the past month.",
        "Complains of polyuria, polydipsia and unexplained weight loss.",
        "Notes blurred vision and persistent fatigue after meals, home glucose readings elevated.",
        "Family history of type 2 diabetes, recent random glucose at pharmacy was high.",
    };
    c.notes.hypertension = {
        "Home blood pressure log shows repeated readings above 145 over 90.",
        "Reports morning occipital headaches, office blood pressure borderline high.",
        "Known elevated blood pressure, medication titration discussed.",
    };
    c.notes.hyperlipidemia = {
        "Prior lipid panel flagged elevated cholesterol, dietary changes attempted.",
        "History of high cholesterol, statin adherence reviewed today.",
    };
    c.notes.confounder = {
        "Reports occasional fatigue and mild thirst after exercise.",
        "Mentions transient blurred vision attributed to screen use.",
    };
    return c;
}

void SynthConfig::validate() const {
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (n_patients == 0) throw ConfigError("synth: n_patients must be positive");
    if (!in01(positive_rate)) throw ConfigError("synth: positive_rate must be in [0, 1]");
    if (!in01(missingness)) throw ConfigError("synth: missingness must be in [0, 1]");
    double mix_sum = 0.0;
    for (double w : class_mix) {
        if (w < 0.0) throw ConfigError("synth: class_mix entries must be non-negative");
        mix_sum += w;
    }
    if (std::abs(mix_sum - 1.0) > 1e-9) throw ConfigError("synth: class_mix must sum to 1");
    const double diab_mass = class_mix[0] + class_mix[1] + class_mix[2];
    if (positive_rate > 0.0 && diab_mass <= 0.0) {
        throw ConfigError("synth: positive_rate > 0 requires mass on diabetes classes");
    }
    if (positive_rate < 1.0 && class_mix[3] + class_mix[4] <= 0.0) {
        throw ConfigError("synth: positive_rate < 1 requires mass on non-diabetes classes");
    }
    if (items.empty()) throw ConfigError("synth: item list must be non-empty");
    std::unordered_set<std::string> seen;
    for (const auto& item : items) {
        LabPanel::validate_name(item.name);
        if (!seen.insert(item.name).second) {
            throw ConfigError("synth: duplicate item spec: " + item.name);
        }
        if (item.sd < 0.0) {
            throw ConfigError("synth: degenerate Gaussian (sd < 0) for " + item.name);
        }
        if (item.decimals < 0 || item.decimals > 6) {
            throw ConfigError("synth: decimals out of range for " + item.name);
        }
        if (item.missing_rate >= 0.0 && !in01(item.missing_rate)) {
            throw ConfigError("synth: missing_rate out of range for " + item.name);
        }
    }
    if (encounters_min < 1 || encounters_max < encounters_min) {
        throw ConfigError("synth: encounter range invalid");
    }
    if (window_days < 1) throw ConfigError("synth: window_days must be positive");
    if (onset_window_days < 0) throw ConfigError("synth: onset_window_days must be non-negative");
    if (notes.neutral.empty()) throw ConfigError("synth: neutral note pool must be non-empty");
    if (!in01(notes.symptom_rate) || !in01(notes.confounder_rate)) {
        throw ConfigError("synth: note rates must be in [0, 1]");
    }
}

namespace {

std::string format_value(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return std::string(buf);
}

ConditionFlags flags_for_class(MultiLabel cls) {
    switch (cls) {
        case MultiLabel::diabetes_only: return {true, false, false};
        case MultiLabel::diabetes_hypertension: return {true, true, false};
        case MultiLabel::diabetes_hyperlipidemia: return {true, false, true};
        case MultiLabel::hypertension_only: return {false, true, false};
        default: return {false, false, false};
    }
}

bool is_rule_item(const SynthConfig& cfg, const std::string& name, double& threshold) {
    for (const auto& n : cfg.rule.glucose_items) {
        if (n == name) {
            threshold = cfg.rule.fpg_threshold;
            return true;
        }
    }
    for (const auto& n : cfg.rule.hba1c_items) {
        if (n == name) {
            threshold = cfg.rule.hba1c_threshold;
            return true;
        }
    }
    return false;
}

// Draws a value whose *formatted* decimal string lands on the required side
// of the threshold, so the stored label always matches the rule applied to
// the serialized panel.
std::string draw_rule_value(Rng& rng, double mean, double sd, int decimals, double threshold,
                            bool at_or_above) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double v = rng.normal(mean, sd);
        if (v < 0.0) continue;
        std::string raw = format_value(v, decimals);
        double parsed = 0.0;
        if (!parse_decimal(raw, parsed)) continue;
        if (at_or_above ? parsed >= threshold : parsed < threshold) return raw;
    }
    throw ConfigError("synth: rule-item distribution has negligible mass on the required side");
}

std::string draw_plain_value(Rng& rng, double mean, double sd, int decimals) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double v = rng.normal(mean, sd);
        if (v >= 0.0) return format_value(v, decimals);
    }
    throw ConfigError("synth: item distribution has negligible non-negative mass");
}

std::vector<EncounterRecord> generate_patient(const SynthConfig& cfg, std::size_t patient_index) {
    Rng rng(Rng::mix(Rng::mix(cfg.seed, "cohort"), patient_index));
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "P%06zu", patient_index);
    const std::string patient_id(idbuf);

    const bool diabetes = rng.bernoulli(cfg.positive_rate);
    MultiLabel cls;
    if (diabetes) {
        const std::vector<double> w{cfg.class_mix[0], cfg.class_mix[1], cfg.class_mix[2]};
        cls = static_cast<MultiLabel>(rng.categorical(w));
    } else {
        const std::vector<double> w{cfg.class_mix[3], cfg.class_mix[4]};
        cls = rng.categorical(w) == 0 ? MultiLabel::hypertension_only : MultiLabel::other;
    }
    const ConditionFlags patient_flags = flags_for_class(cls);

    const int n_enc = cfg.encounters_min +
                      static_cast<int>(rng.below(static_cast<std::uint64_t>(
                          cfg.encounters_max - cfg.encounters_min + 1)));
    const long onset_day =
        diabetes ? static_cast<long>(rng.below(static_cast<std::uint64_t>(cfg.window_days))) : -1;

    std::vector<long> days(static_cast<std::size_t>(n_enc));
    for (auto& day : days) {
        if (diabetes && !cfg.pre_onset_encounters) {
            day = onset_day + static_cast<long>(rng.below(
                                  static_cast<std::uint64_t>(cfg.window_days - onset_day)));
        } else {
            day = static_cast<long>(rng.below(static_cast<std::uint64_t>(cfg.window_days)));
        }
    }
    std::sort(days.begin(), days.end());

    std::vector<EncounterRecord> out;
    out.reserve(days.size());
    for (long day : days) {
        ConditionFlags eff = patient_flags;
        eff.diabetes = diabetes && day >= onset_day;

        EncounterRecord rec;
        rec.patient_id = patient_id;
        rec.date = date_from_day(day);

        for (const auto& item : cfg.items) {
            const double miss = item.missing_rate < 0.0 ? cfg.missingness : item.missing_rate;
            if (rng.bernoulli(miss)) continue;
            double mean = item.mean;
            if (eff.diabetes) mean += item.diabetes_shift;
            if (eff.hypertension) mean += item.hypertension_shift;
            if (eff.hyperlipidemia) mean += item.hyperlipidemia_shift;
            double threshold = 0.0;
            std::string raw;
            if (is_rule_item(cfg, item.name, threshold)) {
                raw = draw_rule_value(rng, mean, item.sd, item.decimals, threshold, eff.diabetes);
            } else {
                raw = draw_plain_value(rng, mean, item.sd, item.decimals);
            }
            rec.panel.insert(item.name, raw);
        }

        std::string note = cfg.notes.neutral[rng.below(cfg.notes.neutral.size())];
        auto append_from = [&](const std::vector<std::string>& pool) {
            if (!pool.empty()) note += " " + pool[rng.below(pool.size())];
        };
        if (eff.diabetes && rng.bernoulli(cfg.notes.symptom_rate)) append_from(cfg.notes.diabetes);
        if (eff.hypertension && rng.bernoulli(cfg.notes.symptom_rate)) {
            append_from(cfg.notes.hypertension);
        }
        if (eff.hyperlipidemia && rng.bernoulli(cfg.notes.symptom_rate)) {
            append_from(cfg.notes.hyperlipidemia);
        }
        if (!eff.diabetes && rng.bernoulli(cfg.notes.confounder_rate)) {
            append_from(cfg.notes.confounder);
        }
        rec.note_text = note;

        rec.label_binary = assign_binary_label(rec.panel, cfg.rule);
        rec.label_multiclass = assign_multiclass_label(eff);
        rec.onset_flag = false;
        out.push_back(std::move(rec));
    }

    // Earliest rule-positive encounter inside the onset window carries the flag.
    if (diabetes) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (out[i].label_binary == BinaryLabel::positive &&
                days[i] - onset_day <= cfg.onset_window_days) {
                out[i].onset_flag = true;
                break;
            }
        }
    }
    return out;
}

}  // namespace

std::vector<EncounterRecord> generate_cohort(const SynthConfig& config, std::size_t n_threads) {
    config.validate();
    std::vector<std::vector<EncounterRecord>> per_patient(config.n_patients);
    ThreadPool pool(n_threads);
    pool.run(config.n_patients,
             [&](std::size_t p) { per_patient[p] = generate_patient(config, p); });
    std::vector<EncounterRecord> records;
    records.reserve(config.n_patients * static_cast<std::size_t>(config.encounters_min));
    for (auto& group : per_patient) {
        for (auto& rec : group) records.push_back(std::move(rec));
    }
    return records;
}

nlohmann::ordered_json synth_config_to_json(const SynthConfig& config) {
    ordered_json j;
    j["n_patients"] = config.n_patients;
    j["positive_rate"] = config.positive_rate;
    j["missingness"] = config.missingness;
    j["class_mix"] = config.class_mix;
    ordered_json items = ordered_json::array();
    for (const auto& item : config.items) {
        items.push_back({{"name", item.name},
                         {"mean", item.mean},
                         {"sd", item.sd},
                         {"diabetes_shift", item.diabetes_shift},
                         {"hypertension_shift", item.hypertension_shift},
                         {"hyperlipidemia_shift", item.hyperlipidemia_shift},
                         {"decimals", item.decimals},
                         {"missing_rate", item.missing_rate}});
    }
    j["items"] = std::move(items);
    j["notes"] = {{"neutral", config.notes.neutral},
                  {"diabetes", config.notes.diabetes},
                  {"hypertension", config.notes.hypertension},
                  {"hyperlipidemia", config.notes.hyperlipidemia},
                  {"confounder", config.notes.confounder},
                  {"symptom_rate", config.notes.symptom_rate},
                  {"confounder_rate", config.notes.confounder_rate}};
    j["encounters_min"] = config.encounters_min;
    j["encounters_max"] = config.encounters_max;
    j["window_days"] = config.window_days;
    j["onset_window_days"] = config.onset_window_days;
    j["pre_onset_encounters"] = config.pre_onset_encounters;
    j["rule"] = {{"fpg_threshold", config.rule.fpg_threshold},
                 {"hba1c_threshold", config.rule.hba1c_threshold},
                 {"glucose_items", config.rule.glucose_items},
                 {"hba1c_items", config.rule.hba1c_items}};
    j["seed"] = config.seed;
    return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base) {
    SynthConfig c = std::move(base);
    c.n_patients = j.value("n_patients", c.n_patients);
    c.positive_rate = j.value("positive_rate", c.positive_rate);
    c.missingness = j.value("missingness", c.missingness);
    if (j.contains("class_mix")) c.class_mix = j.at("class_mix").get<std::array<double, 5>>();
    if (j.contains("items")) {
        c.items.clear();
        for (const auto& ij : j.at("items")) {
            LabItemSpec item;
            item.name = ij.at("name").get<std::string>();
            item.mean = ij.value("mean", item.mean);
            item.sd = ij.value("sd", item.sd);
            item.diabetes_shift = ij.value("diabetes_shift", item.diabetes_shift);
            item.hypertension_shift = ij.value("hypertension_shift", item.hypertension_shift);
            item.hyperlipidemia_shift = ij.value("hyperlipidemia_shift", item.hyperlipidemia_shift);
            item.decimals = ij.value("decimals", item.decimals);
            item.missing_rate = ij.value("missing_rate", item.missing_rate);
            c.items.push_back(std::move(item));
        }
    }
    if (j.contains("notes")) {
        const auto& nj = j.at("notes");
        if (nj.contains("neutral")) c.notes.neutral = nj.at("neutral").get<std::vector<std::string>>();
        if (nj.contains("diabetes")) {
            c.notes.diabetes = nj.at("diabetes").get<std::vector<std::string>>();
        }
        if (nj.contains("hypertension")) {
            c.notes.hypertension = nj.at("hypertension").get<std::vector<std::string>>();
        }
        if (nj.contains("hyperlipidemia")) {
            c.notes.hyperlipidemia = nj.at("hyperlipidemia").get<std::vector<std::string>>();
        }
        if (nj.contains("confounder")) {
            c.notes.confounder = nj.at("confounder").get<std::vector<std::string>>();
        }
        c.notes.symptom_rate = nj.value("symptom_rate", c.notes.symptom_rate);
        c.notes.confounder_rate = nj.value("confounder_rate", c.notes.confounder_rate);
    }
    c.encounters_min = j.value("encounters_min", c.encounters_min);
    c.encounters_max = j.value("encounters_max", c.encounters_max);
    c.window_days = j.value("window_days", c.window_days);
    c.onset_window_days = j.value("onset_window_days", c.onset_window_days);
    c.pre_onset_encounters = j.value("pre_onset_encounters", c.pre_onset_encounters);
    if (j.contains("rule")) {
        const auto& rj = j.at("rule");
        c.rule.fpg_threshold = rj.value("fpg_threshold", c.rule.fpg_threshold);
        c.rule.hba1c_threshold = rj.value("hba1c_threshold", c.rule.hba1c_threshold);
        if (rj.contains("glucose_items")) {
            c.rule.glucose_items = rj.at("glucose_items").get<std::vector<std::string>>();
        }
        if (rj.contains("hba1c_items")) {
            c.rule.hba1c_items = rj.at("hba1c_items").get<std::vector<std::string>>();
        }
    }
    c.seed = j.value("seed", c.seed);
    return c;
}

std::pair<std::vector<EncounterRecord>, std::vector<EncounterRecord>>
split_cohort(const std::vector<EncounterRecord>& records, double ratio, std::uint64_t seed) {
    if (records.empty()) throw DataError("split: empty cohort");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split: ratio must be in (0, 1)");
    std::vector<std::string> patients;
    std::unordered_set<std::string> seen;
    for (const auto& rec : records) {
        if (seen.insert(rec.patient_id).second) patients.push_back(rec.patient_id);
    }
    if (patients.size() < 2) throw DataError("split: need at least two patients");
    Rng rng(Rng::mix(seed, "split"));
    rng.shuffle(patients);
    const auto n_train = static_cast<std::size_t>(std::clamp<long long>(
        std::llround(ratio * static_cast<double>(patients.size())), 1,
        static_cast<long long>(patients.size()) - 1));
    std::unordered_set<std::string> train_ids(patients.begin(),
                                              patients.begin() + static_cast<long>(n_train));
    std::pair<std::vector<EncounterRecord>, std::vector<EncounterRecord>> out;
    for (const auto& rec : records) {
        (train_ids.count(rec.patient_id) ? out.first : out.second).push_back(rec);
    }
    return out;
}

// --- cohort file -----------------------------------------------------------

std::string cohort_to_jsonl(const std::vector<EncounterRecord>& records) {
    std::string out;
    for (const auto& rec : records) {
        ordered_json j;
        j["patient_id"] = rec.patient_id;
        j["date"] = rec.date;
        j["note_text"] = rec.note_text;
        ordered_json labs = ordered_json::object();
        for (const auto& e : rec.panel) labs[e.name] = e.raw;
        j["labs"] = std::move(labs);
        j["label_binary"] = to_string(rec.label_binary);
        j["label_multiclass"] = to_string(rec.label_multiclass);
        j["onset_flag"] = rec.onset_flag;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<EncounterRecord> cohort_from_jsonl(const std::string& content) {
    std::vector<EncounterRecord> records;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        const std::string line = content.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw DataError("cohort line " + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        try {
            EncounterRecord rec;
            rec.patient_id = j.at("patient_id").get<std::string>();
            rec.date = j.at("date").get<std::string>();
            rec.note_text = j.at("note_text").get<std::string>();
            const auto& labs = j.at("labs");
            if (!labs.is_object()) throw DataError("labs must be an object");
            for (auto it = labs.begin(); it != labs.end(); ++it) {
                if (!it.value().is_string()) {
                    throw DataError("lab item " + it.key() + ": value must be a decimal string");
                }
                rec.panel.insert(it.key(), it.value().get<std::string>());
            }
            rec.label_binary = binary_label_from_string(j.at("label_binary").get<std::string>());
            rec.label_multiclass =
                multi_label_from_string(j.at("label_multiclass").get<std::string>());
            rec.onset_flag = j.at("onset_flag").get<bool>();
            if (rec.note_text.empty() && rec.panel.empty()) {
                throw DataError("record must have note_text or labs");
            }
            records.push_back(std::move(rec));
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError("cohort line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

void write_cohort(const std::string& path, const std::vector<EncounterRecord>& records) {
    write_file(path, cohort_to_jsonl(records));
}

std::vector<EncounterRecord> read_cohort(const std::string& path) {
    try {
        return cohort_from_jsonl(read_file(path));
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + " [" + path + "]");
    }
}

}  // namespace medfuse
