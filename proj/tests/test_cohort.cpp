#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <doctest.h>

#include "medfuse/cohort.hpp"
#include "medfuse/rng.hpp"

using namespace medfuse;

TEST_SUITE_BEGIN("cohort");

namespace {

LabPanel panel_of(std::initializer_list<std::pair<const char*, const char*>> items) {
    LabPanel p;
    for (const auto& [name, raw] : items) p.insert(name, raw);
    return p;
}

}  // namespace

TEST_CASE("binary label rule boundaries") {
    const LabelRule rule;
    CHECK(assign_binary_label(panel_of({{"Glucose AC", "126"}}), rule) == BinaryLabel::positive);
    CHECK(assign_binary_label(panel_of({{"Glucose AC", "100"}, {"HbA1c", "6.5"}}), rule) ==
          BinaryLabel::positive);
    CHECK(assign_binary_label(panel_of({{"Glucose AC", "125.9"}, {"HbA1c", "6.49"}}), rule) ==
          BinaryLabel::negative);
    CHECK(assign_binary_label(panel_of({{"BUN", "20"}}), rule) == BinaryLabel::unlabeled);
    CHECK(assign_binary_label(LabPanel{}, rule) == BinaryLabel::unlabeled);
    // POCT glucose is mapped too
    CHECK(assign_binary_label(panel_of({{"Glucose AC (POCT)", "300"}}), rule) ==
          BinaryLabel::positive);
}

TEST_CASE("label rule is monotone in mapped values") {
    Rng rng(5);
    const LabelRule rule;
    for (int iter = 0; iter < 200; ++iter) {
        const double g = rng.uniform(50.0, 200.0);
        const double bump = rng.uniform(0.0, 100.0);
        auto label_for = [&](double glucose) {
            LabPanel p;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.2f", glucose);
            p.insert("Glucose AC", buf);
            return assign_binary_label(p, rule);
        };
        if (label_for(g) == BinaryLabel::positive) {
            CHECK(label_for(g + bump) == BinaryLabel::positive);
        }
    }
}

TEST_CASE("non-numeric lab values are rejected naming the item") {
    LabPanel p;
    CHECK_THROWS_WITH_AS(p.insert("Glucose AC", "abc"), doctest::Contains("Glucose AC"),
                         DataError);
    CHECK_THROWS_AS(p.insert("HbA1c", "nan"), DataError);
    CHECK_THROWS_AS(p.insert("HbA1c", ""), DataError);
    CHECK_THROWS_AS(p.insert("A:B", "1"), DataError);   // ':' breaks Name:value framing
    CHECK_THROWS_AS(p.insert("A, B", "1"), DataError);  // ', ' breaks pair framing
    p.insert("HbA1c", "6.5");
    CHECK_THROWS_WITH_AS(p.insert("HbA1c", "7.0"), doctest::Contains("duplicate"), DataError);
}

TEST_CASE("multiclass mapping table") {
    auto cls = [](bool d, bool h, bool l) {
        return assign_multiclass_label(ConditionFlags{d, h, l});
    };
    CHECK(cls(true, false, false) == MultiLabel::diabetes_only);
    CHECK(cls(true, true, false) == MultiLabel::diabetes_hypertension);
    CHECK(cls(true, false, true) == MultiLabel::diabetes_hyperlipidemia);
    CHECK(cls(true, true, true) == MultiLabel::diabetes_hypertension);  // triple breaks this way
    CHECK(cls(false, true, false) == MultiLabel::hypertension_only);
    CHECK(cls(false, true, true) == MultiLabel::hypertension_only);
    CHECK(cls(false, false, true) == MultiLabel::other);
    CHECK(cls(false, false, false) == MultiLabel::other);
}

TEST_CASE("generator determinism and scheduling independence") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 200;
    cfg.seed = 42;
    const auto a = generate_cohort(cfg);
    const auto b = generate_cohort(cfg);
    CHECK(cohort_to_jsonl(a) == cohort_to_jsonl(b));
    const auto c = generate_cohort(cfg, 4);
    CHECK(cohort_to_jsonl(a) == cohort_to_jsonl(c));
}

TEST_CASE("generator labels are self-consistent with the rule") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 500;
    cfg.seed = 9;
    for (const auto& rec : generate_cohort(cfg)) {
        CHECK(assign_binary_label(rec.panel, cfg.rule) == rec.label_binary);
    }
}

TEST_CASE("positive fraction tracks positive_rate (99% binomial interval)") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 10000;
    cfg.positive_rate = 0.2;
    cfg.seed = 1234;
    std::size_t pos = 0, neg = 0;
    for (const auto& rec : generate_cohort(cfg)) {
        if (rec.label_binary == BinaryLabel::positive) ++pos;
        if (rec.label_binary == BinaryLabel::negative) ++neg;
    }
    const double n = static_cast<double>(pos + neg);
    const double phat = static_cast<double>(pos) / n;
    const double half_width = 2.576 * std::sqrt(0.2 * 0.8 / n);
    CHECK(std::abs(phat - 0.2) < half_width);
}

TEST_CASE("missingness 1.0 removes the item everywhere") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 100;
    cfg.seed = 3;
    for (auto& item : cfg.items) {
        if (item.name == "BUN") item.missing_rate = 1.0;
    }
    for (const auto& rec : generate_cohort(cfg)) {
        CHECK(!rec.panel.has("BUN"));
    }
}

TEST_CASE("unlabeled records are exactly those without rule items") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 400;
    cfg.missingness = 0.6;
    cfg.seed = 11;
    for (const auto& rec : generate_cohort(cfg)) {
        const bool has_rule_item =
            rec.panel.has("Glucose AC") || rec.panel.has("Glucose AC (POCT)") ||
            rec.panel.has("HbA1c");
        CHECK((rec.label_binary == BinaryLabel::unlabeled) == !has_rule_item);
    }
}

TEST_CASE("degenerate configurations are rejected") {
    SynthConfig cfg = default_synth_config();
    cfg.items[0].sd = -1.0;
    CHECK_THROWS_WITH_AS(generate_cohort(cfg), doctest::Contains("degenerate"), ConfigError);

    SynthConfig cfg2 = default_synth_config();
    cfg2.class_mix = {0.5, 0.5, 0.5, 0.0, 0.0};
    CHECK_THROWS_AS(generate_cohort(cfg2), ConfigError);

    SynthConfig cfg3 = default_synth_config();
    cfg3.positive_rate = 1.5;
    CHECK_THROWS_AS(generate_cohort(cfg3), ConfigError);
}

TEST_CASE("pre-onset encounters carry negative-side labs for diabetics") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 300;
    cfg.positive_rate = 0.5;
    cfg.encounters_min = 3;
    cfg.encounters_max = 3;
    cfg.pre_onset_encounters = true;
    cfg.missingness = 0.0;
    cfg.seed = 21;
    const auto records = generate_cohort(cfg);
    // some diabetic patient must have both a pre-onset negative and a
    // post-onset positive encounter
    std::unordered_map<std::string, std::set<BinaryLabel>> by_patient;
    for (const auto& rec : records) by_patient[rec.patient_id].insert(rec.label_binary);
    bool found_mixed = false;
    for (const auto& [_, labels] : by_patient) {
        if (labels.count(BinaryLabel::positive) && labels.count(BinaryLabel::negative)) {
            found_mixed = true;
        }
    }
    CHECK(found_mixed);
    // multiclass label is onset-aware: pre-onset encounters of a diabetic
    // patient never claim a diabetes class
    for (const auto& rec : records) {
        if (rec.label_binary == BinaryLabel::negative) {
            CHECK(rec.label_multiclass != MultiLabel::diabetes_only);
            CHECK(rec.label_multiclass != MultiLabel::diabetes_hyperlipidemia);
        }
    }
}

TEST_CASE("onset flag marks at most one early rule-positive encounter per patient") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 300;
    cfg.encounters_min = 2;
    cfg.encounters_max = 4;
    cfg.seed = 13;
    std::unordered_map<std::string, int> flags;
    for (const auto& rec : generate_cohort(cfg)) {
        if (rec.onset_flag) {
            CHECK(rec.label_binary == BinaryLabel::positive);
            ++flags[rec.patient_id];
        }
    }
    for (const auto& [_, count] : flags) CHECK(count == 1);
    CHECK(!flags.empty());
}

TEST_CASE("split: 10 patients at 0.8 gives 8/2 and grouping holds") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 10;
    cfg.encounters_min = 1;
    cfg.encounters_max = 5;
    cfg.seed = 17;
    const auto records = generate_cohort(cfg);
    const auto [train, test] = split_cohort(records, 0.8, 99);

    auto patients = [](const std::vector<EncounterRecord>& rs) {
        std::unordered_set<std::string> ids;
        for (const auto& r : rs) ids.insert(r.patient_id);
        return ids;
    };
    const auto train_ids = patients(train);
    const auto test_ids = patients(test);
    CHECK(train_ids.size() == 8);
    CHECK(test_ids.size() == 2);
    for (const auto& id : test_ids) CHECK(!train_ids.count(id));
    CHECK(train.size() + test.size() == records.size());

    // same seed -> identical split
    const auto [train2, test2] = split_cohort(records, 0.8, 99);
    CHECK(cohort_to_jsonl(train) == cohort_to_jsonl(train2));

    CHECK_THROWS_AS(split_cohort({}, 0.8, 1), DataError);
    CHECK_THROWS_AS(split_cohort(records, 1.2, 1), ConfigError);
}

TEST_CASE("cohort file round-trips exactly") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 50;
    cfg.seed = 23;
    const auto records = generate_cohort(cfg);
    const std::string jsonl = cohort_to_jsonl(records);
    const auto parsed = cohort_from_jsonl(jsonl);
    CHECK(cohort_to_jsonl(parsed) == jsonl);
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].patient_id == records[i].patient_id);
        CHECK(parsed[i].label_binary == records[i].label_binary);
        CHECK(parsed[i].panel.size() == records[i].panel.size());
    }
}

TEST_CASE("cohort file errors carry line numbers and item names") {
    CHECK_THROWS_WITH_AS(cohort_from_jsonl("not json\n"), doctest::Contains("line 1"), DataError);
    const std::string bad_value =
        R"({"patient_id":"P1","date":"2020-01-01","note_text":"x","labs":{"Glucose AC":"oops"},)"
        R"("label_binary":"positive","label_multiclass":"other","onset_flag":false})";
    CHECK_THROWS_WITH_AS(cohort_from_jsonl(bad_value + "\n"), doctest::Contains("Glucose AC"),
                         DataError);
    const std::string missing_field = R"({"patient_id":"P1"})";
    CHECK_THROWS_AS(cohort_from_jsonl(missing_field + "\n"), DataError);
    const std::string empty_both =
        R"({"patient_id":"P1","date":"2020-01-01","note_text":"","labs":{},)"
        R"("label_binary":"unlabeled","label_multiclass":"unlabeled","onset_flag":false})";
    CHECK_THROWS_AS(cohort_from_jsonl(empty_both + "\n"), DataError);
}

TEST_CASE("synth config json round-trip") {
    SynthConfig cfg = default_synth_config();
    cfg.n_patients = 77;
    cfg.positive_rate = 0.31;
    cfg.seed = 5;
    const auto j = synth_config_to_json(cfg);
    const SynthConfig back = synth_config_from_json(j, default_synth_config());
    CHECK(synth_config_to_json(back) == j);
    // partial override keeps base values
    const SynthConfig partial =
        synth_config_from_json(nlohmann::json::parse(R"({"n_patients": 5})"),
                               default_synth_config());
    CHECK(partial.n_patients == 5);
    CHECK(partial.positive_rate == default_synth_config().positive_rate);
}

TEST_SUITE_END();
