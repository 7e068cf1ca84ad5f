#include <doctest.h>

#include "medfuse/cohort.hpp"
#include "medfuse/rng.hpp"
#include "medfuse/textualize.hpp"

using namespace medfuse;

TEST_SUITE_BEGIN("textualize");

namespace {

// The 13-item panel shown in the paper-style clinical export.
LabPanel reference_panel() {
    LabPanel p;
    p.insert("Free T4", "1.42");
    p.insert("TSH", "1.450");
    p.insert("HDL Cholesterol", "57");
    p.insert("BUN", "22");
    p.insert("Cholesterol T", "146");
    p.insert("Estimated GFR(MDRD)", "60");
    p.insert("Glucose AC", "148");
    p.insert("ALT (SGPT)", "29");
    p.insert("Uric Acid", "6.5");
    p.insert("Creatinine", "1.22");
    p.insert("K", "4.5");
    p.insert("Triglyceride", "66");
    p.insert("LDL Cholesterol", "88");
    return p;
}

constexpr const char* kReferenceText =
    "Free T4:1.42, TSH:1.450, HDL Cholesterol:57, BUN:22, Cholesterol T:146, "
    "Estimated GFR(MDRD):60, Glucose AC:148, ALT (SGPT):29, Uric Acid:6.5, Creatinine:1.22, "
    "K:4.5, Triglyceride:66, LDL Cholesterol:88";

}  // namespace

TEST_CASE("serialize_panel reproduces the reference string byte for byte") {
    CHECK(serialize_panel(reference_panel()) == kReferenceText);
}

TEST_CASE("raw decimal strings are preserved, never reformatted") {
    LabPanel p;
    p.insert("TSH", "1.450");
    CHECK(serialize_panel(p) == "TSH:1.450");  // not "TSH:1.45"
}

TEST_CASE("empty panel and missing items") {
    CHECK(serialize_panel(LabPanel{}) == "");
    LabPanel p;
    p.insert("Glucose AC", "148");
    CHECK(serialize_panel(p) == "Glucose AC:148");  // no placeholder for missing items
}

TEST_CASE("alphabetical and explicit orders") {
    LabPanel p;
    p.insert("TSH", "1.450");
    p.insert("BUN", "22");
    p.insert("K", "4.5");
    SerializationSpec alpha;
    alpha.order = SerializationSpec::Order::alphabetical;
    CHECK(serialize_panel(p, alpha) == "BUN:22, K:4.5, TSH:1.450");

    SerializationSpec expl;
    expl.order = SerializationSpec::Order::explicit_order;
    expl.explicit_items = {"K", "Missing Item", "TSH"};
    CHECK(serialize_panel(p, expl) == "K:4.5, TSH:1.450");

    SerializationSpec dup;
    dup.order = SerializationSpec::Order::explicit_order;
    dup.explicit_items = {"K", "K"};
    CHECK_THROWS_AS(serialize_panel(p, dup), ConfigError);

    SerializationSpec bad;
    bad.pair_separator = "";
    CHECK_THROWS_AS(serialize_panel(p, bad), ConfigError);
}

TEST_CASE("round-trip parser recovers exact pairs on random panels") {
    Rng rng(37);
    const auto& catalog = lab_catalog();
    for (int iter = 0; iter < 1000; ++iter) {
        LabPanel p;
        const std::size_t n_items = rng.below(8);
        std::vector<std::size_t> idx(catalog.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        for (std::size_t i = 0; i < n_items; ++i) {
            char buf[32];
            const int decimals = static_cast<int>(rng.below(4));
            std::snprintf(buf, sizeof(buf), "%.*f", decimals, rng.uniform(0.0, 500.0));
            p.insert(catalog[idx[i]], buf);
        }
        const std::string text = serialize_panel(p);
        const auto pairs = parse_labs_text(text);
        REQUIRE(pairs.size() == p.size());
        std::size_t i = 0;
        for (const auto& entry : p) {
            CHECK(pairs[i].first == entry.name);
            CHECK(pairs[i].second == entry.raw);
            ++i;
        }
    }
    CHECK(parse_labs_text("").empty());
    CHECK_THROWS_AS(parse_labs_text("no colon here"), DataError);
    CHECK_THROWS_AS(parse_labs_text("Item:notanumber"), DataError);
}

TEST_CASE("build_input modes") {
    EncounterRecord rec;
    rec.patient_id = "P1";
    rec.note_text = "routine visit";
    rec.panel = reference_panel();

    CHECK(build_input(rec, InputMode::notes_only) == "routine visit");
    CHECK(build_input(rec, InputMode::labs_text_only) == kReferenceText);
    CHECK(build_input(rec, InputMode::notes_plus_labs_text) ==
          std::string("routine visit ") + kReferenceText);

    EncounterRecord no_note = rec;
    no_note.note_text.clear();
    CHECK_THROWS_AS(build_input(no_note, InputMode::notes_only), DataError);
    CHECK(build_input(no_note, InputMode::notes_plus_labs_text) == kReferenceText);

    EncounterRecord no_labs = rec;
    no_labs.panel = LabPanel{};
    CHECK_THROWS_AS(build_input(no_labs, InputMode::labs_text_only), DataError);
    CHECK(build_input(no_labs, InputMode::notes_plus_labs_text) == "routine visit");
}

TEST_SUITE_END();
