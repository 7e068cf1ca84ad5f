#include "medfuse/textualize.hpp"

#include <algorithm>
#include <unordered_set>

#include "medfuse/error.hpp"
#include "medfuse/util.hpp"

namespace medfuse {

void SerializationSpec::validate() const {
    if (pair_separator.empty() || kv_separator.empty()) {
        throw ConfigError("serialization: separators must be non-empty");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : explicit_items) {
        if (!seen.insert(name).second) {
            throw ConfigError("serialization: duplicate item in explicit order: " + name);
        }
    }
}

std::string serialize_panel(const LabPanel& panel, const SerializationSpec& spec) {
    spec.validate();
    std::vector<const LabEntry*> entries;
    entries.reserve(panel.size());
    switch (spec.order) {
        case SerializationSpec::Order::panel:
            for (const auto& e : panel) entries.push_back(&e);
            break;
        case SerializationSpec::Order::alphabetical:
            for (const auto& e : panel) entries.push_back(&e);
            std::sort(entries.begin(), entries.end(),
                      [](const LabEntry* a, const LabEntry* b) { return a->name < b->name; });
            break;
        case SerializationSpec::Order::explicit_order:
            for (const auto& name : spec.explicit_items) {
                if (const LabEntry* e = panel.find(name)) entries.push_back(e);
            }
            break;
    }
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += spec.pair_separator;
        out += entries[i]->name;
        out += spec.kv_separator;
        out += entries[i]->raw;
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_labs_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> pairs;
    if (text.empty()) return pairs;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find(", ", pos);
        if (end == std::string::npos) end = text.size();
        const std::string chunk = text.substr(pos, end - pos);
        const std::size_t colon = chunk.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == chunk.size()) {
            throw DataError("labs text: malformed pair: \"" + chunk + "\"");
        }
        std::string name = chunk.substr(0, colon);
        std::string raw = chunk.substr(colon + 1);
        double parsed = 0.0;
        if (!parse_decimal(raw, parsed)) {
            throw DataError("labs text: item " + name + ": bad value \"" + raw + "\"");
        }
        pairs.emplace_back(std::move(name), std::move(raw));
        if (end == text.size()) break;
        pos = end + 2;
    }
    return pairs;
}

std::string to_string(InputMode m) {
    switch (m) {
        case InputMode::notes_only: return "notes_only";
        case InputMode::labs_text_only: return "labs_text_only";
        case InputMode::notes_plus_labs_text: return "notes_plus_labs_text";
    }
    return "notes_only";
}

InputMode input_mode_from_string(const std::string& s) {
    if (s == "notes_only") return InputMode::notes_only;
    if (s == "labs_text_only") return InputMode::labs_text_only;
    if (s == "notes_plus_labs_text") return InputMode::notes_plus_labs_text;
    throw ConfigError("unknown input mode: " + s);
}

std::string build_input(const EncounterRecord& record, InputMode mode,
                        const SerializationSpec& spec) {
    switch (mode) {
        case InputMode::notes_only:
            if (record.note_text.empty()) {
                throw DataError("build_input: notes_only requires a non-empty note (patient " +
                                record.patient_id + ")");
            }
            return record.note_text;
        case InputMode::labs_text_only:
            if (record.panel.empty()) {
                throw DataError("build_input: labs_text_only requires a non-empty panel (patient " +
                                record.patient_id + ")");
            }
            return serialize_panel(record.panel, spec);
        case InputMode::notes_plus_labs_text: {
            if (record.note_text.empty() && record.panel.empty()) {
                throw DataError("build_input: record has neither note nor labs (patient " +
                                record.patient_id + ")");
            }
            if (record.panel.empty()) return record.note_text;
            const std::string labs = serialize_panel(record.panel, spec);
            if (record.note_text.empty()) return labs;
            return record.note_text + " " + labs;
        }
    }
    throw ConfigError("build_input: unknown mode");
}

}  // namespace medfuse
