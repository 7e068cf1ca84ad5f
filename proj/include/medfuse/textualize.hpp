#pragma once

#include <string>
#include <utility>
#include <vector>

#include "medfuse/cohort.hpp"

namespace medfuse {

// Lab panel -> "Name:value, Name:value" text. Values are the raw decimal
// strings as recorded ("1.450" never becomes "1.45").
struct SerializationSpec {
    enum class Order { panel, alphabetical, explicit_order };
    Order order = Order::panel;
    std::vector<std::string> explicit_items;  // used when order == explicit_order
    std::string pair_separator = ", ";
    std::string kv_separator = ":";

    void validate() const;  // throws ConfigError
};

std::string serialize_panel(const LabPanel& panel, const SerializationSpec& spec = {});

// Inverse of serialize_panel for the default separators: recovers the exact
// (name, raw string) pairs. Throws DataError on malformed input.
std::vector<std::pair<std::string, std::string>> parse_labs_text(const std::string& text);

enum class InputMode { notes_only, labs_text_only, notes_plus_labs_text };

std::string to_string(InputMode m);
InputMode input_mode_from_string(const std::string& s);

// Model input text for a record. notes_plus_labs_text joins note and lab text
// with a single space; either part may be absent but not both.
std::string build_input(const EncounterRecord& record, InputMode mode,
                        const SerializationSpec& spec = {});

}  // namespace medfuse
