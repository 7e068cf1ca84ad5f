#pragma once

#include <string>

#include "medfuse/explain.hpp"

namespace medfuse {

// Self-contained HTML document with feature spans colored on a diverging
// scale (red pushes toward the explained class, blue away), normalized by the
// largest |phi|. Byte-deterministic for a given report.
std::string render_html(const AttributionReport& report);

// ANSI terminal rendering of the same report.
std::string render_terminal(const AttributionReport& report);

}  // namespace medfuse
