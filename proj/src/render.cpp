#include "medfuse/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace medfuse {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
}

std::string escape_html(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

double max_abs_phi(const AttributionReport& report) {
    double m = 0.0;
    for (const auto& f : report.features) m = std::max(m, std::abs(f.phi));
    return m;
}

// rgba background for a signed, normalized attribution.
std::string css_color(double phi, double max_abs) {
    if (max_abs <= 0.0 || phi == 0.0) return "transparent";
    const double a = 0.15 + 0.75 * std::min(1.0, std::abs(phi) / max_abs);
    char buf[64];
    if (phi > 0.0) {
        std::snprintf(buf, sizeof(buf), "rgba(214,57,57,%.3f)", a);
    } else {
        std::snprintf(buf, sizeof(buf), "rgba(57,107,214,%.3f)", a);
    }
    return std::string(buf);
}

}  // namespace

std::string render_html(const AttributionReport& report) {
    const double max_abs = max_abs_phi(report);
    std::string body;

    if (report.granularity == Granularity::token) {
        // Rebuild the text with highlighted spans in document order.
        std::vector<const AttributionFeature*> spans;
        for (const auto& f : report.features) {
            if (f.span_begin >= 0) spans.push_back(&f);
        }
        std::sort(spans.begin(), spans.end(), [](const auto* a, const auto* b) {
            return a->span_begin < b->span_begin;
        });
        const std::string& text = report.input_text;
        std::string html;
        std::size_t cursor = 0;
        for (const auto* f : spans) {
            const auto b = static_cast<std::size_t>(f->span_begin);
            const auto e = static_cast<std::size_t>(f->span_end);
            if (b > cursor) html += escape_html(text.substr(cursor, b - cursor));
            html += "<span class=\"feat\" style=\"background:" + css_color(f->phi, max_abs) +
                    "\" title=\"phi=" + fmt(f->phi) + "\">" + escape_html(text.substr(b, e - b)) +
                    "</span>";
            cursor = e;
        }
        if (cursor < text.size()) html += escape_html(text.substr(cursor));
        body += "<div class=\"text\">" + html + "</div>\n";
    } else {
        body += "<table class=\"labs\"><tr><th>lab item</th><th>phi</th></tr>\n";
        for (const auto& f : report.features) {
            body += "<tr><td style=\"background:" + css_color(f.phi, max_abs) + "\">" +
                    escape_html(f.name) + "</td><td>" + fmt(f.phi) + "</td></tr>\n";
        }
        body += "</table>\n";
    }

    std::string meta;
    meta += "<tr><td>patient</td><td>" + escape_html(report.patient_id) + "</td></tr>";
    meta += "<tr><td>date</td><td>" + escape_html(report.date) + "</td></tr>";
    meta += "<tr><td>granularity</td><td>" + to_string(report.granularity) + "</td></tr>";
    meta += "<tr><td>method</td><td>" + escape_html(report.method);
    if (report.method == "sampled") {
        meta += " (n_samples=" + std::to_string(report.n_samples) +
                ", seed=" + std::to_string(report.seed) + ")";
    }
    meta += "</td></tr>";
    meta += "<tr><td>explained class</td><td>" + std::to_string(report.explained_class) +
            "</td></tr>";
    meta += "<tr><td>base value v(&empty;)</td><td>" + fmt(report.base_value) + "</td></tr>";
    meta += "<tr><td>full value v(N)</td><td>" + fmt(report.full_value) + "</td></tr>";
    if (report.prescreened) {
        meta += "<tr><td>prescreen</td><td>gradient-times-input, " +
                std::to_string(report.features.size()) + " of " +
                std::to_string(report.n_candidates) + " candidates</td></tr>";
    }

    std::string out;
    out += "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n";
    out += "<title>attribution " + escape_html(report.patient_id) + " " +
           escape_html(report.date) + "</title>\n";
    out += "<style>\n"
           "body{font-family:sans-serif;max-width:56em;margin:2em auto;line-height:1.6}\n"
           ".text{border:1px solid #ccc;padding:1em;border-radius:4px}\n"
           ".feat{border-radius:2px;padding:0 1px}\n"
           "table{border-collapse:collapse;margin-top:1em}\n"
           "td,th{border:1px solid #ccc;padding:2px 8px;text-align:left}\n"
           "</style></head>\n<body>\n";
    out += "<h2>Prediction attribution</h2>\n<table class=\"meta\">" + meta + "</table>\n";
    out += body;
    out += "</body></html>\n";
    return out;
}

std::string render_terminal(const AttributionReport& report) {
    const double max_abs = max_abs_phi(report);
    std::string out;
    out += "attribution " + report.patient_id + " " + report.date + "  [" +
           to_string(report.granularity) + ", " + report.method + "]\n";
    out += "  v(empty)=" + fmt(report.base_value) + "  v(N)=" + fmt(report.full_value) +
           "  class=" + std::to_string(report.explained_class) + "\n";
    for (const auto& f : report.features) {
        const int bar_len =
            max_abs > 0.0
                ? static_cast<int>(std::lround(10.0 * std::abs(f.phi) / max_abs))
                : 0;
        // 31 = red (toward explained class), 34 = blue (away)
        const char* color = f.phi >= 0.0 ? "\033[31m" : "\033[34m";
        std::string bar;
        for (int i = 0; i < bar_len; ++i) bar += "#";
        char line[160];
        std::snprintf(line, sizeof(line), "  %-28s %s%+.6f %-10s\033[0m", f.name.c_str(), color,
                      f.phi, bar.c_str());
        out += line;
        out += "\n";
    }
    return out;
}

}  // namespace medfuse
