#include "medfuse/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medfuse/error.hpp"

namespace medfuse {

std::string to_string(Granularity g) { return g == Granularity::token ? "token" : "lab_item"; }

Granularity granularity_from_string(const std::string& s) {
    if (s == "token") return Granularity::token;
    if (s == "lab_item") return Granularity::lab_item;
    throw ConfigError("unknown granularity: " + s);
}

namespace {

struct FullForward {
    TokenizedInput toks;
    LabVector labvec;
    Tensor text_emb;       // empty when the mode has no text branch
    Tensor lab_emb;        // empty when the mode has no lab branch
    std::vector<double> probs;
    Tensor token_grad;     // d prob[class] / d token_states (prescreen pass only)
    Tensor token_states;
};

FullForward run_full(const Model& model, const EncounterRecord& record, int explained_class,
                     bool want_token_grad) {
    Tape tape;
    const std::vector<Var> vars = model.params.tape_vars(tape);
    const ForwardGraph g = model_forward(tape, vars, model, record);
    FullForward out;
    out.toks = g.toks;
    out.labvec = g.labvec;
    if (model.cfg.uses_text()) out.text_emb = tape.value(g.text_emb);
    if (model.cfg.uses_labs()) out.lab_emb = tape.value(g.lab_emb);
    out.probs = tape.value(g.probs).values();
    if (want_token_grad && model.cfg.uses_text()) {
        const Var target = tape.pick(g.probs, 0, static_cast<std::size_t>(explained_class));
        tape.backward(target);
        out.token_grad = tape.grad(g.token_states);
        out.token_states = tape.value(g.token_states);
    }
    return out;
}

int pick_explained_class(const Model& model, const std::vector<double>& probs) {
    if (model.cfg.task == Task::binary) return 1;
    int arg = 0;
    for (std::size_t c = 1; c < probs.size(); ++c) {
        if (probs[c] > probs[static_cast<std::size_t>(arg)]) arg = static_cast<int>(c);
    }
    return arg;
}

}  // namespace

AttributionReport explain_record(const Model& model, const EncounterRecord& record,
                                 Granularity granularity, const ExplainConfig& cfg) {
    if (granularity == Granularity::token && !model.cfg.uses_text()) {
        throw ConfigError("explain: token granularity requires a text mode");
    }
    if (granularity == Granularity::lab_item && !model.cfg.uses_labs()) {
        throw ConfigError("explain: lab_item granularity requires a lab mode");
    }

    AttributionReport report;
    report.patient_id = record.patient_id;
    report.date = record.date;
    report.granularity = granularity;
    report.seed = cfg.seed;

    const FullForward full = run_full(model, record, model.cfg.task == Task::binary ? 1 : 0, false);
    report.explained_class = pick_explained_class(model, full.probs);
    const std::size_t cls = static_cast<std::size_t>(report.explained_class);

    ValueFn value_fn;
    std::vector<std::string> names;
    std::vector<long> span_begin, span_end;

    if (granularity == Granularity::token) {
        report.input_text = build_input(record, effective_text_input(model.cfg));
        std::vector<std::size_t> positions(full.toks.n_real);
        std::iota(positions.begin(), positions.end(), 0);
        report.n_candidates = positions.size();

        if (positions.size() > cfg.prescreen_k) {
            // Deterministic |gradient x input| prescreen keeps the top K
            // positions; unselected tokens stay unablated as context.
            const FullForward grad_pass = run_full(model, record, report.explained_class, true);
            std::vector<double> score(full.toks.n_real, 0.0);
            const std::size_t d = grad_pass.token_states.cols();
            for (std::size_t p = 0; p < full.toks.n_real; ++p) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    s += grad_pass.token_grad.at(p, j) * grad_pass.token_states.at(p, j);
                }
                score[p] = std::abs(s);
            }
            std::stable_sort(positions.begin(), positions.end(),
                             [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
            positions.resize(cfg.prescreen_k);
            std::sort(positions.begin(), positions.end());
            report.prescreened = true;
        }

        for (const std::size_t p : positions) {
            names.push_back(full.toks.spans[p].token);
            span_begin.push_back(static_cast<long>(full.toks.spans[p].begin));
            span_end.push_back(static_cast<long>(full.toks.spans[p].end));
        }

        std::optional<Tensor> cached_lab;
        if (model.cfg.uses_labs()) cached_lab = full.lab_emb;
        const TokenizedInput base_toks = full.toks;
        value_fn = [&model, base_toks, positions, cached_lab,
                    cls](const std::vector<std::uint8_t>& members) {
            TokenizedInput ablated = base_toks;
            for (std::size_t i = 0; i < positions.size(); ++i) {
                if (!members[i]) ablated.ids[positions[i]] = Vocab::kUnk;
            }
            Tape tape;
            const std::vector<Var> vars = model.params.tape_vars(tape);
            const ForwardGraph g = model_forward_cached(tape, vars, model, std::nullopt, ablated,
                                                        cached_lab, std::nullopt);
            return tape.value(g.probs).at(0, cls);
        };
    } else {
        std::vector<std::size_t> item_idx;
        for (std::size_t i = 0; i < full.labvec.mask.size(); ++i) {
            if (full.labvec.mask[i] == 1.0) item_idx.push_back(i);
        }
        report.n_candidates = item_idx.size();
        for (const std::size_t i : item_idx) {
            names.push_back(model.catalog[i]);
            span_begin.push_back(-1);
            span_end.push_back(-1);
        }

        std::optional<Tensor> cached_text;
        if (model.cfg.uses_text()) cached_text = full.text_emb;
        const LabVector base_lv = full.labvec;
        value_fn = [&model, base_lv, item_idx, cached_text,
                    cls](const std::vector<std::uint8_t>& members) {
            LabVector ablated = base_lv;
            for (std::size_t i = 0; i < item_idx.size(); ++i) {
                if (!members[i]) {
                    ablated.values[item_idx[i]] = 0.0;
                    ablated.mask[item_idx[i]] = 0.0;
                }
            }
            Tape tape;
            const std::vector<Var> vars = model.params.tape_vars(tape);
            const ForwardGraph g = model_forward_cached(tape, vars, model, cached_text,
                                                        std::nullopt, std::nullopt, ablated);
            return tape.value(g.probs).at(0, cls);
        };
    }

    const std::size_t n = names.size();
    if (n == 0) {
        throw DataError("explain: record has no features at granularity " +
                        to_string(granularity));
    }

    report.base_value = value_fn(std::vector<std::uint8_t>(n, 0));
    report.full_value = value_fn(std::vector<std::uint8_t>(n, 1));

    std::vector<double> phi;
    std::vector<double> std_errors(n, 0.0);
    if (n <= cfg.exact_limit || cfg.force_exact) {
        phi = shapley_exact(value_fn, n, cfg.exact_limit, cfg.threads);
        report.method = "exact";
        double sum = 0.0;
        for (double p : phi) sum += p;
        if (std::abs(sum - (report.full_value - report.base_value)) > 1e-6) {
            throw ContractError("explain: exact Shapley efficiency check failed");
        }
    } else {
        const SampledShapley s = shapley_sampled(value_fn, n, cfg.n_samples, cfg.seed);
        phi = s.values;
        std_errors = s.std_errors;
        report.method = "sampled";
        report.n_samples = s.n_samples;
    }

    std::vector<std::size_t> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(phi[a]) > std::abs(phi[b]);
    });
    for (const std::size_t i : rank) {
        AttributionFeature f;
        f.name = names[i];
        f.span_begin = span_begin[i];
        f.span_end = span_end[i];
        f.phi = phi[i];
        f.std_error = std_errors[i];
        report.features.push_back(std::move(f));
    }
    return report;
}

nlohmann::ordered_json AttributionReport::to_json() const {
    nlohmann::ordered_json j;
    j["patient_id"] = patient_id;
    j["date"] = date;
    j["granularity"] = medfuse::to_string(granularity);
    j["method"] = method;
    if (method == "sampled") {
        j["n_samples"] = n_samples;
        j["seed"] = seed;
    }
    j["explained_class"] = explained_class;
    j["base_value"] = base_value;
    j["full_value"] = full_value;
    j["prescreened"] = prescreened;
    j["n_candidates"] = n_candidates;
    if (granularity == Granularity::token) j["input_text"] = input_text;
    nlohmann::ordered_json feats = nlohmann::ordered_json::array();
    for (const auto& f : features) {
        nlohmann::ordered_json fj;
        fj["name"] = f.name;
        if (f.span_begin >= 0) {
            fj["span"] = {f.span_begin, f.span_end};
        }
        fj["phi"] = f.phi;
        if (method == "sampled") fj["std_error"] = f.std_error;
        feats.push_back(std::move(fj));
    }
    j["features"] = std::move(feats);
    return j;
}

AttributionReport AttributionReport::from_json(const nlohmann::json& j) {
    AttributionReport r;
    r.patient_id = j.at("patient_id").get<std::string>();
    r.date = j.at("date").get<std::string>();
    r.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    r.method = j.at("method").get<std::string>();
    r.n_samples = j.value("n_samples", std::size_t{0});
    r.seed = j.value("seed", std::uint64_t{0});
    r.explained_class = j.at("explained_class").get<int>();
    r.base_value = j.at("base_value").get<double>();
    r.full_value = j.at("full_value").get<double>();
    r.prescreened = j.value("prescreened", false);
    r.n_candidates = j.value("n_candidates", std::size_t{0});
    r.input_text = j.value("input_text", std::string());
    for (const auto& fj : j.at("features")) {
        AttributionFeature f;
        f.name = fj.at("name").get<std::string>();
        if (fj.contains("span")) {
            f.span_begin = fj.at("span")[0].get<long>();
            f.span_end = fj.at("span")[1].get<long>();
        }
        f.phi = fj.at("phi").get<double>();
        f.std_error = fj.value("std_error", 0.0);
        r.features.push_back(std::move(f));
    }
    return r;
}

nlohmann::ordered_json fusion_attention_json(const Model& model, const EncounterRecord& record) {
    if (model.cfg.mode != Mode::fusion) {
        throw ConfigError("attention dump: model is not in fusion mode");
    }
    Tape tape;
    const std::vector<Var> vars = model.params.tape_vars(tape);
    AttentionProbe probe;
    model_forward(tape, vars, model, record, &probe);
    nlohmann::ordered_json j;
    j["patient_id"] = record.patient_id;
    j["date"] = record.date;
    j["sequence"] = {"text", "labs"};
    nlohmann::ordered_json heads = nlohmann::ordered_json::array();
    for (const Tensor& m : probe.matrices) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t r = 0; r < m.rows(); ++r) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m.at(r, c));
            rows.push_back(std::move(row));
        }
        heads.push_back(std::move(rows));
    }
    j["heads"] = std::move(heads);
    return j;
}

}  // namespace medfuse
