#include "medfuse/cli.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "medfuse/checkpoint.hpp"
#include "medfuse/cohort.hpp"
#include "medfuse/explain.hpp"
#include "medfuse/kernels.hpp"
#include "medfuse/render.hpp"
#include "medfuse/rng.hpp"
#include "medfuse/textualize.hpp"
#include "medfuse/train.hpp"
#include "medfuse/util.hpp"

namespace medfuse {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Every run writes <primary output>.manifest.json: tool version, effective
// config (seed included), and input/output hashes. Re-running the command in
// the manifest reproduces the artifact bit for bit.
void write_manifest(const std::string& primary_output, const std::string& command,
                    ordered_json config_echo, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    ordered_json m;
    m["tool"] = "medfuse";
    m["version"] = kVersion;
    m["command"] = command;
    m["config"] = std::move(config_echo);
    ordered_json in = ordered_json::object();
    for (const auto& p : inputs) in[p] = to_hex(hash_file(p));
    m["inputs"] = std::move(in);
    ordered_json out = ordered_json::object();
    for (const auto& p : outputs) out[p] = to_hex(hash_file(p));
    m["outputs"] = std::move(out);
    write_file(primary_output + ".manifest.json", m.dump(2) + "\n");
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    try {
        return json::parse(read_file(path));
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

std::string default_vocab_path(const std::string& ckpt) { return ckpt + ".vocab"; }

Model load_model_and_vocab(const std::string& ckpt_path, std::string vocab_path) {
    if (vocab_path.empty()) vocab_path = default_vocab_path(ckpt_path);
    Vocab vocab = Vocab::load(vocab_path);
    return load_checkpoint(ckpt_path, vocab);
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string out;
    std::string config_path;
    std::optional<std::size_t> n;
    std::optional<double> positive_rate;
    std::optional<double> missingness;
    std::optional<std::uint64_t> seed;
    std::optional<int> encounters_min, encounters_max;
    std::size_t threads = 1;
};

int run_generate(const GenerateArgs& args) {
    SynthConfig cfg = synth_config_from_json(load_config_file(args.config_path),
                                             default_synth_config());
    if (args.n) cfg.n_patients = *args.n;
    if (args.positive_rate) cfg.positive_rate = *args.positive_rate;
    if (args.missingness) cfg.missingness = *args.missingness;
    if (args.seed) cfg.seed = *args.seed;
    if (args.encounters_min) cfg.encounters_min = *args.encounters_min;
    if (args.encounters_max) cfg.encounters_max = *args.encounters_max;

    const auto records = generate_cohort(cfg, args.threads);
    write_cohort(args.out, records);
    write_manifest(args.out, "generate", synth_config_to_json(cfg), {}, {args.out});
    std::size_t pos = 0, neg = 0, unl = 0;
    for (const auto& r : records) {
        if (r.label_binary == BinaryLabel::positive) ++pos;
        else if (r.label_binary == BinaryLabel::negative) ++neg;
        else ++unl;
    }
    std::cout << "wrote " << records.size() << " records (" << pos << " positive, " << neg
              << " negative, " << unl << " unlabeled) to " << args.out << "\n";
    return 0;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
    std::string cohort;
    std::string out;
    std::string config_path;
    std::string mode, task, weighting, pooling, text_input;
    std::optional<std::size_t> epochs, batch_size, patience, threads;
    std::optional<double> lr, clip_norm, val_fraction;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> d_model, layers, heads, fusion_heads, max_len, vocab_size,
        ffn_mult, head_hidden, labs_hidden1, labs_hidden2, min_freq;
};

int run_train(const TrainArgs& args) {
    const json file_cfg = load_config_file(args.config_path);
    ModelConfig mcfg = ModelConfig::from_json(file_cfg.value("model", json::object()));
    TrainConfig tcfg = TrainConfig::from_json(file_cfg.value("train", json::object()));
    double val_fraction = file_cfg.value("val_fraction", 0.1);

    if (!args.mode.empty()) mcfg.mode = mode_from_string(args.mode);
    if (!args.task.empty()) mcfg.task = task_from_string(args.task);
    if (!args.pooling.empty()) mcfg.text.pooling = pooling_from_string(args.pooling);
    if (!args.text_input.empty()) mcfg.text_input = input_mode_from_string(args.text_input);
    if (args.d_model) mcfg.text.d_model = *args.d_model;
    if (args.layers) mcfg.text.n_layers = *args.layers;
    if (args.heads) mcfg.text.n_heads = *args.heads;
    if (args.fusion_heads) mcfg.fusion_heads = *args.fusion_heads;
    if (args.max_len) mcfg.text.max_len = *args.max_len;
    if (args.vocab_size) mcfg.text.vocab_size = *args.vocab_size;
    if (args.min_freq) mcfg.text.min_freq = *args.min_freq;
    if (args.ffn_mult) mcfg.text.ffn_mult = *args.ffn_mult;
    if (args.head_hidden) mcfg.head_hidden = *args.head_hidden;
    if (args.labs_hidden1) mcfg.labs.hidden1 = *args.labs_hidden1;
    if (args.labs_hidden2) mcfg.labs.hidden2 = *args.labs_hidden2;
    if (args.epochs) tcfg.epochs = *args.epochs;
    if (args.batch_size) tcfg.batch_size = *args.batch_size;
    if (args.patience) tcfg.patience = *args.patience;
    if (args.threads) tcfg.threads = *args.threads;
    if (args.lr) tcfg.adam.lr = *args.lr;
    if (args.clip_norm) tcfg.clip_norm = *args.clip_norm;
    if (!args.weighting.empty()) tcfg.weighting = weighting_from_string(args.weighting);
    if (args.seed) tcfg.seed = *args.seed;
    if (args.val_fraction) val_fraction = *args.val_fraction;
    if (val_fraction < 0.0 || val_fraction >= 1.0) {
        throw ConfigError("val_fraction must be in [0, 1)");
    }
    mcfg.validate();
    tcfg.validate();

    const auto records = read_cohort(args.cohort);
    std::vector<EncounterRecord> train_recs, val_recs;
    if (val_fraction > 0.0) {
        auto split = split_cohort(records, 1.0 - val_fraction, Rng::mix(tcfg.seed, "val"));
        train_recs = std::move(split.first);
        val_recs = std::move(split.second);
    } else {
        train_recs = records;
    }

    TrainResult result = train(train_recs, val_recs, mcfg, tcfg);

    save_checkpoint(result.model, args.out);
    result.model.vocab.save(default_vocab_path(args.out));
    const std::string history_path = args.out + ".history.json";
    write_file(history_path, result.history_json().dump(2) + "\n");

    ordered_json echo;
    echo["model"] = mcfg.to_json();
    echo["train"] = tcfg.to_json();
    echo["val_fraction"] = val_fraction;
    write_manifest(args.out, "train", std::move(echo), {args.cohort},
                   {args.out, default_vocab_path(args.out), history_path});

    const auto& last = result.history.back();
    std::cout << "trained " << to_string(mcfg.mode) << "/" << to_string(mcfg.task) << " for "
              << result.history.size() << " epochs (train_loss=" << last.train_loss;
    if (last.val_loss) std::cout << ", val_loss=" << *last.val_loss;
    std::cout << ", best_epoch=" << result.best_epoch << ")\n";
    std::cout << "checkpoint: " << args.out << "\n";
    return 0;
}

// --- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
    std::string model;
    std::string vocab;
    std::string cohort;
    std::string out;
    std::string probs_out;
    std::size_t threads = 1;
};

int run_evaluate(const EvaluateArgs& args) {
    const Model model = load_model_and_vocab(args.model, args.vocab);
    const auto records = read_cohort(args.cohort);
    const EvalResult result = evaluate(model, records, args.threads);

    write_file(args.out, result.report.to_json().dump(2) + "\n");
    std::vector<std::string> outputs{args.out};
    if (!args.probs_out.empty()) {
        write_file(args.probs_out, eval_rows_to_jsonl(result.rows));
        outputs.push_back(args.probs_out);
    }
    ordered_json echo;
    echo["model"] = args.model;
    echo["threads"] = args.threads;
    write_manifest(args.out, "evaluate", std::move(echo), {args.model, args.cohort}, outputs);

    std::cout << result.report.to_json().dump(2) << "\n";
    return 0;
}

// --- explain -----------------------------------------------------------------

struct ExplainArgs {
    std::string model;
    std::string vocab;
    std::string cohort;
    std::string out_prefix = "attribution";
    std::string granularity = "lab_item";
    std::string method = "auto";
    std::string patient;
    std::string attention_out;
    std::size_t record_index = 0;
    bool by_patient = false;
    std::size_t samples = 500;
    std::size_t exact_limit = 12;
    std::size_t prescreen_k = 32;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

int run_explain(const ExplainArgs& args) {
    const Model model = load_model_and_vocab(args.model, args.vocab);
    const auto records = read_cohort(args.cohort);
    if (records.empty()) throw DataError("explain: empty cohort");

    const EncounterRecord* record = nullptr;
    if (args.by_patient) {
        for (const auto& r : records) {
            if (r.patient_id == args.patient) {
                record = &r;
                break;
            }
        }
        if (!record) throw DataError("explain: patient not found: " + args.patient);
    } else {
        if (args.record_index >= records.size()) {
            throw DataError("explain: record index " + std::to_string(args.record_index) +
                            " outside cohort of " + std::to_string(records.size()));
        }
        record = &records[args.record_index];
    }

    ExplainConfig cfg;
    cfg.exact_limit = args.exact_limit;
    cfg.prescreen_k = args.prescreen_k;
    cfg.n_samples = args.samples;
    cfg.seed = args.seed;
    cfg.threads = args.threads;
    if (args.method == "exact") {
        cfg.force_exact = true;
    } else if (args.method == "sampled") {
        cfg.exact_limit = 0;  // always sample
    } else if (args.method != "auto") {
        throw ConfigError("explain: method must be auto, exact or sampled");
    }
    if (args.method == "sampled" && args.granularity.empty()) {
        throw ConfigError("explain: granularity required");
    }

    const AttributionReport report =
        explain_record(model, *record, granularity_from_string(args.granularity), cfg);

    const std::string json_path = args.out_prefix + ".json";
    const std::string html_path = args.out_prefix + ".html";
    write_file(json_path, report.to_json().dump(2) + "\n");
    write_file(html_path, render_html(report));
    std::vector<std::string> outputs{json_path, html_path};
    if (!args.attention_out.empty()) {
        write_file(args.attention_out, fusion_attention_json(model, *record).dump(2) + "\n");
        outputs.push_back(args.attention_out);
    }

    ordered_json echo;
    echo["model"] = args.model;
    echo["granularity"] = args.granularity;
    echo["method"] = args.method;
    echo["samples"] = args.samples;
    echo["exact_limit"] = args.exact_limit;
    echo["prescreen_k"] = args.prescreen_k;
    echo["seed"] = args.seed;
    write_manifest(json_path, "explain", std::move(echo), {args.model, args.cohort}, outputs);

    std::cout << render_terminal(report);
    return 0;
}

// --- serialize-labs ----------------------------------------------------------

struct SerializeArgs {
    std::string cohort;
    std::string out;
    std::string order = "panel";
};

int run_serialize_labs(const SerializeArgs& args) {
    const auto records = read_cohort(args.cohort);
    SerializationSpec spec;
    if (args.order == "panel") {
        spec.order = SerializationSpec::Order::panel;
    } else if (args.order == "alphabetical") {
        spec.order = SerializationSpec::Order::alphabetical;
    } else {
        throw ConfigError("serialize-labs: order must be panel or alphabetical");
    }
    std::string out;
    for (const auto& rec : records) {
        out += serialize_panel(rec.panel, spec);
        out += '\n';
    }
    if (args.out.empty() || args.out == "-") {
        std::cout << out;
    } else {
        write_file(args.out, out);
        ordered_json echo;
        echo["order"] = args.order;
        write_manifest(args.out, "serialize-labs", std::move(echo), {args.cohort}, {args.out});
    }
    return 0;
}

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"medfuse: multimodal clinical risk prediction on synthetic EHR cohorts"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "print help for all subcommands");
    app.footer("exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric error");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "generate a synthetic cohort file");
    g->add_option("--out", gen.out, "output cohort file (JSON lines)")->required();
    g->add_option("--config", gen.config_path, "JSON config file (flags win)");
    g->add_option("--n", gen.n, "number of patients");
    g->add_option("--positive-rate", gen.positive_rate, "diabetes rate in [0,1]");
    g->add_option("--missingness", gen.missingness, "per-item missing rate in [0,1]");
    g->add_option("--seed", gen.seed, "RNG seed for all streams");
    g->add_option("--encounters-min", gen.encounters_min, "min encounters per patient");
    g->add_option("--encounters-max", gen.encounters_max, "max encounters per patient");
    g->add_option("--threads", gen.threads, "worker threads");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train a model on a cohort file");
    t->add_option("--cohort", tr.cohort, "cohort file")->required()->check(CLI::ExistingFile);
    t->add_option("--out", tr.out, "output checkpoint path")->required();
    t->add_option("--config", tr.config_path, "JSON config file with model/train sections");
    t->add_option("--mode", tr.mode, "fusion | text_only | labs_only | labs_text");
    t->add_option("--task", tr.task, "binary | multiclass");
    t->add_option("--epochs", tr.epochs, "training epochs");
    t->add_option("--batch-size", tr.batch_size, "batch size");
    t->add_option("--lr", tr.lr, "Adam learning rate");
    t->add_option("--weighting", tr.weighting, "none | inverse_frequency");
    t->add_option("--clip-norm", tr.clip_norm, "global gradient clip (0 disables)");
    t->add_option("--patience", tr.patience, "early-stop patience (epochs)");
    t->add_option("--val-fraction", tr.val_fraction, "patient fraction held out for validation");
    t->add_option("--seed", tr.seed, "RNG seed for all streams");
    t->add_option("--threads", tr.threads, "worker threads");
    t->add_option("--d-model", tr.d_model, "encoder width");
    t->add_option("--layers", tr.layers, "transformer layers");
    t->add_option("--heads", tr.heads, "attention heads (text encoder)");
    t->add_option("--fusion-heads", tr.fusion_heads, "attention heads (fusion)");
    t->add_option("--max-len", tr.max_len, "max token sequence length");
    t->add_option("--vocab-size", tr.vocab_size, "max vocabulary size");
    t->add_option("--min-freq", tr.min_freq, "min token frequency for vocabulary");
    t->add_option("--ffn-mult", tr.ffn_mult, "FFN width multiplier");
    t->add_option("--head-hidden", tr.head_hidden, "classifier hidden width");
    t->add_option("--labs-hidden1", tr.labs_hidden1, "lab encoder hidden 1");
    t->add_option("--labs-hidden2", tr.labs_hidden2, "lab encoder hidden 2");
    t->add_option("--pooling", tr.pooling, "mean | first");
    t->add_option("--text-input", tr.text_input,
                  "notes_only | labs_text_only | notes_plus_labs_text");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "evaluate a checkpoint on a cohort file");
    e->add_option("--model", ev.model, "checkpoint path")->required()->check(CLI::ExistingFile);
    e->add_option("--vocab", ev.vocab, "vocabulary file (default: <model>.vocab)");
    e->add_option("--cohort", ev.cohort, "cohort file")->required()->check(CLI::ExistingFile);
    e->add_option("--out", ev.out, "metrics report output path")->required();
    e->add_option("--probs-out", ev.probs_out, "per-record probability dump (JSON lines)");
    e->add_option("--threads", ev.threads, "worker threads");

    ExplainArgs ex;
    auto* x = app.add_subcommand("explain", "Shapley attribution for one record");
    x->add_option("--model", ex.model, "checkpoint path")->required()->check(CLI::ExistingFile);
    x->add_option("--vocab", ex.vocab, "vocabulary file (default: <model>.vocab)");
    x->add_option("--cohort", ex.cohort, "cohort file")->required()->check(CLI::ExistingFile);
    x->add_option("--record", ex.record_index, "record index in the cohort file");
    auto* patient_opt = x->add_option("--patient", ex.patient, "patient id (first record wins)");
    x->add_option("--granularity", ex.granularity, "token | lab_item");
    x->add_option("--method", ex.method, "auto | exact | sampled");
    x->add_option("--samples", ex.samples, "permutation samples (sampled mode)");
    x->add_option("--exact-limit", ex.exact_limit, "max features for exact enumeration");
    x->add_option("--prescreen-k", ex.prescreen_k, "token prescreen size");
    x->add_option("--seed", ex.seed, "RNG seed (sampled mode)");
    x->add_option("--threads", ex.threads, "worker threads");
    x->add_option("--out-prefix", ex.out_prefix, "output prefix for .json/.html");
    x->add_option("--attention-out", ex.attention_out, "fusion attention weight dump path");

    SerializeArgs se;
    auto* s = app.add_subcommand("serialize-labs", "textualize lab panels, one line per record");
    s->add_option("--cohort", se.cohort, "cohort file")->required()->check(CLI::ExistingFile);
    s->add_option("--out", se.out, "output path (default: stdout)");
    s->add_option("--order", se.order, "panel | alphabetical");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? 0 : 1;
    }

    ex.by_patient = patient_opt->count() > 0;
    if (g->parsed()) return run_generate(gen);
    if (t->parsed()) return run_train(tr);
    if (e->parsed()) return run_evaluate(ev);
    if (x->parsed()) return run_explain(ex);
    if (s->parsed()) return run_serialize_labs(se);
    return 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace medfuse
