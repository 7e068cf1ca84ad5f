#include "medfuse/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "medfuse/kernels.hpp"
#include "medfuse/rng.hpp"
#include "medfuse/threadpool.hpp"

namespace medfuse {

std::string to_string(Weighting w) {
    return w == Weighting::none ? "none" : "inverse_frequency";
}

Weighting weighting_from_string(const std::string& s) {
    if (s == "none") return Weighting::none;
    if (s == "inverse_frequency") return Weighting::inverse_frequency;
    throw ConfigError("unknown weighting: " + s);
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
    if (clip_norm < 0.0) throw ConfigError("train: clip_norm must be non-negative");
    if (threads < 1) throw ConfigError("train: threads must be at least 1");
}

nlohmann::ordered_json TrainConfig::to_json() const {
    nlohmann::ordered_json j;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["lr"] = adam.lr;
    j["beta1"] = adam.beta1;
    j["beta2"] = adam.beta2;
    j["eps"] = adam.eps;
    j["weighting"] = to_string(weighting);
    j["clip_norm"] = clip_norm;
    j["patience"] = patience;
    j["seed"] = seed;
    j["threads"] = threads;
    return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.eps = j.value("eps", c.adam.eps);
    c.weighting = weighting_from_string(j.value("weighting", to_string(c.weighting)));
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    return c;
}

int record_label(const EncounterRecord& record, Task task) {
    if (task == Task::binary) {
        if (record.label_binary == BinaryLabel::unlabeled) return -1;
        return static_cast<int>(record.label_binary);
    }
    if (record.label_multiclass == MultiLabel::unlabeled) return -1;
    return static_cast<int>(record.label_multiclass);
}

std::vector<EncounterRecord> filter_for_mode(const std::vector<EncounterRecord>& records,
                                             Mode mode) {
    if (mode != Mode::labs_text) return records;
    std::vector<EncounterRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.label_binary == BinaryLabel::positive && !rec.onset_flag) continue;
        out.push_back(rec);
    }
    return out;
}

std::vector<double> class_weights(const std::vector<EncounterRecord>& records, Task task,
                                  Weighting weighting) {
    const int n_classes = task == Task::binary ? 2 : kMultiClassCount;
    std::vector<double> weights(static_cast<std::size_t>(n_classes), 1.0);
    if (weighting == Weighting::none) return weights;
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    std::size_t total = 0;
    for (const auto& rec : records) {
        const int l = record_label(rec, task);
        if (l < 0) continue;
        ++counts[static_cast<std::size_t>(l)];
        ++total;
    }
    for (int c = 0; c < n_classes; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            throw ConfigError("inverse_frequency weighting undefined: class " + std::to_string(c) +
                              " has no labeled examples");
        }
        weights[static_cast<std::size_t>(c)] =
            static_cast<double>(total) /
            (static_cast<double>(n_classes) * static_cast<double>(counts[static_cast<std::size_t>(c)]));
    }
    return weights;
}

namespace {

struct CachedExample {
    std::optional<TokenizedInput> toks;
    std::optional<LabVector> labvec;
    int label = 0;
};

// Precomputes tokenization / lab vectors once; records that cannot satisfy
// the mode's input requirements are skipped and counted. kept_idx, when
// given, receives the surviving records' positions.
std::vector<CachedExample> cache_examples(const std::vector<EncounterRecord>& records,
                                          const Model& model, std::size_t& skipped,
                                          std::vector<std::size_t>* kept_idx = nullptr) {
    std::vector<CachedExample> out;
    out.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        const int label = record_label(rec, model.cfg.task);
        if (label < 0) {
            ++skipped;
            continue;
        }
        CachedExample ex;
        ex.label = label;
        try {
            if (model.cfg.uses_text()) {
                const std::string input = build_input(rec, effective_text_input(model.cfg));
                TokenizedInput toks = tokenize(input, model.vocab, model.cfg.text.max_len);
                if (toks.n_real == 0) throw DataError("no tokens");
                ex.toks = std::move(toks);
            }
            if (model.cfg.uses_labs()) {
                if (model.cfg.mode == Mode::labs_only && rec.panel.empty()) {
                    throw DataError("empty panel");
                }
                ex.labvec = vectorize_panel(rec.panel, model.stats, model.catalog);
            }
        } catch (const DataError&) {
            ++skipped;
            continue;
        }
        out.push_back(std::move(ex));
        if (kept_idx) kept_idx->push_back(r);
    }
    return out;
}

double example_loss_and_grads(const Model& model, const CachedExample& ex,
                              const std::vector<double>& weights, std::vector<Tensor>* grads_out) {
    Tape tape;
    const std::vector<Var> vars = model.params.tape_vars(tape);
    const ForwardGraph g = model_forward_cached(tape, vars, model, std::nullopt, ex.toks,
                                                std::nullopt, ex.labvec);
    const Var loss = tape.cross_entropy(g.logits, {ex.label}, weights);
    const double loss_value = tape.value(loss).item();
    if (grads_out) {
        tape.backward(loss);
        grads_out->clear();
        grads_out->reserve(vars.size());
        for (const Var v : vars) grads_out->push_back(tape.grad(v));
    }
    return loss_value;
}

}  // namespace

TrainResult train(const std::vector<EncounterRecord>& train_records,
                  const std::vector<EncounterRecord>& val_records, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg) {
    model_cfg.validate();
    train_cfg.validate();

    const std::vector<EncounterRecord> train_usable = filter_for_mode(train_records, model_cfg.mode);
    const std::vector<EncounterRecord> val_usable = filter_for_mode(val_records, model_cfg.mode);

    std::vector<EncounterRecord> labeled;
    labeled.reserve(train_usable.size());
    for (const auto& rec : train_usable) {
        if (record_label(rec, model_cfg.task) >= 0) labeled.push_back(rec);
    }
    if (labeled.empty()) throw DataError("train: no labeled records");

    const std::vector<double> weights =
        class_weights(labeled, model_cfg.task, train_cfg.weighting);

    Vocab vocab = [&] {
        if (!model_cfg.uses_text()) return Vocab::build({""}, 1, 2);
        std::vector<std::string> corpus;
        corpus.reserve(labeled.size());
        for (const auto& rec : labeled) {
            try {
                corpus.push_back(build_input(rec, effective_text_input(model_cfg)));
            } catch (const DataError&) {
                // skipped later by the example cache as well
            }
        }
        if (corpus.empty()) throw DataError("train: no usable text inputs for vocabulary");
        return Vocab::build(corpus, model_cfg.text.min_freq, model_cfg.text.vocab_size);
    }();

    const NormStats stats = compute_norm_stats(labeled, lab_catalog());

    TrainResult result;
    result.model = init_model(model_cfg, std::move(vocab), stats, lab_catalog(), train_cfg.seed);
    Model& model = result.model;

    const std::vector<CachedExample> train_set =
        cache_examples(train_usable, model, result.skipped_train);
    const std::vector<CachedExample> val_set = cache_examples(val_usable, model, result.skipped_val);
    if (train_set.empty()) throw DataError("train: no usable training records");

    AdamState adam(model.params, train_cfg.adam);
    ThreadPool pool(train_cfg.threads);

    // Per-record gradients are computed on independent tapes (possibly in
    // parallel) and merged in batch order, so results do not depend on the
    // thread count.
    const std::size_t n_params = model.params.size();
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t bad_epochs = 0;
    std::vector<Tensor> best_params;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(Rng::mix(train_cfg.seed, "shuffle"), epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
            const std::size_t bsz = std::min(train_cfg.batch_size, order.size() - start);
            std::vector<std::vector<Tensor>> slot_grads(bsz);
            std::vector<double> slot_loss(bsz, 0.0);
            pool.run(bsz, [&](std::size_t s) {
                slot_loss[s] = example_loss_and_grads(model, train_set[order[start + s]], weights,
                                                      &slot_grads[s]);
            });
            std::vector<Tensor> grads;
            grads.reserve(n_params);
            for (std::size_t j = 0; j < n_params; ++j) {
                grads.push_back(Tensor::zeros(model.params.tensor(j).shape()));
            }
            for (std::size_t s = 0; s < bsz; ++s) {
                loss_sum += slot_loss[s];
                for (std::size_t j = 0; j < n_params; ++j) {
                    kernels::ops().axpy(1.0, slot_grads[s][j].data(), grads[j].data(),
                                        grads[j].size());
                }
            }
            const double inv_b = 1.0 / static_cast<double>(bsz);
            for (auto& g : grads) kernels::ops().scale(inv_b, g.data(), g.data(), g.size());
            if (train_cfg.clip_norm > 0.0) clip_global_norm(grads, train_cfg.clip_norm);
            adam.step(model.params, grads);
        }

        EpochStats stats_row;
        stats_row.epoch = epoch;
        stats_row.train_loss = loss_sum / static_cast<double>(train_set.size());

        if (!val_set.empty()) {
            std::vector<double> vloss(val_set.size(), 0.0);
            pool.run(val_set.size(), [&](std::size_t i) {
                vloss[i] = example_loss_and_grads(model, val_set[i], weights, nullptr);
            });
            double vsum = 0.0;
            for (double v : vloss) vsum += v;
            stats_row.val_loss = vsum / static_cast<double>(val_set.size());
        }
        result.history.push_back(stats_row);

        if (stats_row.val_loss) {
            if (*stats_row.val_loss < best_val) {
                best_val = *stats_row.val_loss;
                result.best_epoch = epoch;
                bad_epochs = 0;
                best_params.clear();
                for (std::size_t j = 0; j < n_params; ++j) {
                    best_params.push_back(model.params.tensor(j));
                }
            } else if (++bad_epochs >= train_cfg.patience) {
                result.stopped_early = true;
                break;
            }
        }
    }

    if (!best_params.empty()) {
        for (std::size_t j = 0; j < model.params.size(); ++j) {
            model.params.tensor(j) = best_params[j];
        }
    }
    return result;
}

nlohmann::ordered_json TrainResult::history_json() const {
    nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
    for (const auto& e : history) {
        nlohmann::ordered_json row;
        row["epoch"] = e.epoch;
        row["train_loss"] = e.train_loss;
        if (e.val_loss) {
            row["val_loss"] = *e.val_loss;
        } else {
            row["val_loss"] = nullptr;
        }
        epochs.push_back(std::move(row));
    }
    nlohmann::ordered_json j;
    j["epochs"] = std::move(epochs);
    j["best_epoch"] = best_epoch;
    j["stopped_early"] = stopped_early;
    j["skipped_train"] = skipped_train;
    j["skipped_val"] = skipped_val;
    return j;
}

EvalResult evaluate(const Model& model, const std::vector<EncounterRecord>& records,
                    std::size_t threads) {
    const std::vector<EncounterRecord> usable = filter_for_mode(records, model.cfg.mode);
    EvalResult result;
    std::vector<std::size_t> kept_idx;
    const std::vector<CachedExample> examples =
        cache_examples(usable, model, result.skipped, &kept_idx);
    if (examples.empty()) throw DataError("evaluate: no labeled records");

    result.rows.resize(examples.size());
    ThreadPool pool(threads);
    pool.run(examples.size(), [&](std::size_t i) {
        Tape tape;
        const std::vector<Var> vars = model.params.tape_vars(tape);
        const ForwardGraph g = model_forward_cached(tape, vars, model, std::nullopt,
                                                    examples[i].toks, std::nullopt,
                                                    examples[i].labvec);
        EvalRow row;
        row.index = i;
        row.patient_id = usable[kept_idx[i]].patient_id;
        row.date = usable[kept_idx[i]].date;
        row.label = examples[i].label;
        row.probs = tape.value(g.probs).values();
        result.rows[i] = std::move(row);
    });

    result.report = metrics_from_rows(result.rows, static_cast<int>(model.cfg.n_classes()));
    return result;
}

MetricsReport metrics_from_rows(const std::vector<EvalRow>& rows, int n_classes) {
    if (rows.empty()) throw DataError("metrics_from_rows: empty input");
    MetricsReport report;
    report.n = rows.size();
    report.class_counts.assign(static_cast<std::size_t>(n_classes), 0);
    std::vector<int> preds, labels;
    preds.reserve(rows.size());
    labels.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.probs.size() != static_cast<std::size_t>(n_classes)) {
            throw DataError("metrics_from_rows: probability width mismatch");
        }
        int arg = 0;
        for (int c = 1; c < n_classes; ++c) {
            if (row.probs[static_cast<std::size_t>(c)] > row.probs[static_cast<std::size_t>(arg)]) {
                arg = c;  // strict >, so ties keep the lowest class index
            }
        }
        preds.push_back(arg);
        labels.push_back(row.label);
        if (row.label < 0 || row.label >= n_classes) {
            throw DataError("metrics_from_rows: label outside class range");
        }
        ++report.class_counts[static_cast<std::size_t>(row.label)];
    }
    report.confusion = confusion_metrics(preds, labels, n_classes);
    report.averaging = n_classes == 2 ? "binary" : "macro";
    if (n_classes == 2) {
        std::vector<double> scores;
        scores.reserve(rows.size());
        for (const auto& row : rows) scores.push_back(row.probs[1]);
        try {
            report.auroc = auroc(scores, labels);
            report.auprc = auprc(scores, labels);
        } catch (const MetricError&) {
            // single-class evaluation sets: leave the ranking metrics unset
        }
    }
    return report;
}

std::string eval_rows_to_jsonl(const std::vector<EvalRow>& rows) {
    std::string out;
    for (const auto& row : rows) {
        nlohmann::ordered_json j;
        j["index"] = row.index;
        j["patient_id"] = row.patient_id;
        j["date"] = row.date;
        j["label"] = row.label;
        j["probs"] = row.probs;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<EvalRow> eval_rows_from_jsonl(const std::string& content) {
    std::vector<EvalRow> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        const std::string line = content.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            EvalRow row;
            row.index = j.at("index").get<std::size_t>();
            row.patient_id = j.at("patient_id").get<std::string>();
            row.date = j.at("date").get<std::string>();
            row.label = j.at("label").get<int>();
            row.probs = j.at("probs").get<std::vector<double>>();
            rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw DataError("probs line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace medfuse
