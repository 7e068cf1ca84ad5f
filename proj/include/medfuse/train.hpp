#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medfuse/adam.hpp"
#include "medfuse/checkpoint.hpp"
#include "medfuse/metrics.hpp"
#include "medfuse/model.hpp"

namespace medfuse {

enum class Weighting { none, inverse_frequency };

std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& s);

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    AdamConfig adam;
    Weighting weighting = Weighting::inverse_frequency;
    double clip_norm = 1.0;      // global-norm gradient clip
    std::size_t patience = 5;    // early stop on validation loss
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    void validate() const;

    nlohmann::ordered_json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    std::optional<double> val_loss;
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;  // 1-based; 0 when no validation was used
    bool stopped_early = false;
    std::size_t skipped_train = 0;  // records unusable for the mode/task
    std::size_t skipped_val = 0;

    nlohmann::ordered_json history_json() const;
};

// Task label of a record, or -1 when unlabeled.
int record_label(const EncounterRecord& record, Task task);

// labs_text trains on early-onset data only: rule-positive records past the
// flagged onset encounter are excluded. Other modes pass through.
std::vector<EncounterRecord> filter_for_mode(const std::vector<EncounterRecord>& records,
                                             Mode mode);

// Inverse-frequency weights w_c = n / (C * n_c) over labeled records; throws
// ConfigError when a class has no examples. Weighting::none gives all ones.
std::vector<double> class_weights(const std::vector<EncounterRecord>& records, Task task,
                                  Weighting weighting);

// Builds vocabulary and normalization stats from the training records, then
// minimizes class-weighted cross-entropy with Adam. Returns the parameters of
// the best validation epoch when validation records are provided.
TrainResult train(const std::vector<EncounterRecord>& train_records,
                  const std::vector<EncounterRecord>& val_records, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);

struct EvalRow {
    std::size_t index = 0;  // position among evaluated records
    std::string patient_id;
    std::string date;
    int label = 0;
    std::vector<double> probs;
};

struct EvalResult {
    MetricsReport report;
    std::vector<EvalRow> rows;
    std::size_t skipped = 0;
};

// Deterministic evaluation: argmax predictions (lowest class index wins ties)
// feed the confusion metrics; binary positive-class probabilities feed
// AUROC/AUPRC.
EvalResult evaluate(const Model& model, const std::vector<EncounterRecord>& records,
                    std::size_t threads = 1);

// Recomputes a MetricsReport from dumped rows; evaluate() itself uses this,
// and saved dumps can be replayed through it.
MetricsReport metrics_from_rows(const std::vector<EvalRow>& rows, int n_classes);

std::string eval_rows_to_jsonl(const std::vector<EvalRow>& rows);
std::vector<EvalRow> eval_rows_from_jsonl(const std::string& content);

}  // namespace medfuse
