#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace medfuse {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Confusion-matrix metrics. Binary reports the positive class (index 1);
// multiclass reports macro averages. 0/0 conventions: precision with no
// predicted positives is 0, recall with no actual positives is 0, f1 with
// precision+recall = 0 is 0.
struct ConfusionMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<ClassMetrics> per_class;
    std::vector<std::vector<std::size_t>> matrix;  // matrix[truth][predicted]
};

ConfusionMetrics confusion_metrics(const std::vector<int>& predictions,
                                   const std::vector<int>& labels, int n_classes);

// Mann-Whitney AUROC: (wins + 0.5 * ties) / (P * N), computed by average
// ranks. Throws MetricError unless both classes are present.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Area under the precision-recall step curve by descending-score sweep with
// tie groups processed atomically. Throws MetricError without positives.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

struct MetricsReport {
    std::size_t n = 0;
    std::vector<std::size_t> class_counts;
    ConfusionMetrics confusion;
    std::optional<double> auroc;  // binary only
    std::optional<double> auprc;  // binary only
    std::string averaging;        // "binary" or "macro"

    nlohmann::ordered_json to_json() const;
};

}  // namespace medfuse
