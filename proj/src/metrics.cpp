#include "medfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medfuse/error.hpp"

namespace medfuse {

ConfusionMetrics confusion_metrics(const std::vector<int>& predictions,
                                   const std::vector<int>& labels, int n_classes) {
    if (predictions.size() != labels.size()) {
        throw DataError("confusion_metrics: " + std::to_string(predictions.size()) +
                        " predictions vs " + std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) throw DataError("confusion_metrics: empty input");
    if (n_classes < 2) throw ConfigError("confusion_metrics: need at least 2 classes");

    ConfusionMetrics out;
    out.matrix.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int t = labels[i], p = predictions[i];
        if (t < 0 || t >= n_classes || p < 0 || p >= n_classes) {
            throw IndexError("confusion_metrics: class outside [0, " + std::to_string(n_classes) +
                             ")");
        }
        ++out.matrix[t][p];
        if (t == p) ++correct;
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());

    out.per_class.resize(n_classes);
    for (int c = 0; c < n_classes; ++c) {
        std::size_t tp = out.matrix[c][c], fp = 0, fn = 0;
        for (int o = 0; o < n_classes; ++o) {
            if (o == c) continue;
            fp += out.matrix[o][c];
            fn += out.matrix[c][o];
        }
        ClassMetrics& m = out.per_class[c];
        m.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        m.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        m.f1 = (m.precision + m.recall > 0.0)
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
    }
    if (n_classes == 2) {
        out.precision = out.per_class[1].precision;
        out.recall = out.per_class[1].recall;
        out.f1 = out.per_class[1].f1;
    } else {
        for (const auto& m : out.per_class) {
            out.precision += m.precision;
            out.recall += m.recall;
            out.f1 += m.f1;
        }
        out.precision /= n_classes;
        out.recall /= n_classes;
        out.f1 /= n_classes;
    }
    return out;
}

namespace {

void check_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw DataError("metric: score/label length mismatch");
    }
    if (scores.empty()) throw DataError("metric: empty input");
    for (double s : scores) {
        if (std::isnan(s)) throw NumericError("metric: NaN score");
    }
    for (int l : labels) {
        if (l != 0 && l != 1) throw DataError("metric: labels must be 0/1");
    }
}

}  // namespace

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_scores(scores, labels);
    const std::size_t n = scores.size();
    std::size_t pos = 0;
    for (int l : labels) pos += static_cast<std::size_t>(l);
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) {
        throw MetricError("auroc: undefined, needs both classes present");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Average ranks within tie groups; rank sum of positives gives the
    // Mann-Whitney statistic.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
        }
        i = j + 1;
    }
    const double p = static_cast<double>(pos);
    const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_scores(scores, labels);
    std::size_t pos = 0;
    for (int l : labels) pos += static_cast<std::size_t>(l);
    if (pos == 0) throw MetricError("auprc: undefined without positives");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double area = 0.0;
    double prev_recall = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) {
                ++tp;
            } else {
                ++fp;
            }
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    return area;
}

nlohmann::ordered_json MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["n"] = n;
    j["class_counts"] = class_counts;
    j["accuracy"] = confusion.accuracy;
    j["precision"] = confusion.precision;
    j["recall"] = confusion.recall;
    j["f1"] = confusion.f1;
    j["averaging"] = averaging;
    if (auroc) {
        j["auroc"] = *auroc;
    } else {
        j["auroc"] = nullptr;
    }
    if (auprc) {
        j["auprc"] = *auprc;
    } else {
        j["auprc"] = nullptr;
    }
    nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
    for (const auto& m : confusion.per_class) {
        per_class.push_back({{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}});
    }
    j["per_class"] = std::move(per_class);
    j["confusion_matrix"] = confusion.matrix;
    return j;
}

}  // namespace medfuse
