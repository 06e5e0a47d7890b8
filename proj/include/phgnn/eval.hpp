#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "phgnn/matrix.hpp"

namespace phgnn {

/// Binary confusion counts with class 1 as the positive class.
struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    double sensitivity() const;  // 0 when there are no positives
    double specificity() const;  // 0 when there are no negatives
    double balanced_accuracy() const { return (sensitivity() + specificity()) / 2.0; }
};

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> truth, const std::vector<bool>& mask);

/// Argmax over each logit row; ties resolve to the lower class.
std::vector<int> predict_labels(const Matrix& logits);
/// softmax(logits)[:, 1] per row.
std::vector<double> positive_scores(const Matrix& logits);

/// Mann-Whitney AUC over masked nodes, ties counted as one half.
double auc(std::span<const double> scores, std::span<const int> labels, const std::vector<bool>& mask);

struct Metrics {
    double bacc = 0.0, sen = 0.0, spe = 0.0, auc = 0.0;
    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Metrics of the first labels.size() logit rows over the mask.
Metrics evaluate_logits(const Matrix& logits, std::span<const int> labels, const std::vector<bool>& mask);

struct MetricsReport {
    Metrics mean;
    Metrics stddev;  // population standard deviation across folds
    std::vector<Metrics> folds;
};

MetricsReport aggregate_folds(std::span<const Metrics> folds);

/// "93.2±0.6" style cell: percentage with one decimal.
std::string format_cell(double mean, double stddev);
/// `NAME  BACC±σ  SEN±σ  SPE±σ  AUC±σ` row, name left-aligned to `name_width`.
std::string format_row(const std::string& name, const MetricsReport& r, std::size_t name_width);

}  // namespace phgnn
