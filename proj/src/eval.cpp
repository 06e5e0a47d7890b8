#include "phgnn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "phgnn/error.hpp"

namespace phgnn {

double ConfusionCounts::sensitivity() const {
    const std::size_t pos = tp + fn;
    return pos == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pos);
}

double ConfusionCounts::specificity() const {
    const std::size_t neg = tn + fp;
    return neg == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(neg);
}

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> truth, const std::vector<bool>& mask) {
    if (predicted.size() != truth.size() || mask.size() != truth.size())
        fail(ErrorKind::Shape, "confusion: predictions, labels and mask differ in length");
    ConfusionCounts c;
    std::size_t used = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!mask[i]) continue;
        ++used;
        const bool p = predicted[i] == 1;
        const bool t = truth[i] == 1;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    if (used == 0) fail(ErrorKind::InvalidArgument, "confusion: mask selects no nodes");
    return c;
}

std::vector<int> predict_labels(const Matrix& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

std::vector<double> positive_scores(const Matrix& logits) {
    require(logits.cols() >= 2, "positive_scores: need at least two classes");
    std::vector<double> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (double x : row) s += std::exp(x - mx);
        out[r] = std::exp(row[1] - mx) / s;
    }
    return out;
}

double auc(std::span<const double> scores, std::span<const int> labels, const std::vector<bool>& mask) {
    if (scores.size() != labels.size() || mask.size() != labels.size())
        fail(ErrorKind::Shape, "auc: scores, labels and mask differ in length");
    std::vector<std::pair<double, int>> items;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (mask[i]) items.emplace_back(scores[i], labels[i]);
    const auto positives = static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [](const auto& it) { return it.second == 1; }));
    const std::size_t negatives = items.size() - positives;
    if (positives == 0 || negatives == 0) fail(ErrorKind::InvalidArgument, "auc: AUC undefined, mask holds a single class");

    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    // Twice the positive rank sum, so tied average ranks stay integral.
    double doubled_rank_sum = 0.0;
    for (std::size_t i = 0; i < items.size();) {
        std::size_t j = i;
        while (j < items.size() && items[j].first == items[i].first) ++j;
        const double doubled_rank = static_cast<double>(i + 1 + j);  // 2 * mean of ranks i+1..j
        for (std::size_t q = i; q < j; ++q)
            if (items[q].second == 1) doubled_rank_sum += doubled_rank;
        i = j;
    }
    const double p = static_cast<double>(positives);
    const double u = (doubled_rank_sum - p * (p + 1.0)) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

Metrics evaluate_logits(const Matrix& logits, std::span<const int> labels, const std::vector<bool>& mask) {
    if (logits.rows() < labels.size())
        fail(ErrorKind::Shape, "evaluate: " + std::to_string(logits.rows()) + " logit rows for " +
                                   std::to_string(labels.size()) + " labels");
    auto pred = predict_labels(logits);
    auto scores = positive_scores(logits);
    pred.resize(labels.size());
    scores.resize(labels.size());
    const ConfusionCounts c = confusion(pred, labels, mask);
    Metrics m;
    m.sen = c.sensitivity();
    m.spe = c.specificity();
    m.bacc = c.balanced_accuracy();
    m.auc = auc(scores, labels, mask);
    return m;
}

MetricsReport aggregate_folds(std::span<const Metrics> folds) {
    require(!folds.empty(), "aggregate_folds: no folds");
    MetricsReport r;
    r.folds.assign(folds.begin(), folds.end());
    const double n = static_cast<double>(folds.size());
    auto stat = [&](double Metrics::*field, double& mean, double& sd) {
        // Running mean keeps identical folds exact.
        mean = 0.0;
        double k = 0.0;
        for (const auto& f : folds) mean += (f.*field - mean) / ++k;
        double v = 0.0;
        for (const auto& f : folds) v += (f.*field - mean) * (f.*field - mean);
        sd = std::sqrt(v / n);
    };
    stat(&Metrics::bacc, r.mean.bacc, r.stddev.bacc);
    stat(&Metrics::sen, r.mean.sen, r.stddev.sen);
    stat(&Metrics::spe, r.mean.spe, r.stddev.spe);
    stat(&Metrics::auc, r.mean.auc, r.stddev.auc);
    return r;
}

std::string format_cell(double mean, double stddev) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f±%.1f", 100.0 * mean, 100.0 * stddev);
    return buf;
}

std::string format_row(const std::string& name, const MetricsReport& r, std::size_t name_width) {
    std::string out = name;
    if (out.size() < name_width) out.append(name_width - out.size(), ' ');
    const std::pair<double, double> cells[] = {{r.mean.bacc, r.stddev.bacc},
                                               {r.mean.sen, r.stddev.sen},
                                               {r.mean.spe, r.stddev.spe},
                                               {r.mean.auc, r.stddev.auc}};
    for (const auto& [m, s] : cells) {
        std::string cell = format_cell(m, s);
        out += "  " + cell;
        // "±" is two bytes; pad on display width.
        const std::size_t width = cell.size() - 1;
        if (width < 11) out.append(11 - width, ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

}  // namespace phgnn
