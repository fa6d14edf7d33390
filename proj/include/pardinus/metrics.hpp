// ============================================================================
// metrics.hpp - confusion matrix, rates, ROC/AUC and class-difference stats
//
// Positive class is animal. FN rate is fn/(fn+tp) and FP rate fp/(fp+tn),
// i.e. each error count is normalized by its true-class total. Rates with a
// zero denominator are reported as absent, never as 0. AUC comes from a
// trapezoidal sweep over distinct score thresholds and equals the
// Mann-Whitney statistic P(s_pos > s_neg) + 0.5 P(s_pos = s_neg).
// ============================================================================

#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <vector>

#include "pardinus/dataset.hpp"

namespace pardinus {

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::size_t total() const { return tp + fp + fn + tn; }
};

inline ConfusionMatrix confusion(const std::vector<Label>& preds, const std::vector<Label>& labels) {
    if (preds.size() != labels.size()) throw LengthMismatch("confusion: length mismatch");
    if (preds.empty()) throw EmptyInput("confusion: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool pred_animal = preds[i] == Label::animal;
        const bool is_animal = labels[i] == Label::animal;
        if (pred_animal && is_animal) ++cm.tp;
        else if (pred_animal && !is_animal) ++cm.fp;
        else if (!pred_animal && is_animal) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

struct Rates {
    std::optional<double> acc, fn_rate, fp_rate, precision, recall, f1;
};

inline Rates rates(const ConfusionMatrix& cm) {
    Rates r;
    auto ratio = [](std::size_t num, std::size_t denom) -> std::optional<double> {
        if (denom == 0) return std::nullopt;
        return double(num) / double(denom);
    };
    r.acc = ratio(cm.tp + cm.tn, cm.total());
    r.fn_rate = ratio(cm.fn, cm.fn + cm.tp);
    r.fp_rate = ratio(cm.fp, cm.fp + cm.tn);
    r.precision = ratio(cm.tp, cm.tp + cm.fp);
    r.recall = ratio(cm.tp, cm.tp + cm.fn);
    if (r.precision && r.recall && (*r.precision + *r.recall) > 0.0)
        r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
    return r;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocResult {
    double auc = 0.0;
    std::vector<RocPoint> points; // staircase from (0,0) to (1,1)
};

// Threshold sweep over distinct scores, descending; tied scores advance as a
// single step, which is what makes the trapezoidal area equal the
// Mann-Whitney statistic under ties.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<Label>& labels) {
    if (scores.size() != labels.size()) throw LengthMismatch("roc_auc: length mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (Label l : labels) (l == Label::animal ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) throw SingleClass("roc_auc: both classes required");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    });

    RocResult result;
    result.points.push_back({0.0, 0.0});
    double auc = 0.0;
    std::size_t tp = 0, fp = 0;
    double prev_fpr = 0.0, prev_tpr = 0.0;

    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == Label::animal ? tp : fp)++;
            ++i;
        }
        const double fpr = double(fp) / double(n_neg);
        const double tpr = double(tp) / double(n_pos);
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        result.points.push_back({fpr, tpr});
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    result.auc = auc;
    return result;
}

struct MetricsReport {
    ConfusionMatrix cm;
    Rates rates;
    double auc = 0.0;
    std::vector<RocPoint> roc_points;
};

inline MetricsReport evaluate_scores(const std::vector<double>& scores,
                                     const std::vector<Label>& labels, double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw BadThreshold("evaluate_scores: threshold must be in [0,1]");
    std::vector<Label> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        preds[i] = scores[i] >= threshold ? Label::animal : Label::empty;

    MetricsReport report;
    report.cm = confusion(preds, labels);
    report.rates = rates(report.cm);
    const RocResult roc = roc_auc(scores, labels);
    report.auc = roc.auc;
    report.roc_points = roc.points;
    return report;
}

// ----------------------------------------------------------------------------
// diff_metrics - absolute differences between per-class means of whole-image
// reconstruction metrics; the equalization-benefit comparison.
// ----------------------------------------------------------------------------

struct ReconStats {
    std::vector<double> mse, mae, ssim; // one entry per image
};

struct DiffMetrics {
    double diff_mse = 0.0;
    double diff_mae = 0.0;
    double diff_ssim = 0.0;
};

inline DiffMetrics diff_metrics(const ReconStats& animal, const ReconStats& empty) {
    if (animal.mse.empty() || empty.mse.empty())
        throw EmptyClass("diff_metrics: both classes need samples");
    auto mean = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / double(v.size());
    };
    DiffMetrics d;
    d.diff_mse = std::fabs(mean(animal.mse) - mean(empty.mse));
    d.diff_mae = std::fabs(mean(animal.mae) - mean(empty.mae));
    d.diff_ssim = std::fabs(mean(animal.ssim) - mean(empty.ssim));
    return d;
}

inline void save_roc_csv(const std::vector<RocPoint>& points, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write roc csv: " + path);
    out << "fpr,tpr\n";
    out.precision(12);
    for (const auto& p : points) out << p.fpr << ',' << p.tpr << '\n';
    if (!out) throw IoError("roc csv write failed: " + path);
}

} // namespace pardinus
