#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "opad/types.hpp"

namespace opad {

enum class MetricKind { AP = 0, Fscore = 1 };

struct MetricReport {
    double value = 0.0;
    MetricKind kind = MetricKind::AP;
    Vec per_class;               // one slot per class; 0 when not counted
    std::vector<int> counted;    // class ids included in the aggregate
    // pooled match counts (Fscore aggregation input)
    long long tp = 0, fp = 0, fn = 0;
};

namespace detail {

// Index of a prediction pooled across samples, with the deterministic
// tie-break order: confidence desc, then sample index, then geometry.
struct PredRef {
    int sample = 0;
    int index = 0;  // position within its sample's prediction list
    double confidence = 0.0;
    const Prediction* pred = nullptr;
};

inline bool pred_order(const PredRef& a, const PredRef& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.sample != b.sample) return a.sample < b.sample;
    if (a.pred->geometry != b.pred->geometry)
        return geometry_less(a.pred->geometry, b.pred->geometry);
    return a.index < b.index;
}

// All-point interpolated AP from the ranked TP/FP flags of one class.
inline double ap_from_flags(const std::vector<char>& is_tp, int n_gt) {
    if (n_gt <= 0) return 0.0;
    const int n = static_cast<int>(is_tp.size());
    std::vector<double> precision(static_cast<std::size_t>(n));
    int tp = 0;
    for (int i = 0; i < n; ++i) {
        if (is_tp[static_cast<std::size_t>(i)]) ++tp;
        precision[static_cast<std::size_t>(i)] =
            static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    double pmax_sum = 0.0, pmax = 0.0;
    for (int i = n - 1; i >= 0; --i) {
        pmax = std::max(pmax, precision[static_cast<std::size_t>(i)]);
        if (is_tp[static_cast<std::size_t>(i)]) pmax_sum += pmax;
    }
    return pmax_sum / static_cast<double>(n_gt);
}

}  // namespace detail

// Macro AP over classes with at least one ground-truth instance. Per class,
// predictions are ranked by confidence (deterministic tie-break) and greedily
// matched to the unmatched same-sample GT box of highest IoU ≥ threshold
// (ties: lowest GT index).
inline MetricReport average_precision(
    const std::vector<std::vector<Prediction>>& predictions_by_sample,
    const std::vector<std::vector<EntityAnnotation>>& gt_by_sample, int n_classes,
    double iou_threshold = 0.5) {
    if (predictions_by_sample.size() != gt_by_sample.size())
        throw IntegrityError("average_precision: sample count mismatch");

    MetricReport report;
    report.kind = MetricKind::AP;
    report.per_class.assign(static_cast<std::size_t>(n_classes), 0.0);

    const int n_samples = static_cast<int>(gt_by_sample.size());
    for (int c = 0; c < n_classes; ++c) {
        int n_gt = 0;
        for (const auto& gts : gt_by_sample)
            for (const auto& g : gts)
                if (g.class_id == c) ++n_gt;
        if (n_gt == 0) continue;
        report.counted.push_back(c);

        std::vector<detail::PredRef> ranked;
        for (int s = 0; s < n_samples; ++s) {
            const auto& preds = predictions_by_sample[static_cast<std::size_t>(s)];
            for (int i = 0; i < static_cast<int>(preds.size()); ++i) {
                const Prediction& p = preds[static_cast<std::size_t>(i)];
                if (p.class_id != c) continue;
                ranked.push_back({s, i, p.confidence, &p});
            }
        }
        std::sort(ranked.begin(), ranked.end(), detail::pred_order);

        std::vector<std::vector<char>> matched(static_cast<std::size_t>(n_samples));
        for (int s = 0; s < n_samples; ++s)
            matched[static_cast<std::size_t>(s)]
                .assign(gt_by_sample[static_cast<std::size_t>(s)].size(), 0);

        std::vector<char> is_tp;
        is_tp.reserve(ranked.size());
        for (const auto& ref : ranked) {
            if (!std::holds_alternative<Box>(ref.pred->geometry))
                throw IntegrityError("average_precision expects box geometry");
            const Box& pb = std::get<Box>(ref.pred->geometry);
            const auto& gts = gt_by_sample[static_cast<std::size_t>(ref.sample)];
            int best = -1;
            double best_iou = 0.0;
            for (int g = 0; g < static_cast<int>(gts.size()); ++g) {
                const auto& gt = gts[static_cast<std::size_t>(g)];
                if (gt.class_id != c) continue;
                if (matched[static_cast<std::size_t>(ref.sample)][static_cast<std::size_t>(g)])
                    continue;
                if (!std::holds_alternative<Box>(gt.geometry))
                    throw IntegrityError("average_precision expects box geometry");
                const double v = iou(pb, std::get<Box>(gt.geometry));
                if (v >= iou_threshold && v > best_iou) {
                    best_iou = v;
                    best = g;
                }
            }
            if (best >= 0) {
                matched[static_cast<std::size_t>(ref.sample)][static_cast<std::size_t>(best)] = 1;
                is_tp.push_back(1);
            } else {
                is_tp.push_back(0);
            }
        }
        report.per_class[static_cast<std::size_t>(c)] = detail::ap_from_flags(is_tp, n_gt);
    }

    if (!report.counted.empty()) {
        double total = 0.0;
        for (int c : report.counted) total += report.per_class[static_cast<std::size_t>(c)];
        report.value = total / static_cast<double>(report.counted.size());
    }
    return report;
}

// Micro F1 over exact (span, class) matches pooled across samples. Precision
// is defined as 0 when there are no predictions, recall as 0 when there is no
// ground truth, and F1 as 0 when both are 0.
inline MetricReport entity_f_score(
    const std::vector<std::vector<Prediction>>& predictions_by_sample,
    const std::vector<std::vector<EntityAnnotation>>& gt_by_sample, int n_classes) {
    if (predictions_by_sample.size() != gt_by_sample.size())
        throw IntegrityError("entity_f_score: sample count mismatch");

    MetricReport report;
    report.kind = MetricKind::Fscore;
    report.per_class.assign(static_cast<std::size_t>(std::max(n_classes, 0)), 0.0);
    std::vector<long long> ctp(static_cast<std::size_t>(std::max(n_classes, 0)), 0);
    std::vector<long long> cfp(ctp.size(), 0), cfn(ctp.size(), 0);

    for (std::size_t s = 0; s < gt_by_sample.size(); ++s) {
        const auto& gts = gt_by_sample[s];
        std::vector<char> used(gts.size(), 0);
        for (const Prediction& p : predictions_by_sample[s]) {
            if (!std::holds_alternative<Span>(p.geometry))
                throw IntegrityError("entity_f_score expects span geometry");
            const Span& ps = std::get<Span>(p.geometry);
            bool hit = false;
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (used[g] || gts[g].class_id != p.class_id) continue;
                if (!std::holds_alternative<Span>(gts[g].geometry))
                    throw IntegrityError("entity_f_score expects span geometry");
                if (std::get<Span>(gts[g].geometry) == ps) {
                    used[g] = 1;
                    hit = true;
                    break;
                }
            }
            if (hit) {
                ++report.tp;
                if (p.class_id < n_classes) ++ctp[static_cast<std::size_t>(p.class_id)];
            } else {
                ++report.fp;
                if (p.class_id < n_classes) ++cfp[static_cast<std::size_t>(p.class_id)];
            }
        }
        for (std::size_t g = 0; g < gts.size(); ++g)
            if (!used[g]) {
                ++report.fn;
                if (gts[g].class_id < n_classes) ++cfn[static_cast<std::size_t>(gts[g].class_id)];
            }
    }

    auto f1 = [](long long tp, long long fp, long long fn) {
        const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    };
    report.value = f1(report.tp, report.fp, report.fn);
    for (int c = 0; c < n_classes; ++c) {
        const std::size_t k = static_cast<std::size_t>(c);
        if (ctp[k] + cfn[k] > 0) report.counted.push_back(c);
        report.per_class[k] = f1(ctp[k], cfp[k], cfn[k]);
    }
    return report;
}

}  // namespace opad
