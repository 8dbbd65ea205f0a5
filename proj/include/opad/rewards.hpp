#pragma once

#include <cmath>
#include <vector>

#include "opad/annotator.hpp"
#include "opad/metrics.hpp"

namespace opad {

struct RewardConfig {
    bool use_class_entropy = false;
    double lambda_cls = 0.0;
    bool use_feedback = false;
    double lambda_fb = 0.0;
    MetricKind metric_kind = MetricKind::AP;

    void validate(TaskKind task) const {
        if (lambda_cls < 0.0 || lambda_fb < 0.0)
            throw ConfigError("reward lambdas must be >= 0");
        if (!use_class_entropy && lambda_cls != 0.0)
            throw ConfigError("lambda_cls set but class-entropy reward disabled");
        if (!use_feedback && lambda_fb != 0.0)
            throw ConfigError("lambda_fb set but feedback reward disabled");
        if (use_feedback && task != TaskKind::Detection)
            throw ConfigError("feedback reward is only defined for detection tasks");
    }
};

// Component values are the raw measurements; total applies the λ weights.
struct RewardBreakdown {
    double vanilla = 0.0;
    double cls_entropy = 0.0;
    double feedback = 0.0;
    double total = 0.0;
};

inline double vanilla_reward(double metric_t, double metric_prev) {
    return metric_t - metric_prev;
}

// Natural-log Shannon entropy of a probability vector (0·ln 0 = 0).
inline double shannon_entropy(const Vec& p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

// Entropy of the empirical class distribution over the ground-truth entity
// labels of the newly acquired batch.
inline double class_entropy_reward(
    const std::vector<const std::vector<EntityAnnotation>*>& batch_labels, int n_classes) {
    std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
    double total = 0.0;
    for (const auto* labels : batch_labels)
        for (const EntityAnnotation& a : *labels) {
            counts[static_cast<std::size_t>(a.class_id)] += 1.0;
            total += 1.0;
        }
    if (total == 0.0) return 0.0;
    for (double& c : counts) c /= total;
    return shannon_entropy(counts);
}

// Batch-level metric gain from the annotator's corrections: metric of the
// corrected label set minus metric of the shown predictions, both against
// ground truth over the acquired samples. Detection only.
inline double feedback_reward(const std::vector<FeedbackOutcome>& outcomes, int n_classes,
                              double iou_threshold = 0.5) {
    std::vector<std::vector<Prediction>> before, after;
    std::vector<std::vector<EntityAnnotation>> gt;
    before.reserve(outcomes.size());
    after.reserve(outcomes.size());
    gt.reserve(outcomes.size());
    for (const FeedbackOutcome& o : outcomes) {
        std::vector<Prediction> shown = o.verified_correct;
        shown.insert(shown.end(), o.rejected.begin(), o.rejected.end());
        before.push_back(std::move(shown));
        std::vector<Prediction> corrected;
        corrected.reserve(o.corrected.size());
        for (const auto& a : o.corrected)
            corrected.push_back(annotation_as_prediction(a, n_classes));
        after.push_back(std::move(corrected));
        gt.push_back(o.gt);
    }
    const double ap_before = average_precision(before, gt, n_classes, iou_threshold).value;
    const double ap_after = average_precision(after, gt, n_classes, iou_threshold).value;
    return ap_after - ap_before;
}

inline RewardBreakdown combine(const RewardConfig& config, double vanilla,
                               double cls_entropy, double feedback) {
    RewardBreakdown b;
    b.vanilla = vanilla;
    b.cls_entropy = cls_entropy;
    b.feedback = feedback;
    b.total = vanilla + config.lambda_cls * cls_entropy + config.lambda_fb * feedback;
    return b;
}

}  // namespace opad
