#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "opad/metrics.hpp"
#include "opad/types.hpp"

namespace opad {

// Per-action annotation times in whole seconds.
struct CostModel {
    int draw_box = 15;
    int verify_box = 5;
    int mark_span = 4;
    int verify_span = 2;

    void validate() const {
        if (draw_box <= 0 || verify_box <= 0 || mark_span <= 0 || verify_span <= 0)
            throw ConfigError("cost model: all action times must be positive");
    }

    long long draw(TaskKind task) const {
        return task == TaskKind::Detection ? draw_box : mark_span;
    }
    long long verify(TaskKind task) const {
        return task == TaskKind::Detection ? verify_box : verify_span;
    }
};

struct CostLedger {
    struct Entry {
        int cycle = 0;
        int sample_id = 0;
        std::string action;  // "draw" or "verify"
        long long seconds = 0;
    };

    std::vector<Entry> entries;
    long long total_seconds = 0;

    void add(int cycle, int sample_id, std::string action, long long seconds) {
        if (seconds < 0) throw IntegrityError("ledger: negative seconds");
        if (seconds == 0) return;
        entries.push_back({cycle, sample_id, std::move(action), seconds});
        total_seconds += seconds;
    }

    void write_csv(std::ostream& out) const {
        out << "cycle,sample_id,action,seconds\n";
        for (const Entry& e : entries)
            out << e.cycle << ',' << e.sample_id << ',' << e.action << ',' << e.seconds
                << '\n';
    }

    void write_csv(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + path);
        write_csv(out);
    }
};

// What the weak-labelling pass did to one sample.
struct FeedbackOutcome {
    int sample_id = 0;
    std::vector<Prediction> verified_correct;  // kept, snapped to GT geometry
    std::vector<Prediction> rejected;          // shown but wrong
    std::vector<EntityAnnotation> added_strong;
    std::vector<EntityAnnotation> corrected;   // full post-correction label set
    std::vector<EntityAnnotation> gt;          // reference for batch metrics
    double metric_before = 0.0;
    double metric_after = 0.0;
};

struct StrongAnnotation {
    std::vector<EntityAnnotation> annotations;
    long long cost_seconds = 0;
};

// The annotator draws every ground-truth entity from scratch.
inline StrongAnnotation annotate_strong(const Sample& sample, TaskKind task,
                                        const CostModel& costs,
                                        AnnotationState current = AnnotationState::Unlabelled) {
    if (current != AnnotationState::Unlabelled)
        throw IntegrityError("annotate_strong: sample already labelled");
    StrongAnnotation out;
    out.annotations = sample.entities;
    for (auto& a : out.annotations) a.kind = LabelKind::Strong;
    out.cost_seconds = static_cast<long long>(out.annotations.size()) * costs.draw(task);
    return out;
}

struct WeakAnnotation {
    std::vector<EntityAnnotation> annotations;
    FeedbackOutcome outcome;
    long long cost_seconds = 0;
};

namespace detail {

// Per-sample metric used for the before/after bookkeeping: AP for boxes,
// micro F1 for spans.
inline double single_sample_metric(const std::vector<Prediction>& preds,
                                   const std::vector<EntityAnnotation>& gt, TaskKind task,
                                   int n_classes, double iou_threshold) {
    const std::vector<std::vector<Prediction>> p{preds};
    const std::vector<std::vector<EntityAnnotation>> g{gt};
    return task == TaskKind::Detection
               ? average_precision(p, g, n_classes, iou_threshold).value
               : entity_f_score(p, g, n_classes).value;
}

}  // namespace detail

// One-hot prediction standing in for a confirmed annotation (used to measure
// the post-correction metric instead of asserting it is 1).
inline Prediction annotation_as_prediction(const EntityAnnotation& a, int n_classes) {
    Vec scores(static_cast<std::size_t>(n_classes) + 1, 0.0);
    scores[static_cast<std::size_t>(a.class_id)] = 1.0;
    return make_prediction(a.class_id, a.geometry, std::move(scores));
}

// The annotator is shown Θ's confident predictions, verifies each against the
// ground truth (IoU ≥ threshold AND class match for boxes; exact span + class
// for sequences), and draws any entity Θ missed. Labels for verified entities
// use the ground-truth geometry (the annotator confirms the real extent), so
// the resulting label set equals the ground truth exactly.
inline WeakAnnotation annotate_weak(const Sample& sample,
                                    const std::vector<Prediction>& theta_predictions,
                                    TaskKind task, int n_classes, const CostModel& costs,
                                    double confidence_threshold = 0.5,
                                    double iou_threshold = 0.5,
                                    AnnotationState current = AnnotationState::Unlabelled) {
    if (current != AnnotationState::Unlabelled)
        throw IntegrityError("annotate_weak: sample already labelled");

    WeakAnnotation out;
    out.outcome.sample_id = sample.id;
    out.outcome.gt = sample.entities;

    std::vector<Prediction> shown;
    for (const Prediction& p : theta_predictions)
        if (p.confidence >= confidence_threshold) shown.push_back(p);
    std::stable_sort(shown.begin(), shown.end(),
                     [](const Prediction& a, const Prediction& b) {
                         return a.confidence > b.confidence;
                     });

    std::vector<int> matched_by(sample.entities.size(), -1);
    for (const Prediction& p : shown) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < sample.entities.size(); ++g) {
            const EntityAnnotation& gt = sample.entities[g];
            if (matched_by[g] >= 0 || gt.class_id != p.class_id) continue;
            if (task == TaskKind::Detection) {
                const double v =
                    iou(std::get<Box>(p.geometry), std::get<Box>(gt.geometry));
                if (v >= iou_threshold && v > best_iou) {
                    best_iou = v;
                    best = static_cast<int>(g);
                }
            } else if (std::get<Span>(gt.geometry) == std::get<Span>(p.geometry)) {
                best = static_cast<int>(g);
                break;
            }
        }
        if (best >= 0) {
            matched_by[static_cast<std::size_t>(best)] = 1;
            out.outcome.verified_correct.push_back(p);
        } else {
            out.outcome.rejected.push_back(p);
        }
    }

    // label list parallels the GT entity list, kinds telling how each arrived
    for (std::size_t g = 0; g < sample.entities.size(); ++g) {
        EntityAnnotation a = sample.entities[g];
        a.kind = matched_by[g] >= 0 ? LabelKind::WeakVerified : LabelKind::Strong;
        if (matched_by[g] < 0) out.outcome.added_strong.push_back(a);
        out.annotations.push_back(a);
    }
    out.outcome.corrected = out.annotations;

    out.cost_seconds = static_cast<long long>(shown.size()) * costs.verify(task) +
                       static_cast<long long>(out.outcome.added_strong.size()) *
                           costs.draw(task);

    out.outcome.metric_before = detail::single_sample_metric(shown, sample.entities, task,
                                                             n_classes, iou_threshold);
    std::vector<Prediction> corrected_preds;
    corrected_preds.reserve(out.annotations.size());
    for (const auto& a : out.annotations)
        corrected_preds.push_back(annotation_as_prediction(a, n_classes));
    out.outcome.metric_after = detail::single_sample_metric(
        corrected_preds, sample.entities, task, n_classes, iou_threshold);
    return out;
}

}  // namespace opad
