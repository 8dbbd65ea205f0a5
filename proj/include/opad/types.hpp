#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "opad/common.hpp"
#include "opad/geometry.hpp"

namespace opad {

enum class LabelKind : std::uint32_t { Strong = 0, WeakVerified = 1 };

enum class AnnotationState : std::uint32_t {
    Unlabelled = 0,
    StrongLabelled = 1,
    WeakLabelled = 2,
};

// One annotated entity: a class plus a box or token span.
struct EntityAnnotation {
    int class_id = 0;
    Geometry geometry;
    LabelKind kind = LabelKind::Strong;

    void validate(int n_classes) const {
        if (class_id < 0 || class_id >= n_classes)
            throw IntegrityError("EntityAnnotation: class_id out of range");
        if (std::holds_alternative<Box>(geometry)) {
            if (!std::get<Box>(geometry).valid())
                throw IntegrityError("EntityAnnotation: degenerate box");
        } else if (!std::get<Span>(geometry).valid()) {
            throw IntegrityError("EntityAnnotation: degenerate span");
        }
    }

    friend bool operator==(const EntityAnnotation& a, const EntityAnnotation& b) {
        return a.class_id == b.class_id && a.geometry == b.geometry;
    }
};

// One model output. class_scores is a probability vector over the entity
// classes plus a trailing "none" slot (background for detection, O for
// sequence spans); confidence is its maximum.
struct Prediction {
    int class_id = 0;
    Geometry geometry;
    Vec class_scores;
    double confidence = 0.0;

    void validate() const {
        double sum = 0.0, mx = 0.0;
        for (double p : class_scores) {
            sum += p;
            mx = std::max(mx, p);
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw IntegrityError("Prediction: class_scores must sum to 1");
        if (confidence != mx)
            throw IntegrityError("Prediction: confidence must equal max class score");
    }
};

inline Prediction make_prediction(int class_id, Geometry geometry, Vec scores) {
    Prediction p;
    p.class_id = class_id;
    p.geometry = std::move(geometry);
    p.class_scores = std::move(scores);
    p.confidence = 0.0;
    for (double s : p.class_scores) p.confidence = std::max(p.confidence, s);
    return p;
}

struct Proposal {
    Box box;
    Vec features;
};

// One document-like unit. Ground-truth entities are carried in memory but are
// only consulted through the simulated annotator or the metric evaluators.
struct Sample {
    int id = 0;
    std::vector<EntityAnnotation> entities;
    std::vector<Proposal> proposals;     // detection task
    std::vector<Vec> token_features;     // sequence task
};

struct Dataset {
    TaskKind task = TaskKind::Detection;
    int n_classes = 0;    // entity classes, excluding the background/O slot
    int feature_dim = 0;
    int max_len = 0;      // sequence only
    std::uint64_t seed = 0;
    std::vector<Sample> samples;  // samples[i].id == i
    std::vector<int> train_ids, val_ids, test_ids;

    // length of per-unit score vectors produced by the prediction model
    int score_dim() const {
        return task == TaskKind::Detection ? n_classes + 1 : n_tags();
    }
    // IOBES tag count; tag 0 is O, class c owns tags 4c+1..4c+4 (B,I,E,S)
    int n_tags() const { return 4 * n_classes + 1; }

    const Sample& sample(int id) const {
        if (id < 0 || id >= static_cast<int>(samples.size()))
            throw IntegrityError("Dataset: unknown sample id " + std::to_string(id));
        return samples[static_cast<std::size_t>(id)];
    }
};

// IOBES tag helpers
inline int tag_o() { return 0; }
inline int tag_b(int c) { return 4 * c + 1; }
inline int tag_i(int c) { return 4 * c + 2; }
inline int tag_e(int c) { return 4 * c + 3; }
inline int tag_s(int c) { return 4 * c + 4; }

}  // namespace opad
