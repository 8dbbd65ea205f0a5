#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "opad/rng.hpp"
#include "opad/types.hpp"

namespace opad {

// Geometrically decaying class prior p_k ∝ decay^k. With the default
// decay=0.8 and 13 classes the most/least frequent ratio is 1/0.8^12 ≈ 14.6.
inline Vec skewed_class_prior(int n_classes, double decay = 0.8) {
    if (n_classes <= 0) return {};
    Vec p(static_cast<std::size_t>(n_classes));
    double w = 1.0, total = 0.0;
    for (int k = 0; k < n_classes; ++k, w *= decay) {
        p[static_cast<std::size_t>(k)] = w;
        total += w;
    }
    for (double& x : p) x /= total;
    return p;
}

// Random directions on the unit sphere, scaled. Used as class/tag feature
// centers; with unit scale the pairwise separation is ~sqrt(2)·scale, so the
// difficulty knob is scale/noise_sigma rather than the feature dimension.
inline std::vector<Vec> make_feature_centers(int n_centers, int dim, double scale,
                                             Rng& rng) {
    std::vector<Vec> centers;
    centers.reserve(static_cast<std::size_t>(n_centers));
    for (int c = 0; c < n_centers; ++c) {
        Vec v(static_cast<std::size_t>(dim));
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& x : v) {
                x = rng.normal();
                norm += x * x;
            }
            norm = std::sqrt(norm);
        } while (norm < 1e-12);
        for (double& x : v) x *= scale / norm;
        centers.push_back(std::move(v));
    }
    return centers;
}

struct DetectionTaskSpec {
    int n_classes = 13;
    Vec class_prior;          // empty → skewed_class_prior(n_classes)
    int min_entities = 3;
    int max_entities = 8;
    int feature_dim = 16;
    double center_scale = 1.0;
    double feature_noise_sigma = 0.5;
    double distractor_rate = 0.25;  // fraction of proposals that are background
    // Proposal boxes are GT boxes with N(0, box_jitter_sigma) on every
    // coordinate, redrawn until IoU > 0.5. Keep sigma ≤ ~0.1·min_box_side so
    // the first draw usually passes; the retry loop guarantees the invariant
    // either way.
    double box_jitter_sigma = 0.01;
    double min_box_side = 0.08;
    double max_box_side = 0.20;

    Vec prior() const {
        return class_prior.empty() ? skewed_class_prior(n_classes) : class_prior;
    }

    void validate() const {
        if (n_classes < 2) throw ConfigError("detection spec: n_classes must be >= 2");
        if (!class_prior.empty()) {
            if (static_cast<int>(class_prior.size()) != n_classes)
                throw ConfigError("detection spec: class_prior length != n_classes");
            double s = 0.0;
            for (double p : class_prior) s += p;
            if (std::fabs(s - 1.0) > 1e-9)
                throw ConfigError("detection spec: class_prior must sum to 1");
        }
        if (min_entities < 0 || max_entities < min_entities)
            throw ConfigError("detection spec: bad entities_per_sample range");
        if (feature_dim < 1) throw ConfigError("detection spec: feature_dim must be >= 1");
        if (feature_noise_sigma < 0.0)
            throw ConfigError("detection spec: feature_noise_sigma must be >= 0");
        if (distractor_rate < 0.0 || distractor_rate >= 1.0)
            throw ConfigError("detection spec: distractor_rate must be in [0,1)");
        if (box_jitter_sigma < 0.0)
            throw ConfigError("detection spec: box_jitter_sigma must be >= 0");
        if (min_box_side <= 0.0 || max_box_side < min_box_side || max_box_side > 1.0)
            throw ConfigError("detection spec: bad box side range");
    }
};

struct SequenceTaskSpec {
    int n_entity_classes = 4;
    Vec class_prior;          // empty → skewed_class_prior(n_entity_classes)
    int max_len = 150;
    int min_len = 20;
    int feature_dim = 16;
    double center_scale = 1.0;
    double feature_noise_sigma = 0.5;
    double entity_start_prob = 0.12;  // chance a fresh token opens an entity span
    int min_span_len = 1;
    int max_span_len = 4;

    Vec prior() const {
        return class_prior.empty() ? skewed_class_prior(n_entity_classes) : class_prior;
    }

    void validate() const {
        if (n_entity_classes < 0)
            throw ConfigError("sequence spec: n_entity_classes must be >= 0");
        if (!class_prior.empty()) {
            if (static_cast<int>(class_prior.size()) != n_entity_classes)
                throw ConfigError("sequence spec: class_prior length != n_entity_classes");
        }
        if (max_len < 1) throw ConfigError("sequence spec: max_len must be >= 1");
        if (min_len < 1 || min_len > max_len)
            throw ConfigError("sequence spec: bad sentence length range");
        if (feature_dim < 1) throw ConfigError("sequence spec: feature_dim must be >= 1");
        if (feature_noise_sigma < 0.0)
            throw ConfigError("sequence spec: feature_noise_sigma must be >= 0");
        if (entity_start_prob < 0.0 || entity_start_prob > 1.0)
            throw ConfigError("sequence spec: entity_start_prob must be in [0,1]");
        if (min_span_len < 1 || max_span_len < min_span_len)
            throw ConfigError("sequence spec: bad span length range");
    }
};

namespace detail {

inline Vec noisy_point(const Vec& center, double sigma, Rng& rng) {
    Vec v = center;
    if (sigma > 0.0)
        for (double& x : v) x += sigma * rng.normal();
    return v;
}

inline Box random_box(double min_side, double max_side, Rng& rng) {
    Box b;
    const double w = rng.uniform_real(min_side, max_side);
    const double h = rng.uniform_real(min_side, max_side);
    b.x0 = rng.uniform_real(0.0, 1.0 - w);
    b.y0 = rng.uniform_real(0.0, 1.0 - h);
    b.x1 = b.x0 + w;
    b.y1 = b.y0 + h;
    return b;
}

// Random box mostly clear of the given boxes (rejection, capped).
inline Box clear_box(const std::vector<Box>& avoid, double min_side, double max_side,
                     Rng& rng) {
    for (int attempt = 0; attempt < 40; ++attempt) {
        Box b = random_box(min_side, max_side, rng);
        bool ok = true;
        for (const Box& a : avoid)
            if (iou(a, b) >= 0.3) {
                ok = false;
                break;
            }
        if (ok) return b;
    }
    return random_box(min_side, max_side, rng);
}

inline Box jittered_box(const Box& gt, double sigma, Rng& rng) {
    for (int attempt = 0; attempt < 50; ++attempt) {
        Box b{gt.x0 + sigma * rng.normal(), gt.y0 + sigma * rng.normal(),
              gt.x1 + sigma * rng.normal(), gt.y1 + sigma * rng.normal()};
        b.x0 = std::clamp(b.x0, 0.0, 1.0);
        b.y0 = std::clamp(b.y0, 0.0, 1.0);
        b.x1 = std::clamp(b.x1, 0.0, 1.0);
        b.y1 = std::clamp(b.y1, 0.0, 1.0);
        if (b.valid() && iou(b, gt) > 0.5) return b;
    }
    return gt;  // jitter too wild for this box; fall back to the exact box
}

inline void default_splits(Dataset& d, Rng& rng) {
    std::vector<int> order(d.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    const int n = static_cast<int>(order.size());
    const int n_train = (n * 60) / 100;
    const int n_val = (n * 25) / 100;
    d.train_ids.assign(order.begin(), order.begin() + n_train);
    d.val_ids.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    d.test_ids.assign(order.begin() + n_train + n_val, order.end());
}

}  // namespace detail

inline Dataset generate_detection_dataset(const DetectionTaskSpec& spec, int n_samples,
                                          std::uint64_t seed) {
    spec.validate();
    if (n_samples < 1) throw ConfigError("n_samples must be >= 1");

    Rng rng(seed);
    Rng center_rng = rng.child("centers");
    // one center per entity class plus a trailing background center
    const auto centers = make_feature_centers(spec.n_classes + 1, spec.feature_dim,
                                              spec.center_scale, center_rng);
    const Vec prior = spec.prior();

    Dataset d;
    d.task = TaskKind::Detection;
    d.n_classes = spec.n_classes;
    d.feature_dim = spec.feature_dim;
    d.max_len = 0;
    d.seed = seed;
    d.samples.resize(static_cast<std::size_t>(n_samples));

    for (int i = 0; i < n_samples; ++i) {
        Rng srng = rng.child("sample", static_cast<std::uint64_t>(i));
        Sample& s = d.samples[static_cast<std::size_t>(i)];
        s.id = i;

        const int n_ent =
            spec.min_entities +
            static_cast<int>(srng.uniform_int(
                static_cast<std::uint64_t>(spec.max_entities - spec.min_entities + 1)));

        std::vector<Box> gt_boxes;
        for (int e = 0; e < n_ent; ++e) {
            EntityAnnotation ent;
            ent.class_id = static_cast<int>(srng.categorical(prior));
            Box b = detail::clear_box(gt_boxes, spec.min_box_side, spec.max_box_side, srng);
            gt_boxes.push_back(b);
            ent.geometry = b;
            ent.kind = LabelKind::Strong;
            s.entities.push_back(std::move(ent));
        }

        for (int e = 0; e < n_ent; ++e) {
            Proposal p;
            p.box = detail::jittered_box(gt_boxes[static_cast<std::size_t>(e)],
                                         spec.box_jitter_sigma, srng);
            p.features = detail::noisy_point(
                centers[static_cast<std::size_t>(s.entities[static_cast<std::size_t>(e)]
                                                     .class_id)],
                spec.feature_noise_sigma, srng);
            s.proposals.push_back(std::move(p));
        }

        const int n_distract = static_cast<int>(std::lround(
            spec.distractor_rate * static_cast<double>(n_ent) / (1.0 - spec.distractor_rate)));
        for (int k = 0; k < n_distract; ++k) {
            Proposal p;
            p.box = detail::clear_box(gt_boxes, spec.min_box_side, spec.max_box_side, srng);
            p.features = detail::noisy_point(centers[static_cast<std::size_t>(spec.n_classes)],
                                             spec.feature_noise_sigma, srng);
            s.proposals.push_back(std::move(p));
        }
        srng.shuffle(s.proposals);
    }

    Rng split_rng = rng.child("splits");
    detail::default_splits(d, split_rng);
    return d;
}

inline Dataset generate_sequence_dataset(const SequenceTaskSpec& spec, int n_samples,
                                         std::uint64_t seed) {
    spec.validate();
    if (n_samples < 1) throw ConfigError("n_samples must be >= 1");

    Rng rng(seed);
    Rng center_rng = rng.child("centers");
    const int n_tags = 4 * spec.n_entity_classes + 1;
    const auto centers =
        make_feature_centers(n_tags, spec.feature_dim, spec.center_scale, center_rng);
    const Vec prior = spec.prior();

    Dataset d;
    d.task = TaskKind::Sequence;
    d.n_classes = spec.n_entity_classes;
    d.feature_dim = spec.feature_dim;
    d.max_len = spec.max_len;
    d.seed = seed;
    d.samples.resize(static_cast<std::size_t>(n_samples));

    for (int i = 0; i < n_samples; ++i) {
        Rng srng = rng.child("sample", static_cast<std::uint64_t>(i));
        Sample& s = d.samples[static_cast<std::size_t>(i)];
        s.id = i;

        const int len =
            spec.min_len + static_cast<int>(srng.uniform_int(
                               static_cast<std::uint64_t>(spec.max_len - spec.min_len + 1)));
        std::vector<int> tags(static_cast<std::size_t>(len), tag_o());

        int cur = 0;
        while (cur < len) {
            const bool open_entity = spec.n_entity_classes > 0 &&
                                     srng.uniform_real() < spec.entity_start_prob;
            if (!open_entity) {
                ++cur;
                continue;
            }
            const int cap = std::min(spec.max_span_len, len - cur);
            const int lo = std::min(spec.min_span_len, cap);
            const int span_len =
                lo + static_cast<int>(srng.uniform_int(static_cast<std::uint64_t>(cap - lo + 1)));
            const int cls = static_cast<int>(srng.categorical(prior));

            EntityAnnotation ent;
            ent.class_id = cls;
            ent.geometry = Span{cur, cur + span_len};
            ent.kind = LabelKind::Strong;
            s.entities.push_back(std::move(ent));

            if (span_len == 1) {
                tags[static_cast<std::size_t>(cur)] = tag_s(cls);
            } else {
                tags[static_cast<std::size_t>(cur)] = tag_b(cls);
                for (int t = cur + 1; t < cur + span_len - 1; ++t)
                    tags[static_cast<std::size_t>(t)] = tag_i(cls);
                tags[static_cast<std::size_t>(cur + span_len - 1)] = tag_e(cls);
            }
            cur += span_len;
        }

        s.token_features.reserve(static_cast<std::size_t>(len));
        for (int t = 0; t < len; ++t)
            s.token_features.push_back(detail::noisy_point(
                centers[static_cast<std::size_t>(tags[static_cast<std::size_t>(t)])],
                spec.feature_noise_sigma, srng));
    }

    Rng split_rng = rng.child("splits");
    detail::default_splits(d, split_rng);
    return d;
}

// Overrides the generator's default split with explicit sizes (shuffled by the
// dataset's own seed, so the result is a pure function of the dataset).
inline void assign_splits(Dataset& d, int n_train, int n_val, int n_test) {
    const int n = static_cast<int>(d.samples.size());
    if (n_train < 0 || n_val < 0 || n_test < 0 || n_train + n_val + n_test > n)
        throw ConfigError("split sizes exceed dataset size");
    Rng rng = Rng(d.seed).child("splits");
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    d.train_ids.assign(order.begin(), order.begin() + n_train);
    d.val_ids.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    d.test_ids.assign(order.begin() + n_train + n_val,
                      order.begin() + n_train + n_val + n_test);
}

}  // namespace opad
