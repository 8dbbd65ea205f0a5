#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "opad/metrics.hpp"
#include "opad/rng.hpp"

using namespace opad;

// ---------------------------------------------------------------------------
// Oracle: exhaustive-assignment AP, written independently of the library.
// Predictions are ranked by the documented tie-break (confidence descending,
// then sample, then geometry, then in-sample index); every legal
// prediction-to-GT assignment is enumerated and the best AP kept.
// ---------------------------------------------------------------------------
namespace oracle {

struct RankedPred {
    int sample = 0;
    int index = 0;
    const Prediction* pred = nullptr;
};

inline bool ranked_before(const RankedPred& a, const RankedPred& b) {
    if (a.pred->confidence != b.pred->confidence)
        return a.pred->confidence > b.pred->confidence;
    if (a.sample != b.sample) return a.sample < b.sample;
    if (a.pred->geometry != b.pred->geometry)
        return geometry_less(a.pred->geometry, b.pred->geometry);
    return a.index < b.index;
}

// All-point interpolated AP straight from the definition: each true positive
// contributes the maximum precision at or after its rank, divided by n_gt.
// Quadratic on purpose — a different formulation than the implementation.
inline double slow_ap(const std::vector<char>& is_tp, int n_gt) {
    if (n_gt <= 0) return 0.0;
    const int n = static_cast<int>(is_tp.size());
    double ap = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!is_tp[i]) continue;
        double best = 0.0;
        int cum = 0;
        for (int j = 0; j < n; ++j) {
            if (is_tp[j]) ++cum;
            if (j >= i) best = std::max(best, cum / static_cast<double>(j + 1));
        }
        ap += best / n_gt;
    }
    return ap;
}

struct GtRef {
    int sample = 0;
    Box box;
};

inline double enumerate(const std::vector<std::vector<int>>& eligible, size_t k,
                        std::vector<char>& used, std::vector<char>& flags, int n_gt) {
    if (k == eligible.size()) return slow_ap(flags, n_gt);
    double best;
    flags[k] = 0;  // leave prediction k unmatched
    best = enumerate(eligible, k + 1, used, flags, n_gt);
    for (int g : eligible[k]) {
        if (used[g]) continue;
        used[g] = 1;
        flags[k] = 1;
        best = std::max(best, enumerate(eligible, k + 1, used, flags, n_gt));
        flags[k] = 0;
        used[g] = 0;
    }
    return best;
}

inline double macro_ap(const std::vector<std::vector<Prediction>>& preds,
                       const std::vector<std::vector<EntityAnnotation>>& gts, int n_classes,
                       double thr) {
    double total = 0.0;
    int counted = 0;
    for (int c = 0; c < n_classes; ++c) {
        std::vector<GtRef> class_gts;
        for (size_t s = 0; s < gts.size(); ++s)
            for (const EntityAnnotation& g : gts[s])
                if (g.class_id == c) class_gts.push_back({static_cast<int>(s),
                                                          std::get<Box>(g.geometry)});
        if (class_gts.empty()) continue;
        ++counted;

        std::vector<RankedPred> ranked;
        for (size_t s = 0; s < preds.size(); ++s)
            for (size_t i = 0; i < preds[s].size(); ++i)
                if (preds[s][i].class_id == c)
                    ranked.push_back({static_cast<int>(s), static_cast<int>(i), &preds[s][i]});
        std::sort(ranked.begin(), ranked.end(), ranked_before);

        std::vector<std::vector<int>> eligible(ranked.size());
        for (size_t k = 0; k < ranked.size(); ++k) {
            const Box& pb = std::get<Box>(ranked[k].pred->geometry);
            for (size_t g = 0; g < class_gts.size(); ++g)
                if (class_gts[g].sample == ranked[k].sample &&
                    iou(pb, class_gts[g].box) >= thr)
                    eligible[k].push_back(static_cast<int>(g));
        }
        std::vector<char> used(class_gts.size(), 0), flags(ranked.size(), 0);
        total += enumerate(eligible, 0, used, flags, static_cast<int>(class_gts.size()));
    }
    return counted > 0 ? total / counted : 0.0;
}

}  // namespace oracle

namespace {

Box random_box(Rng& rng) {
    const double x0 = rng.uniform_real(0.0, 0.75);
    const double y0 = rng.uniform_real(0.0, 0.75);
    return {x0, y0, x0 + rng.uniform_real(0.05, 0.25), y0 + rng.uniform_real(0.05, 0.25)};
}

Prediction box_pred(int class_id, const Box& b, double conf, int n_classes) {
    Vec scores(static_cast<size_t>(n_classes) + 1, 0.0);
    scores[static_cast<size_t>(class_id)] = conf;
    // spread the remainder so the vector sums to one with conf as its max
    const double rest = (1.0 - conf) / static_cast<double>(n_classes);
    for (size_t i = 0; i < scores.size(); ++i)
        if (i != static_cast<size_t>(class_id)) scores[i] = rest;
    return make_prediction(class_id, b, scores);
}

// Randomized case whose construction guarantees each prediction has at most
// one eligible GT, the regime where greedy matching is provably optimal (two
// boxes overlapping one prediction at IoU >= 0.5 would overlap each other at
// IoU >= 1/3, which the GT draw forbids per sample and class).
struct Case {
    std::vector<std::vector<Prediction>> preds;
    std::vector<std::vector<EntityAnnotation>> gts;
    int n_classes = 1;
};

Case random_case(Rng& rng) {
    Case out;
    out.n_classes = 1 + static_cast<int>(rng.uniform_int(3));
    const int n_samples = 1 + static_cast<int>(rng.uniform_int(2));
    out.preds.resize(n_samples);
    out.gts.resize(n_samples);

    const int n_gt = static_cast<int>(rng.uniform_int(6));  // up to 5
    for (int g = 0; g < n_gt; ++g) {
        const int s = static_cast<int>(rng.uniform_int(n_samples));
        const int c = static_cast<int>(rng.uniform_int(out.n_classes));
        for (int tries = 0; tries < 200; ++tries) {
            const Box b = random_box(rng);
            bool ok = true;
            for (const EntityAnnotation& e : out.gts[s])
                if (e.class_id == c && iou(b, std::get<Box>(e.geometry)) >= 1.0 / 3.0)
                    ok = false;
            if (ok) {
                out.gts[s].push_back({c, b, LabelKind::Strong});
                break;
            }
        }
    }

    const int n_pred = static_cast<int>(rng.uniform_int(9));  // up to 8
    for (int k = 0; k < n_pred; ++k) {
        const int s = static_cast<int>(rng.uniform_int(n_samples));
        const int c = static_cast<int>(rng.uniform_int(out.n_classes));
        for (int tries = 0; tries < 200; ++tries) {
            Box b;
            if (!out.gts[s].empty() && rng.uniform_real() < 0.7) {
                const Box& base = std::get<Box>(
                    out.gts[s][rng.uniform_int(out.gts[s].size())].geometry);
                const double dx = rng.normal(0.0, 0.03), dy = rng.normal(0.0, 0.03);
                b = {base.x0 + dx, base.y0 + dy, base.x1 + dx, base.y1 + dy};
            } else {
                b = random_box(rng);
            }
            int eligible = 0;
            for (const EntityAnnotation& e : out.gts[s])
                if (e.class_id == c && iou(b, std::get<Box>(e.geometry)) >= 0.5) ++eligible;
            if (eligible <= 1) {
                out.preds[s].push_back(box_pred(c, b, rng.uniform_real(0.3, 1.0),
                                                out.n_classes));
                break;
            }
        }
    }
    return out;
}

Prediction span_pred(int class_id, int start, int end, int n_classes) {
    Vec scores(static_cast<size_t>(n_classes) + 1, 0.0);
    scores[static_cast<size_t>(class_id)] = 1.0;
    return make_prediction(class_id, Span{start, end}, scores);
}

EntityAnnotation span_gt(int class_id, int start, int end) {
    return {class_id, Span{start, end}, LabelKind::Strong};
}

double expected_f1(long long tp, long long fp, long long fn) {
    const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

TEST_CASE("average precision equals the exhaustive assignment oracle") {
    Rng rng(2718);
    for (int trial = 0; trial < 60; ++trial) {
        const Case c = random_case(rng);
        const double got = average_precision(c.preds, c.gts, c.n_classes).value;
        const double want = oracle::macro_ap(c.preds, c.gts, c.n_classes, 0.5);
        INFO("trial " << trial);
        CHECK(std::abs(got - want) < 1e-9);
    }
}

TEST_CASE("hand-checked AP values") {
    const Box g1{0.1, 0.1, 0.3, 0.3};
    const Box g2{0.6, 0.6, 0.8, 0.8};
    const Box far_box{0.4, 0.05, 0.55, 0.2};

    SECTION("single matching prediction is perfect") {
        const std::vector<std::vector<EntityAnnotation>> gts{{{0, g1, LabelKind::Strong}}};
        const std::vector<std::vector<Prediction>> preds{{box_pred(0, g1, 0.9, 1)}};
        CHECK(average_precision(preds, gts, 1).value == 1.0);
    }
    SECTION("a higher-ranked false positive halves AP") {
        const std::vector<std::vector<EntityAnnotation>> gts{{{0, g1, LabelKind::Strong}}};
        const std::vector<std::vector<Prediction>> preds{
            {box_pred(0, far_box, 0.9, 1), box_pred(0, g1, 0.5, 1)}};
        CHECK(average_precision(preds, gts, 1).value == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("TP, FP, TP gives (1 + 2/3) / 2") {
        const std::vector<std::vector<EntityAnnotation>> gts{
            {{0, g1, LabelKind::Strong}, {0, g2, LabelKind::Strong}}};
        const std::vector<std::vector<Prediction>> preds{{box_pred(0, g1, 0.9, 1),
                                                          box_pred(0, far_box, 0.7, 1),
                                                          box_pred(0, g2, 0.5, 1)}};
        CHECK(average_precision(preds, gts, 1).value ==
              Catch::Approx((1.0 + 2.0 / 3.0) / 2.0).margin(1e-12));
    }
    SECTION("a missed ground truth caps recall") {
        const std::vector<std::vector<EntityAnnotation>> gts{
            {{0, g1, LabelKind::Strong}, {0, g2, LabelKind::Strong}}};
        const std::vector<std::vector<Prediction>> preds{{box_pred(0, g1, 0.9, 1)}};
        CHECK(average_precision(preds, gts, 1).value == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("classes without ground truth are excluded from the macro mean") {
        const std::vector<std::vector<EntityAnnotation>> gts{{{0, g1, LabelKind::Strong}}};
        const std::vector<std::vector<Prediction>> preds{
            {box_pred(0, g1, 0.9, 2), box_pred(1, far_box, 0.95, 2)}};
        const MetricReport r = average_precision(preds, gts, 2);
        CHECK(r.value == 1.0);
        CHECK(r.counted == std::vector<int>{0});
        CHECK(r.per_class[1] == 0.0);
    }
    SECTION("IoU exactly at the threshold still matches") {
        const Box gt{0.0, 0.0, 0.5, 0.5};
        const Box half{0.0, 0.0, 0.25, 0.5};  // IoU = 0.125 / 0.25 = 0.5 exactly
        REQUIRE(iou(gt, half) == 0.5);
        const std::vector<std::vector<EntityAnnotation>> gts{{{0, gt, LabelKind::Strong}}};
        const std::vector<std::vector<Prediction>> preds{{box_pred(0, half, 0.9, 1)}};
        CHECK(average_precision(preds, gts, 1).value == 1.0);
    }
    SECTION("no predictions at all scores zero") {
        const std::vector<std::vector<EntityAnnotation>> gts{{{0, g1, LabelKind::Strong}}};
        const std::vector<std::vector<Prediction>> preds{{}};
        CHECK(average_precision(preds, gts, 1).value == 0.0);
    }
    SECTION("empty ground truth gives an empty report") {
        const std::vector<std::vector<EntityAnnotation>> gts{{}};
        const std::vector<std::vector<Prediction>> preds{{box_pred(0, g1, 0.9, 1)}};
        const MetricReport r = average_precision(preds, gts, 1);
        CHECK(r.value == 0.0);
        CHECK(r.counted.empty());
    }
}

TEST_CASE("equal-confidence predictions rank deterministically") {
    const Box g1{0.1, 0.1, 0.3, 0.3};
    const Box g2{0.6, 0.6, 0.8, 0.8};
    const std::vector<std::vector<EntityAnnotation>> gts{
        {{0, g1, LabelKind::Strong}, {0, g2, LabelKind::Strong}}};
    // same confidence; geometry breaks the tie, and either way both match
    const std::vector<std::vector<Prediction>> a{{box_pred(0, g1, 0.7, 1),
                                                  box_pred(0, g2, 0.7, 1)}};
    const std::vector<std::vector<Prediction>> b{{box_pred(0, g2, 0.7, 1),
                                                  box_pred(0, g1, 0.7, 1)}};
    CHECK(average_precision(a, gts, 1).value == average_precision(b, gts, 1).value);
    CHECK(average_precision(a, gts, 1).value == 1.0);
}

TEST_CASE("entity F-score matches hand-computed values exactly") {
    SECTION("perfect prediction") {
        const std::vector<std::vector<EntityAnnotation>> gts{
            {span_gt(0, 0, 2), span_gt(1, 5, 7)}};
        const std::vector<std::vector<Prediction>> preds{
            {span_pred(0, 0, 2, 2), span_pred(1, 5, 7, 2)}};
        const MetricReport r = entity_f_score(preds, gts, 2);
        CHECK(r.value == 1.0);
        CHECK(r.tp == 2);
        CHECK(r.fp == 0);
        CHECK(r.fn == 0);
    }
    SECTION("tp=3 fp=1 fn=2 micro aggregate") {
        const std::vector<std::vector<EntityAnnotation>> gts{
            {span_gt(0, 0, 2), span_gt(0, 4, 6), span_gt(1, 8, 9)},
            {span_gt(1, 1, 3), span_gt(0, 5, 6)}};
        const std::vector<std::vector<Prediction>> preds{
            {span_pred(0, 0, 2, 2), span_pred(0, 4, 6, 2), span_pred(0, 10, 12, 2)},
            {span_pred(1, 1, 3, 2)}};
        const MetricReport r = entity_f_score(preds, gts, 2);
        CHECK(r.tp == 3);
        CHECK(r.fp == 1);
        CHECK(r.fn == 2);
        CHECK(r.value == expected_f1(3, 1, 2));
    }
    SECTION("no predictions means zero precision") {
        const std::vector<std::vector<EntityAnnotation>> gts{{span_gt(0, 0, 2)}};
        const std::vector<std::vector<Prediction>> preds{{}};
        CHECK(entity_f_score(preds, gts, 1).value == 0.0);
    }
    SECTION("predictions without ground truth mean zero recall") {
        const std::vector<std::vector<EntityAnnotation>> gts{{}};
        const std::vector<std::vector<Prediction>> preds{{span_pred(0, 0, 2, 1)}};
        const MetricReport r = entity_f_score(preds, gts, 1);
        CHECK(r.value == 0.0);
        CHECK(r.fp == 1);
    }
    SECTION("duplicate predictions of one entity count once") {
        const std::vector<std::vector<EntityAnnotation>> gts{{span_gt(0, 0, 2)}};
        const std::vector<std::vector<Prediction>> preds{
            {span_pred(0, 0, 2, 1), span_pred(0, 0, 2, 1)}};
        const MetricReport r = entity_f_score(preds, gts, 1);
        CHECK(r.tp == 1);
        CHECK(r.fp == 1);
        CHECK(r.value == expected_f1(1, 1, 0));
    }
    SECTION("boundary and class mismatches are both errors") {
        const std::vector<std::vector<EntityAnnotation>> gts{
            {span_gt(0, 0, 2), span_gt(1, 5, 7)}};
        const std::vector<std::vector<Prediction>> preds{
            {span_pred(0, 0, 3, 2), span_pred(0, 5, 7, 2)}};
        const MetricReport r = entity_f_score(preds, gts, 2);
        CHECK(r.tp == 0);
        CHECK(r.fp == 2);
        CHECK(r.fn == 2);
        CHECK(r.value == 0.0);
    }
    SECTION("per-class breakdown") {
        const std::vector<std::vector<EntityAnnotation>> gts{
            {span_gt(0, 0, 2), span_gt(1, 5, 7)}};
        const std::vector<std::vector<Prediction>> preds{{span_pred(0, 0, 2, 2)}};
        const MetricReport r = entity_f_score(preds, gts, 2);
        CHECK(r.per_class[0] == 1.0);
        CHECK(r.per_class[1] == 0.0);
        CHECK(r.counted == std::vector<int>{0, 1});
        CHECK(r.value == expected_f1(1, 0, 1));
    }
}
