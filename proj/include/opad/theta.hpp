#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "opad/metrics.hpp"
#include "opad/net.hpp"
#include "opad/pools.hpp"

namespace opad {

struct ThetaConfig {
    int hidden = 64;
    double lr = 0.1;
    double momentum = 0.9;
    int iterations = 1000;  // SGD steps per retraining call
    bool cold_start = false;  // reinitialize before every retrain instead of continuing
};

// One classification unit: a feature vector and its (revealed) target class.
// Detection units are proposals (background target C), sequence units tokens
// (IOBES tag targets).
struct LabelledUnit {
    const Vec* features = nullptr;
    int target = 0;
};

inline std::vector<LabelledUnit> labelled_units(const Sample& sample,
                                                const std::vector<EntityAnnotation>& labels,
                                                TaskKind task, int n_classes) {
    std::vector<LabelledUnit> units;
    if (task == TaskKind::Detection) {
        units.reserve(sample.proposals.size());
        for (const Proposal& p : sample.proposals) {
            int target = n_classes;  // background
            double best = 0.0;
            for (const auto& lab : labels) {
                const double v = iou(p.box, std::get<Box>(lab.geometry));
                if (v >= 0.5 && v > best) {
                    best = v;
                    target = lab.class_id;
                }
            }
            units.push_back({&p.features, target});
        }
    } else {
        std::vector<int> tags(sample.token_features.size(), tag_o());
        for (const auto& lab : labels) {
            const Span& sp = std::get<Span>(lab.geometry);
            if (sp.length() == 1) {
                tags[static_cast<std::size_t>(sp.start)] = tag_s(lab.class_id);
            } else {
                tags[static_cast<std::size_t>(sp.start)] = tag_b(lab.class_id);
                for (int t = sp.start + 1; t < sp.end - 1; ++t)
                    tags[static_cast<std::size_t>(t)] = tag_i(lab.class_id);
                tags[static_cast<std::size_t>(sp.end - 1)] = tag_e(lab.class_id);
            }
        }
        units.reserve(sample.token_features.size());
        for (std::size_t t = 0; t < sample.token_features.size(); ++t)
            units.push_back({&sample.token_features[t], tags[t]});
    }
    return units;
}

// The prediction model Θ: a per-unit softmax classifier over proposals
// (detection) or tokens (sequence), retrained on the labelled pool each cycle.
class ThetaModel {
public:
    ThetaModel() = default;

    ThetaModel(TaskKind task, int feature_dim, int n_classes, const ThetaConfig& config,
               Rng& rng)
        : task_(task), n_classes_(n_classes), config_(config) {
        const int out = task == TaskKind::Detection ? n_classes + 1 : 4 * n_classes + 1;
        net_ = DenseNet({{feature_dim, config.hidden, Act::ReLU},
                         {config.hidden, out, Act::Identity}},
                        rng);
        net_.zero_last_layer();  // untrained scores start exactly uniform
    }

    TaskKind task() const { return task_; }
    int n_classes() const { return n_classes_; }
    int score_dim() const { return net_.output_dim(); }
    const ThetaConfig& config() const { return config_; }
    DenseNet& net() { return net_; }
    const DenseNet& net() const { return net_; }

    Vec unit_scores(const Vec& features) const { return softmax(net_.forward(features)); }

    std::vector<Prediction> predict(const Sample& sample) const {
        std::vector<Prediction> preds;
        if (task_ == TaskKind::Detection) {
            for (const Proposal& p : sample.proposals) {
                Vec scores = unit_scores(p.features);
                const int arg = argmax(scores);
                if (arg == n_classes_) continue;  // background suppressed
                preds.push_back(make_prediction(arg, p.box, std::move(scores)));
            }
        } else {
            std::vector<Vec> token_scores;
            token_scores.reserve(sample.token_features.size());
            for (const Vec& f : sample.token_features)
                token_scores.push_back(unit_scores(f));
            decode_spans(token_scores, preds);
        }
        return preds;
    }

    // `iterations` SGD steps; each step draws one labelled sample and takes a
    // cross-entropy gradient averaged over its units. Returns per-step losses.
    Vec train(const Dataset& dataset,
              const std::vector<std::pair<int, const std::vector<EntityAnnotation>*>>& labelled,
              int iterations, Rng& rng) {
        if (labelled.empty()) throw IntegrityError("theta train: empty labelled set");
        if (config_.cold_start) {
            Rng init_rng = rng.child("reinit");
            *this = ThetaModel(task_, net_.input_dim(), n_classes_, config_, init_rng);
        }
        std::vector<std::vector<LabelledUnit>> units;
        units.reserve(labelled.size());
        for (const auto& [id, labs] : labelled)
            units.push_back(labelled_units(dataset.sample(id), *labs, task_, n_classes_));

        Vec losses;
        losses.reserve(static_cast<std::size_t>(std::max(iterations, 0)));
        Vec grads = net_.zero_grads();
        DenseNet::Tape tape;
        Vec dlogits;
        for (int it = 0; it < iterations; ++it) {
            const auto& su = units[rng.uniform_int(units.size())];
            std::fill(grads.begin(), grads.end(), 0.0);
            double loss = 0.0;
            if (su.empty()) {
                losses.push_back(0.0);
                continue;
            }
            const double inv = 1.0 / static_cast<double>(su.size());
            for (const LabelledUnit& u : su) {
                Vec logits = net_.forward(*u.features, tape);
                loss += softmax_xent(logits, u.target, dlogits) * inv;
                for (double& d : dlogits) d *= inv;
                net_.backward(tape, dlogits, grads);
            }
            net_.sgd_momentum(grads, config_.lr, config_.momentum);
            losses.push_back(loss);
        }
        return losses;
    }

    void write(BinWriter& w) const {
        w.u32(static_cast<std::uint32_t>(task_));
        w.u32(static_cast<std::uint32_t>(n_classes_));
        w.u32(static_cast<std::uint32_t>(config_.hidden));
        w.f64(config_.lr);
        w.f64(config_.momentum);
        w.u32(static_cast<std::uint32_t>(config_.iterations));
        w.u32(config_.cold_start ? 1 : 0);
        net_.write(w);
    }

    static ThetaModel read(BinReader& r) {
        ThetaModel m;
        m.task_ = static_cast<TaskKind>(r.u32());
        m.n_classes_ = static_cast<int>(r.u32());
        m.config_.hidden = static_cast<int>(r.u32());
        m.config_.lr = r.f64();
        m.config_.momentum = r.f64();
        m.config_.iterations = static_cast<int>(r.u32());
        m.config_.cold_start = r.u32() != 0;
        m.net_ = DenseNet::read(r);
        return m;
    }

private:
    static int argmax(const Vec& v) {
        int best = 0;
        for (int i = 1; i < static_cast<int>(v.size()); ++i)
            if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
        return best;
    }

    // Greedy per-token argmax, then well-formed IOBES runs become spans:
    // S(c), or B(c) I(c)* E(c). Broken runs emit nothing.
    void decode_spans(const std::vector<Vec>& token_scores,
                      std::vector<Prediction>& out) const {
        const int len = static_cast<int>(token_scores.size());
        std::vector<int> tags(static_cast<std::size_t>(len));
        for (int t = 0; t < len; ++t) tags[static_cast<std::size_t>(t)] = argmax(token_scores[static_cast<std::size_t>(t)]);

        int t = 0;
        while (t < len) {
            const int tag = tags[static_cast<std::size_t>(t)];
            if (tag == tag_o()) {
                ++t;
                continue;
            }
            const int cls = (tag - 1) / 4;
            if (tag == tag_s(cls)) {
                emit_span(token_scores, Span{t, t + 1}, cls, out);
                ++t;
                continue;
            }
            if (tag == tag_b(cls)) {
                int u = t + 1;
                while (u < len && tags[static_cast<std::size_t>(u)] == tag_i(cls)) ++u;
                if (u < len && tags[static_cast<std::size_t>(u)] == tag_e(cls)) {
                    emit_span(token_scores, Span{t, u + 1}, cls, out);
                    t = u + 1;
                    continue;
                }
                t = u;  // unterminated run, no span
                continue;
            }
            ++t;  // stray I/E tag
        }
    }

    // Span scores collapse tag probabilities to entity classes (+ trailing
    // O slot), averaged over the span's tokens.
    void emit_span(const std::vector<Vec>& token_scores, Span span, int cls,
                   std::vector<Prediction>& out) const {
        Vec collapsed(static_cast<std::size_t>(n_classes_) + 1, 0.0);
        for (int t = span.start; t < span.end; ++t) {
            const Vec& s = token_scores[static_cast<std::size_t>(t)];
            collapsed[static_cast<std::size_t>(n_classes_)] += s[static_cast<std::size_t>(tag_o())];
            for (int c = 0; c < n_classes_; ++c)
                collapsed[static_cast<std::size_t>(c)] +=
                    s[static_cast<std::size_t>(tag_b(c))] + s[static_cast<std::size_t>(tag_i(c))] +
                    s[static_cast<std::size_t>(tag_e(c))] + s[static_cast<std::size_t>(tag_s(c))];
        }
        const double inv = 1.0 / static_cast<double>(span.length());
        for (double& x : collapsed) x *= inv;
        out.push_back(make_prediction(cls, span, std::move(collapsed)));
    }

    TaskKind task_ = TaskKind::Detection;
    int n_classes_ = 0;
    ThetaConfig config_;
    DenseNet net_;
};

// Metric of Θ over the given sample ids: AP for detection, micro F1 for
// sequence, against the dataset's ground truth.
inline MetricReport evaluate_theta(const ThetaModel& theta, const Dataset& dataset,
                                   const std::vector<int>& ids) {
    std::vector<std::vector<Prediction>> preds;
    std::vector<std::vector<EntityAnnotation>> gts;
    preds.reserve(ids.size());
    gts.reserve(ids.size());
    for (int id : ids) {
        const Sample& s = dataset.sample(id);
        preds.push_back(theta.predict(s));
        gts.push_back(s.entities);
    }
    return theta.task() == TaskKind::Detection
               ? average_precision(preds, gts, dataset.n_classes)
               : entity_f_score(preds, gts, dataset.n_classes);
}

template <typename IdSet>
inline MetricReport evaluate_theta_over(const ThetaModel& theta, const Dataset& dataset,
                                        const IdSet& ids) {
    return evaluate_theta(theta, dataset, std::vector<int>(ids.begin(), ids.end()));
}

}  // namespace opad
