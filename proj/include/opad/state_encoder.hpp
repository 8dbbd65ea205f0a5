#pragma once

#include <algorithm>
#include <vector>

#include "opad/theta.hpp"

namespace opad {

// MDP state for one cycle: embeddings of the candidate set (row per
// candidate, id-sorted) and of the state set, plus the mini-batch partition
// of the candidate rows used for action selection.
struct StateRepr {
    std::vector<Vec> c_rows;
    std::vector<Vec> s_rows;
    std::vector<int> cand_ids;   // id of each candidate row (ascending)
    std::vector<int> partition;  // permutation of row indices; n_pool per block
    int n_pool = 1;
    int cycle_index = 0;

    int n_batches() const { return static_cast<int>(partition.size()) / n_pool; }

    void check() const {
        if (c_rows.empty() || s_rows.empty())
            throw IntegrityError("StateRepr: empty candidate or state rows");
        if (c_rows.size() != cand_ids.size() || c_rows.size() != partition.size())
            throw IntegrityError("StateRepr: row bookkeeping out of sync");
        if (n_pool < 1 || partition.size() % static_cast<std::size_t>(n_pool) != 0)
            throw IntegrityError("StateRepr: candidate rows not divisible into mini-batches");
    }
};

inline int embedding_dim(TaskKind task, int n_classes, int feature_dim, int max_len,
                         int top_k) {
    return task == TaskKind::Detection ? top_k * (n_classes + 1) + feature_dim
                                       : max_len * (4 * n_classes + 1);
}

// Fixed-size embedding of one sample under the current Θ. Detection: class
// scores of the top_k most confident predictions (zero-padded) followed by
// the mean proposal feature vector. Sequence: per-token tag scores padded to
// max_len tokens.
inline Vec encode_sample(const ThetaModel& theta, const Dataset& dataset,
                         const Sample& sample, int top_k) {
    const std::size_t dim = static_cast<std::size_t>(embedding_dim(
        theta.task(), theta.n_classes(), dataset.feature_dim, dataset.max_len, top_k));
    Vec out(dim, 0.0);

    if (theta.task() == TaskKind::Detection) {
        auto preds = theta.predict(sample);
        std::stable_sort(preds.begin(), preds.end(),
                         [](const Prediction& a, const Prediction& b) {
                             return a.confidence > b.confidence;
                         });
        const int score_dim = theta.n_classes() + 1;
        const int take = std::min<int>(top_k, static_cast<int>(preds.size()));
        for (int k = 0; k < take; ++k)
            std::copy(preds[static_cast<std::size_t>(k)].class_scores.begin(),
                      preds[static_cast<std::size_t>(k)].class_scores.end(),
                      out.begin() + static_cast<std::ptrdiff_t>(k * score_dim));
        const std::size_t base = static_cast<std::size_t>(top_k * score_dim);
        if (!sample.proposals.empty()) {
            const double inv = 1.0 / static_cast<double>(sample.proposals.size());
            for (const Proposal& p : sample.proposals)
                for (std::size_t i = 0; i < p.features.size(); ++i)
                    out[base + i] += p.features[i] * inv;
        }
    } else {
        const int score_dim = theta.score_dim();
        const int take =
            std::min<int>(dataset.max_len, static_cast<int>(sample.token_features.size()));
        for (int t = 0; t < take; ++t) {
            Vec scores = theta.unit_scores(sample.token_features[static_cast<std::size_t>(t)]);
            std::copy(scores.begin(), scores.end(),
                      out.begin() + static_cast<std::ptrdiff_t>(t * score_dim));
        }
    }
    return out;
}

// Stacks encode_sample over the candidate and state sets. Rows follow the
// ascending-id order; the mini-batch partition is an rng-driven permutation
// of row indices (the caller seeds it per cycle).
inline StateRepr build_state(const ThetaModel& theta, const Dataset& dataset,
                             std::vector<int> cand_ids, const std::vector<int>& state_ids,
                             int top_k, int n_pool, int cycle_index, Rng& partition_rng) {
    if (cand_ids.empty() || state_ids.empty())
        throw IntegrityError("build_state: empty candidate or state set");
    std::sort(cand_ids.begin(), cand_ids.end());

    StateRepr state;
    state.n_pool = n_pool;
    state.cycle_index = cycle_index;
    state.cand_ids = std::move(cand_ids);
    state.c_rows.reserve(state.cand_ids.size());
    for (int id : state.cand_ids)
        state.c_rows.push_back(encode_sample(theta, dataset, dataset.sample(id), top_k));

    std::vector<int> sorted_state = state_ids;
    std::sort(sorted_state.begin(), sorted_state.end());
    state.s_rows.reserve(sorted_state.size());
    for (int id : sorted_state)
        state.s_rows.push_back(encode_sample(theta, dataset, dataset.sample(id), top_k));

    state.partition.resize(state.c_rows.size());
    for (std::size_t i = 0; i < state.partition.size(); ++i)
        state.partition[i] = static_cast<int>(i);
    partition_rng.shuffle(state.partition);

    state.check();
    return state;
}

}  // namespace opad
