#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "opad/rng.hpp"
#include "opad/types.hpp"

namespace opad {

enum class Regime { PolicyTraining, Deployment };

struct SampleAnnotations {
    int sample_id = 0;
    std::vector<EntityAnnotation> annotations;
    AnnotationState state = AnnotationState::StrongLabelled;
};

// The named sample-id sets of one active-learning run plus budget bookkeeping.
// Sample payloads live once in the immutable Dataset; the pools only move ids
// between sets and hold the labels revealed by annotation so far.
class DataPools {
public:
    Regime regime() const { return regime_; }

    const std::vector<int>& train_ids() const { return x_train_; }
    const std::vector<int>& val_ids() const { return x_val_; }

    // X_test is reserved for deployment-time reporting.
    const std::vector<int>& test_ids() const {
        if (regime_ == Regime::PolicyTraining)
            throw IntegrityError("X_test must not be read during policy training");
        return x_test_;
    }

    // X_met exists only in the policy-training regime.
    const std::set<int>& met_ids() const {
        if (regime_ == Regime::Deployment)
            throw IntegrityError("X_met is not available in the deployment regime");
        return x_met_;
    }

    const std::set<int>& unlabelled() const { return x_u_; }
    const std::set<int>& labelled() const { return x_l_; }
    const std::set<int>& init_ids() const { return x_init_; }
    const std::vector<int>& state_ids() const { return x_state_; }
    const std::vector<int>& candidates() const { return x_cand_; }

    AnnotationState annotation_state(int id) const {
        auto it = states_.find(id);
        return it == states_.end() ? AnnotationState::Unlabelled : it->second;
    }

    const std::vector<EntityAnnotation>& labels(int id) const {
        auto it = labels_.find(id);
        if (it == labels_.end())
            throw IntegrityError("no labels revealed for sample " + std::to_string(id));
        return it->second;
    }

    // (sample id, labels) pairs for everything in X_l, id-sorted
    std::vector<std::pair<int, const std::vector<EntityAnnotation>*>> labelled_view() const {
        std::vector<std::pair<int, const std::vector<EntityAnnotation>*>> out;
        out.reserve(x_l_.size());
        for (int id : x_l_) out.emplace_back(id, &labels(id));
        return out;
    }

    std::int64_t budget_total_seconds() const { return budget_total_seconds_; }
    std::int64_t budget_spent_seconds() const { return budget_spent_seconds_; }
    void set_budget_seconds(std::int64_t total) { budget_total_seconds_ = total; }

    bool would_exceed_budget(std::int64_t seconds) const {
        return budget_total_seconds_ > 0 &&
               budget_spent_seconds_ + seconds > budget_total_seconds_;
    }

    void charge(std::int64_t seconds) {
        if (would_exceed_budget(seconds))
            throw IntegrityError("annotation budget exceeded");
        budget_spent_seconds_ += seconds;
    }

    void set_candidates(std::vector<int> ids) {
        for (int id : ids)
            if (!x_u_.count(id))
                throw IntegrityError("candidate " + std::to_string(id) + " not in X_u");
        x_cand_ = std::move(ids);
    }

    // Moves the selected ids from X_u to X_l and attaches their annotations.
    void commit_selection(const std::vector<SampleAnnotations>& selection) {
        std::set<int> seen;
        for (const auto& s : selection) {
            if (!seen.insert(s.sample_id).second)
                throw IntegrityError("duplicate id in selection: " +
                                     std::to_string(s.sample_id));
            if (!x_u_.count(s.sample_id))
                throw IntegrityError("selected id " + std::to_string(s.sample_id) +
                                     " not in X_u");
            if (!x_cand_.empty() &&
                std::find(x_cand_.begin(), x_cand_.end(), s.sample_id) == x_cand_.end())
                throw IntegrityError("selected id " + std::to_string(s.sample_id) +
                                     " not in X_cand");
        }
        for (const auto& s : selection) {
            x_u_.erase(s.sample_id);
            x_l_.insert(s.sample_id);
            labels_[s.sample_id] = s.annotations;
            states_[s.sample_id] = s.state;
        }
        x_cand_.clear();
    }

    // Per-episode reset for Algorithm-1 style training: X_state and X_met stay
    // fixed, X_init is redrawn and X_u/X_l/labels/budget start over.
    void reset_episode(const Dataset& dataset, int n_init, Rng& rng) {
        if (regime_ != Regime::PolicyTraining)
            throw IntegrityError("reset_episode is a policy-training operation");
        std::vector<int> available;
        for (int id : x_train_) {
            if (!x_met_.count(id) &&
                !std::binary_search(x_state_.begin(), x_state_.end(), id))
                available.push_back(id);
        }
        if (static_cast<int>(available.size()) < n_init)
            throw ConfigError("not enough samples to draw X_init");
        auto init = rng.sample_without_replacement(available, static_cast<std::size_t>(n_init));
        assign_init(dataset, std::set<int>(init.begin(), init.end()), available);
    }

    void check_invariants() const {
        for (int id : x_l_)
            if (x_u_.count(id)) throw IntegrityError("X_l and X_u overlap");
        for (int id : x_state_)
            if (x_met_.count(id)) throw IntegrityError("X_state and X_met overlap");
        if (budget_total_seconds_ > 0 && budget_spent_seconds_ > budget_total_seconds_)
            throw IntegrityError("budget overdraft");
        if (regime_ == Regime::PolicyTraining) {
            std::size_t n = x_u_.size() + x_l_.size() + x_state_.size() + x_met_.size();
            if (n != x_train_.size())
                throw IntegrityError("training-regime sets do not partition X_train");
        } else {
            if (x_u_.size() + x_l_.size() != x_val_.size())
                throw IntegrityError("deployment-regime sets do not partition X_val");
        }
    }

    friend DataPools init_policy_training_pools(const Dataset&, int, int, double,
                                                std::uint64_t);
    friend DataPools init_deployment_pools(const Dataset&, int, std::uint64_t,
                                           const std::vector<int>&);

private:
    void assign_init(const Dataset& dataset, std::set<int> init,
                     const std::vector<int>& available) {
        x_init_ = std::move(init);
        x_l_ = x_init_;
        x_u_.clear();
        for (int id : available)
            if (!x_init_.count(id)) x_u_.insert(id);
        labels_.clear();
        states_.clear();
        for (int id : x_init_) {
            auto ents = dataset.sample(id).entities;
            for (auto& e : ents) e.kind = LabelKind::Strong;
            labels_[id] = std::move(ents);
            states_[id] = AnnotationState::StrongLabelled;
        }
        x_cand_.clear();
        budget_spent_seconds_ = 0;
    }

    Regime regime_ = Regime::PolicyTraining;
    std::vector<int> x_train_, x_val_, x_test_;
    std::set<int> x_u_, x_l_, x_init_, x_met_;
    std::vector<int> x_state_;  // sorted
    std::vector<int> x_cand_;
    std::map<int, std::vector<EntityAnnotation>> labels_;
    std::map<int, AnnotationState> states_;
    std::int64_t budget_total_seconds_ = 0;
    std::int64_t budget_spent_seconds_ = 0;
};

// Splits X_train into X_met / X_state / X_init / X_u for the policy-training
// regime. X_met keeps its labels (it is the reward set); X_state stays
// unlabelled by construction.
inline DataPools init_policy_training_pools(const Dataset& dataset, int n_init,
                                            int n_state, double met_fraction,
                                            std::uint64_t rng_seed) {
    const auto& train = dataset.train_ids;
    const int n_met =
        static_cast<int>(std::ceil(met_fraction * static_cast<double>(train.size())));
    if (n_init < 0 || n_state < 0 || met_fraction < 0.0 || met_fraction >= 1.0)
        throw ConfigError("invalid policy-training split parameters");
    if (static_cast<int>(train.size()) < n_init + n_state + n_met)
        throw ConfigError("train split too small for requested X_init/X_state/X_met");

    Rng rng(rng_seed);
    std::vector<int> order = train;
    rng.shuffle(order);

    DataPools pools;
    pools.regime_ = Regime::PolicyTraining;
    pools.x_train_ = train;
    pools.x_val_ = dataset.val_ids;
    pools.x_test_ = dataset.test_ids;

    auto it = order.begin();
    pools.x_met_ = std::set<int>(it, it + n_met);
    it += n_met;
    pools.x_state_ = std::vector<int>(it, it + n_state);
    std::sort(pools.x_state_.begin(), pools.x_state_.end());
    it += n_state;
    std::set<int> init(it, it + n_init);
    it += n_init;

    std::vector<int> available(it, order.end());
    for (int id : init) available.push_back(id);
    pools.assign_init(dataset, std::move(init), available);
    return pools;
}

// Deployment regime: X_u starts as X_val minus a labelled X_init; X_state is
// reused from the training regime and X_met is unavailable.
inline DataPools init_deployment_pools(const Dataset& dataset, int n_init,
                                       std::uint64_t rng_seed,
                                       const std::vector<int>& x_state) {
    const auto& val = dataset.val_ids;
    if (n_init <= 0 || n_init >= static_cast<int>(val.size()))
        throw ConfigError("n_init must be positive and smaller than the val split");

    Rng rng(rng_seed);
    DataPools pools;
    pools.regime_ = Regime::Deployment;
    pools.x_train_ = dataset.train_ids;
    pools.x_val_ = val;
    pools.x_test_ = dataset.test_ids;
    pools.x_state_ = x_state;
    std::sort(pools.x_state_.begin(), pools.x_state_.end());

    auto init_vec = rng.sample_without_replacement(val, static_cast<std::size_t>(n_init));
    pools.assign_init(dataset, std::set<int>(init_vec.begin(), init_vec.end()), val);
    return pools;
}

// Uniform draw of n_pool*n_cycle distinct candidate ids from an id set.
// Returns nullopt when the set is too small (end of episode).
inline std::optional<std::vector<int>> draw_candidates(const std::set<int>& from,
                                                       int n_pool, int n_cycle,
                                                       Rng& rng) {
    const std::size_t want = static_cast<std::size_t>(n_pool) * static_cast<std::size_t>(n_cycle);
    if (from.size() < want) return std::nullopt;
    std::vector<int> pool(from.begin(), from.end());
    return rng.sample_without_replacement(std::move(pool), want);
}

inline std::optional<std::vector<int>> sample_candidates(const DataPools& pools,
                                                         int n_pool, int n_cycle,
                                                         Rng& rng) {
    return draw_candidates(pools.unlabelled(), n_pool, n_cycle, rng);
}

}  // namespace opad
