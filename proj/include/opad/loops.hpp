#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "opad/acquisition.hpp"
#include "opad/annotator.hpp"
#include "opad/common.hpp"
#include "opad/policy.hpp"
#include "opad/pools.hpp"
#include "opad/rewards.hpp"
#include "opad/rng.hpp"
#include "opad/state_encoder.hpp"
#include "opad/theta.hpp"

namespace opad {

enum class LabellingMode : std::uint32_t { Strong = 0, Weak = 1 };

inline const char* labelling_name(LabellingMode m) {
    return m == LabellingMode::Strong ? "strong" : "weak";
}

inline LabellingMode parse_labelling(const std::string& name) {
    if (name == "strong") return LabellingMode::Strong;
    if (name == "weak") return LabellingMode::Weak;
    throw ConfigError("unknown labelling mode: " + name);
}

// Everything a single training or deployment run needs, minus the dataset.
struct LoopConfig {
    int n_episodes = 10;
    int n_cycles = 10;
    int n_cycle = 64;   // samples acquired per cycle
    int n_pool = 4;     // candidates offered per acquired sample
    int n_init = 512;
    int n_state = 256;
    double met_fraction = 0.10;
    int top_k = 10;
    long long budget_seconds = 0;  // 0 = unconstrained
    long long budget_samples = 0;  // cap on |x_l|, 0 = unconstrained
    LabellingMode labelling = LabellingMode::Strong;
    double confidence_threshold = 0.5;
    double iou_threshold = 0.5;
    bool paired_candidates = true;
    MarginDirection margin_direction = MarginDirection::Highest;
    CostModel costs;
    RewardConfig reward;
    ThetaConfig theta;
    PolicyConfig policy;
    EpsilonSchedule epsilon;

    void validate(TaskKind task) const {
        if (n_episodes < 1) throw ConfigError("n_episodes must be positive");
        if (n_cycles < 1) throw ConfigError("n_cycles must be positive");
        if (n_cycle < 1) throw ConfigError("n_cycle must be positive");
        if (n_pool < 1) throw ConfigError("n_pool must be positive");
        if (n_init < 1) throw ConfigError("n_init must be positive");
        if (n_state < 1) throw ConfigError("n_state must be positive");
        if (met_fraction <= 0.0 || met_fraction >= 1.0)
            throw ConfigError("met_fraction must lie in (0, 1)");
        if (top_k < 1) throw ConfigError("top_k must be positive");
        if (budget_seconds < 0 || budget_samples < 0)
            throw ConfigError("budgets must be non-negative");
        if (confidence_threshold < 0.0 || confidence_threshold > 1.0)
            throw ConfigError("confidence_threshold must lie in [0, 1]");
        if (iou_threshold <= 0.0 || iou_threshold >= 1.0)
            throw ConfigError("iou_threshold must lie in (0, 1)");
        costs.validate();
        reward.validate(task);
    }
};

// One row of the learning curve.  `seconds_spent` is cumulative annotation
// time at the end of the cycle; `n_labelled` counts |x_l| at the same point.
struct CycleRecord {
    int episode = 0;
    int cycle = 0;
    std::vector<int> selected;
    RewardBreakdown reward;
    double metric = 0.0;
    long long seconds_spent = 0;
    int n_labelled = 0;
    double dqn_loss = 0.0;
    double epsilon = 0.0;
};

struct PolicyTrainResult {
    PolicyCheckpoint checkpoint;
    std::vector<CycleRecord> records;
    Vec losses;  // one entry per optimize step
};

struct RunResult {
    std::vector<CycleRecord> records;  // records[0] is the pre-acquisition point
    CostLedger ledger;
    bool pairing_broken = false;
};

namespace detail {

struct LedgerPiece {
    int sample_id = 0;
    std::string action;
    long long seconds = 0;
};

struct AnnotationBatch {
    std::vector<SampleAnnotations> selections;
    std::vector<FeedbackOutcome> outcomes;  // weak mode only
    std::vector<LedgerPiece> pieces;
    long long cost_seconds = 0;
};

// Produces annotations and their cost without touching the pools, so the
// caller can enforce budgets before committing anything.
inline AnnotationBatch annotate_batch(const Dataset& dataset, const DataPools& pools,
                                      const std::vector<int>& ids, const ThetaModel& theta,
                                      const LoopConfig& cfg) {
    AnnotationBatch batch;
    for (int id : ids) {
        const Sample& sample = dataset.sample(id);
        const AnnotationState current = pools.annotation_state(id);
        if (cfg.labelling == LabellingMode::Strong) {
            StrongAnnotation ann = annotate_strong(sample, dataset.task, cfg.costs, current);
            batch.cost_seconds += ann.cost_seconds;
            batch.pieces.push_back({id, "draw", ann.cost_seconds});
            batch.selections.push_back(
                {id, std::move(ann.annotations), AnnotationState::StrongLabelled});
        } else {
            WeakAnnotation ann =
                annotate_weak(sample, theta.predict(sample), dataset.task, dataset.n_classes,
                              cfg.costs, cfg.confidence_threshold, cfg.iou_threshold, current);
            batch.cost_seconds += ann.cost_seconds;
            const long long verify_seconds =
                static_cast<long long>(ann.outcome.verified_correct.size() +
                                       ann.outcome.rejected.size()) *
                cfg.costs.verify(dataset.task);
            const long long draw_seconds = ann.cost_seconds - verify_seconds;
            if (verify_seconds > 0) batch.pieces.push_back({id, "verify", verify_seconds});
            if (draw_seconds > 0) batch.pieces.push_back({id, "draw", draw_seconds});
            batch.outcomes.push_back(ann.outcome);
            batch.selections.push_back(
                {id, std::move(ann.annotations), AnnotationState::WeakLabelled});
        }
    }
    return batch;
}

inline bool batch_fits_budget(const DataPools& pools, const LoopConfig& cfg,
                              const AnnotationBatch& batch) {
    if (cfg.budget_samples > 0) {
        const long long after =
            static_cast<long long>(pools.labelled().size() + batch.selections.size());
        if (after > cfg.budget_samples) return false;
    }
    if (cfg.budget_seconds > 0 && pools.would_exceed_budget(batch.cost_seconds)) return false;
    return true;
}

inline RewardBreakdown cycle_reward(const LoopConfig& cfg, const Dataset& dataset,
                                    double metric_t, double metric_prev,
                                    const AnnotationBatch& batch) {
    const double vanilla = vanilla_reward(metric_t, metric_prev);
    std::vector<const std::vector<EntityAnnotation>*> labels;
    labels.reserve(batch.selections.size());
    for (const SampleAnnotations& s : batch.selections) labels.push_back(&s.annotations);
    const double cls = class_entropy_reward(labels, dataset.n_classes);
    double fb = 0.0;
    if (!batch.outcomes.empty() && dataset.task == TaskKind::Detection)
        fb = feedback_reward(batch.outcomes, dataset.n_classes, cfg.iou_threshold);
    return combine(cfg.reward, vanilla, cls, fb);
}

}  // namespace detail

// Trains the acquisition policy over several episodes on the training-side
// pools.  Each cycle = draw candidates, act, annotate, retrain the detector,
// score on x_met, store the transition, and take one Q-learning step.
inline PolicyTrainResult run_policy_training(const Dataset& dataset, const LoopConfig& cfg,
                                             std::uint64_t master_seed) {
    cfg.validate(dataset.task);
    Rng root(master_seed);

    DataPools pools = init_policy_training_pools(dataset, cfg.n_init, cfg.n_state,
                                                 cfg.met_fraction, root.child("pools").seed());
    pools.set_budget_seconds(cfg.budget_seconds);

    const int input_dim = embedding_dim(dataset.task, dataset.n_classes, dataset.feature_dim,
                                        dataset.max_len, cfg.top_k);
    Rng policy_rng = root.child("policy_init");
    PolicyNet policy(input_dim, cfg.policy, policy_rng);
    PolicyNet target = policy;
    ReplayBuffer buffer;

    PolicyTrainResult result{PolicyCheckpoint{std::move(policy), cfg.epsilon, pools.state_ids(),
                                              cfg.top_k, dataset.task},
                             {}, {}};
    PolicyNet& online = result.checkpoint.policy;

    for (int e = 0; e < cfg.n_episodes; ++e) {
        if (e > 0) {
            Rng reset_rng = root.child("episode_reset", static_cast<std::uint64_t>(e));
            pools.reset_episode(dataset, cfg.n_init, reset_rng);
        }
        Rng theta_rng = root.child("theta_init", static_cast<std::uint64_t>(e));
        ThetaModel theta(dataset.task, dataset.feature_dim, dataset.n_classes, cfg.theta,
                         theta_rng);
        Rng warmup_rng = root.child("theta_train", static_cast<std::uint64_t>(e), 0);
        theta.train(dataset, pools.labelled_view(), cfg.theta.iterations, warmup_rng);
        double metric_prev = evaluate_theta_over(theta, dataset, pools.met_ids()).value;
        bool pushed_this_episode = false;

        for (int c = 0; c < cfg.n_cycles; ++c) {
            const auto ec = static_cast<std::uint64_t>(e);
            const auto cc = static_cast<std::uint64_t>(c);
            Rng cand_rng = root.child("candidates", ec, 2 * cc);
            std::optional<std::vector<int>> cand =
                draw_candidates(pools.unlabelled(), cfg.n_pool, cfg.n_cycle, cand_rng);
            if (!cand) break;
            pools.set_candidates(*cand);

            Rng part_rng = root.child("partition", ec, 2 * cc);
            StateRepr s_t = build_state(theta, dataset, *cand, pools.state_ids(), cfg.top_k,
                                        cfg.n_pool, c, part_rng);
            const double eps = cfg.epsilon.value(c);
            Rng select_rng = root.child("select", ec, cc);
            const std::vector<int> actions = online.select_actions(s_t, eps, select_rng);
            std::vector<int> ids;
            ids.reserve(actions.size());
            for (int row : actions) ids.push_back(s_t.cand_ids[static_cast<size_t>(row)]);

            detail::AnnotationBatch batch = detail::annotate_batch(dataset, pools, ids, theta, cfg);
            if (!detail::batch_fits_budget(pools, cfg, batch)) {
                if (pushed_this_episode) buffer.mark_last_terminal();
                break;
            }
            pools.charge(batch.cost_seconds);
            pools.commit_selection(batch.selections);

            Rng retrain_rng = root.child("theta_train", ec, cc + 1);
            theta.train(dataset, pools.labelled_view(), cfg.theta.iterations, retrain_rng);
            const double metric_t = evaluate_theta_over(theta, dataset, pools.met_ids()).value;
            const RewardBreakdown reward =
                detail::cycle_reward(cfg, dataset, metric_t, metric_prev, batch);

            Rng next_rng = root.child("candidates", ec, 2 * cc + 1);
            std::optional<std::vector<int>> next_cand =
                draw_candidates(pools.unlabelled(), cfg.n_pool, cfg.n_cycle, next_rng);
            const bool terminal = (c + 1 == cfg.n_cycles) || !next_cand;
            StateRepr s_next = s_t;  // unused placeholder on terminal transitions
            if (!terminal) {
                Rng next_part = root.child("partition", ec, 2 * cc + 1);
                s_next = build_state(theta, dataset, *next_cand, pools.state_ids(), cfg.top_k,
                                     cfg.n_pool, c + 1, next_part);
            }
            buffer.push(Transition{std::move(s_t), std::move(s_next), actions, reward.total,
                                   terminal});
            pushed_this_episode = true;

            Rng opt_rng = root.child("optimize", ec, cc);
            const double loss = online.optimize_step(target, buffer, opt_rng);
            result.losses.push_back(loss);
            sync_target(online, target, cfg.policy.sync_every);

            result.records.push_back({e, c, ids, reward, metric_t,
                                      pools.budget_spent_seconds(),
                                      static_cast<int>(pools.labelled().size()), loss, eps});
            pools.check_invariants();
            metric_prev = metric_t;
        }
    }
    return result;
}

// Runs a single acquisition strategy against the deployment pools.  The
// checkpoint is required (and only consulted) for the learned policy; its
// weights are never updated here.  When `paired_candidates` is on, candidate
// draws come from the initial unlabelled pool minus everything offered so
// far, which makes the offered sequence identical across strategies under
// the same master seed.
inline RunResult run_deployment(const Dataset& dataset, StrategyKind strategy,
                                const LoopConfig& cfg, std::uint64_t master_seed,
                                const PolicyCheckpoint* checkpoint = nullptr) {
    cfg.validate(dataset.task);
    if (strategy == StrategyKind::Policy) {
        if (checkpoint == nullptr)
            throw ConfigError("policy strategy requires a trained checkpoint");
        if (checkpoint->task != dataset.task)
            throw ConfigError("checkpoint was trained on a different task kind");
    }
    Rng root(master_seed);

    std::vector<int> x_state;
    int top_k = cfg.top_k;
    if (strategy == StrategyKind::Policy) {
        x_state = checkpoint->x_state_ids;
        top_k = checkpoint->top_k;
    }
    DataPools pools =
        init_deployment_pools(dataset, cfg.n_init, root.child("pools").seed(), x_state);
    pools.set_budget_seconds(cfg.budget_seconds);
    const std::set<int> initial_unlabelled = pools.unlabelled();
    std::set<int> offered;

    Rng theta_rng = root.child("theta_init");
    ThetaModel theta(dataset.task, dataset.feature_dim, dataset.n_classes, cfg.theta, theta_rng);
    Rng warmup_rng = root.child("theta_train", 0);
    theta.train(dataset, pools.labelled_view(), cfg.theta.iterations, warmup_rng);

    RunResult result;
    double metric_prev = evaluate_theta_over(theta, dataset, pools.test_ids()).value;
    result.records.push_back({0, 0, {}, RewardBreakdown{}, metric_prev, 0,
                              static_cast<int>(pools.labelled().size()), 0.0, 0.0});

    for (int c = 1; c <= cfg.n_cycles; ++c) {
        const auto cc = static_cast<std::uint64_t>(c);
        std::optional<std::vector<int>> cand;
        if (cfg.paired_candidates) {
            std::set<int> pool;
            std::set_difference(initial_unlabelled.begin(), initial_unlabelled.end(),
                                offered.begin(), offered.end(),
                                std::inserter(pool, pool.begin()));
            Rng cand_rng = root.child("candidates", cc);
            cand = draw_candidates(pool, cfg.n_pool, cfg.n_cycle, cand_rng);
            if (!cand) {
                result.pairing_broken = true;
                Rng fallback_rng = root.child("candidates_fallback", cc);
                cand = draw_candidates(pools.unlabelled(), cfg.n_pool, cfg.n_cycle, fallback_rng);
            }
        } else {
            Rng cand_rng = root.child("candidates", cc);
            cand = draw_candidates(pools.unlabelled(), cfg.n_pool, cfg.n_cycle, cand_rng);
        }
        if (!cand) break;
        offered.insert(cand->begin(), cand->end());
        pools.set_candidates(*cand);

        StateRepr state;
        AcquisitionContext ctx;
        ctx.dataset = &dataset;
        ctx.theta = &theta;
        ctx.margin_direction = cfg.margin_direction;
        if (strategy == StrategyKind::Policy) {
            Rng part_rng = root.child("partition", cc);
            state = build_state(theta, dataset, *cand, pools.state_ids(), top_k, cfg.n_pool,
                                c - 1, part_rng);
            ctx.policy = &checkpoint->policy;
            ctx.state = &state;
            ctx.epsilon = 0.0;  // deployment is purely greedy
        }
        Rng select_rng = root.child("select", cc);
        const std::vector<int> ids =
            select_samples(strategy, ctx, *cand, cfg.n_cycle, select_rng);

        detail::AnnotationBatch batch = detail::annotate_batch(dataset, pools, ids, theta, cfg);
        if (!detail::batch_fits_budget(pools, cfg, batch)) break;
        pools.charge(batch.cost_seconds);
        pools.commit_selection(batch.selections);
        for (const detail::LedgerPiece& piece : batch.pieces)
            result.ledger.add(c, piece.sample_id, piece.action, piece.seconds);

        Rng retrain_rng = root.child("theta_train", cc);
        theta.train(dataset, pools.labelled_view(), cfg.theta.iterations, retrain_rng);
        const double metric_t = evaluate_theta_over(theta, dataset, pools.test_ids()).value;
        const RewardBreakdown reward =
            detail::cycle_reward(cfg, dataset, metric_t, metric_prev, batch);

        result.records.push_back({0, c, ids, reward, metric_t, pools.budget_spent_seconds(),
                                  static_cast<int>(pools.labelled().size()), 0.0, 0.0});
        pools.check_invariants();
        metric_prev = metric_t;
    }
    return result;
}

// Mean metric across the learning curve; a cheap scalar for comparing runs.
inline double learning_curve_auc(const std::vector<CycleRecord>& records) {
    if (records.empty()) return 0.0;
    double sum = 0.0;
    for (const CycleRecord& r : records) sum += r.metric;
    return sum / static_cast<double>(records.size());
}

}  // namespace opad
