#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "opad/policy.hpp"
#include "opad/rewards.hpp"

namespace opad {

enum class StrategyKind { Random = 0, EntropyMax, EntropySum, Margin, Policy };

inline const char* strategy_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::Random: return "random";
        case StrategyKind::EntropyMax: return "entropy-max";
        case StrategyKind::EntropySum: return "entropy-sum";
        case StrategyKind::Margin: return "margin";
        case StrategyKind::Policy: return "policy";
    }
    throw IntegrityError("unknown strategy kind");
}

inline StrategyKind parse_strategy(const std::string& name) {
    if (name == "random") return StrategyKind::Random;
    if (name == "entropy-max") return StrategyKind::EntropyMax;
    if (name == "entropy-sum") return StrategyKind::EntropySum;
    if (name == "margin") return StrategyKind::Margin;
    if (name == "policy") return StrategyKind::Policy;
    throw ConfigError("unknown acquisition strategy: " + name);
}

enum class EntropyMode { Max, Sum };

// The default margin picks the HIGHEST top-1 minus top-2 gap; the classical
// low-margin variant is available behind the direction switch.
enum class MarginDirection { Highest, Lowest };

inline double score_sample_entropy(const std::vector<Prediction>& preds,
                                   EntropyMode mode) {
    double best = 0.0, sum = 0.0;
    for (const Prediction& p : preds) {
        const double h = shannon_entropy(p.class_scores);
        best = std::max(best, h);
        sum += h;
    }
    return preds.empty() ? 0.0 : (mode == EntropyMode::Max ? best : sum);
}

inline double score_sample_margin(const std::vector<Prediction>& preds) {
    double best = 0.0;
    for (const Prediction& p : preds) {
        double top1 = 0.0, top2 = 0.0;
        for (double v : p.class_scores) {
            if (v > top1) {
                top2 = top1;
                top1 = v;
            } else if (v > top2) {
                top2 = v;
            }
        }
        best = std::max(best, top1 - top2);
    }
    return best;
}

namespace detail {

// Top n by score with deterministic ties: higher score first (or lower, for
// low-margin), equal scores broken by lower id.
inline std::vector<int> top_by_score(std::vector<std::pair<double, int>> scored,
                                     int n_cycle, bool descending) {
    std::sort(scored.begin(), scored.end(), [descending](const auto& a, const auto& b) {
        if (a.first != b.first) return descending ? a.first > b.first : a.first < b.first;
        return a.second < b.second;
    });
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n_cycle));
    for (int i = 0; i < n_cycle; ++i) out.push_back(scored[static_cast<std::size_t>(i)].second);
    return out;
}

}  // namespace detail

struct AcquisitionContext {
    const Dataset* dataset = nullptr;
    const ThetaModel* theta = nullptr;
    // required for StrategyKind::Policy
    const PolicyNet* policy = nullptr;
    const StateRepr* state = nullptr;
    double epsilon = 0.0;
    MarginDirection margin_direction = MarginDirection::Highest;
};

// n_cycle distinct ids out of the candidate set, by the requested strategy.
inline std::vector<int> select_samples(StrategyKind kind, const AcquisitionContext& ctx,
                                       const std::vector<int>& cand_ids, int n_cycle,
                                       Rng& rng) {
    if (static_cast<int>(cand_ids.size()) < n_cycle)
        throw ConfigError("candidate set smaller than n_cycle");

    if (kind == StrategyKind::Random)
        return rng.sample_without_replacement(cand_ids, static_cast<std::size_t>(n_cycle));

    if (kind == StrategyKind::Policy) {
        if (!ctx.policy || !ctx.state)
            throw ConfigError("policy strategy requires a policy network and state");
        const auto actions = ctx.policy->select_actions(*ctx.state, ctx.epsilon, rng);
        std::vector<int> ids;
        ids.reserve(actions.size());
        for (int row : actions)
            ids.push_back(ctx.state->cand_ids[static_cast<std::size_t>(row)]);
        return ids;
    }

    if (!ctx.dataset || !ctx.theta)
        throw ConfigError("score-based strategies require the dataset and theta");
    std::vector<std::pair<double, int>> scored;
    scored.reserve(cand_ids.size());
    for (int id : cand_ids) {
        const auto preds = ctx.theta->predict(ctx.dataset->sample(id));
        double s = 0.0;
        switch (kind) {
            case StrategyKind::EntropyMax:
                s = score_sample_entropy(preds, EntropyMode::Max);
                break;
            case StrategyKind::EntropySum:
                s = score_sample_entropy(preds, EntropyMode::Sum);
                break;
            case StrategyKind::Margin:
                s = score_sample_margin(preds);
                break;
            default:
                throw IntegrityError("unhandled strategy");
        }
        scored.emplace_back(s, id);
    }
    const bool descending =
        kind != StrategyKind::Margin || ctx.margin_direction == MarginDirection::Highest;
    return detail::top_by_score(std::move(scored), n_cycle, descending);
}

}  // namespace opad
