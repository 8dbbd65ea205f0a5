#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "opad/config.hpp"
#include "opad/loops.hpp"
#include "opad/serialize.hpp"
#include "opad/synth.hpp"

namespace opad {

// Fully resolved experiment description: dataset recipe, loop settings, the
// evaluation matrix (strategies x labelling modes x seeds), and output paths.
struct ExperimentConfig {
    TaskKind task = TaskKind::Detection;
    bool generate_both = false;  // generate writes both task datasets

    int n_samples = 600;
    int n_train = 0;  // 0 = use the generator's default split
    int n_val = 0;
    int n_test = 0;
    DetectionTaskSpec detection;
    SequenceTaskSpec sequence;

    std::uint64_t master_seed = 12345;
    std::vector<std::uint64_t> eval_seeds;
    std::vector<StrategyKind> strategies;
    std::vector<LabellingMode> modes;
    LoopConfig loop;
    Vec lambda_cls_grid;
    Vec lambda_fb_grid;
    double target_metric = 0.5;

    std::string out_dir = "results";
    std::string dataset_path;     // empty = <out>/dataset_<task>.bin
    std::string checkpoint_path;  // empty = <out>/checkpoint_<task>.bin
    std::map<std::string, std::string> raw;  // config echo for manifests

    std::string resolved_dataset_path() const {
        if (!dataset_path.empty()) return dataset_path;
        return out_dir + "/dataset_" + task_name(task) + ".bin";
    }
    std::string resolved_checkpoint_path() const {
        if (!checkpoint_path.empty()) return checkpoint_path;
        return out_dir + "/checkpoint_" + task_name(task) + ".bin";
    }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(raw);
    while (std::getline(in, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = item.find_last_not_of(" \t");
        out.push_back(item.substr(first, last - first + 1));
    }
    return out;
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline Vec parse_double_list(const KvConfig& kv, const std::string& key, const Vec& fallback) {
    if (!kv.has(key)) return fallback;
    Vec out;
    for (const std::string& item : split_list(kv.require_string(key))) {
        try {
            size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " has a non-numeric entry: " + item);
        }
    }
    return out;
}

}  // namespace detail

inline ExperimentConfig experiment_from_kv(const KvConfig& kv) {
    ExperimentConfig cfg;

    const std::string task = kv.require_string("task");
    if (task == "detection") {
        cfg.task = TaskKind::Detection;
    } else if (task == "sequence") {
        cfg.task = TaskKind::Sequence;
    } else if (task == "both") {
        cfg.task = TaskKind::Detection;
        cfg.generate_both = true;
    } else {
        throw ConfigError("config key task must be detection, sequence, or both: " + task);
    }

    cfg.n_samples = kv.get_int("n_samples", cfg.n_samples);
    cfg.n_train = kv.get_int("n_train", 0);
    cfg.n_val = kv.get_int("n_val", 0);
    cfg.n_test = kv.get_int("n_test", 0);
    if (cfg.n_samples < 1) throw ConfigError("n_samples must be positive");

    DetectionTaskSpec& det = cfg.detection;
    det.n_classes = kv.get_int("det_n_classes", det.n_classes);
    det.min_entities = kv.get_int("det_min_entities", det.min_entities);
    det.max_entities = kv.get_int("det_max_entities", det.max_entities);
    det.feature_dim = kv.get_int("det_feature_dim", det.feature_dim);
    det.center_scale = kv.get_double("det_center_scale", det.center_scale);
    det.feature_noise_sigma = kv.get_double("det_noise_sigma", det.feature_noise_sigma);
    det.distractor_rate = kv.get_double("det_distractor_rate", det.distractor_rate);
    det.box_jitter_sigma = kv.get_double("det_box_jitter_sigma", det.box_jitter_sigma);

    SequenceTaskSpec& seq = cfg.sequence;
    seq.n_entity_classes = kv.get_int("seq_n_classes", seq.n_entity_classes);
    seq.max_len = kv.get_int("seq_max_len", seq.max_len);
    seq.min_len = kv.get_int("seq_min_len", seq.min_len);
    seq.feature_dim = kv.get_int("seq_feature_dim", seq.feature_dim);
    seq.center_scale = kv.get_double("seq_center_scale", seq.center_scale);
    seq.feature_noise_sigma = kv.get_double("seq_noise_sigma", seq.feature_noise_sigma);
    seq.entity_start_prob = kv.get_double("seq_entity_start_prob", seq.entity_start_prob);

    cfg.master_seed = kv.get_uint64("seed", cfg.master_seed);
    if (kv.has("seeds")) {
        cfg.eval_seeds.clear();
        for (const std::string& item : detail::split_list(kv.require_string("seeds"))) {
            try {
                size_t used = 0;
                cfg.eval_seeds.push_back(std::stoull(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ConfigError("config key seeds has a non-integer entry: " + item);
            }
        }
    } else {
        cfg.eval_seeds = {101, 102, 103, 104, 105};
    }
    if (cfg.eval_seeds.empty()) throw ConfigError("seeds must be non-empty");
    {
        std::set<std::uint64_t> unique(cfg.eval_seeds.begin(), cfg.eval_seeds.end());
        if (unique.size() != cfg.eval_seeds.size())
            throw ConfigError("seeds must be distinct");
    }

    const std::string strategies =
        kv.get_string("strategies", "random,entropy-max,entropy-sum,margin,policy");
    for (const std::string& name : detail::split_list(strategies))
        cfg.strategies.push_back(parse_strategy(name));
    if (cfg.strategies.empty()) throw ConfigError("strategies must be non-empty");

    const std::string modes = kv.get_string("labelling_modes", "strong,weak");
    for (const std::string& name : detail::split_list(modes))
        cfg.modes.push_back(parse_labelling(name));
    if (cfg.modes.empty()) throw ConfigError("labelling_modes must be non-empty");

    LoopConfig& loop = cfg.loop;
    const bool detection_task = cfg.task == TaskKind::Detection;
    loop.n_cycle = detection_task ? 64 : 25;
    loop.n_init = detection_task ? 512 : 100;
    loop.n_state = detection_task ? 256 : 512;
    loop.n_episodes = kv.get_int("n_episodes", loop.n_episodes);
    loop.n_cycles = kv.get_int("n_cycles", loop.n_cycles);
    loop.n_cycle = kv.get_int("n_cycle", loop.n_cycle);
    loop.n_pool = kv.get_int("n_pool", loop.n_pool);
    loop.n_init = kv.get_int("n_init", loop.n_init);
    loop.n_state = kv.get_int("n_state", loop.n_state);
    loop.met_fraction = kv.get_double("met_fraction", loop.met_fraction);
    loop.top_k = kv.get_int("top_k", loop.top_k);
    loop.budget_seconds = kv.get_int64("budget_seconds", loop.budget_seconds);
    loop.budget_samples = kv.get_int64("budget_samples", loop.budget_samples);
    loop.labelling = parse_labelling(kv.get_string("labelling", "strong"));
    loop.confidence_threshold =
        kv.get_double("confidence_threshold", loop.confidence_threshold);
    loop.iou_threshold = kv.get_double("iou_threshold", loop.iou_threshold);
    loop.paired_candidates = kv.get_bool("paired_candidates", loop.paired_candidates);
    {
        const std::string dir = kv.get_string("margin_direction", "highest");
        if (dir == "highest") {
            loop.margin_direction = MarginDirection::Highest;
        } else if (dir == "lowest") {
            loop.margin_direction = MarginDirection::Lowest;
        } else {
            throw ConfigError("margin_direction must be highest or lowest: " + dir);
        }
    }

    loop.costs.draw_box = kv.get_int64("cost_draw_box", loop.costs.draw_box);
    loop.costs.verify_box = kv.get_int64("cost_verify_box", loop.costs.verify_box);
    loop.costs.mark_span = kv.get_int64("cost_mark_span", loop.costs.mark_span);
    loop.costs.verify_span = kv.get_int64("cost_verify_span", loop.costs.verify_span);

    loop.theta.hidden = kv.get_int("theta_hidden", loop.theta.hidden);
    loop.theta.lr = kv.get_double("theta_lr", loop.theta.lr);
    loop.theta.momentum = kv.get_double("theta_momentum", loop.theta.momentum);
    loop.theta.iterations = kv.get_int("theta_iterations", loop.theta.iterations);
    loop.theta.cold_start = kv.get_bool("theta_cold_start", loop.theta.cold_start);

    loop.policy.hidden = kv.get_int("policy_hidden", loop.policy.hidden);
    loop.policy.lr = kv.get_double("policy_lr", loop.policy.lr);
    loop.policy.momentum = kv.get_double("policy_momentum", loop.policy.momentum);
    loop.policy.lr_decay = kv.get_double("policy_lr_decay", loop.policy.lr_decay);
    loop.policy.gamma = kv.get_double("policy_gamma", loop.policy.gamma);
    loop.policy.batch_size = kv.get_int("policy_batch_size", loop.policy.batch_size);
    loop.policy.sync_every = kv.get_int("policy_sync_every", loop.policy.sync_every);
    {
        const std::string style = kv.get_string("policy_target_style", "double");
        if (style == "double") {
            loop.policy.target_style = TargetStyle::Double;
        } else if (style == "vanilla") {
            loop.policy.target_style = TargetStyle::Vanilla;
        } else {
            throw ConfigError("policy_target_style must be double or vanilla: " + style);
        }
    }

    loop.epsilon.eps0 = kv.get_double("epsilon_start", loop.epsilon.eps0);
    loop.epsilon.factor = kv.get_double("epsilon_factor", loop.epsilon.factor);
    {
        const std::string mode = kv.get_string("epsilon_mode", "multiplicative");
        if (mode == "multiplicative") {
            loop.epsilon.mode = EpsilonSchedule::Mode::Multiplicative;
        } else if (mode == "subtractive") {
            loop.epsilon.mode = EpsilonSchedule::Mode::Subtractive;
        } else {
            throw ConfigError("epsilon_mode must be multiplicative or subtractive: " + mode);
        }
    }

    loop.reward.use_class_entropy = kv.get_bool("reward_use_class_entropy", false);
    loop.reward.lambda_cls = kv.get_double("reward_lambda_cls", 0.0);
    loop.reward.use_feedback = kv.get_bool("reward_use_feedback", false);
    loop.reward.lambda_fb = kv.get_double("reward_lambda_fb", 0.0);
    loop.reward.metric_kind =
        cfg.task == TaskKind::Detection ? MetricKind::AP : MetricKind::Fscore;

    cfg.lambda_cls_grid =
        detail::parse_double_list(kv, "lambda_cls_grid", {0.25, 0.5, 0.75, 1.0});
    cfg.lambda_fb_grid =
        detail::parse_double_list(kv, "lambda_fb_grid", {0.1, 0.25, 0.4, 0.7, 1.0});
    if (loop.reward.use_class_entropy && cfg.lambda_cls_grid.empty())
        throw ConfigError("lambda_cls_grid must be non-empty when class entropy is enabled");
    if (loop.reward.use_feedback && cfg.lambda_fb_grid.empty())
        throw ConfigError("lambda_fb_grid must be non-empty when feedback is enabled");

    cfg.target_metric = kv.get_double("target_metric", cfg.target_metric);
    cfg.out_dir = kv.get_string("out", cfg.out_dir);
    cfg.dataset_path = kv.get_string("dataset_path", "");
    cfg.checkpoint_path = kv.get_string("checkpoint_path", "");
    cfg.raw = kv.entries();

    if (!cfg.generate_both) cfg.loop.validate(cfg.task);
    return cfg;
}

// One finished deployment run plus the identifiers the aggregator needs.
struct RunData {
    std::string run_id;
    std::string strategy;
    std::string mode;
    std::uint64_t seed = 0;
    std::vector<CycleRecord> records;
};

inline std::string make_run_id(StrategyKind strategy, LabellingMode mode, std::uint64_t seed) {
    return std::string(strategy_name(strategy)) + "_" + labelling_name(mode) + "_s" +
           std::to_string(seed);
}

namespace detail {

inline void write_run_csv(const std::string& path, const RunData& run) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "run_id,strategy,cycle,n_labelled,metric,reward_total,reward_vanilla,"
           "reward_cls,reward_fb,seconds_spent\n";
    for (const CycleRecord& r : run.records) {
        out << run.run_id << ',' << run.strategy << ',' << r.cycle << ',' << r.n_labelled << ','
            << fmt(r.metric) << ',' << fmt(r.reward.total) << ',' << fmt(r.reward.vanilla) << ','
            << fmt(r.reward.cls_entropy) << ',' << fmt(r.reward.feedback) << ','
            << r.seconds_spent << '\n';
    }
    if (!out) throw IoError("failed while writing " + path);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline RunData parse_run_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty run file: " + path);
    RunData run;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 10) throw IoError("malformed row in " + path + ": " + line);
        run.run_id = f[0];
        run.strategy = f[1];
        CycleRecord r;
        r.cycle = std::stoi(f[2]);
        r.n_labelled = std::stoi(f[3]);
        r.metric = std::stod(f[4]);
        r.reward.total = std::stod(f[5]);
        r.reward.vanilla = std::stod(f[6]);
        r.reward.cls_entropy = std::stod(f[7]);
        r.reward.feedback = std::stod(f[8]);
        r.seconds_spent = std::stoll(f[9]);
        run.records.push_back(std::move(r));
    }
    // run_id layout: <strategy>_<mode>_s<seed>; strategy names never contain
    // underscores, so the middle token is unambiguous.
    const auto first = run.run_id.find('_');
    const auto second = run.run_id.find('_', first + 1);
    if (first == std::string::npos || second == std::string::npos ||
        run.run_id.compare(second + 1, 1, "s") != 0)
        throw IoError("unparseable run_id in " + path + ": " + run.run_id);
    run.mode = run.run_id.substr(first + 1, second - first - 1);
    run.seed = std::stoull(run.run_id.substr(second + 2));
    return run;
}

inline void sort_runs(std::vector<RunData>& runs) {
    std::sort(runs.begin(), runs.end(), [](const RunData& a, const RunData& b) {
        return std::tie(a.strategy, a.mode, a.seed) < std::tie(b.strategy, b.mode, b.seed);
    });
}

inline double mean_of(const Vec& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

inline double sample_std(const Vec& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Seconds at the first record whose metric reaches the target; -1 if never.
inline long long seconds_to_target(const std::vector<CycleRecord>& records, double target) {
    for (const CycleRecord& r : records)
        if (r.metric >= target) return r.seconds_spent;
    return -1;
}

// Rebuilds curves/<strategy>_<mode>.csv and summary.csv from per-run records.
// Runs must arrive canonically sorted so aggregation order (and therefore
// floating-point rounding) is identical no matter who calls this.
inline void write_aggregates(const std::string& out_dir, const std::vector<RunData>& runs,
                             double target_metric) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir + "/curves");

    std::vector<std::pair<std::string, std::vector<const RunData*>>> cells;
    for (const RunData& run : runs) {
        const std::string key = run.strategy + "_" + run.mode;
        if (cells.empty() || cells.back().first != key) cells.push_back({key, {}});
        cells.back().second.push_back(&run);
    }

    std::ofstream summary(out_dir + "/summary.csv");
    if (!summary) throw IoError("cannot write " + out_dir + "/summary.csv");
    summary << "strategy,mode,n_runs,final_metric_mean,final_metric_std,auc_mean,auc_std,"
               "target_metric,n_reached,seconds_to_target_mean\n";

    for (const auto& [key, cell_runs] : cells) {
        size_t max_len = 0;
        for (const RunData* run : cell_runs) max_len = std::max(max_len, run->records.size());

        std::ofstream curve(out_dir + "/curves/" + key + ".csv");
        if (!curve) throw IoError("cannot write curve file for " + key);
        curve << "cycle,n_runs,metric_mean,metric_std,n_labelled_mean,seconds_mean\n";
        for (size_t c = 0; c < max_len; ++c) {
            Vec metrics, labelled, seconds;
            for (const RunData* run : cell_runs) {
                if (c >= run->records.size()) continue;
                const CycleRecord& r = run->records[c];
                metrics.push_back(r.metric);
                labelled.push_back(static_cast<double>(r.n_labelled));
                seconds.push_back(static_cast<double>(r.seconds_spent));
            }
            curve << c << ',' << metrics.size() << ',' << fmt(mean_of(metrics)) << ','
                  << fmt(sample_std(metrics)) << ',' << fmt(mean_of(labelled)) << ','
                  << fmt(mean_of(seconds)) << '\n';
        }

        Vec finals, aucs, reached_seconds;
        for (const RunData* run : cell_runs) {
            if (run->records.empty()) continue;
            finals.push_back(run->records.back().metric);
            aucs.push_back(learning_curve_auc(run->records));
            const long long s = seconds_to_target(run->records, target_metric);
            if (s >= 0) reached_seconds.push_back(static_cast<double>(s));
        }
        const double stt = reached_seconds.empty() ? -1.0 : mean_of(reached_seconds);
        const auto us = key.find('_');
        summary << key.substr(0, us) << ',' << key.substr(us + 1) << ',' << cell_runs.size()
                << ',' << fmt(mean_of(finals)) << ',' << fmt(sample_std(finals)) << ','
                << fmt(mean_of(aucs)) << ',' << fmt(sample_std(aucs)) << ','
                << fmt(target_metric) << ',' << reached_seconds.size() << ',' << fmt(stt)
                << '\n';
    }
    if (!summary) throw IoError("failed while writing summary.csv");
}

inline void write_manifest(const std::string& out_dir, const std::string& command,
                           const std::map<std::string, std::string>& entries,
                           const std::vector<std::string>& outputs) {
    std::ostringstream json;
    const auto escape = [](const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        return out;
    };
    json << "{\n  \"command\": \"" << escape(command) << "\",\n";
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json << "  \"created_at\": \"" << stamp << "\",\n";
    json << "  \"config\": {\n";
    bool first = true;
    for (const auto& [key, value] : entries) {
        if (!first) json << ",\n";
        first = false;
        json << "    \"" << escape(key) << "\": \"" << escape(value) << "\"";
    }
    json << "\n  },\n  \"outputs\": [\n";
    for (size_t i = 0; i < outputs.size(); ++i)
        json << "    \"" << escape(outputs[i]) << "\"" << (i + 1 < outputs.size() ? "," : "")
             << "\n";
    json << "  ]\n}\n";

    std::ofstream out(out_dir + "/manifest_" + command + ".json");
    if (!out) throw IoError("cannot write manifest in " + out_dir);
    out << json.str();
}

inline Dataset build_dataset(const ExperimentConfig& cfg, TaskKind task) {
    Dataset d = task == TaskKind::Detection
                    ? generate_detection_dataset(cfg.detection, cfg.n_samples, cfg.master_seed)
                    : generate_sequence_dataset(cfg.sequence, cfg.n_samples, cfg.master_seed);
    if (cfg.n_train > 0 || cfg.n_val > 0 || cfg.n_test > 0) {
        if (cfg.n_train <= 0 || cfg.n_val <= 0 || cfg.n_test <= 0)
            throw ConfigError("n_train, n_val, n_test must be given together");
        assign_splits(d, cfg.n_train, cfg.n_val, cfg.n_test);
    }
    return d;
}

inline std::string dataset_path_for(const ExperimentConfig& cfg, TaskKind task) {
    if (!cfg.dataset_path.empty() && !cfg.generate_both) return cfg.dataset_path;
    return cfg.out_dir + "/dataset_" + std::string(task_name(task)) + ".bin";
}

}  // namespace detail

// generate: writes the synthetic dataset file(s).  Byte-identical per seed.
inline std::vector<std::string> cli_generate(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    std::vector<TaskKind> tasks;
    if (cfg.generate_both) {
        tasks = {TaskKind::Detection, TaskKind::Sequence};
    } else {
        tasks = {cfg.task};
    }
    std::vector<std::string> written;
    for (TaskKind task : tasks) {
        const Dataset d = detail::build_dataset(cfg, task);
        const std::string path = detail::dataset_path_for(cfg, task);
        save_dataset(d, path);
        written.push_back(path);
    }
    return written;
}

// train-policy: runs the training loop and writes the checkpoint plus
// per-cycle records and the optimizer loss series.
inline std::vector<std::string> cli_train_policy(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const Dataset d = load_dataset(cfg.resolved_dataset_path());
    if (d.task != cfg.task)
        throw ConfigError("dataset at " + cfg.resolved_dataset_path() +
                          " holds a different task than the config");

    const PolicyTrainResult result = run_policy_training(d, cfg.loop, cfg.master_seed);
    const std::string ck_path = cfg.resolved_checkpoint_path();
    result.checkpoint.save(ck_path);

    const std::string records_path = cfg.out_dir + "/training_records.csv";
    {
        std::ofstream out(records_path);
        if (!out) throw IoError("cannot write " + records_path);
        out << "episode,cycle,n_labelled,metric,reward_total,reward_vanilla,reward_cls,"
               "reward_fb,seconds_spent,epsilon,dqn_loss\n";
        for (const CycleRecord& r : result.records) {
            out << r.episode << ',' << r.cycle << ',' << r.n_labelled << ','
                << detail::fmt(r.metric) << ',' << detail::fmt(r.reward.total) << ','
                << detail::fmt(r.reward.vanilla) << ',' << detail::fmt(r.reward.cls_entropy)
                << ',' << detail::fmt(r.reward.feedback) << ',' << r.seconds_spent << ','
                << detail::fmt(r.epsilon) << ',' << detail::fmt(r.dqn_loss) << '\n';
        }
    }
    const std::string loss_path = cfg.out_dir + "/training_loss.csv";
    {
        std::ofstream out(loss_path);
        if (!out) throw IoError("cannot write " + loss_path);
        out << "step,loss\n";
        for (size_t i = 0; i < result.losses.size(); ++i)
            out << i << ',' << detail::fmt(result.losses[i]) << '\n';
    }
    const std::vector<std::string> written{ck_path, records_path, loss_path};
    detail::write_manifest(cfg.out_dir, "train-policy", cfg.raw, written);
    return written;
}

// evaluate: runs the full strategy x labelling-mode x seed matrix, writing one
// per-cycle CSV and one cost ledger per run, then the aggregated curves and
// summary.  Everything except manifest timestamps is a pure function of the
// config.
inline std::vector<std::string> cli_evaluate(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir + "/runs");
    fs::create_directories(cfg.out_dir + "/ledgers");
    const Dataset d = load_dataset(cfg.resolved_dataset_path());
    if (d.task != cfg.task)
        throw ConfigError("dataset at " + cfg.resolved_dataset_path() +
                          " holds a different task than the config");

    PolicyCheckpoint checkpoint;
    bool checkpoint_loaded = false;
    std::vector<std::string> written;
    std::vector<RunData> runs;

    for (StrategyKind strategy : cfg.strategies) {
        for (LabellingMode mode : cfg.modes) {
            if (strategy == StrategyKind::Policy && !checkpoint_loaded) {
                const std::string path = cfg.resolved_checkpoint_path();
                try {
                    checkpoint = PolicyCheckpoint::load(path);
                } catch (const std::exception& e) {
                    throw IoError(std::string("cell policy/") + labelling_name(mode) +
                                  " needs a checkpoint at " + path + ": " + e.what());
                }
                checkpoint_loaded = true;
            }
            for (std::uint64_t seed : cfg.eval_seeds) {
                LoopConfig loop = cfg.loop;
                loop.labelling = mode;
                if (mode == LabellingMode::Strong) {
                    // Feedback needs annotator verdicts, which only exist
                    // under weak labelling.
                    loop.reward.use_feedback = false;
                    loop.reward.lambda_fb = 0.0;
                }
                const RunResult result = run_deployment(
                    d, strategy, loop, seed,
                    strategy == StrategyKind::Policy ? &checkpoint : nullptr);

                RunData run;
                run.run_id = make_run_id(strategy, mode, seed);
                run.strategy = strategy_name(strategy);
                run.mode = labelling_name(mode);
                run.seed = seed;
                run.records = result.records;

                const std::string run_path = cfg.out_dir + "/runs/" + run.run_id + ".csv";
                detail::write_run_csv(run_path, run);
                const std::string ledger_path =
                    cfg.out_dir + "/ledgers/" + run.run_id + ".csv";
                result.ledger.write_csv(ledger_path);
                written.push_back(run_path);
                written.push_back(ledger_path);
                runs.push_back(std::move(run));
            }
        }
    }

    detail::sort_runs(runs);
    detail::write_aggregates(cfg.out_dir, runs, cfg.target_metric);
    written.push_back(cfg.out_dir + "/summary.csv");
    detail::write_manifest(cfg.out_dir, "evaluate", cfg.raw, written);
    return written;
}

// report: re-derives curves and summary purely from the per-run CSVs on disk.
inline std::vector<std::string> cli_report(const std::string& out_dir, double target_metric) {
    namespace fs = std::filesystem;
    const std::string runs_dir = out_dir + "/runs";
    if (!fs::is_directory(runs_dir)) throw IoError("no runs directory under " + out_dir);

    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(runs_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw IoError("no run CSVs under " + runs_dir);

    std::vector<RunData> runs;
    runs.reserve(paths.size());
    for (const std::string& path : paths) runs.push_back(detail::parse_run_csv(path));
    detail::sort_runs(runs);
    detail::write_aggregates(out_dir, runs, target_metric);
    return {out_dir + "/summary.csv"};
}

}  // namespace opad
