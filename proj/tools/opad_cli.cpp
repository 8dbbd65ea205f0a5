// Command-line front end: generate synthetic datasets, train the acquisition
// policy, evaluate the strategy matrix, and re-aggregate reports.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "opad/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

opad::ExperimentConfig load_experiment(const CommonArgs& args) {
    opad::KvConfig kv = opad::KvConfig::parse_file(args.config_path);
    if (args.seed_given) kv.set("seed", std::to_string(args.seed));
    if (!args.out_dir.empty()) kv.set("out", args.out_dir);
    return opad::experiment_from_kv(kv);
}

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* config = cmd->add_option("--config", args.config_path, "key = value config file");
    if (config_required) config->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "master seed (overrides config)")
        ->each([&args](const std::string&) { args.seed_given = true; });
}

void print_written(const std::vector<std::string>& paths) {
    for (const std::string& path : paths) std::cout << "wrote " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic active-learning experiment runner"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, report_args;
    CLI::App* gen = app.add_subcommand("generate", "write synthetic dataset files");
    add_common(gen, gen_args, true);
    CLI::App* train =
        app.add_subcommand("train-policy", "train the acquisition policy and checkpoint it");
    add_common(train, train_args, true);
    CLI::App* eval =
        app.add_subcommand("evaluate", "run the strategy x labelling matrix and aggregate");
    add_common(eval, eval_args, true);
    CLI::App* report =
        app.add_subcommand("report", "rebuild curves and summary from per-run CSVs");
    add_common(report, report_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            print_written(opad::cli_generate(load_experiment(gen_args)));
        } else if (train->parsed()) {
            print_written(opad::cli_train_policy(load_experiment(train_args)));
        } else if (eval->parsed()) {
            print_written(opad::cli_evaluate(load_experiment(eval_args)));
        } else if (report->parsed()) {
            double target = 0.5;
            std::string out_dir = report_args.out_dir;
            if (!report_args.config_path.empty()) {
                const opad::KvConfig kv = opad::KvConfig::parse_file(report_args.config_path);
                target = kv.get_double("target_metric", target);
                if (out_dir.empty()) out_dir = kv.get_string("out", "");
            }
            if (out_dir.empty())
                throw opad::ConfigError("report needs --out or a config with an out key");
            print_written(opad::cli_report(out_dir, target));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
