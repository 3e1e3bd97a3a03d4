// command line front end: convert / simulate / evaluate / report

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "scenesim/pipeline.hpp"

namespace {

struct CommonArgs {
    std::vector<std::string> scenarios;
    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 1;
    int horizon = 0;
    int rollouts = 0;
    int workers = 1;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_sim_flags) {
    cmd->add_option("scenarios", args.scenarios, "scenario JSON files")->required();
    cmd->add_option("--config", args.config_path, "config JSON file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "base random seed");
    cmd->add_option("--horizon", args.horizon, "total steps incl. history");
    cmd->add_option("--workers", args.workers, "parallel worker threads")
        ->check(CLI::Range(1, 256));
    if (with_sim_flags) {
        cmd->add_option("--rollouts", args.rollouts, "rollouts per scenario");
        cmd->add_option("--format", args.format, "rollout file format: csv or bin")
            ->check(CLI::IsMember({"csv", "bin"}));
    }
}

scenesim::Config load_config_or_default(const std::string& path) {
    if (path.empty()) return {};
    return scenesim::load_config(path);
}

scenesim::RunOptions make_options(const CommonArgs& args) {
    scenesim::RunOptions opt;
    opt.seed = args.seed;
    opt.horizon = args.horizon;
    opt.rollouts = args.rollouts;
    opt.out_dir = args.out_dir;
    opt.rollout_format = args.format;
    return opt;
}

// runs fn(path) for each scenario on a small worker pool; scenario failures
// are isolated and reported, not fatal
template <typename Fn>
int for_each_scenario(const std::vector<std::string>& scenarios, int workers, Fn fn) {
    std::atomic<size_t> next{0};
    std::atomic<int> failures{0};
    std::mutex log_mutex;
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= scenarios.size()) return;
            try {
                fn(scenarios[i]);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(log_mutex);
                std::cerr << "error: " << scenarios[i] << ": " << e.what() << "\n";
                ++failures;
            }
        }
    };
    const int n = std::min<int>(workers, static_cast<int>(scenarios.size()));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return failures.load() > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vectorized driving scenarios to SUMO-style networks, closed-loop "
                 "rollouts, and realism metrics"};
    app.require_subcommand(1);

    CommonArgs convert_args, simulate_args, evaluate_args;
    std::vector<std::string> report_inputs;
    std::string report_out = "out";

    CLI::App* convert = app.add_subcommand("convert", "build a road network and SUMO files");
    add_common(convert, convert_args, false);
    CLI::App* simulate = app.add_subcommand("simulate", "run stochastic rollouts");
    add_common(simulate, simulate_args, true);
    CLI::App* evaluate = app.add_subcommand("evaluate", "score rollouts against recorded data");
    add_common(evaluate, evaluate_args, false);
    CLI::App* report = app.add_subcommand("report", "aggregate metrics files into a CSV report");
    report->add_option("metrics", report_inputs, "metrics.json files (default: <out>/*/metrics.json)");
    report->add_option("--out", report_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (convert->parsed()) {
            const auto config = load_config_or_default(convert_args.config_path);
            const auto opt = make_options(convert_args);
            return for_each_scenario(convert_args.scenarios, convert_args.workers,
                                     [&](const std::string& path) {
                                         scenesim::run_convert(path, opt, config);
                                     });
        }
        if (simulate->parsed()) {
            const auto config = load_config_or_default(simulate_args.config_path);
            const auto opt = make_options(simulate_args);
            return for_each_scenario(simulate_args.scenarios, simulate_args.workers,
                                     [&](const std::string& path) {
                                         scenesim::run_simulate(path, opt, config);
                                     });
        }
        if (evaluate->parsed()) {
            const auto config = load_config_or_default(evaluate_args.config_path);
            const auto opt = make_options(evaluate_args);
            return for_each_scenario(
                evaluate_args.scenarios, evaluate_args.workers, [&](const std::string& path) {
                    const scenesim::Scenario sc = scenesim::load_scenario(path);
                    const auto rollouts = scenesim::find_rollout_files(opt, sc.id);
                    if (rollouts.empty())
                        throw scenesim::ValidationError("no rollout files under " + opt.out_dir +
                                                        "/" + sc.id);
                    scenesim::run_evaluate(path, rollouts, opt, config);
                });
        }
        if (report->parsed()) {
            scenesim::RunOptions opt;
            opt.out_dir = report_out;
            std::vector<std::string> inputs = report_inputs;
            if (inputs.empty()) {
                namespace fs = std::filesystem;
                if (fs::exists(report_out))
                    for (const auto& dir : fs::directory_iterator(report_out)) {
                        const auto candidate = dir.path() / "metrics.json";
                        if (fs::exists(candidate)) inputs.push_back(candidate.string());
                    }
                std::sort(inputs.begin(), inputs.end());
            }
            if (inputs.empty()) {
                std::cerr << "error: no metrics files found\n";
                return 2;
            }
            const std::string csv = scenesim::run_report(inputs, opt);
            std::cout << csv << "\n";
            return 0;
        }
    } catch (const scenesim::SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
