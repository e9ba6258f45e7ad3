#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "edformer/engine/threads.hpp"
#include "edformer/error.hpp"

namespace {

struct Flags {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed;
    std::string out_dir;
    std::string data_path;
    std::vector<std::string> checkpoints;
    std::string input;
    std::string method;
    std::size_t kernel = 0;
    bool invert = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "key = value config file");
    cmd->add_option("--set", f.overrides, "override a config key (key=value); repeatable");
    cmd->add_option("--seed", f.seed, "seed for initialization, shuffling and sampling");
    cmd->add_option("--out", f.out_dir, "directory for CSV outputs");
    cmd->add_option("--data", f.data_path, "dataset CSV");
}

edformer::cli::RunConfig build_config(const Flags& f) {
    edformer::cli::RunConfig config;
    if (!f.config_path.empty()) edformer::cli::read_config_file(f.config_path, config);
    for (const auto& s : f.overrides) edformer::cli::apply_override(s, config);
    if (!f.seed.empty()) config.set("seed", f.seed);
    if (!f.out_dir.empty()) config.set("out_dir", f.out_dir);
    if (!f.data_path.empty()) config.set("data_path", f.data_path);
    if (!f.method.empty()) config.set("method", f.method);
    if (!f.checkpoints.empty()) config.checkpoint = f.checkpoints.back();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    edformer::engine::configure_threads_from_env();

    CLI::App app{"edformer: decomposition-aware variate-token transformer forecaster"};
    app.require_subcommand(1);
    Flags f;

    auto* train = app.add_subcommand("train", "train a model and write a checkpoint plus history.csv");
    add_common(train, f);
    train->add_option("--checkpoint", f.checkpoints, "checkpoint path to write")->expected(1);

    auto* evaluate = app.add_subcommand("evaluate", "test-split MSE/MAE per checkpoint, written to metrics.csv");
    add_common(evaluate, f);
    evaluate->add_option("--checkpoint", f.checkpoints, "checkpoint to evaluate; repeat for several horizons");
    evaluate->add_flag("--invert", f.invert, "report metrics in original units");

    auto* forecast = app.add_subcommand("forecast", "forecast from the last lookback rows of a CSV");
    add_common(forecast, f);
    forecast->add_option("--checkpoint", f.checkpoints, "trained checkpoint")->expected(1);
    forecast->add_option("--input", f.input, "CSV holding at least lookback rows")->required();
    forecast->add_flag("--invert", f.invert, "write the forecast in original units");

    auto* decompose = app.add_subcommand("decompose", "split a CSV into trend and seasonal parts");
    add_common(decompose, f);
    decompose->add_option("--input", f.input, "CSV to decompose")->required();
    decompose->add_option("--kernel", f.kernel, "moving-average kernel (odd)");

    auto* explain = app.add_subcommand("explain", "attribution maps and faithfulness scores on test windows");
    add_common(explain, f);
    explain->add_option("--checkpoint", f.checkpoints, "trained checkpoint")->expected(1);
    explain->add_option("--method", f.method, "fa, fo, ig, gs or winit");

    auto* bench = app.add_subcommand("bench", "forward+backward speed per lookback, written to bench.csv");
    add_common(bench, f);
    bench->add_option("--checkpoint", f.checkpoints, "take the architecture from this checkpoint")->expected(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const auto config = build_config(f);
        const std::string checkpoint = f.checkpoints.empty() ? config.checkpoint : f.checkpoints.back();
        if (train->parsed()) {
            edformer::cli::cmd_train(config, std::cout);
        } else if (evaluate->parsed()) {
            const std::vector<std::string> list = f.checkpoints.empty() ? std::vector{config.checkpoint} : f.checkpoints;
            edformer::cli::cmd_evaluate(config, list, f.invert, std::cout);
        } else if (forecast->parsed()) {
            edformer::cli::cmd_forecast(config, checkpoint, f.input, f.invert, std::cout);
        } else if (decompose->parsed()) {
            const std::size_t kernel = f.kernel != 0 ? f.kernel : config.model.decomposition_kernel;
            edformer::cli::cmd_decompose(config, f.input, kernel, std::cout);
        } else if (explain->parsed()) {
            edformer::cli::cmd_explain(config, checkpoint, std::cout);
        } else if (bench->parsed()) {
            edformer::cli::cmd_bench(config, f.checkpoints.empty() ? std::string() : checkpoint, std::cout);
        }
    } catch (const edformer::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const edformer::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
