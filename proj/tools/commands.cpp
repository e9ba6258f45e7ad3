#include "commands.hpp"

#include <fstream>
#include <ostream>
#include <random>

#include "edformer/checkpoint.hpp"
#include "edformer/decomposition.hpp"
#include "edformer/error.hpp"
#include "edformer/format.hpp"
#include "edformer/metrics.hpp"

namespace edformer::cli {

namespace {

std::ofstream open_output(const RunConfig& config, const std::string& name) {
    std::filesystem::create_directories(config.out_dir);
    const auto path = config.out_dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void check_shape_against_config(const RunConfig& config, const model::ModelConfig& stored) {
    if (config.was_set("lookback") && config.model.lookback != stored.lookback) {
        throw ConfigError("checkpoint lookback " + std::to_string(stored.lookback) + " does not match configured " +
                          std::to_string(config.model.lookback));
    }
    if (config.was_set("horizon") && config.model.horizon != stored.horizon) {
        throw ConfigError("checkpoint horizon " + std::to_string(stored.horizon) + " does not match configured " +
                          std::to_string(config.model.horizon));
    }
}

void check_variates(std::size_t data_variates, const model::ModelConfig& stored) {
    if (data_variates != stored.variates) {
        throw ConfigError("dataset has " + std::to_string(data_variates) + " variates but the checkpoint expects " +
                          std::to_string(stored.variates));
    }
}

}  // namespace

PreparedData prepare_data(const RunConfig& config, std::size_t lookback, std::size_t horizon,
                          const data::Standardizer* stats) {
    PreparedData d;
    if (config.synthetic) {
        d.raw = data::make_toy_series(config.toy);
    } else {
        if (config.data_path.empty()) throw ConfigError("no dataset: set data_path or synthetic = true");
        if (!std::filesystem::exists(config.data_path)) {
            throw IoError("dataset not found: '" + config.data_path + "'");
        }
        d.raw = data::load_csv(config.data_path);
    }
    const std::size_t total = d.raw.rows();
    if (config.train_rows != 0 || config.val_rows != 0 || config.test_rows != 0) {
        d.splits = data::split_by_sizes(total, config.train_rows, config.val_rows, config.test_rows, lookback, horizon);
    } else {
        d.splits = data::split_chronological(total, config.split, lookback, horizon);
    }
    d.stats = stats != nullptr ? *stats : data::fit_standardizer(d.raw.values, d.splits.train);
    d.values = d.stats.transform(d.raw.values);
    return d;
}

void cmd_train(const RunConfig& config, std::ostream& log) {
    model::ModelConfig mc = config.model;
    const PreparedData d = prepare_data(config, mc.lookback, mc.horizon);
    if (config.was_set("variates") && mc.variates != d.raw.variates()) {
        throw ConfigError("configured variates " + std::to_string(mc.variates) + " but the dataset has " +
                          std::to_string(d.raw.variates()));
    }
    mc.variates = d.raw.variates();
    mc.validate();
    config.train.validate();

    const auto train_windows = data::make_windows(d.values, d.splits.train, mc.lookback, mc.horizon, config.stride);
    const auto val_windows = data::make_windows(d.values, d.splits.val, mc.lookback, mc.horizon, config.stride);
    model::Model m(mc);
    const auto result = train::train(m, train_windows, val_windows, config.train);

    auto history = open_output(config, "history.csv");
    history << "epoch,train_loss,val_loss\n";
    for (const auto& e : result.history) {
        history << e.epoch << ',' << format_number(e.train_loss) << ','
                << (e.val_loss ? format_number(*e.val_loss) : std::string()) << '\n';
    }
    if (!std::filesystem::path(config.checkpoint).parent_path().empty()) {
        std::filesystem::create_directories(std::filesystem::path(config.checkpoint).parent_path());
    }
    checkpoint::save(checkpoint::capture(m, d.stats, result.steps), config.checkpoint);

    log << "trained " << result.steps << " steps over " << result.history.size() << " epochs";
    if (result.best_epoch) log << ", best epoch " << *result.best_epoch;
    log << "\ncheckpoint: " << config.checkpoint << "\nhistory: " << (config.out_dir / "history.csv").string()
        << '\n';
}

void cmd_evaluate(const RunConfig& config, const std::vector<std::string>& checkpoints, bool invert,
                  std::ostream& log) {
    if (checkpoints.empty()) throw ConfigError("evaluate needs at least one --checkpoint");
    std::vector<metrics::HorizonResult> results;
    for (const auto& path : checkpoints) {
        const auto ck = checkpoint::load(path);
        check_shape_against_config(config, ck.config);
        const auto m = ck.make_model();
        const PreparedData d = prepare_data(config, ck.config.lookback, ck.config.horizon, &ck.data_stats);
        check_variates(d.raw.variates(), ck.config);
        const auto windows =
            data::make_windows(d.values, d.splits.test, ck.config.lookback, ck.config.horizon, config.stride);
        metrics::HorizonResult r{ck.config.horizon, 0.0, 0.0};
        if (invert) {
            const Tensor pred = ck.data_stats.inverse(train::predict(m, windows));
            const Tensor truth = ck.data_stats.inverse(data::stack_targets(windows));
            r.mse = metrics::mse(pred, truth);
            r.mae = metrics::mae(pred, truth);
        } else {
            const auto e = train::evaluate(m, windows);
            r.mse = e.mse;
            r.mae = e.mae;
        }
        log << "horizon " << r.horizon << ": mse " << format_number(r.mse) << ", mae " << format_number(r.mae) << '\n';
        results.push_back(r);
    }
    const auto summary = metrics::summarize_horizons(results);
    auto out = open_output(config, "metrics.csv");
    metrics::write_report_csv(out, config.dataset_name, summary);
}

void cmd_forecast(const RunConfig& config, const std::string& checkpoint_path, const std::filesystem::path& input,
                  bool invert, std::ostream& log) {
    const auto ck = checkpoint::load(checkpoint_path);
    check_shape_against_config(config, ck.config);
    const auto m = ck.make_model();
    if (input.empty()) throw ConfigError("forecast needs --input");
    if (!std::filesystem::exists(input)) throw IoError("input not found: '" + input.string() + "'");
    const auto raw = data::load_csv(input);
    check_variates(raw.variates(), ck.config);
    const std::size_t l = ck.config.lookback;
    const std::size_t n = ck.config.variates;
    if (raw.rows() < l) {
        throw Error("input has " + std::to_string(raw.rows()) + " rows; the lookback needs " + std::to_string(l));
    }
    const auto all = raw.values.data();
    std::vector<double> tail(all.end() - static_cast<std::ptrdiff_t>(l * n), all.end());
    const Tensor window = ck.data_stats.transform(Tensor({1, l, n}, std::move(tail)));
    Tensor pred = m.forecast(window);
    if (invert) pred = ck.data_stats.inverse(pred);

    auto out = open_output(config, "forecast.csv");
    for (std::size_t v = 0; v < n; ++v) out << (v ? "," : "") << raw.variate_names[v];
    out << '\n';
    for (std::size_t h = 0; h < ck.config.horizon; ++h) {
        for (std::size_t v = 0; v < n; ++v) out << (v ? "," : "") << format_number(pred[h * n + v]);
        out << '\n';
    }
    log << "forecast " << ck.config.horizon << " steps for " << n << " variates"
        << (invert ? " (original units)" : " (standardized units)") << '\n';
}

void cmd_decompose(const RunConfig& config, const std::filesystem::path& input, std::size_t kernel,
                   std::ostream& log) {
    if (input.empty()) throw ConfigError("decompose needs --input");
    if (!std::filesystem::exists(input)) throw IoError("input not found: '" + input.string() + "'");
    const auto raw = data::load_csv(input);
    const std::size_t t_len = raw.rows();
    const std::size_t n = raw.variates();
    const auto parts = decomposition::series_decompose(raw.values.reshaped({1, t_len, n}), kernel);

    auto out = open_output(config, "decompose.csv");
    out << "t,variate,original,trend,seasonal\n";
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t v = 0; v < n; ++v) {
            const std::size_t i = t * n + v;
            out << t << ',' << raw.variate_names[v] << ',' << format_number(raw.values[i]) << ','
                << format_number(parts.trend[i]) << ',' << format_number(parts.seasonal[i]) << '\n';
        }
    log << "decomposed " << t_len << " rows x " << n << " variates with kernel " << kernel << '\n';
}

void cmd_explain(const RunConfig& config, const std::string& checkpoint_path, std::ostream& log) {
    const explain::Method method = explain::method_from_string(config.method);
    const auto ck = checkpoint::load(checkpoint_path);
    check_shape_against_config(config, ck.config);
    const auto m = ck.make_model();
    const std::size_t l = ck.config.lookback;
    const std::size_t h = ck.config.horizon;
    const PreparedData d = prepare_data(config, l, h, &ck.data_stats);
    check_variates(d.raw.variates(), ck.config);

    auto windows = data::make_windows(d.values, d.splits.test, l, h, config.stride);
    if (config.explain_windows != 0 && windows.size() > config.explain_windows) windows.resize(config.explain_windows);

    explain::AttributionOptions options = config.attribution;
    if (method == explain::Method::gs && config.gs_random_baselines > 0) {
        const auto train_windows = data::make_windows(d.values, d.splits.train, l, h, 1);
        std::mt19937_64 rng(options.seed);
        std::uniform_int_distribution<std::size_t> pick(0, train_windows.size() - 1);
        for (std::size_t i = 0; i < config.gs_random_baselines; ++i) {
            options.gs_baselines.push_back(train_windows[pick(rng)].input);
        }
    }

    const explain::ModelForecaster forecaster(m);
    std::vector<explain::AttributionMap> maps;
    std::vector<std::size_t> ids;
    for (const auto& w : windows) {
        maps.push_back(explain::attribute(forecaster, w.input, method, options));
        ids.push_back(w.origin);
    }
    std::vector<explain::FaithfulnessReport> reports;
    for (double k : config.k_fractions) {
        reports.push_back(explain::faithfulness(forecaster, windows, maps, k, options.baseline));
    }

    const std::string tag(explain::to_string(method));
    {
        auto out = open_output(config, "attribution_" + tag + ".csv");
        explain::write_attribution_csv(out, maps, ids);
    }
    {
        auto out = open_output(config, "importance_" + tag + ".csv");
        const auto importance = explain::variate_importance(maps);
        explain::write_importance_csv(out, importance, d.raw.variate_names);
    }
    {
        auto out = open_output(config, "saliency_" + tag + ".csv");
        explain::write_saliency_csv(out, explain::mean_saliency(maps));
    }
    {
        auto out = open_output(config, "faithfulness_" + tag + ".csv");
        explain::write_faithfulness_csv(out, reports);
    }
    log << "explained " << maps.size() << " windows with " << tag << '\n';
    for (const auto& r : reports) {
        log << "k=" << format_number(r.k_fraction) << " comprehensiveness mse " << format_number(r.comprehensiveness_mse)
            << " mae " << format_number(r.comprehensiveness_mae) << ", sufficiency mse "
            << format_number(r.sufficiency_mse) << " mae " << format_number(r.sufficiency_mae) << '\n';
    }
}

void cmd_bench(const RunConfig& config, const std::string& checkpoint_path, std::ostream& log) {
    model::ModelConfig base = config.model;
    if (!checkpoint_path.empty()) base = checkpoint::load(checkpoint_path).config;
    if (config.bench_iters == 0) throw ConfigError("bench_iters must be positive");
    if (config.bench_windows == 0) throw ConfigError("bench_windows must be positive");

    auto out = open_output(config, "bench.csv");
    out << "lookback,s_per_iter,cost_seconds,iterations\n";
    log << "lookback  speed(s/iter)  cost(s)\n";
    for (std::size_t lookback : config.bench_lookbacks) {
        model::ModelConfig mc = base;
        mc.lookback = lookback;
        mc.validate();
        const model::Model m(mc);

        std::mt19937_64 rng(mc.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<data::WindowPair> windows;
        for (std::size_t i = 0; i < config.bench_windows; ++i) {
            Tensor in({mc.lookback, mc.variates});
            Tensor target({mc.horizon, mc.variates});
            for (double& v : in.data()) v = gauss(rng);
            for (double& v : target.data()) v = gauss(rng);
            windows.push_back({std::move(in), std::move(target), i});
        }
        const auto r = train::benchmark_speed(m, windows, config.bench_iters, config.train.batch_size);
        out << lookback << ',' << format_number(r.seconds_per_iteration) << ',' << format_number(r.total_seconds) << ','
            << r.iterations << '\n';
        log << lookback << "  " << format_number(r.seconds_per_iteration) << "  " << format_number(r.total_seconds)
            << '\n';
    }
}

}  // namespace edformer::cli
