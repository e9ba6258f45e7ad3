// Acceptance gate: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "edformer/checkpoint.hpp"
#include "edformer/data.hpp"
#include "edformer/decomposition.hpp"
#include "edformer/engine/threads.hpp"
#include "edformer/explain.hpp"
#include "edformer/format.hpp"
#include "edformer/metrics.hpp"
#include "edformer/model.hpp"
#include "edformer/train.hpp"
#include "support.hpp"

using namespace edformer;
using engine::Tensor;
using test_support::random_tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Toy task shared by several criteria.
struct ToyTask {
    data::Standardizer stats;
    std::vector<data::WindowPair> train;
    std::vector<data::WindowPair> val;
    std::vector<data::WindowPair> test;
};

constexpr std::size_t kToyLookback = 24;
constexpr std::size_t kToyHorizon = 12;

ToyTask make_toy_task() {
    data::ToySeriesOptions opts;
    opts.noise_std = 0.05;
    const auto raw = data::make_toy_series(opts);
    const auto splits = data::split_chronological(raw.rows(), {}, kToyLookback, kToyHorizon);
    const auto s = data::standardize(raw.values, splits.train);
    ToyTask t;
    t.stats = s.stats;
    t.train = data::make_windows(s.values, splits.train, kToyLookback, kToyHorizon);
    t.val = data::make_windows(s.values, splits.val, kToyLookback, kToyHorizon);
    t.test = data::make_windows(s.values, splits.test, kToyLookback, kToyHorizon);
    return t;
}

model::ModelConfig toy_model_config(std::uint64_t seed) {
    model::ModelConfig c;
    c.lookback = kToyLookback;
    c.horizon = kToyHorizon;
    c.variates = 3;
    c.model_width = 32;
    c.heads = 4;
    c.layers = 1;
    c.ffn_width = 64;
    c.decomposition_kernel = 25;
    c.dropout = 0.0;
    c.seed = seed;
    return c;
}

train::TrainConfig toy_train_config(std::uint64_t seed) {
    train::TrainConfig t;
    t.batch_size = 32;
    t.learning_rate = 1e-3;
    t.max_epochs = 1000;
    t.max_steps = 500;
    t.patience = 0;
    t.seed = seed;
    return t;
}

model::Model train_toy(const ToyTask& task, const model::ModelConfig& config, std::uint64_t seed,
                       std::span<const data::WindowPair> train_windows) {
    model::Model m(config);
    train::train(m, train_windows, {}, toy_train_config(seed));
    return m;
}

double repeat_last_mse(std::span<const data::WindowPair> windows) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& w : windows) {
        const std::size_t n = w.input.dim(1);
        const std::size_t last = (w.input.dim(0) - 1) * n;
        for (std::size_t h = 0; h < w.target.dim(0); ++h)
            for (std::size_t v = 0; v < n; ++v) {
                const double d = w.target[h * n + v] - w.input[last + v];
                sum += d * d;
                ++count;
            }
    }
    return sum / static_cast<double>(count);
}

// 1. End-to-end gradient check.
Outcome gradient_correctness() {
    Outcome o;
    const auto start = Clock::now();
    model::ModelConfig c;
    c.lookback = 8;
    c.horizon = 4;
    c.variates = 3;
    c.model_width = 8;
    c.heads = 2;
    c.layers = 1;
    c.ffn_width = 16;
    c.decomposition_kernel = 3;
    c.dropout = 0.0;
    c.seed = 11;
    const model::Model m(c);
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor({2, 8, 3}, rng, -2, 2);
    const Tensor y = random_tensor({2, 4, 3}, rng, -1, 1);
    std::vector<Tensor> inputs{x};
    inputs.insert(inputs.end(), m.parameters().begin(), m.parameters().end());
    const auto r = test_support::check_gradients(inputs, [&](engine::Tape& tape, const std::vector<engine::Var>& leaves) {
        const std::vector<engine::Var> params(leaves.begin() + 1, leaves.end());
        const engine::Var pred = m.forward(leaves[0], params);
        return engine::mean(engine::square(engine::sub(pred, tape.constant(y))));
    });
    const double elapsed = seconds_since(start);
    o.require(r.max_rel < 1e-5, "max relative error " + num(r.max_rel) + " < 1e-5");
    o.require(elapsed < 10.0, "runtime " + num(elapsed) + " s < 10 s");
    return o;
}

// Brute-force trend: mean over an explicit edge-replicated window.
std::vector<double> brute_trend(const std::vector<double>& x, std::size_t k) {
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
    const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(x.size());
    std::vector<double> out(x.size());
    for (std::ptrdiff_t t = 0; t < len; ++t) {
        double s = 0.0;
        for (std::ptrdiff_t j = t - half; j <= t + half; ++j) s += x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, len - 1))];
        out[static_cast<std::size_t>(t)] = s / static_cast<double>(k);
    }
    return out;
}

// 2. Decomposition exactness and linearity.
Outcome decomposition_exactness() {
    Outcome o;
    std::mt19937_64 rng(2);
    std::size_t mismatches = 0, total = 0;
    double linearity = 0.0;
    double oracle = 0.0;
    for (std::size_t k : {3u, 5u, 25u}) {
        const Tensor a = random_tensor({4, 96, 3}, rng, -10, 10);
        const Tensor b = random_tensor({4, 96, 3}, rng, -10, 10);
        const auto da = decomposition::series_decompose(a, k);
        const auto db = decomposition::series_decompose(b, k);
        for (std::size_t i = 0; i < a.size(); ++i) {
            ++total;
            if (da.seasonal[i] + da.trend[i] != a[i]) ++mismatches;
        }
        Tensor mix(a.shape());
        for (std::size_t i = 0; i < a.size(); ++i) mix[i] = 2.5 * a[i] - 0.75 * b[i];
        const auto dm = decomposition::series_decompose(mix, k);
        for (std::size_t i = 0; i < a.size(); ++i) {
            linearity = std::max(linearity, std::abs(dm.trend[i] - (2.5 * da.trend[i] - 0.75 * db.trend[i])));
            linearity = std::max(linearity, std::abs(dm.seasonal[i] - (2.5 * da.seasonal[i] - 0.75 * db.seasonal[i])));
        }
        for (std::size_t bi = 0; bi < 4; ++bi)
            for (std::size_t v = 0; v < 3; ++v) {
                std::vector<double> series(96);
                for (std::size_t t = 0; t < 96; ++t) series[t] = a[(bi * 96 + t) * 3 + v];
                const auto expect = brute_trend(series, k);
                for (std::size_t t = 0; t < 96; ++t)
                    oracle = std::max(oracle, std::abs(da.trend[(bi * 96 + t) * 3 + v] - expect[t]));
            }
    }
    o.require(mismatches == 0, "bitwise reconstruction (" + std::to_string(mismatches) + " of " +
                                   std::to_string(total) + " cells differ)");
    o.require(linearity < 1e-12, "linearity error " + num(linearity) + " < 1e-12");

    Tensor ramp({1, 40, 1});
    for (std::size_t t = 0; t < 40; ++t) ramp[t] = 0.37 * static_cast<double>(t) - 4.0;
    const auto dr = decomposition::series_decompose(ramp, 7);
    double ramp_err = 0.0;
    for (std::size_t t = 3; t + 3 < 40; ++t) ramp_err = std::max(ramp_err, std::abs(dr.trend[t] - ramp[t]));
    o.require(ramp_err < 1e-12, "interior ramp error " + num(ramp_err) + " < 1e-12");

    const Tensor hand({1, 4, 1}, std::vector<double>{1, 2, 3, 4});
    const auto dh = decomposition::series_decompose(hand, 3);
    const std::vector<double> expected{4.0 / 3.0, 2.0, 3.0, 11.0 / 3.0};
    const auto brute = brute_trend({1, 2, 3, 4}, 3);
    double hand_err = 0.0;
    for (std::size_t t = 0; t < 4; ++t) {
        hand_err = std::max(hand_err, std::abs(dh.trend[t] - expected[t]));
        hand_err = std::max(hand_err, std::abs(brute[t] - expected[t]));
    }
    o.require(hand_err < 1e-15 && oracle < 1e-12,
              "k=3 hand case error " + num(hand_err) + ", brute-force oracle error " + num(oracle));
    return o;
}

// 3. Variate permutation equivariance.
Outcome permutation_equivariance() {
    Outcome o;
    model::ModelConfig c;
    c.lookback = 24;
    c.horizon = 12;
    c.variates = 5;
    c.model_width = 16;
    c.heads = 4;
    c.layers = 2;
    c.ffn_width = 32;
    c.decomposition_kernel = 5;
    c.dropout = 0.0;
    c.seed = 3;
    const model::Model m(c);
    std::mt19937_64 rng(33);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor x = random_tensor({2, c.lookback, c.variates}, rng, -3, 3);
        std::vector<std::size_t> perm(c.variates);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Tensor xp(x.shape());
        for (std::size_t r = 0; r < 2 * c.lookback; ++r)
            for (std::size_t v = 0; v < c.variates; ++v) xp[r * c.variates + v] = x[r * c.variates + perm[v]];
        const Tensor y = m.forecast(x);
        const Tensor yp = m.forecast(xp);
        for (std::size_t r = 0; r < 2 * c.horizon; ++r)
            for (std::size_t v = 0; v < c.variates; ++v)
                worst = std::max(worst, std::abs(yp[r * c.variates + v] - y[r * c.variates + perm[v]]));
    }
    o.require(worst < 1e-8, "max deviation " + num(worst) + " < 1e-8 over 100 inputs");
    return o;
}

// 4. Trainability on the toy task.
Outcome trainability(const ToyTask& task) {
    Outcome o;
    const auto start = Clock::now();
    model::Model m(toy_model_config(0));
    const auto result = train::train(m, task.train, {}, toy_train_config(0));
    const double elapsed = seconds_since(start);
    const double train_mse = train::evaluate(m, task.train).mse;
    const double test_mse = train::evaluate(m, task.test).mse;
    const double baseline = repeat_last_mse(task.test);
    o.require(result.steps == 500, std::to_string(result.steps) + " Adam steps");
    o.require(train_mse < 0.01, "train MSE " + num(train_mse) + " < 0.01");
    o.require(test_mse <= 0.7 * baseline,
              "test MSE " + num(test_mse) + " vs repeat-last " + num(baseline) + " (" +
                  num(100.0 * (1.0 - test_mse / baseline)) + "% better, need >= 30%)");
    o.require(elapsed < 120.0, "runtime " + num(elapsed) + " s < 120 s");
    return o;
}

// 5. Ablation ordering.
Outcome ablation_ordering(const ToyTask& task) {
    Outcome o;
    struct Variant {
        const char* name;
        bool decompose;
        model::EmbeddingMode mode;
    };
    const Variant variants[] = {{"full", true, model::EmbeddingMode::variate},
                                {"decompose-only", true, model::EmbeddingMode::temporal},
                                {"no-decompose", false, model::EmbeddingMode::temporal}};
    std::vector<double> means;
    for (const auto& v : variants) {
        double sum = 0.0;
        for (std::uint64_t seed : {0u, 1u, 2u}) {
            auto c = toy_model_config(seed);
            c.use_decomposition = v.decompose;
            c.embedding_mode = v.mode;
            const auto m = train_toy(task, c, seed, task.train);
            sum += train::evaluate(m, task.test).mse;
        }
        means.push_back(sum / 3.0);
    }
    o.require(means[0] <= means[1] && means[1] <= means[2],
              "mean test MSE full " + num(means[0]) + " <= decompose-only " + num(means[1]) + " <= no-decompose " +
                  num(means[2]));
    return o;
}

// 6. Integrated-gradients completeness.
Outcome ig_completeness(const model::Model& m, const ToyTask& task) {
    Outcome o;
    const explain::ModelForecaster f(m);
    const Tensor zero({kToyLookback, 3});
    double worst = 0.0;
    const std::size_t count = std::min<std::size_t>(50, task.test.size());
    for (std::size_t i = 0; i < count; ++i) {
        const auto& x = task.test[i].input;
        const auto map = explain::integrated_gradients(f, x, zero, 64);
        double total = 0.0;
        for (double v : map.scores.data()) total += v;
        const double diff = explain::evaluate_target(f, x) - explain::evaluate_target(f, zero);
        worst = std::max(worst, std::abs(total - diff) / std::max(std::abs(diff), 1e-8));
    }
    o.require(count == 50, std::to_string(count) + " windows");
    o.require(worst < 0.05, "max completeness gap " + num(worst) + " < 0.05");
    return o;
}

// 7. Attribution sanity on a model that only sees variate 0.
Outcome attribution_sanity(const ToyTask& task) {
    Outcome o;
    auto zero_others = [](std::vector<data::WindowPair> windows) {
        for (auto& w : windows)
            for (std::size_t t = 0; t < w.input.dim(0); ++t)
                for (std::size_t v = 1; v < w.input.dim(1); ++v) w.input[t * w.input.dim(1) + v] = 0.0;
        return windows;
    };
    const auto train_windows = zero_others(task.train);
    const auto m = train_toy(task, toy_model_config(7), 7, train_windows);
    const explain::ModelForecaster inner(m);
    const explain::VariateMaskForecaster f(inner, {true, false, false});

    std::vector<data::WindowPair> windows(task.test.begin(), task.test.begin() + 20);
    explain::AttributionOptions opts;
    opts.gs_baselines = {task.train[0].input, task.train[100].input};
    bool ranking = true, dead = true;
    std::string ranking_detail;
    std::vector<explain::AttributionMap> fa_maps;
    for (explain::Method method : explain::kAllMethods) {
        std::vector<explain::AttributionMap> maps;
        for (const auto& w : windows) maps.push_back(explain::attribute(f, w.input, method, opts));
        const auto importance = explain::variate_importance(maps);
        const bool top = importance[0] > importance[1] && importance[0] > importance[2];
        ranking = ranking && top;
        if (!top) ranking_detail += std::string(" ") + std::string(explain::to_string(method));
        const bool removal = method == explain::Method::fa || method == explain::Method::fo ||
                             method == explain::Method::winit;
        for (const auto& map : maps)
            for (std::size_t t = 0; t < kToyLookback; ++t)
                for (std::size_t v = 1; v < 3; ++v) {
                    const double s = map.scores[t * 3 + v];
                    if (removal ? s != 0.0 : std::abs(s) >= 1e-10) dead = false;
                }
        if (method == explain::Method::fa) fa_maps = maps;
    }
    o.require(ranking, "variate 0 ranked highest by all five methods" +
                           (ranking_detail.empty() ? std::string() : " (not by" + ranking_detail + ")"));
    o.require(dead, "dead-input attributions zero");

    std::vector<explain::AttributionMap> random_maps;
    for (std::size_t i = 0; i < windows.size(); ++i)
        random_maps.push_back(explain::random_attribution(kToyLookback, 3, 1000 + i));
    const auto fa = explain::faithfulness(f, windows, fa_maps, 0.2);
    const auto rnd = explain::faithfulness(f, windows, random_maps, 0.2);
    o.require(fa.comprehensiveness_mse > rnd.comprehensiveness_mse,
              "FA comprehensiveness " + num(fa.comprehensiveness_mse) + " > random " + num(rnd.comprehensiveness_mse));
    return o;
}

// 8. Faithfulness limits and monotone trend over k.
Outcome faithfulness_limits(const model::Model& m, const ToyTask& task) {
    Outcome o;
    const explain::ModelForecaster f(m);
    std::vector<data::WindowPair> windows(task.test.begin(), task.test.begin() + 50);
    std::vector<explain::AttributionMap> maps;
    for (const auto& w : windows) maps.push_back(explain::integrated_gradients(f, w.input, Tensor({kToyLookback, 3}), 64));

    const double ks[] = {0.05, 0.2, 0.5, 0.95};
    std::vector<explain::FaithfulnessReport> reports;
    for (double k : ks) reports.push_back(explain::faithfulness(f, windows, maps, k));
    bool comp_monotone = true, suff_monotone = true;
    std::string comp = "comprehensiveness", suff = "sufficiency";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        comp += " " + num(reports[i].comprehensiveness_mse);
        suff += " " + num(reports[i].sufficiency_mse);
        if (i == 0) continue;
        if (reports[i].comprehensiveness_mse < reports[i - 1].comprehensiveness_mse - 1e-6) comp_monotone = false;
        if (reports[i].sufficiency_mse > reports[i - 1].sufficiency_mse + 1e-6) suff_monotone = false;
    }
    o.require(comp_monotone, comp + " non-decreasing in k");
    o.require(suff_monotone, suff + " non-increasing in k");

    const auto tiny = explain::faithfulness(f, windows, maps, 0.001);
    const auto full = explain::faithfulness(f, windows, maps, 0.999);
    o.require(std::abs(tiny.comprehensiveness_mse) < 1e-12 && std::abs(full.sufficiency_mse) < 1e-12,
              "limits: comprehensiveness at k=0.001 " + num(tiny.comprehensiveness_mse) + ", sufficiency at k=0.999 " +
                  num(full.sufficiency_mse));
    return o;
}

// 9. Checkpoint persistence.
Outcome persistence(const model::Model& m, const ToyTask& task) {
    Outcome o;
    const auto dir = std::filesystem::temp_directory_path() / "edformer_acceptance";
    std::filesystem::create_directories(dir);
    const auto first = dir / "first.edf";
    const auto second = dir / "second.edf";
    checkpoint::save(checkpoint::capture(m, task.stats, 500), first);
    const auto loaded = checkpoint::load(first);
    const auto restored = loaded.make_model();
    const Tensor batch = data::stack_inputs(std::span(task.test).first(16));
    o.require(m.forecast(batch) == restored.forecast(batch), "save, load, forecast bitwise equal");
    checkpoint::save(loaded, second);
    auto bytes = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::vector<char>(std::istreambuf_iterator<char>(in), {});
    };
    o.require(bytes(first) == bytes(second), "save, load, save byte identical");
    std::filesystem::remove_all(dir);
    return o;
}

// 10. Determinism of training and gradient SHAP output.
Outcome determinism(const ToyTask& task) {
    Outcome o;
    auto run = [&]() {
        auto c = toy_model_config(4);
        c.dropout = 0.1;
        model::Model m(c);
        auto t = toy_train_config(4);
        t.max_steps = 60;
        const auto result = train::train(m, task.train, task.val, t);
        std::ostringstream history;
        for (const auto& e : result.history)
            history << e.epoch << ',' << format_number(e.train_loss) << ','
                    << (e.val_loss ? format_number(*e.val_loss) : std::string()) << '\n';

        const explain::ModelForecaster f(m);
        std::vector<explain::AttributionMap> maps;
        std::vector<std::size_t> ids;
        for (std::size_t i = 0; i < 5; ++i) {
            maps.push_back(explain::gradient_shap(f, task.test[i].input, std::span(&task.train[i * 7].input, 1), 16,
                                                  0.1, 4));
            ids.push_back(task.test[i].origin);
        }
        std::ostringstream csv;
        explain::write_attribution_csv(csv, maps, ids);
        return std::pair{history.str(), csv.str()};
    };
    const auto a = run();
    const auto b = run();
    o.require(a.first == b.first, "identical training history");
    o.require(a.second == b.second, "identical GS attribution CSV");
    return o;
}

// 11. Speed benchmark per lookback.
Outcome benchmark() {
    Outcome o;
    bool ok = true;
    std::string report;
    for (std::size_t lookback : {96u, 192u, 336u, 720u}) {
        model::ModelConfig c;
        c.lookback = lookback;
        c.horizon = 96;
        c.variates = 7;
        const model::Model m(c);
        std::mt19937_64 rng(lookback);
        std::vector<data::WindowPair> windows;
        for (std::size_t i = 0; i < 32; ++i)
            windows.push_back({random_tensor({lookback, 7}, rng), random_tensor({96, 7}, rng), i});
        const auto r = train::benchmark_speed(m, windows, 3, 32);
        ok = ok && std::isfinite(r.seconds_per_iteration) && r.seconds_per_iteration > 0.0;
        report += (report.empty() ? "" : ", ") + std::to_string(lookback) + ": " +
                  num(r.seconds_per_iteration) + " s/iter";
    }
    o.require(ok, "speed " + report);
    return o;
}

}  // namespace

int main() {
    engine::configure_threads_from_env();
    const ToyTask task = make_toy_task();
    const model::Model toy = train_toy(task, toy_model_config(0), 0, task.train);

    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"gradient correctness", gradient_correctness},
        {"decomposition exactness and linearity", decomposition_exactness},
        {"variate permutation equivariance", permutation_equivariance},
        {"trainability", [&] { return trainability(task); }},
        {"ablation ordering", [&] { return ablation_ordering(task); }},
        {"integrated gradients completeness", [&] { return ig_completeness(toy, task); }},
        {"attribution sanity", [&] { return attribution_sanity(task); }},
        {"faithfulness limits", [&] { return faithfulness_limits(toy, task); }},
        {"persistence", [&] { return persistence(toy, task); }},
        {"determinism", [&] { return determinism(task); }},
        {"benchmark harness", benchmark},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << (i + 1) << "] " << criteria[i].name << ": " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
