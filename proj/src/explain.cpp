#include "edformer/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "edformer/error.hpp"
#include "edformer/format.hpp"
#include "edformer/metrics.hpp"

namespace edformer::explain {

namespace {

constexpr std::size_t kChunk = 128;

void check_window(const Forecaster& f, const Tensor& window) {
    if (window.rank() != 2 || window.dim(0) != f.lookback() || window.dim(1) != f.variates()) {
        throw ShapeError("attribution window " + engine::shape_string(window.shape()) + " does not match [" +
                         std::to_string(f.lookback()) + ", " + std::to_string(f.variates()) + "]");
    }
}

// Forecasts every window in `inputs` (each L * N values), in chunks.
std::vector<Tensor> forecast_all(const Forecaster& f, const std::vector<std::vector<double>>& inputs) {
    const std::size_t l = f.lookback();
    const std::size_t n = f.variates();
    const std::size_t per = f.horizon() * n;
    std::vector<Tensor> out;
    out.reserve(inputs.size());
    for (std::size_t start = 0; start < inputs.size(); start += kChunk) {
        const std::size_t stop = std::min(inputs.size(), start + kChunk);
        std::vector<double> flat;
        flat.reserve((stop - start) * l * n);
        for (std::size_t i = start; i < stop; ++i) flat.insert(flat.end(), inputs[i].begin(), inputs[i].end());
        const Tensor pred = f.forecast(Tensor({stop - start, l, n}, std::move(flat)));
        const auto d = pred.data();
        for (std::size_t i = 0; i < stop - start; ++i) {
            out.emplace_back(engine::Shape{f.horizon(), n},
                             std::vector<double>(d.begin() + static_cast<std::ptrdiff_t>(i * per),
                                                 d.begin() + static_cast<std::ptrdiff_t>((i + 1) * per)));
        }
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<double> targets_of(const Forecaster& f, const std::vector<std::vector<double>>& inputs,
                               const Tensor& weights) {
    const auto preds = forecast_all(f, inputs);
    std::vector<double> out(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) out[i] = dot(preds[i].data(), weights.data());
    return out;
}

// Gradients of the target at each point, averaged.
std::vector<double> mean_gradient(const Forecaster& f, const std::vector<std::vector<double>>& points,
                                  const Tensor& weights) {
    const std::size_t l = f.lookback();
    const std::size_t n = f.variates();
    std::vector<double> sum(l * n, 0.0);
    for (std::size_t start = 0; start < points.size(); start += kChunk) {
        const std::size_t stop = std::min(points.size(), start + kChunk);
        std::vector<double> flat;
        flat.reserve((stop - start) * l * n);
        for (std::size_t i = start; i < stop; ++i) flat.insert(flat.end(), points[i].begin(), points[i].end());
        const Tensor g = f.input_gradient(Tensor({stop - start, l, n}, std::move(flat)), weights);
        const auto d = g.data();
        for (std::size_t i = 0; i < stop - start; ++i)
            for (std::size_t c = 0; c < l * n; ++c) sum[c] += d[i * l * n + c];
    }
    for (double& v : sum) v /= static_cast<double>(points.size());
    return sum;
}

std::vector<double> copy_values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

std::string_view to_string(Method method) {
    switch (method) {
        case Method::fa: return "fa";
        case Method::fo: return "fo";
        case Method::ig: return "ig";
        case Method::gs: return "gs";
        case Method::winit: return "winit";
        case Method::random: return "random";
    }
    return "unknown";
}

Method method_from_string(std::string_view text) {
    for (Method m : {Method::fa, Method::fo, Method::ig, Method::gs, Method::winit, Method::random}) {
        if (text == to_string(m)) return m;
    }
    throw ConfigError("unknown attribution method '" + std::string(text) + "' (expected fa, fo, ig, gs, winit or random)");
}

Tensor TargetFunctional::weights(std::size_t horizon, std::size_t variates) const {
    Tensor w({horizon, variates});
    auto d = w.data();
    switch (kind) {
        case Kind::mean_all:
            std::fill(d.begin(), d.end(), 1.0 / static_cast<double>(horizon * variates));
            break;
        case Kind::cell:
            if (step >= horizon || variate >= variates) throw ConfigError("target cell lies outside the forecast");
            d[step * variates + variate] = 1.0;
            break;
        case Kind::variate_mean:
            if (variate >= variates) throw ConfigError("target variate lies outside the forecast");
            for (std::size_t h = 0; h < horizon; ++h) d[h * variates + variate] = 1.0 / static_cast<double>(horizon);
            break;
    }
    return w;
}

std::string TargetFunctional::describe() const {
    switch (kind) {
        case Kind::mean_all: return "mean";
        case Kind::cell: return "cell(" + std::to_string(step) + "," + std::to_string(variate) + ")";
        case Kind::variate_mean: return "variate_mean(" + std::to_string(variate) + ")";
    }
    return "unknown";
}

Tensor ModelForecaster::forecast(const Tensor& batch) const { return model_.forecast(batch); }

Tensor ModelForecaster::input_gradient(const Tensor& batch, const Tensor& weights) const {
    model_.check_input(batch);
    engine::Tape tape;
    const auto params = model_.bind(tape, false);
    const engine::Var x = tape.leaf(batch, true);
    const engine::Var out = model_.forward(x, params);
    const engine::Var target = engine::sum(engine::mul(out, tape.constant(weights)));
    tape.backward(target);
    return *tape.grad(x);
}

VariateMaskForecaster::VariateMaskForecaster(const Forecaster& inner, std::vector<bool> keep)
    : inner_(inner), keep_(std::move(keep)) {
    if (keep_.size() != inner_.variates()) throw ShapeError("variate mask has the wrong length");
}

Tensor VariateMaskForecaster::apply_mask(const Tensor& batch) const {
    Tensor out = batch;
    auto d = out.data();
    const std::size_t n = keep_.size();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!keep_[i % n]) d[i] = 0.0;
    return out;
}

Tensor VariateMaskForecaster::forecast(const Tensor& batch) const { return inner_.forecast(apply_mask(batch)); }

Tensor VariateMaskForecaster::input_gradient(const Tensor& batch, const Tensor& weights) const {
    Tensor g = inner_.input_gradient(apply_mask(batch), weights);
    auto d = g.data();
    const std::size_t n = keep_.size();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!keep_[i % n]) d[i] = 0.0;
    return g;
}

double evaluate_target(const Forecaster& f, const Tensor& window, const TargetFunctional& target) {
    check_window(f, window);
    return targets_of(f, {copy_values(window)}, target.weights(f.horizon(), f.variates()))[0];
}

AttributionMap feature_ablation(const Forecaster& f, const Tensor& window, const TargetFunctional& target,
                                double baseline) {
    check_window(f, window);
    const std::size_t l = f.lookback();
    const std::size_t n = f.variates();
    std::vector<std::vector<double>> inputs{copy_values(window)};
    for (std::size_t v = 0; v < n; ++v) {
        auto x = copy_values(window);
        for (std::size_t t = 0; t < l; ++t) x[t * n + v] = baseline;
        inputs.push_back(std::move(x));
    }
    const auto y = targets_of(f, inputs, target.weights(f.horizon(), n));
    Tensor scores({l, n});
    for (std::size_t v = 0; v < n; ++v) {
        const double s = std::abs(y[0] - y[v + 1]);
        for (std::size_t t = 0; t < l; ++t) scores[t * n + v] = s;
    }
    return {Method::fa, std::move(scores), target};
}

AttributionMap feature_occlusion(const Forecaster& f, const Tensor& window, std::size_t patch_length,
                                 const TargetFunctional& target, double baseline) {
    check_window(f, window);
    const std::size_t l = f.lookback();
    const std::size_t n = f.variates();
    if (patch_length == 0 || patch_length > l) throw ConfigError("patch_length must lie in [1, lookback]");
    std::vector<std::vector<double>> inputs{copy_values(window)};
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t s = 0; s < l; s += patch_length) {
            auto x = copy_values(window);
            for (std::size_t t = s; t < std::min(l, s + patch_length); ++t) x[t * n + v] = baseline;
            inputs.push_back(std::move(x));
        }
    const auto y = targets_of(f, inputs, target.weights(f.horizon(), n));
    Tensor scores({l, n});
    std::size_t k = 1;
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t s = 0; s < l; s += patch_length, ++k) {
            const double score = std::abs(y[0] - y[k]);
            for (std::size_t t = s; t < std::min(l, s + patch_length); ++t) scores[t * n + v] = score;
        }
    return {Method::fo, std::move(scores), target};
}

AttributionMap integrated_gradients(const Forecaster& f, const Tensor& window, const Tensor& baseline,
                                    std::size_t steps, const TargetFunctional& target) {
    check_window(f, window);
    if (baseline.shape() != window.shape()) throw ShapeError("baseline must match the window shape");
    if (steps == 0) throw ConfigError("integrated gradients needs at least one step");
    const auto x = window.data();
    const auto x0 = baseline.data();
    std::vector<std::vector<double>> points;
    points.reserve(steps);
    for (std::size_t i = 1; i <= steps; ++i) {
        const double alpha = (static_cast<double>(i) - 0.5) / static_cast<double>(steps);
        std::vector<double> p(x.size());
        for (std::size_t c = 0; c < p.size(); ++c) p[c] = x0[c] + alpha * (x[c] - x0[c]);
        points.push_back(std::move(p));
    }
    const auto g = mean_gradient(f, points, target.weights(f.horizon(), f.variates()));
    Tensor scores(window.shape());
    for (std::size_t c = 0; c < g.size(); ++c) scores[c] = (x[c] - x0[c]) * g[c];
    return {Method::ig, std::move(scores), target};
}

AttributionMap gradient_shap(const Forecaster& f, const Tensor& window, std::span<const Tensor> baselines,
                             std::size_t samples, double noise_std, std::uint64_t seed,
                             const TargetFunctional& target) {
    check_window(f, window);
    if (baselines.empty()) throw ConfigError("gradient SHAP needs at least one baseline");
    if (samples == 0) throw ConfigError("gradient SHAP needs at least one sample");
    if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
    for (const auto& b : baselines)
        if (b.shape() != window.shape()) throw ShapeError("baseline must match the window shape");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, baselines.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const auto x = window.data();
    const std::size_t cells = x.size();
    const Tensor weights = target.weights(f.horizon(), f.variates());
    std::vector<double> scores(cells, 0.0);
    // One sample at a time so each gradient is paired with its own baseline.
    std::vector<std::vector<double>> points;
    std::vector<std::size_t> chosen;
    auto flush = [&] {
        if (points.empty()) return;
        std::vector<double> flat;
        flat.reserve(points.size() * cells);
        for (const auto& p : points) flat.insert(flat.end(), p.begin(), p.end());
        const Tensor g = f.input_gradient(Tensor({points.size(), f.lookback(), f.variates()}, std::move(flat)), weights);
        const auto gd = g.data();
        for (std::size_t s = 0; s < points.size(); ++s) {
            const auto b = baselines[chosen[s]].data();
            for (std::size_t c = 0; c < cells; ++c) scores[c] += gd[s * cells + c] * (x[c] - b[c]);
        }
        points.clear();
        chosen.clear();
    };
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t bi = pick(rng);
        const double alpha = unit(rng);
        const auto b = baselines[bi].data();
        std::vector<double> p(cells);
        for (std::size_t c = 0; c < cells; ++c) p[c] = b[c] + alpha * (x[c] - b[c]) + noise_std * gauss(rng);
        points.push_back(std::move(p));
        chosen.push_back(bi);
        if (points.size() == kChunk) flush();
    }
    flush();
    for (double& v : scores) v /= static_cast<double>(samples);
    return {Method::gs, Tensor(window.shape(), std::move(scores)), target};
}

AttributionMap winit(const Forecaster& f, const Tensor& window, std::size_t win_size, const TargetFunctional& target,
                     double baseline) {
    check_window(f, window);
    const std::size_t l = f.lookback();
    const std::size_t n = f.variates();
    if (win_size == 0 || win_size > l) throw ConfigError("win_size must lie in [1, lookback]");
    std::vector<std::vector<double>> inputs{copy_values(window)};
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t t = 0; t < l; ++t)
            for (std::size_t d = 0; d < win_size && t + d < l; ++d) {
                auto x = copy_values(window);
                for (std::size_t u = t; u <= t + d; ++u) x[u * n + v] = baseline;
                inputs.push_back(std::move(x));
            }
    const auto y = targets_of(f, inputs, target.weights(f.horizon(), n));
    Tensor scores({l, n});
    std::size_t k = 1;
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t t = 0; t < l; ++t) {
            double s = 0.0;
            for (std::size_t d = 0; d < win_size && t + d < l; ++d, ++k) {
                s += std::abs(y[0] - y[k]) / static_cast<double>(d + 1);
            }
            scores[t * n + v] = s;
        }
    return {Method::winit, std::move(scores), target};
}

AttributionMap random_attribution(std::size_t lookback, std::size_t variates, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Tensor scores({lookback, variates});
    for (double& v : scores.data()) v = unit(rng);
    return {Method::random, std::move(scores), {}};
}

AttributionMap attribute(const Forecaster& f, const Tensor& window, Method method, const AttributionOptions& o) {
    switch (method) {
        case Method::fa: return feature_ablation(f, window, o.target, o.baseline);
        case Method::fo: return feature_occlusion(f, window, o.patch_length, o.target, o.baseline);
        case Method::ig:
            return integrated_gradients(f, window, Tensor(window.shape(), o.baseline), o.ig_steps, o.target);
        case Method::gs: {
            std::vector<Tensor> baselines{Tensor(window.shape(), o.baseline)};
            baselines.insert(baselines.end(), o.gs_baselines.begin(), o.gs_baselines.end());
            return gradient_shap(f, window, baselines, o.gs_samples, o.gs_noise_std, o.seed, o.target);
        }
        case Method::winit: return winit(f, window, o.win_size, o.target, o.baseline);
        case Method::random: return random_attribution(window.dim(0), window.dim(1), o.seed);
    }
    throw ConfigError("unknown attribution method");
}

std::vector<std::size_t> rank_cells(const AttributionMap& map) {
    const auto s = map.scores.data();
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(s[a]) > std::abs(s[b]); });
    return order;
}

std::vector<bool> top_k_mask(const AttributionMap& map, double k_fraction) {
    if (!(k_fraction > 0.0 && k_fraction < 1.0)) throw ConfigError("k_fraction must lie in (0, 1)");
    const auto order = rank_cells(map);
    const auto k = static_cast<std::size_t>(std::llround(k_fraction * static_cast<double>(order.size())));
    std::vector<bool> mask(order.size(), false);
    for (std::size_t i = 0; i < k; ++i) mask[order[i]] = true;
    return mask;
}

FaithfulnessReport faithfulness(const Forecaster& f, std::span<const data::WindowPair> windows,
                                std::span<const AttributionMap> maps, double k_fraction, double baseline) {
    if (windows.empty()) throw ConfigError("faithfulness needs at least one window");
    if (maps.size() != windows.size()) throw ShapeError("need one attribution map per window");
    std::vector<std::vector<double>> inputs;
    inputs.reserve(3 * windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w) {
        check_window(f, windows[w].input);
        const auto mask = top_k_mask(maps[w], k_fraction);
        auto original = copy_values(windows[w].input);
        auto removed = original;
        auto kept = original;
        for (std::size_t c = 0; c < mask.size(); ++c) (mask[c] ? removed[c] : kept[c]) = baseline;
        inputs.push_back(std::move(original));
        inputs.push_back(std::move(removed));
        inputs.push_back(std::move(kept));
    }
    const auto preds = forecast_all(f, inputs);

    FaithfulnessReport r;
    r.method = maps.empty() ? "" : std::string(to_string(maps[0].method));
    r.k_fraction = k_fraction;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const Tensor& truth = windows[w].target;
        const double mse0 = metrics::mse(preds[3 * w], truth);
        const double mae0 = metrics::mae(preds[3 * w], truth);
        r.comprehensiveness_mse += metrics::mse(preds[3 * w + 1], truth) - mse0;
        r.comprehensiveness_mae += metrics::mae(preds[3 * w + 1], truth) - mae0;
        r.sufficiency_mse += metrics::mse(preds[3 * w + 2], truth) - mse0;
        r.sufficiency_mae += metrics::mae(preds[3 * w + 2], truth) - mae0;
    }
    const double count = static_cast<double>(windows.size());
    r.comprehensiveness_mse /= count;
    r.comprehensiveness_mae /= count;
    r.sufficiency_mse /= count;
    r.sufficiency_mae /= count;
    return r;
}

std::vector<double> variate_importance(std::span<const AttributionMap> maps) {
    if (maps.empty()) return {};
    const std::size_t l = maps[0].scores.dim(0);
    const std::size_t n = maps[0].scores.dim(1);
    std::vector<double> out(n, 0.0);
    for (const auto& m : maps)
        for (std::size_t t = 0; t < l; ++t)
            for (std::size_t v = 0; v < n; ++v) out[v] += std::abs(m.scores[t * n + v]);
    for (double& v : out) v /= static_cast<double>(maps.size() * l);
    return out;
}

Tensor mean_saliency(std::span<const AttributionMap> maps) {
    if (maps.empty()) throw ConfigError("no attribution maps to average");
    Tensor out(maps[0].scores.shape());
    for (const auto& m : maps)
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += std::abs(m.scores[c]);
    for (double& v : out.data()) v /= static_cast<double>(maps.size());
    return out;
}

void write_attribution_csv(std::ostream& out, std::span<const AttributionMap> maps,
                           std::span<const std::size_t> window_ids) {
    out << "window,t,variate,score\n";
    for (std::size_t w = 0; w < maps.size(); ++w) {
        const auto& s = maps[w].scores;
        const std::size_t id = w < window_ids.size() ? window_ids[w] : w;
        for (std::size_t t = 0; t < s.dim(0); ++t)
            for (std::size_t v = 0; v < s.dim(1); ++v)
                out << id << ',' << t << ',' << v << ',' << format_number(s[t * s.dim(1) + v]) << '\n';
    }
}

void write_importance_csv(std::ostream& out, std::span<const double> importance,
                          std::span<const std::string> variate_names) {
    out << "variate,name,importance\n";
    for (std::size_t v = 0; v < importance.size(); ++v) {
        out << v << ',' << (v < variate_names.size() ? variate_names[v] : "x" + std::to_string(v)) << ','
            << format_number(importance[v]) << '\n';
    }
}

void write_saliency_csv(std::ostream& out, const Tensor& saliency) {
    out << "t,variate,saliency\n";
    const std::size_t n = saliency.dim(1);
    for (std::size_t t = 0; t < saliency.dim(0); ++t)
        for (std::size_t v = 0; v < n; ++v) out << t << ',' << v << ',' << format_number(saliency[t * n + v]) << '\n';
}

void write_faithfulness_csv(std::ostream& out, std::span<const FaithfulnessReport> reports) {
    out << "method,k_fraction,comprehensiveness_mse,comprehensiveness_mae,sufficiency_mse,sufficiency_mae\n";
    for (const auto& r : reports) {
        out << r.method << ',' << format_number(r.k_fraction) << ',' << format_number(r.comprehensiveness_mse) << ','
            << format_number(r.comprehensiveness_mae) << ',' << format_number(r.sufficiency_mse) << ','
            << format_number(r.sufficiency_mae) << '\n';
    }
}

}  // namespace edformer::explain
