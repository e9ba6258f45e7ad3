#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edformer/data.hpp"
#include "edformer/engine/tensor.hpp"
#include "edformer/model.hpp"

namespace edformer::explain {

using engine::Tensor;

enum class Method { fa, fo, ig, gs, winit, random };

std::string_view to_string(Method method);
// Accepts fa, fo, ig, gs, winit and random.
Method method_from_string(std::string_view text);
inline constexpr Method kAllMethods[] = {Method::fa, Method::fo, Method::ig, Method::gs, Method::winit};

// Scalar reduction of a [H, N] forecast, expressed as a weight matrix.
struct TargetFunctional {
    enum class Kind { mean_all, cell, variate_mean };
    Kind kind = Kind::mean_all;
    std::size_t step = 0;     // cell only
    std::size_t variate = 0;  // cell and variate_mean

    static TargetFunctional mean_all() { return {}; }
    static TargetFunctional cell(std::size_t h, std::size_t n) { return {Kind::cell, h, n}; }
    static TargetFunctional variate_mean(std::size_t n) { return {Kind::variate_mean, 0, n}; }

    Tensor weights(std::size_t horizon, std::size_t variates) const;
    std::string describe() const;
};

// Anything that maps [B, L, N] windows to [B, H, N] forecasts and can
// differentiate a weighted sum of its outputs with respect to its inputs.
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual std::size_t lookback() const = 0;
    virtual std::size_t horizon() const = 0;
    virtual std::size_t variates() const = 0;
    virtual Tensor forecast(const Tensor& batch) const = 0;
    // d/dx of sum_b sum_{h,n} weights[h, n] * forecast(x)[b, h, n], shaped like `batch`.
    virtual Tensor input_gradient(const Tensor& batch, const Tensor& weights) const = 0;
};

class ModelForecaster final : public Forecaster {
public:
    explicit ModelForecaster(const model::Model& model) : model_(model) {}
    std::size_t lookback() const override { return model_.config().lookback; }
    std::size_t horizon() const override { return model_.config().horizon; }
    std::size_t variates() const override { return model_.config().variates; }
    Tensor forecast(const Tensor& batch) const override;
    Tensor input_gradient(const Tensor& batch, const Tensor& weights) const override;

private:
    const model::Model& model_;
};

// Replaces the listed variates with zeros before they reach `inner`, which
// makes those inputs provably dead.
class VariateMaskForecaster final : public Forecaster {
public:
    VariateMaskForecaster(const Forecaster& inner, std::vector<bool> keep);
    std::size_t lookback() const override { return inner_.lookback(); }
    std::size_t horizon() const override { return inner_.horizon(); }
    std::size_t variates() const override { return inner_.variates(); }
    Tensor forecast(const Tensor& batch) const override;
    Tensor input_gradient(const Tensor& batch, const Tensor& weights) const override;
    Tensor apply_mask(const Tensor& batch) const;

private:
    const Forecaster& inner_;
    std::vector<bool> keep_;
};

struct AttributionMap {
    Method method = Method::fa;
    Tensor scores;  // [L, N]
    TargetFunctional target;
};

AttributionMap feature_ablation(const Forecaster& f, const Tensor& window, const TargetFunctional& target = {},
                                double baseline = 0.0);
AttributionMap feature_occlusion(const Forecaster& f, const Tensor& window, std::size_t patch_length,
                                 const TargetFunctional& target = {}, double baseline = 0.0);
AttributionMap integrated_gradients(const Forecaster& f, const Tensor& window, const Tensor& baseline,
                                    std::size_t steps = 64, const TargetFunctional& target = {});
AttributionMap gradient_shap(const Forecaster& f, const Tensor& window, std::span<const Tensor> baselines,
                             std::size_t samples = 32, double noise_std = 0.1, std::uint64_t seed = 0,
                             const TargetFunctional& target = {});
AttributionMap winit(const Forecaster& f, const Tensor& window, std::size_t win_size = 8,
                     const TargetFunctional& target = {}, double baseline = 0.0);
// Uniform random scores, the reference ranking for faithfulness comparisons.
AttributionMap random_attribution(std::size_t lookback, std::size_t variates, std::uint64_t seed);

// Scalar target for one [L, N] window.
double evaluate_target(const Forecaster& f, const Tensor& window, const TargetFunctional& target = {});

struct AttributionOptions {
    TargetFunctional target;
    double baseline = 0.0;
    std::size_t patch_length = 4;
    std::size_t ig_steps = 64;
    std::size_t gs_samples = 32;
    double gs_noise_std = 0.1;
    // Extra gradient-SHAP baselines besides the all-baseline window.
    std::vector<Tensor> gs_baselines;
    std::size_t win_size = 8;
    std::uint64_t seed = 0;
};

AttributionMap attribute(const Forecaster& f, const Tensor& window, Method method, const AttributionOptions& options);

// Cell indices (t * N + n) ordered by |score| descending, ties by index.
std::vector<std::size_t> rank_cells(const AttributionMap& map);
// True for the round(k * L * N) highest-ranked cells.
std::vector<bool> top_k_mask(const AttributionMap& map, double k_fraction);

struct FaithfulnessReport {
    std::string method;
    double k_fraction = 0.0;
    double comprehensiveness_mse = 0.0;
    double comprehensiveness_mae = 0.0;
    double sufficiency_mse = 0.0;
    double sufficiency_mae = 0.0;
};

// Error deltas versus the unmasked forecast, averaged over windows.
// Comprehensiveness masks the top-k cells; sufficiency masks the rest.
FaithfulnessReport faithfulness(const Forecaster& f, std::span<const data::WindowPair> windows,
                                std::span<const AttributionMap> maps, double k_fraction, double baseline = 0.0);

// Mean |score| per variate over all windows and time steps.
std::vector<double> variate_importance(std::span<const AttributionMap> maps);
// Mean |score| per cell over windows, [L, N].
Tensor mean_saliency(std::span<const AttributionMap> maps);

void write_attribution_csv(std::ostream& out, std::span<const AttributionMap> maps,
                           std::span<const std::size_t> window_ids);
void write_importance_csv(std::ostream& out, std::span<const double> importance,
                          std::span<const std::string> variate_names);
void write_saliency_csv(std::ostream& out, const Tensor& saliency);
void write_faithfulness_csv(std::ostream& out, std::span<const FaithfulnessReport> reports);

}  // namespace edformer::explain
