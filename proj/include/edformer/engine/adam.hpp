#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "edformer/engine/tensor.hpp"

namespace edformer::engine {

struct AdamOptions {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are created on the first step
// and must keep matching the parameter shapes afterwards.
class Adam {
public:
    explicit Adam(AdamOptions options = {});

    void step(std::span<Tensor> params, std::span<const Tensor> grads);

    const AdamOptions& options() const { return options_; }
    std::uint64_t steps() const { return t_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }

private:
    AdamOptions options_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace edformer::engine
