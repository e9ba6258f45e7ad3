#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include "edformer/engine/tensor.hpp"

namespace edformer::engine {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t dim(std::size_t axis) const { return value().dim(axis); }
    std::size_t rank() const { return value().rank(); }
};

// Single-shot reverse-mode tape. Operations append nodes in execution order,
// so inputs always precede their consumers; backward() walks the nodes once
// in reverse and may be called at most once.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad = false);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    // Appends an op result. `backward` is dropped when no input needs a gradient.
    Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const;

    void backward(Var loss);

    // Gradient of the loss with respect to `v`; absent for values that do not
    // require gradients. Only meaningful after backward().
    std::optional<Tensor> grad(Var v) const;

    std::size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    // For backward rules: the gradient flowing into node `id` (may be empty
    // when nothing downstream contributed) and the zero-initialised
    // accumulation buffer of an input.
    std::span<const double> incoming(std::size_t id) const { return nodes_[id].grad; }
    std::span<double> accumulator(Var input);
    std::span<const double> data(std::size_t id) const { return nodes_[id].value.data(); }
    bool needs_grad(Var input) const { return nodes_[input.id].requires_grad; }

private:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    void check_owned(Var v, const char* what) const;

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

}  // namespace edformer::engine
