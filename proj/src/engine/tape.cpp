#include "edformer/engine/tape.hpp"

#include <string>

#include "edformer/error.hpp"

namespace edformer::engine {

const Tensor& Var::value() const {
    if (tape == nullptr) throw TapeError("value of a Var that is not on any tape");
    return tape->value(*this);
}

void Tape::check_owned(Var v, const char* what) const {
    if (v.tape != this || v.id >= nodes_.size()) {
        throw TapeError(std::string(what) + ": tensor is not on this tape");
    }
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    if (consumed_) throw TapeError("cannot record on a tape after backward()");
    nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    if (consumed_) throw TapeError("cannot record on a tape after backward()");
    bool needs = false;
    for (const Var& in : inputs) {
        check_owned(in, "op input");
        needs = needs || nodes_[in.id].requires_grad;
    }
    require_finite(value.data(), "op result");
    Node node{std::move(value), {}, needs, {}};
    if (needs) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
    check_owned(v, "value");
    return nodes_[v.id].value;
}

bool Tape::requires_grad(Var v) const {
    check_owned(v, "requires_grad");
    return nodes_[v.id].requires_grad;
}

std::span<double> Tape::accumulator(Var input) {
    Node& node = nodes_[input.id];
    if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
    return node.grad;
}

void Tape::backward(Var loss) {
    check_owned(loss, "backward");
    if (consumed_) throw TapeError("backward() already ran on this tape; record a new one");
    if (nodes_[loss.id].value.size() != 1) {
        throw TapeError("backward() needs a scalar loss, got shape " + shape_string(nodes_[loss.id].value.shape()));
    }
    consumed_ = true;
    if (!nodes_[loss.id].requires_grad) return;
    nodes_[loss.id].grad.assign(1, 1.0);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
        node.backward(*this, id);
    }
}

std::optional<Tensor> Tape::grad(Var v) const {
    check_owned(v, "grad");
    const Node& node = nodes_[v.id];
    if (!node.requires_grad) return std::nullopt;
    if (node.grad.empty()) return Tensor::zeros(node.value.shape());
    return Tensor(node.value.shape(), node.grad);
}

}  // namespace edformer::engine
