#pragma once

#include "vmtu/ad/tensor.hpp"

#include <functional>
#include <initializer_list>
#include <vector>

namespace vmtu::ad {

/// Handle to a value recorded on a Tape.
struct Var {
    int id = -1;
    bool valid() const noexcept { return id >= 0; }
};

class Tape;

/// Receives the output cotangent and accumulates into the inputs' gradients.
using BackwardFn = std::function<void(Tape& tape, const Tensor& grad_out)>;

/// Reverse-mode tape. Nodes are stored in recording order, so every input
/// precedes its consumer; backward walks them in exact reverse.
class Tape {
public:
    /// Leaf that never receives a gradient.
    Var constant(Tensor value);
    /// Leaf whose gradient is readable through grad() after backward.
    Var leaf(Tensor value);
    /// Leaf bound to a Param; backward adds into param.grad when trainable.
    Var param(Param& p);

    Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
    Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

    const Tensor& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
    bool needs_grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).needs_grad; }

    /// Gradient buffer of v, zero-initialised on first access.
    Tensor& grad(Var v);
    const Tensor& grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).grad; }

    /// Backpropagates from a scalar output with cotangent `seed`.
    void backward(Var output, double seed = 1.0);
    void backward(Var output, const Tensor& cotangent);

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<int> inputs;
        BackwardFn backward;
        Param* param = nullptr;
        bool needs_grad = false;
    };

    std::vector<Node> nodes_;
};

}  // namespace vmtu::ad
