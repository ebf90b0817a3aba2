#include "vmtu/ad/tape.hpp"

#include "vmtu/error.hpp"

namespace vmtu::ad {

Var Tape::constant(Tensor value)
{
    nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, false});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value)
{
    nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, true});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Param& p)
{
    nodes_.push_back(Node{p.value, {}, {}, {}, &p, p.trainable});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward)
{
    return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward)
{
    Node node;
    node.value = std::move(value);
    for (Var in : inputs) {
        if (in.id < 0 || static_cast<std::size_t>(in.id) >= nodes_.size())
            throw InvalidArgument("tape input does not precede its consumer");
        node.inputs.push_back(in.id);
        node.needs_grad = node.needs_grad || nodes_[static_cast<std::size_t>(in.id)].needs_grad;
    }
    if (node.needs_grad)
        node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad(Var v)
{
    Node& node = nodes_.at(static_cast<std::size_t>(v.id));
    if (node.grad.shape() != node.value.shape())
        node.grad = Tensor(node.value.shape());
    return node.grad;
}

void Tape::backward(Var output, double seed)
{
    if (value(output).size() != 1)
        throw ShapeMismatch("backward(seed) needs a scalar output");
    backward(output, Tensor(value(output).shape(), seed));
}

void Tape::backward(Var output, const Tensor& cotangent)
{
    if (cotangent.shape() != value(output).shape())
        throw ShapeMismatch("cotangent shape does not match output");
    for (Node& node : nodes_)
        node.grad = Tensor();
    grad(output) = cotangent;

    for (std::size_t i = static_cast<std::size_t>(output.id) + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.needs_grad || node.grad.empty())
            continue;
        if (node.backward) {
            // nodes_ is not resized during backward, so the reference stays valid.
            node.backward(*this, node.grad);
        } else if (node.param != nullptr && node.param->trainable) {
            Param& p = *node.param;
            if (p.grad.shape() != p.value.shape())
                p.grad = Tensor(p.value.shape());
            auto dst = p.grad.values();
            const auto src = node.grad.values();
            for (std::size_t k = 0; k < dst.size(); ++k)
                dst[k] += src[k];
        }
    }
}

}  // namespace vmtu::ad
