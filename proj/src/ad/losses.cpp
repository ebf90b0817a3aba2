#include "vmtu/ad/losses.hpp"

#include "vmtu/error.hpp"

#include <algorithm>
#include <cmath>

namespace vmtu::ad {

namespace {

void check(const Tensor& p, const Tensor& t, const char* name)
{
    if (p.shape() != t.shape())
        throw ShapeMismatch(std::string(name) + ": prediction " + p.shape().str() + " vs target " +
                            t.shape().str());
    if (p.size() == 0)
        throw ShapeMismatch(std::string(name) + ": empty tensors");
}

}  // namespace

std::string to_string(LossKind kind)
{
    switch (kind) {
    case LossKind::Bce:
        return "bce";
    case LossKind::L2:
        return "l2";
    case LossKind::Hinge:
        return "hinge";
    }
    return "?";
}

LossKind loss_from_string(const std::string& name)
{
    if (name == "bce")
        return LossKind::Bce;
    if (name == "l2")
        return LossKind::L2;
    if (name == "hinge")
        return LossKind::Hinge;
    throw InvalidArgument("unknown loss '" + name + "' (expected bce, l2 or hinge)");
}

Var bce(Tape& tape, Var pv, Var tv)
{
    const Tensor& p = tape.value(pv);
    const Tensor& t = tape.value(tv);
    check(p, t, "bce");
    const double n = static_cast<double>(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
        acc += t[i] * std::log(q) + (1.0 - t[i]) * std::log(1.0 - q);
    }
    Tensor out({1, 1, 1, 1}, -acc / n);
    return tape.record(std::move(out), {pv, tv}, [pv, tv, n](Tape& tp, const Tensor& g) {
        const Tensor& p = tp.value(pv);
        const Tensor& t = tp.value(tv);
        if (tp.needs_grad(pv)) {
            Tensor& gp = tp.grad(pv);
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (p[i] < kBceClamp || p[i] > 1.0 - kBceClamp)
                    continue;  // clamp is flat here
                gp[i] += g[0] * (-(t[i] / p[i]) + (1.0 - t[i]) / (1.0 - p[i])) / n;
            }
        }
        if (tp.needs_grad(tv)) {
            Tensor& gt = tp.grad(tv);
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double q = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
                gt[i] += g[0] * -(std::log(q) - std::log(1.0 - q)) / n;
            }
        }
    });
}

Var l2(Tape& tape, Var pv, Var tv)
{
    const Tensor& p = tape.value(pv);
    const Tensor& t = tape.value(tv);
    check(p, t, "l2");
    const double n = static_cast<double>(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        acc += (p[i] - t[i]) * (p[i] - t[i]);
    Tensor out({1, 1, 1, 1}, acc / n);
    return tape.record(std::move(out), {pv, tv}, [pv, tv, n](Tape& tp, const Tensor& g) {
        const Tensor& p = tp.value(pv);
        const Tensor& t = tp.value(tv);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = 2.0 * (p[i] - t[i]) * g[0] / n;
            if (tp.needs_grad(pv))
                tp.grad(pv)[i] += d;
            if (tp.needs_grad(tv))
                tp.grad(tv)[i] -= d;
        }
    });
}

Var hinge(Tape& tape, Var pv, Var tv)
{
    const Tensor& p = tape.value(pv);
    const Tensor& t = tape.value(tv);
    check(p, t, "hinge");
    const double n = static_cast<double>(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        acc += std::max(0.0, 1.0 - (2.0 * t[i] - 1.0) * (2.0 * p[i] - 1.0));
    Tensor out({1, 1, 1, 1}, acc / n);
    return tape.record(std::move(out), {pv, tv}, [pv, tv, n](Tape& tp, const Tensor& g) {
        const Tensor& p = tp.value(pv);
        const Tensor& t = tp.value(tv);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double ts = 2.0 * t[i] - 1.0;
            const double ps = 2.0 * p[i] - 1.0;
            if (1.0 - ts * ps <= 0.0)
                continue;
            if (tp.needs_grad(pv))
                tp.grad(pv)[i] += -2.0 * ts * g[0] / n;
            if (tp.needs_grad(tv))
                tp.grad(tv)[i] += -2.0 * ps * g[0] / n;
        }
    });
}

Var loss(Tape& tape, LossKind kind, Var pred, Var target)
{
    switch (kind) {
    case LossKind::Bce:
        return bce(tape, pred, target);
    case LossKind::L2:
        return l2(tape, pred, target);
    case LossKind::Hinge:
        return hinge(tape, pred, target);
    }
    throw InvalidArgument("unknown loss kind");
}

}  // namespace vmtu::ad
