#pragma once

#include "vmtu/ad/tape.hpp"
#include "vmtu/field.hpp"

namespace vmtu::ad {

enum class PadMode {
    Zero,
    Reflect,  // half-sample symmetric; width 1 is edge replication (zero normal flux)
    Wrap,
};

struct Padding {
    PadMode mode = PadMode::Zero;
    int size = 0;

    static Padding zero(int k) { return {PadMode::Zero, k}; }
    static Padding reflect(int k) { return {PadMode::Reflect, k}; }
    static Padding wrap(int k) { return {PadMode::Wrap, k}; }
};

PadMode pad_mode_for(BoundaryCondition bc) noexcept;

/// Cross-correlation. x: (N,Cin,H,W), w: (Cout,Cin,k,k) with odd k, b: (1,Cout,1,1).
Var conv2d(Tape& tape, Var x, Var w, Var b, int stride, Padding padding);

Var sigmoid(Tape& tape, Var x);
Var relu(Tape& tape, Var x);
Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scalar_mul(Tape& tape, Var x, double s);
Var square(Tape& tape, Var x);
Var sum(Tape& tape, Var x);

/// Running statistics for batch_norm_2d, shape (1,C,1,1).
struct BatchNormState {
    Tensor running_mean;
    Tensor running_var;
    double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch

    explicit BatchNormState(int channels = 0);
};

/// Per-channel normalisation over (N,H,W). Training mode uses batch statistics and
/// updates `state`; eval mode uses the running statistics.
Var batch_norm_2d(Tape& tape, Var x, Var gamma, Var beta, BatchNormState& state, bool training,
                  double eps_bn = 1e-5);

Var maxpool2(Tape& tape, Var x);
Var upsample_nearest2(Tape& tape, Var x);
Var concat_channels(Tape& tape, Var a, Var b);

/// Differentiable tailored-stencil Laplacian on every (n,c) plane. With
/// freeze_center the dependence of lambda and c0 on the centre value is
/// treated as constant in backward.
Var tfpm_laplacian_node(Tape& tape, Var u, double eps1, double eps2, double h,
                        BoundaryCondition bc, bool freeze_center = false);

/// 5-point Laplacian on every (n,c) plane.
Var fdm_laplacian_node(Tape& tape, Var v, double h, BoundaryCondition bc);

/// W'(u) = 4u^3 - 6u^2 + 2u elementwise.
Var double_well_prime_node(Tape& tape, Var u);

/// v = eps1 * lap - W'(u) / eps2, evaluated exactly as v_step does.
Var ch_potential_node(Tape& tape, Var u, Var lap, double eps1, double eps2);

/// u - tau * lap_v - tau * force, evaluated exactly as u_step does.
Var ch_update_node(Tape& tape, Var u, Var lap_v, Var force, double tau);

namespace detail {
/// Pads every (n,c) plane of x by p.size cells.
Tensor pad_planes(const Tensor& x, Padding p);
/// Adjoint of pad_planes: folds ghost-cell gradients back onto the interior.
void pad_planes_adjoint(const Tensor& grad_padded, Padding p, Tensor& grad_x);
}  // namespace detail

}  // namespace vmtu::ad
