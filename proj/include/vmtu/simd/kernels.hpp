#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the solvers and the autodiff layer.
//
// Every kernel exists as a portable scalar reference and, on x86-64, as an
// AVX2/FMA variant. kernels() picks one at first use from CPUID; setting
// VMTU_ISA=scalar in the environment forces the reference path. The two
// variants agree to rounding (FMA contraction and lane-wise reduction order),
// which tests/test_simd.cpp checks.

namespace vmtu::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    const char* name;

    // y += a * x
    void (*axpy)(std::size_t n, double a, const double* x, double* y);

    double (*dot)(std::size_t n, const double* x, const double* y);

    // out[r][c] = neighbor * (N + S + E + W) + center * C, reading a plane
    // padded by one cell on each side.
    void (*stencil5)(const double* padded, std::size_t padded_stride, double* out,
                     std::size_t out_stride, int rows, int cols, double neighbor, double center);

    // out[r][c] = kappa[r][c] * (N + S + E + W - 4 c0[r][c]); kappa, c0 and out
    // share out_stride.
    void (*tfpm_combine)(const double* padded, std::size_t padded_stride, const double* kappa,
                         const double* c0, double* out, std::size_t out_stride, int rows,
                         int cols);

    // out[r][c] += sum_{i,j<k} taps[i*k+j] * in[r+i][c+j]  (stride-1 cross-correlation)
    void (*corr2d_accumulate)(const double* in, std::size_t in_stride, const double* taps, int k,
                              double* out, std::size_t out_stride, int rows, int cols);

    // grad_taps[i*k+j] += sum_{r,c} grad_out[r][c] * in[r+i][c+j]
    void (*corr2d_weight_grad)(const double* in, std::size_t in_stride, const double* grad_out,
                               std::size_t grad_out_stride, int rows, int cols, int k,
                               double* grad_taps);
};

const KernelTable& scalar_kernels();

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

/// The table selected for this process.
const KernelTable& kernels();

}  // namespace vmtu::simd
