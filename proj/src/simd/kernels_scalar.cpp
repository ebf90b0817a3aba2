#include "vmtu/simd/kernels.hpp"

namespace vmtu::simd {
namespace {

void axpy(std::size_t n, double a, const double* x, double* y)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] += a * x[i];
}

double dot(std::size_t n, const double* x, const double* y)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += x[i] * y[i];
    return acc;
}

void stencil5(const double* padded, std::size_t ps, double* out, std::size_t os, int rows,
              int cols, double neighbor, double center)
{
    for (int r = 0; r < rows; ++r) {
        const double* up = padded + static_cast<std::size_t>(r) * ps + 1;
        const double* mid = up + ps;
        const double* down = mid + ps;
        double* o = out + static_cast<std::size_t>(r) * os;
        for (int c = 0; c < cols; ++c)
            o[c] = neighbor * (((up[c] + down[c]) + mid[c - 1]) + mid[c + 1]) + center * mid[c];
    }
}

void tfpm_combine(const double* padded, std::size_t ps, const double* kappa, const double* c0,
                  double* out, std::size_t os, int rows, int cols)
{
    for (int r = 0; r < rows; ++r) {
        const double* up = padded + static_cast<std::size_t>(r) * ps + 1;
        const double* mid = up + ps;
        const double* down = mid + ps;
        const std::size_t off = static_cast<std::size_t>(r) * os;
        for (int c = 0; c < cols; ++c) {
            const double sum = ((up[c] + down[c]) + mid[c - 1]) + mid[c + 1];
            out[off + c] = kappa[off + c] * (sum - 4.0 * c0[off + c]);
        }
    }
}

void corr2d_accumulate(const double* in, std::size_t is, const double* taps, int k, double* out,
                       std::size_t os, int rows, int cols)
{
    for (int r = 0; r < rows; ++r) {
        double* o = out + static_cast<std::size_t>(r) * os;
        for (int i = 0; i < k; ++i) {
            const double* src = in + static_cast<std::size_t>(r + i) * is;
            for (int j = 0; j < k; ++j) {
                const double w = taps[i * k + j];
                for (int c = 0; c < cols; ++c)
                    o[c] += w * src[c + j];
            }
        }
    }
}

void corr2d_weight_grad(const double* in, std::size_t is, const double* grad_out,
                        std::size_t gs, int rows, int cols, int k, double* grad_taps)
{
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            double acc = 0.0;
            for (int r = 0; r < rows; ++r) {
                const double* src = in + static_cast<std::size_t>(r + i) * is + j;
                const double* g = grad_out + static_cast<std::size_t>(r) * gs;
                for (int c = 0; c < cols; ++c)
                    acc += g[c] * src[c];
            }
            grad_taps[i * k + j] += acc;
        }
    }
}

}  // namespace

const KernelTable& scalar_kernels()
{
    static const KernelTable table{Isa::Scalar, "scalar",        axpy,
                                   dot,         stencil5,        tfpm_combine,
                                   corr2d_accumulate, corr2d_weight_grad};
    return table;
}

}  // namespace vmtu::simd
