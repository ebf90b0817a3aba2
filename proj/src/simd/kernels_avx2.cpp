#include "vmtu/simd/kernels.hpp"

#include <immintrin.h>

namespace vmtu::simd {
namespace {

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void axpy(std::size_t n, double a, const double* x, double* y)
{
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i)
        y[i] += a * x[i];
}

double dot(std::size_t n, const double* x, const double* y)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        acc += x[i] * y[i];
    return acc;
}

void stencil5(const double* padded, std::size_t ps, double* out, std::size_t os, int rows,
              int cols, double neighbor, double center)
{
    const __m256d vn = _mm256_set1_pd(neighbor);
    const __m256d vc = _mm256_set1_pd(center);
    for (int r = 0; r < rows; ++r) {
        const double* up = padded + static_cast<std::size_t>(r) * ps + 1;
        const double* mid = up + ps;
        const double* down = mid + ps;
        double* o = out + static_cast<std::size_t>(r) * os;
        int c = 0;
        for (; c + 4 <= cols; c += 4) {
            __m256d s = _mm256_add_pd(_mm256_loadu_pd(up + c), _mm256_loadu_pd(down + c));
            s = _mm256_add_pd(s, _mm256_loadu_pd(mid + c - 1));
            s = _mm256_add_pd(s, _mm256_loadu_pd(mid + c + 1));
            _mm256_storeu_pd(o + c, _mm256_fmadd_pd(vn, s, _mm256_mul_pd(vc, _mm256_loadu_pd(mid + c))));
        }
        for (; c < cols; ++c)
            o[c] = neighbor * (((up[c] + down[c]) + mid[c - 1]) + mid[c + 1]) + center * mid[c];
    }
}

void tfpm_combine(const double* padded, std::size_t ps, const double* kappa, const double* c0,
                  double* out, std::size_t os, int rows, int cols)
{
    const __m256d four = _mm256_set1_pd(4.0);
    for (int r = 0; r < rows; ++r) {
        const double* up = padded + static_cast<std::size_t>(r) * ps + 1;
        const double* mid = up + ps;
        const double* down = mid + ps;
        const std::size_t off = static_cast<std::size_t>(r) * os;
        int c = 0;
        for (; c + 4 <= cols; c += 4) {
            __m256d s = _mm256_add_pd(_mm256_loadu_pd(up + c), _mm256_loadu_pd(down + c));
            s = _mm256_add_pd(s, _mm256_loadu_pd(mid + c - 1));
            s = _mm256_add_pd(s, _mm256_loadu_pd(mid + c + 1));
            s = _mm256_sub_pd(s, _mm256_mul_pd(four, _mm256_loadu_pd(c0 + off + c)));
            _mm256_storeu_pd(out + off + c, _mm256_mul_pd(_mm256_loadu_pd(kappa + off + c), s));
        }
        for (; c < cols; ++c) {
            const double sum = ((up[c] + down[c]) + mid[c - 1]) + mid[c + 1];
            out[off + c] = kappa[off + c] * (sum - 4.0 * c0[off + c]);
        }
    }
}

void corr2d_3x3(const double* in, std::size_t is, const double* taps, double* out,
                std::size_t os, int rows, int cols)
{
    __m256d w[9];
    for (int t = 0; t < 9; ++t)
        w[t] = _mm256_set1_pd(taps[t]);
    for (int r = 0; r < rows; ++r) {
        const double* r0 = in + static_cast<std::size_t>(r) * is;
        const double* r1 = r0 + is;
        const double* r2 = r1 + is;
        double* o = out + static_cast<std::size_t>(r) * os;
        int c = 0;
        for (; c + 4 <= cols; c += 4) {
            __m256d acc = _mm256_loadu_pd(o + c);
            acc = _mm256_fmadd_pd(w[0], _mm256_loadu_pd(r0 + c), acc);
            acc = _mm256_fmadd_pd(w[1], _mm256_loadu_pd(r0 + c + 1), acc);
            acc = _mm256_fmadd_pd(w[2], _mm256_loadu_pd(r0 + c + 2), acc);
            acc = _mm256_fmadd_pd(w[3], _mm256_loadu_pd(r1 + c), acc);
            acc = _mm256_fmadd_pd(w[4], _mm256_loadu_pd(r1 + c + 1), acc);
            acc = _mm256_fmadd_pd(w[5], _mm256_loadu_pd(r1 + c + 2), acc);
            acc = _mm256_fmadd_pd(w[6], _mm256_loadu_pd(r2 + c), acc);
            acc = _mm256_fmadd_pd(w[7], _mm256_loadu_pd(r2 + c + 1), acc);
            acc = _mm256_fmadd_pd(w[8], _mm256_loadu_pd(r2 + c + 2), acc);
            _mm256_storeu_pd(o + c, acc);
        }
        for (; c < cols; ++c) {
            double acc = o[c];
            acc += taps[0] * r0[c];
            acc += taps[1] * r0[c + 1];
            acc += taps[2] * r0[c + 2];
            acc += taps[3] * r1[c];
            acc += taps[4] * r1[c + 1];
            acc += taps[5] * r1[c + 2];
            acc += taps[6] * r2[c];
            acc += taps[7] * r2[c + 1];
            acc += taps[8] * r2[c + 2];
            o[c] = acc;
        }
    }
}

void corr2d_accumulate(const double* in, std::size_t is, const double* taps, int k, double* out,
                       std::size_t os, int rows, int cols)
{
    if (k == 3) {
        corr2d_3x3(in, is, taps, out, os, rows, cols);
        return;
    }
    for (int r = 0; r < rows; ++r) {
        double* o = out + static_cast<std::size_t>(r) * os;
        for (int i = 0; i < k; ++i) {
            const double* src = in + static_cast<std::size_t>(r + i) * is;
            for (int j = 0; j < k; ++j)
                axpy(static_cast<std::size_t>(cols), taps[i * k + j], src + j, o);
        }
    }
}

void weight_grad_3x3(const double* in, std::size_t is, const double* grad_out, std::size_t gs,
                     int rows, int cols, double* grad_taps)
{
    __m256d acc[9];
    for (auto& a : acc)
        a = _mm256_setzero_pd();
    double tail[9] = {};
    for (int r = 0; r < rows; ++r) {
        const double* g = grad_out + static_cast<std::size_t>(r) * gs;
        const double* rows3[3] = {in + static_cast<std::size_t>(r) * is, in + static_cast<std::size_t>(r + 1) * is,
                                  in + static_cast<std::size_t>(r + 2) * is};
        int c = 0;
        for (; c + 4 <= cols; c += 4) {
            const __m256d gv = _mm256_loadu_pd(g + c);
            for (int i = 0; i < 3; ++i) {
                acc[3 * i] = _mm256_fmadd_pd(gv, _mm256_loadu_pd(rows3[i] + c), acc[3 * i]);
                acc[3 * i + 1] = _mm256_fmadd_pd(gv, _mm256_loadu_pd(rows3[i] + c + 1), acc[3 * i + 1]);
                acc[3 * i + 2] = _mm256_fmadd_pd(gv, _mm256_loadu_pd(rows3[i] + c + 2), acc[3 * i + 2]);
            }
        }
        for (; c < cols; ++c)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    tail[3 * i + j] += g[c] * rows3[i][c + j];
    }
    for (int t = 0; t < 9; ++t)
        grad_taps[t] += hsum(acc[t]) + tail[t];
}

void corr2d_weight_grad(const double* in, std::size_t is, const double* grad_out,
                        std::size_t gs, int rows, int cols, int k, double* grad_taps)
{
    if (k == 3) {
        weight_grad_3x3(in, is, grad_out, gs, rows, cols, grad_taps);
        return;
    }
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            __m256d acc = _mm256_setzero_pd();
            double tail = 0.0;
            for (int r = 0; r < rows; ++r) {
                const double* src = in + static_cast<std::size_t>(r + i) * is + j;
                const double* g = grad_out + static_cast<std::size_t>(r) * gs;
                int c = 0;
                for (; c + 4 <= cols; c += 4)
                    acc = _mm256_fmadd_pd(_mm256_loadu_pd(g + c), _mm256_loadu_pd(src + c), acc);
                for (; c < cols; ++c)
                    tail += g[c] * src[c];
            }
            grad_taps[i * k + j] += hsum(acc) + tail;
        }
    }
}

}  // namespace

const KernelTable* avx2_kernels_impl()
{
    static const KernelTable table{Isa::Avx2, "avx2",        axpy,
                                   dot,       stencil5,      tfpm_combine,
                                   corr2d_accumulate, corr2d_weight_grad};
    return &table;
}

}  // namespace vmtu::simd
