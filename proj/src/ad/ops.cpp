#include "vmtu/ad/ops.hpp"

#include "vmtu/discretization.hpp"
#include "vmtu/error.hpp"
#include "vmtu/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>

namespace vmtu::ad {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape())
        throw ShapeMismatch(std::string(op) + ": shapes " + a.shape().str() + " and " +
                            b.shape().str() + " differ");
}

void accumulate(Tensor& dst, const Tensor& src, double scale = 1.0)
{
    simd::kernels().axpy(dst.size(), scale, src.data(), dst.data());
}

int source_index(int i, int n, PadMode mode)
{
    switch (mode) {
    case PadMode::Reflect:
        return vmtu::detail::reflect_index(i, n);
    case PadMode::Wrap:
        return vmtu::detail::wrap_index(i, n);
    case PadMode::Zero:
        break;
    }
    return (i < 0 || i >= n) ? -1 : i;
}

// Zero-pads a rows x cols plane by `width` cells into dst (sized (rows+2w)x(cols+2w)).
void zero_pad_plane(const double* src, int rows, int cols, int width, double* dst)
{
    const int pc = cols + 2 * width;
    std::fill(dst, dst + static_cast<std::size_t>(rows + 2 * width) * pc, 0.0);
    for (int r = 0; r < rows; ++r)
        std::copy(src + static_cast<std::size_t>(r) * cols, src + static_cast<std::size_t>(r + 1) * cols,
                  dst + static_cast<std::size_t>(r + width) * pc + width);
}

// Transpose of the symmetric 5-point stencil restricted to a one-cell padded plane:
// writes (rows+2)x(cols+2) padded-space gradients into grad_padded.
void stencil5_transpose(const double* g, int rows, int cols, double neighbor, double center,
                        double* grad_padded)
{
    std::vector<double> g2(static_cast<std::size_t>(rows + 4) * (cols + 4));
    zero_pad_plane(g, rows, cols, 2, g2.data());
    simd::kernels().stencil5(g2.data(), static_cast<std::size_t>(cols + 4), grad_padded,
                             static_cast<std::size_t>(cols + 2), rows + 2, cols + 2, neighbor,
                             center);
}

}  // namespace

PadMode pad_mode_for(BoundaryCondition bc) noexcept
{
    return bc == BoundaryCondition::Periodic ? PadMode::Wrap : PadMode::Reflect;
}

namespace detail {

Tensor pad_planes(const Tensor& x, Padding p)
{
    const Shape s = x.shape();
    const int k = p.size;
    Tensor out({s.n, s.c, s.h + 2 * k, s.w + 2 * k});
    if (k == 0) {
        std::copy(x.data(), x.data() + x.size(), out.data());
        return out;
    }
    const int pc = s.w + 2 * k;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const double* src = x.plane(n, c);
            double* dst = out.plane(n, c);
            for (int r = 0; r < s.h + 2 * k; ++r) {
                const int sr = source_index(r - k, s.h, p.mode);
                double* row = dst + static_cast<std::size_t>(r) * pc;
                if (sr < 0)
                    continue;
                const double* srow = src + static_cast<std::size_t>(sr) * s.w;
                for (int col = 0; col < pc; ++col) {
                    const int sc = source_index(col - k, s.w, p.mode);
                    row[col] = sc < 0 ? 0.0 : srow[sc];
                }
            }
        }
    }
    return out;
}

void pad_planes_adjoint(const Tensor& gp, Padding p, Tensor& gx)
{
    const Shape s = gx.shape();
    const int k = p.size;
    const int pc = s.w + 2 * k;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const double* src = gp.plane(n, c);
            double* dst = gx.plane(n, c);
            for (int r = 0; r < s.h + 2 * k; ++r) {
                const int sr = source_index(r - k, s.h, p.mode);
                if (sr < 0)
                    continue;
                const double* row = src + static_cast<std::size_t>(r) * pc;
                double* drow = dst + static_cast<std::size_t>(sr) * s.w;
                if (r >= k && r < s.h + k) {
                    // interior row: bulk add, then the ghost columns
                    for (int col = 0; col < s.w; ++col)
                        drow[col] += row[col + k];
                    for (int col = 0; col < k; ++col) {
                        const int left = source_index(col - k, s.w, p.mode);
                        if (left >= 0)
                            drow[left] += row[col];
                        const int right = source_index(s.w + col, s.w, p.mode);
                        if (right >= 0)
                            drow[right] += row[s.w + k + col];
                    }
                } else {
                    for (int col = 0; col < pc; ++col) {
                        const int sc = source_index(col - k, s.w, p.mode);
                        if (sc >= 0)
                            drow[sc] += row[col];
                    }
                }
            }
        }
    }
}

}  // namespace detail

Var conv2d(Tape& tape, Var xv, Var wv, Var bv, int stride, Padding padding)
{
    const Tensor& x = tape.value(xv);
    const Tensor& w = tape.value(wv);
    const Tensor& b = tape.value(bv);
    const Shape xs = x.shape();
    const Shape ws = w.shape();
    const int k = ws.h;
    if (ws.h != ws.w || k % 2 == 0)
        throw ShapeMismatch("conv2d kernel must be square and odd-sized, got " + ws.str());
    if (ws.c != xs.c)
        throw ShapeMismatch("conv2d: input has " + std::to_string(xs.c) + " channels, kernel expects " +
                            std::to_string(ws.c));
    if (b.shape() != Shape{1, ws.n, 1, 1})
        throw ShapeMismatch("conv2d: bias shape " + b.shape().str() + " does not match kernel");
    if (stride < 1 || padding.size < 0)
        throw InvalidArgument("conv2d: stride must be >= 1 and padding >= 0");

    auto xp = std::make_shared<Tensor>(detail::pad_planes(x, padding));
    const int hp = xs.h + 2 * padding.size;
    const int wp = xs.w + 2 * padding.size;
    if (hp < k || wp < k)
        throw ShapeMismatch("conv2d: kernel larger than padded input");
    const int ho = (hp - k) / stride + 1;
    const int wo = (wp - k) / stride + 1;
    const int cin = xs.c;
    const int cout = ws.n;
    const auto& kern = simd::kernels();

    Tensor out({xs.n, cout, ho, wo});
    for (int n = 0; n < xs.n; ++n) {
        for (int co = 0; co < cout; ++co) {
            double* o = out.plane(n, co);
            std::fill(o, o + out.shape().plane(), b[static_cast<std::size_t>(co)]);
            for (int ci = 0; ci < cin; ++ci) {
                const double* src = xp->plane(n, ci);
                const double* taps = w.plane(co, ci);
                if (stride == 1) {
                    kern.corr2d_accumulate(src, static_cast<std::size_t>(wp), taps, k, o,
                                           static_cast<std::size_t>(wo), ho, wo);
                    continue;
                }
                for (int r = 0; r < ho; ++r)
                    for (int c = 0; c < wo; ++c) {
                        double acc = 0.0;
                        for (int i = 0; i < k; ++i)
                            for (int j = 0; j < k; ++j)
                                acc += taps[i * k + j] * src[static_cast<std::size_t>(r * stride + i) * wp + c * stride + j];
                        o[static_cast<std::size_t>(r) * wo + c] += acc;
                    }
            }
        }
    }

    return tape.record(std::move(out), {xv, wv, bv},
                       [xv, wv, bv, xp, stride, padding, k, ho, wo, hp, wp](Tape& t, const Tensor& g) {
        const Tensor& w = t.value(wv);
        const Shape xs = t.value(xv).shape();
        const int cin = xs.c;
        const int cout = w.shape().n;
        const auto& kern = simd::kernels();
        const std::size_t plane = static_cast<std::size_t>(ho) * wo;

        if (t.needs_grad(bv)) {
            Tensor& gb = t.grad(bv);
            for (int n = 0; n < xs.n; ++n)
                for (int co = 0; co < cout; ++co) {
                    const double* gp = g.plane(n, co);
                    double acc = 0.0;
                    for (std::size_t i = 0; i < plane; ++i)
                        acc += gp[i];
                    gb[static_cast<std::size_t>(co)] += acc;
                }
        }
        if (t.needs_grad(wv)) {
            Tensor& gw = t.grad(wv);
            for (int n = 0; n < xs.n; ++n)
                for (int co = 0; co < cout; ++co)
                    for (int ci = 0; ci < cin; ++ci) {
                        const double* src = xp->plane(n, ci);
                        const double* gp = g.plane(n, co);
                        double* gt = gw.plane(co, ci);
                        if (stride == 1) {
                            kern.corr2d_weight_grad(src, static_cast<std::size_t>(wp), gp,
                                                    static_cast<std::size_t>(wo), ho, wo, k, gt);
                            continue;
                        }
                        for (int i = 0; i < k; ++i)
                            for (int j = 0; j < k; ++j) {
                                double acc = 0.0;
                                for (int r = 0; r < ho; ++r)
                                    for (int c = 0; c < wo; ++c)
                                        acc += gp[static_cast<std::size_t>(r) * wo + c] *
                                               src[static_cast<std::size_t>(r * stride + i) * wp + c * stride + j];
                                gt[i * k + j] += acc;
                            }
                    }
        }
        if (t.needs_grad(xv)) {
            Tensor gxp({xs.n, cin, hp, wp});
            Tensor flipped(w.shape());
            for (int co = 0; co < cout; ++co)
                for (int ci = 0; ci < cin; ++ci)
                    for (int i = 0; i < k; ++i)
                        for (int j = 0; j < k; ++j)
                            flipped.at(co, ci, i, j) = w.at(co, ci, k - 1 - i, k - 1 - j);
            const int gpc = wo + 2 * (k - 1);
            std::vector<double> gz(static_cast<std::size_t>(ho + 2 * (k - 1)) * gpc);
            for (int n = 0; n < xs.n; ++n)
                for (int co = 0; co < cout; ++co) {
                    const double* gp = g.plane(n, co);
                    if (stride == 1) {
                        zero_pad_plane(gp, ho, wo, k - 1, gz.data());
                        for (int ci = 0; ci < cin; ++ci)
                            kern.corr2d_accumulate(gz.data(), static_cast<std::size_t>(gpc),
                                                   flipped.plane(co, ci), k, gxp.plane(n, ci),
                                                   static_cast<std::size_t>(wp), hp, wp);
                        continue;
                    }
                    for (int ci = 0; ci < cin; ++ci) {
                        const double* taps = w.plane(co, ci);
                        double* dst = gxp.plane(n, ci);
                        for (int r = 0; r < ho; ++r)
                            for (int c = 0; c < wo; ++c) {
                                const double gv = gp[static_cast<std::size_t>(r) * wo + c];
                                for (int i = 0; i < k; ++i)
                                    for (int j = 0; j < k; ++j)
                                        dst[static_cast<std::size_t>(r * stride + i) * wp + c * stride + j] += taps[i * k + j] * gv;
                            }
                    }
                }
            detail::pad_planes_adjoint(gxp, padding, t.grad(xv));
        }
    });
}

Var sigmoid(Tape& tape, Var xv)
{
    const Tensor& x = tape.value(xv);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        if (v >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            out[i] = e / (1.0 + e);
        }
    }
    auto y = std::make_shared<Tensor>(out);
    return tape.record(std::move(out), {xv}, [xv, y](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad(xv);
        for (std::size_t i = 0; i < g.size(); ++i)
            gx[i] += g[i] * (*y)[i] * (1.0 - (*y)[i]);
    });
}

Var relu(Tape& tape, Var xv)
{
    const Tensor& x = tape.value(xv);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return tape.record(std::move(out), {xv}, [xv](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(xv);
        Tensor& gx = t.grad(xv);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x[i] > 0.0)
                gx[i] += g[i];
    });
}

Var add(Tape& tape, Var a, Var b)
{
    const Tensor& x = tape.value(a);
    const Tensor& y = tape.value(b);
    require_same_shape(x, y, "add");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] + y[i];
    return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.needs_grad(a))
            accumulate(t.grad(a), g);
        if (t.needs_grad(b))
            accumulate(t.grad(b), g);
    });
}

Var sub(Tape& tape, Var a, Var b)
{
    const Tensor& x = tape.value(a);
    const Tensor& y = tape.value(b);
    require_same_shape(x, y, "sub");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] - y[i];
    return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.needs_grad(a))
            accumulate(t.grad(a), g);
        if (t.needs_grad(b))
            accumulate(t.grad(b), g, -1.0);
    });
}

Var mul(Tape& tape, Var a, Var b)
{
    const Tensor& x = tape.value(a);
    const Tensor& y = tape.value(b);
    require_same_shape(x, y, "mul");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] * y[i];
    return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        const Tensor& y = t.value(b);
        if (t.needs_grad(a)) {
            Tensor& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] * y[i];
        }
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i)
                gb[i] += g[i] * x[i];
        }
    });
}

Var scalar_mul(Tape& tape, Var xv, double s)
{
    const Tensor& x = tape.value(xv);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = s * x[i];
    return tape.record(std::move(out), {xv}, [xv, s](Tape& t, const Tensor& g) {
        accumulate(t.grad(xv), g, s);
    });
}

Var square(Tape& tape, Var xv)
{
    const Tensor& x = tape.value(xv);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] * x[i];
    return tape.record(std::move(out), {xv}, [xv](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(xv);
        Tensor& gx = t.grad(xv);
        for (std::size_t i = 0; i < g.size(); ++i)
            gx[i] += 2.0 * x[i] * g[i];
    });
}

Var sum(Tape& tape, Var xv)
{
    Tensor out({1, 1, 1, 1}, tape.value(xv).sum());
    return tape.record(std::move(out), {xv}, [xv](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad(xv);
        for (std::size_t i = 0; i < gx.size(); ++i)
            gx[i] += g[0];
    });
}

BatchNormState::BatchNormState(int channels)
    : running_mean({1, channels, 1, 1}, 0.0), running_var({1, channels, 1, 1}, 1.0)
{
}

Var batch_norm_2d(Tape& tape, Var xv, Var gv, Var bv, BatchNormState& state, bool training,
                  double eps_bn)
{
    const Tensor& x = tape.value(xv);
    const Tensor& gamma = tape.value(gv);
    const Tensor& beta = tape.value(bv);
    const Shape s = x.shape();
    if (gamma.shape() != Shape{1, s.c, 1, 1} || beta.shape() != Shape{1, s.c, 1, 1})
        throw ShapeMismatch("batch_norm_2d: affine parameters must be (1,C,1,1)");
    if (state.running_mean.shape() != Shape{1, s.c, 1, 1})
        state = BatchNormState(s.c);

    const std::size_t plane = s.plane();
    const double m = static_cast<double>(s.n) * static_cast<double>(plane);
    auto xhat = std::make_shared<Tensor>(s);
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.c));
    Tensor out(s);

    for (int c = 0; c < s.c; ++c) {
        double mean, var;
        if (training) {
            double acc = 0.0;
            for (int n = 0; n < s.n; ++n) {
                const double* p = x.plane(n, c);
                for (std::size_t i = 0; i < plane; ++i)
                    acc += p[i];
            }
            mean = acc / m;
            double acc2 = 0.0;
            for (int n = 0; n < s.n; ++n) {
                const double* p = x.plane(n, c);
                for (std::size_t i = 0; i < plane; ++i)
                    acc2 += (p[i] - mean) * (p[i] - mean);
            }
            var = acc2 / m;
            const auto ci = static_cast<std::size_t>(c);
            state.running_mean[ci] = state.momentum * state.running_mean[ci] + (1.0 - state.momentum) * mean;
            state.running_var[ci] = state.momentum * state.running_var[ci] + (1.0 - state.momentum) * var;
        } else {
            mean = state.running_mean[static_cast<std::size_t>(c)];
            var = state.running_var[static_cast<std::size_t>(c)];
        }
        const double is = 1.0 / std::sqrt(var + eps_bn);
        (*inv_std)[static_cast<std::size_t>(c)] = is;
        const double ga = gamma[static_cast<std::size_t>(c)];
        const double be = beta[static_cast<std::size_t>(c)];
        for (int n = 0; n < s.n; ++n) {
            const double* p = x.plane(n, c);
            double* xh = xhat->plane(n, c);
            double* o = out.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
                xh[i] = (p[i] - mean) * is;
                o[i] = ga * xh[i] + be;
            }
        }
    }

    return tape.record(std::move(out), {xv, gv, bv},
                       [xv, gv, bv, xhat, inv_std, training, m](Tape& t, const Tensor& g) {
        const Shape s = g.shape();
        const std::size_t plane = s.plane();
        const Tensor& gamma = t.value(gv);
        for (int c = 0; c < s.c; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            double sum_g = 0.0, sum_gx = 0.0;
            for (int n = 0; n < s.n; ++n) {
                const double* gp = g.plane(n, c);
                const double* xh = xhat->plane(n, c);
                for (std::size_t i = 0; i < plane; ++i) {
                    sum_g += gp[i];
                    sum_gx += gp[i] * xh[i];
                }
            }
            if (t.needs_grad(gv))
                t.grad(gv)[ci] += sum_gx;
            if (t.needs_grad(bv))
                t.grad(bv)[ci] += sum_g;
            if (!t.needs_grad(xv))
                continue;
            Tensor& gx = t.grad(xv);
            const double scale = gamma[ci] * (*inv_std)[ci];
            for (int n = 0; n < s.n; ++n) {
                const double* gp = g.plane(n, c);
                const double* xh = xhat->plane(n, c);
                double* dst = gx.plane(n, c);
                if (training) {
                    for (std::size_t i = 0; i < plane; ++i)
                        dst[i] += scale * (gp[i] - sum_g / m - xh[i] * sum_gx / m);
                } else {
                    for (std::size_t i = 0; i < plane; ++i)
                        dst[i] += scale * gp[i];
                }
            }
        }
    });
}

Var maxpool2(Tape& tape, Var xv)
{
    const Tensor& x = tape.value(xv);
    const Shape s = x.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0)
        throw ShapeMismatch("maxpool2 needs even H and W, got " + s.str());
    const Shape os{s.n, s.c, s.h / 2, s.w / 2};
    Tensor out(os);
    auto argmax = std::make_shared<std::vector<std::uint32_t>>(os.size());
    std::size_t k = 0;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const double* p = x.plane(n, c);
            for (int r = 0; r < os.h; ++r)
                for (int col = 0; col < os.w; ++col, ++k) {
                    std::uint32_t best = static_cast<std::uint32_t>((2 * r) * s.w + 2 * col);
                    const std::uint32_t cand[3] = {best + 1, best + static_cast<std::uint32_t>(s.w),
                                                   best + static_cast<std::uint32_t>(s.w) + 1};
                    for (std::uint32_t idx : cand)
                        if (p[idx] > p[best])  // ties keep the first occurrence
                            best = idx;
                    out[k] = p[best];
                    (*argmax)[k] = best;
                }
        }
    return tape.record(std::move(out), {xv}, [xv, argmax, os](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad(xv);
        std::size_t k = 0;
        for (int n = 0; n < os.n; ++n)
            for (int c = 0; c < os.c; ++c) {
                double* dst = gx.plane(n, c);
                for (std::size_t i = 0; i < os.plane(); ++i, ++k)
                    dst[(*argmax)[k]] += g[k];
            }
    });
}

Var upsample_nearest2(Tape& tape, Var xv)
{
    const Tensor& x = tape.value(xv);
    const Shape s = x.shape();
    Tensor out({s.n, s.c, 2 * s.h, 2 * s.w});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int r = 0; r < 2 * s.h; ++r)
                for (int col = 0; col < 2 * s.w; ++col)
                    out.at(n, c, r, col) = x.at(n, c, r / 2, col / 2);
    return tape.record(std::move(out), {xv}, [xv](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad(xv);
        const Shape s = gx.shape();
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                for (int r = 0; r < 2 * s.h; ++r)
                    for (int col = 0; col < 2 * s.w; ++col)
                        gx.at(n, c, r / 2, col / 2) += g.at(n, c, r, col);
    });
}

Var concat_channels(Tape& tape, Var a, Var b)
{
    const Tensor& x = tape.value(a);
    const Tensor& y = tape.value(b);
    const Shape sa = x.shape();
    const Shape sb = y.shape();
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
        throw ShapeMismatch("concat_channels: " + sa.str() + " vs " + sb.str());
    Tensor out({sa.n, sa.c + sb.c, sa.h, sa.w});
    const std::size_t plane = sa.plane();
    for (int n = 0; n < sa.n; ++n) {
        std::copy(x.plane(n, 0), x.plane(n, 0) + plane * sa.c, out.plane(n, 0));
        std::copy(y.plane(n, 0), y.plane(n, 0) + plane * sb.c, out.plane(n, sa.c));
    }
    return tape.record(std::move(out), {a, b}, [a, b, sa, sb](Tape& t, const Tensor& g) {
        const std::size_t plane = sa.plane();
        for (int n = 0; n < sa.n; ++n) {
            if (t.needs_grad(a)) {
                double* dst = t.grad(a).plane(n, 0);
                const double* src = g.plane(n, 0);
                for (std::size_t i = 0; i < plane * sa.c; ++i)
                    dst[i] += src[i];
            }
            if (t.needs_grad(b)) {
                double* dst = t.grad(b).plane(n, 0);
                const double* src = g.plane(n, sa.c);
                for (std::size_t i = 0; i < plane * sb.c; ++i)
                    dst[i] += src[i];
            }
        }
    });
}

Var tfpm_laplacian_node(Tape& tape, Var uv, double eps1, double eps2, double h,
                        BoundaryCondition bc, bool freeze_center)
{
    if (!(eps1 > 0.0) || !(eps2 > 0.0) || !(h > 0.0))
        throw InvalidArgument("tfpm_laplacian_node needs eps1, eps2, h > 0");
    const Tensor& u = tape.value(uv);
    const Shape s = u.shape();
    const std::size_t plane = s.plane();
    auto kappa = std::make_shared<Tensor>(s);
    auto c0 = std::make_shared<Tensor>(s);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const TfpmCoefficients tc = tfpm_lambda_c0(u[i], eps1, eps2);
        (*kappa)[i] = tfpm_kappa(tc.lambda, h);
        (*c0)[i] = tc.c0;
    }
    const Padding pad{pad_mode_for(bc), 1};
    const Tensor up = detail::pad_planes(u, pad);
    Tensor out(s);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            simd::kernels().tfpm_combine(up.plane(n, c), static_cast<std::size_t>(s.w + 2),
                                         kappa->plane(n, c), c0->plane(n, c), out.plane(n, c),
                                         static_cast<std::size_t>(s.w), s.h, s.w);

    return tape.record(std::move(out), {uv},
                       [uv, kappa, c0, pad, eps1, eps2, h, freeze_center, plane](Tape& t, const Tensor& g) {
        const Tensor& u = t.value(uv);
        const Shape s = u.shape();
        Tensor& gu = t.grad(uv);

        // neighbour path
        Tensor gs(s);
        for (std::size_t i = 0; i < g.size(); ++i)
            gs[i] = (*kappa)[i] * g[i];
        Tensor gpad({s.n, s.c, s.h + 2, s.w + 2});
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                stencil5_transpose(gs.plane(n, c), s.h, s.w, 1.0, 0.0, gpad.plane(n, c));
        detail::pad_planes_adjoint(gpad, pad, gu);

        if (freeze_center)
            return;
        // centre path through lambda(u_ij) and c0(u_ij)
        const Tensor up = detail::pad_planes(u, pad);
        const int pc = s.w + 2;
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const double* pp = up.plane(n, c);
                const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
                for (int r = 0; r < s.h; ++r)
                    for (int col = 0; col < s.w; ++col) {
                        const std::size_t i = base + static_cast<std::size_t>(r) * s.w + col;
                        const double* mid = pp + static_cast<std::size_t>(r + 1) * pc + col + 1;
                        const double nb = ((mid[-pc] + mid[pc]) + mid[-1]) + mid[1];
                        const double x = u[i];
                        const double q = 4.0 * x * x + 2.0;
                        const double lam = std::sqrt(q / (eps1 * eps2));
                        const double denom = 2.0 * std::cosh(lam * h) + 2.0;
                        const double dkappa_ds = (denom - lam * h * std::sinh(lam * h)) / (denom * denom);
                        const double ds_du = 8.0 * x / (eps1 * eps2);
                        const double dc0_du = 24.0 * x / (q * q);
                        const double d = dkappa_ds * ds_du * (nb - 4.0 * (*c0)[i]) - 4.0 * (*kappa)[i] * dc0_du;
                        gu[i] += g[i] * d;
                    }
            }
    });
}

Var fdm_laplacian_node(Tape& tape, Var vv, double h, BoundaryCondition bc)
{
    if (!(h > 0.0))
        throw InvalidArgument("fdm_laplacian_node needs h > 0");
    const Tensor& v = tape.value(vv);
    const Shape s = v.shape();
    const Padding pad{pad_mode_for(bc), 1};
    const Tensor vp = detail::pad_planes(v, pad);
    const double inv_h2 = 1.0 / (h * h);
    Tensor out(s);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            simd::kernels().stencil5(vp.plane(n, c), static_cast<std::size_t>(s.w + 2), out.plane(n, c),
                                     static_cast<std::size_t>(s.w), s.h, s.w, inv_h2, -4.0 * inv_h2);
    return tape.record(std::move(out), {vv}, [vv, pad, inv_h2](Tape& t, const Tensor& g) {
        const Shape s = g.shape();
        Tensor gpad({s.n, s.c, s.h + 2, s.w + 2});
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                stencil5_transpose(g.plane(n, c), s.h, s.w, inv_h2, -4.0 * inv_h2, gpad.plane(n, c));
        detail::pad_planes_adjoint(gpad, pad, t.grad(vv));
    });
}

Var double_well_prime_node(Tape& tape, Var uv)
{
    const Tensor& u = tape.value(uv);
    Tensor out(u.shape());
    for (std::size_t i = 0; i < u.size(); ++i)
        out[i] = double_well_prime(u[i]);
    return tape.record(std::move(out), {uv}, [uv](Tape& t, const Tensor& g) {
        const Tensor& u = t.value(uv);
        Tensor& gu = t.grad(uv);
        for (std::size_t i = 0; i < g.size(); ++i)
            gu[i] += g[i] * double_well_second(u[i]);
    });
}

Var ch_potential_node(Tape& tape, Var uv, Var lapv, double eps1, double eps2)
{
    const Tensor& u = tape.value(uv);
    const Tensor& lap = tape.value(lapv);
    require_same_shape(u, lap, "ch_potential_node");
    Tensor out(u.shape());
    for (std::size_t i = 0; i < u.size(); ++i)
        out[i] = eps1 * lap[i] - double_well_prime(u[i]) / eps2;
    return tape.record(std::move(out), {uv, lapv}, [uv, lapv, eps1, eps2](Tape& t, const Tensor& g) {
        if (t.needs_grad(lapv))
            accumulate(t.grad(lapv), g, eps1);
        if (t.needs_grad(uv)) {
            const Tensor& u = t.value(uv);
            Tensor& gu = t.grad(uv);
            for (std::size_t i = 0; i < g.size(); ++i)
                gu[i] -= g[i] * double_well_second(u[i]) / eps2;
        }
    });
}

Var ch_update_node(Tape& tape, Var uv, Var lapv, Var fv, double tau)
{
    const Tensor& u = tape.value(uv);
    const Tensor& lv = tape.value(lapv);
    const Tensor& f = tape.value(fv);
    require_same_shape(u, lv, "ch_update_node");
    require_same_shape(u, f, "ch_update_node");
    Tensor out(u.shape());
    for (std::size_t i = 0; i < u.size(); ++i)
        out[i] = u[i] - tau * lv[i] - tau * f[i];
    return tape.record(std::move(out), {uv, lapv, fv}, [uv, lapv, fv, tau](Tape& t, const Tensor& g) {
        if (t.needs_grad(uv))
            accumulate(t.grad(uv), g);
        if (t.needs_grad(lapv))
            accumulate(t.grad(lapv), g, -tau);
        if (t.needs_grad(fv))
            accumulate(t.grad(fv), g, -tau);
    });
}

}  // namespace vmtu::ad
