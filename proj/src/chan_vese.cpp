#include "vmtu/chan_vese.hpp"

#include "vmtu/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace vmtu {

namespace {

constexpr double kGradFloor = 1e-8;
constexpr double kEmptyRegion = 1e-12;

struct Derivatives {
    double x, y, xx, yy, xy;
};

Derivatives central_derivatives(const std::vector<double>& padded, int pcols, int r, int c)
{
    auto at = [&](int rr, int cc) { return padded[static_cast<std::size_t>(rr + 1) * pcols + cc + 1]; };
    Derivatives d;
    d.x = 0.5 * (at(r, c + 1) - at(r, c - 1));
    d.y = 0.5 * (at(r + 1, c) - at(r - 1, c));
    d.xx = at(r, c + 1) - 2.0 * at(r, c) + at(r, c - 1);
    d.yy = at(r + 1, c) - 2.0 * at(r, c) + at(r - 1, c);
    d.xy = 0.25 * (at(r + 1, c + 1) - at(r + 1, c - 1) - at(r - 1, c + 1) + at(r - 1, c - 1));
    return d;
}

// Single reinitialization sweep set towards |grad phi| = 1 (Godunov upwind).
void reinitialize(ScalarField& phi, int iterations)
{
    const ScalarField phi0 = phi;
    const double dt = 0.3;
    for (int it = 0; it < iterations; ++it) {
        const std::vector<double> p =
            detail::pad_values(phi.values(), phi.height(), phi.width(), 1, phi.bc());
        const int pc = phi.width() + 2;
        auto at = [&](int r, int c) { return p[static_cast<std::size_t>(r + 1) * pc + c + 1]; };
        ScalarField next = phi;
        for (int r = 0; r < phi.height(); ++r) {
            for (int c = 0; c < phi.width(); ++c) {
                const double s0 = phi0(r, c) / std::sqrt(phi0(r, c) * phi0(r, c) + 1.0);
                const double a = at(r, c) - at(r, c - 1);
                const double b = at(r, c + 1) - at(r, c);
                const double cm = at(r, c) - at(r - 1, c);
                const double dm = at(r + 1, c) - at(r, c);
                double g;
                if (s0 > 0) {
                    g = std::sqrt(std::max(std::pow(std::max(a, 0.0), 2), std::pow(std::min(b, 0.0), 2)) +
                                  std::max(std::pow(std::max(cm, 0.0), 2), std::pow(std::min(dm, 0.0), 2)));
                } else {
                    g = std::sqrt(std::max(std::pow(std::min(a, 0.0), 2), std::pow(std::max(b, 0.0), 2)) +
                                  std::max(std::pow(std::min(cm, 0.0), 2), std::pow(std::max(dm, 0.0), 2)));
                }
                next(r, c) = at(r, c) - dt * s0 * (g - 1.0);
            }
        }
        phi = std::move(next);
    }
}

}  // namespace

void CVParams::validate() const
{
    if (!(mu >= 0.0))
        throw InvalidArgument("mu must be non-negative");
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
        throw InvalidArgument("lambda1, lambda2 must be positive");
    if (!(eps > 0.0) || !(dt > 0.0))
        throw InvalidArgument("eps and dt must be positive");
    if (iters < 1)
        throw InvalidArgument("iters must be >= 1");
    if (reinit_every < 0 || snapshot_every < 1)
        throw InvalidArgument("reinit_every >= 0 and snapshot_every >= 1 required");
}

double heaviside_eps(double phi, double eps)
{
    return 0.5 * (1.0 + (2.0 / std::numbers::pi) * std::atan(phi / eps));
}

double delta_eps(double phi, double eps)
{
    return (1.0 / std::numbers::pi) * eps / (phi * phi + eps * eps);
}

RegionAverages region_averages(const ImageTensor& f, const ScalarField& phi, double eps)
{
    if (f.channels() != 1)
        throw InvalidArgument("region_averages needs a single-channel image");
    if (f.height() != phi.height() || f.width() != phi.width())
        throw ShapeMismatch("region_averages: image and level set differ in shape");
    const auto fv = f.values();
    const auto pv = phi.values();
    double in_num = 0.0, in_den = 0.0, out_num = 0.0, out_den = 0.0;
    for (std::size_t i = 0; i < fv.size(); ++i) {
        const double hv = heaviside_eps(pv[i], eps);
        in_num += fv[i] * hv;
        in_den += hv;
        out_num += fv[i] * (1.0 - hv);
        out_den += 1.0 - hv;
    }
    if (in_den < kEmptyRegion || out_den < kEmptyRegion)
        throw EmptyRegion("Chan-Vese region vanished");
    return {in_num / in_den, out_num / out_den};
}

ScalarField curvature(const ScalarField& phi)
{
    const std::vector<double> padded =
        detail::pad_values(phi.values(), phi.height(), phi.width(), 1, phi.bc());
    const int pcols = phi.width() + 2;
    ScalarField out(phi.height(), phi.width(), phi.bc());
    for (int r = 0; r < phi.height(); ++r) {
        for (int c = 0; c < phi.width(); ++c) {
            const Derivatives d = central_derivatives(padded, pcols, r, c);
            const double g = std::max(std::sqrt(d.x * d.x + d.y * d.y), kGradFloor);
            out(r, c) = (d.xx * d.y * d.y - 2.0 * d.x * d.y * d.xy + d.yy * d.x * d.x) / (g * g * g);
        }
    }
    return out;
}

ScalarField cv_evolve_step(const ScalarField& phi, const ImageTensor& f, double c1, double c2,
                           const CVParams& p)
{
    if (f.channels() != 1 || f.height() != phi.height() || f.width() != phi.width())
        throw ShapeMismatch("cv_evolve_step: image and level set differ in shape");
    ScalarField neumann = phi;
    neumann.set_bc(BoundaryCondition::NeumannZeroFlux);
    const ScalarField kappa = curvature(neumann);
    ScalarField next = neumann;
    const auto fv = f.values();
    auto nv = next.values();
    const auto kv = kappa.values();
    for (std::size_t i = 0; i < nv.size(); ++i) {
        const double a = fv[i] - c1;
        const double b = fv[i] - c2;
        const double rhs = delta_eps(nv[i], p.eps) * (p.mu * kv[i] - p.lambda1 * a * a + p.lambda2 * b * b);
        nv[i] += p.dt * rhs;
    }
    return next;
}

double cv_energy(const ScalarField& phi, const ImageTensor& f, double c1, double c2,
                 const CVParams& p)
{
    const std::vector<double> padded = detail::pad_values(
        phi.values(), phi.height(), phi.width(), 1, BoundaryCondition::NeumannZeroFlux);
    const int pcols = phi.width() + 2;
    double total = 0.0;
    for (int r = 0; r < phi.height(); ++r) {
        for (int c = 0; c < phi.width(); ++c) {
            const Derivatives d = central_derivatives(padded, pcols, r, c);
            const double v = phi(r, c);
            const double hv = heaviside_eps(v, p.eps);
            const double a = f.at(0, r, c) - c1;
            const double b = f.at(0, r, c) - c2;
            total += p.mu * delta_eps(v, p.eps) * std::sqrt(d.x * d.x + d.y * d.y) +
                     p.lambda1 * a * a * hv + p.lambda2 * b * b * (1.0 - hv);
        }
    }
    return total;
}

ScalarField make_level_set(int height, int width, const LevelSetInit& init)
{
    ScalarField phi(height, width);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            if (const auto* circle = std::get_if<CircleInit>(&init)) {
                const double dx = c - circle->cx;
                const double dy = r - circle->cy;
                phi(r, c) = circle->r - std::sqrt(dx * dx + dy * dy);
            } else {
                phi(r, c) = std::sin(std::numbers::pi * c / 5.0) * std::sin(std::numbers::pi * r / 5.0);
            }
        }
    }
    return phi;
}

void write_cv_trace(std::ostream& os, const std::vector<CVTraceRow>& trace)
{
    os << "iter,c1,c2,energy\n";
    os.precision(17);
    for (const CVTraceRow& row : trace)
        os << row.iter << ',' << row.c1 << ',' << row.c2 << ',' << row.energy << '\n';
}

CVResult chan_vese_segment(const ImageTensor& image, const CVParams& p, const LevelSetInit& init)
{
    p.validate();
    const ImageTensor f = image.luminance();
    ScalarField phi = make_level_set(f.height(), f.width(), init);
    CVResult result;
    for (int it = 0; it < p.iters; ++it) {
        const RegionAverages c = region_averages(f, phi, p.eps);
        if (it % p.snapshot_every == 0)
            result.trace.push_back({it, c.c1, c.c2, cv_energy(phi, f, c.c1, c.c2, p)});
        phi = cv_evolve_step(phi, f, c.c1, c.c2, p);
        if (p.reinit_every > 0 && (it + 1) % p.reinit_every == 0)
            reinitialize(phi, 10);
    }
    const RegionAverages c = region_averages(f, phi, p.eps);
    result.trace.push_back({p.iters, c.c1, c.c2, cv_energy(phi, f, c.c1, c.c2, p)});

    result.mask = ScalarField(phi.height(), phi.width());
    auto mv = result.mask.values();
    const auto pv = phi.values();
    for (std::size_t i = 0; i < mv.size(); ++i)
        mv[i] = pv[i] >= 0.0 ? 1.0 : 0.0;
    result.phi = std::move(phi);
    return result;
}

}  // namespace vmtu
