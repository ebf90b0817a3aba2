#include "vmtu/ch_classical.hpp"

#include "vmtu/error.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace vmtu {

namespace {

void check_shape(const ImageTensor& f, const ScalarField& u)
{
    if (f.channels() != 1)
        throw InvalidArgument("Cahn-Hilliard force needs a single-channel image");
    if (f.height() != u.height() || f.width() != u.width())
        throw ShapeMismatch("image and phase field differ in shape");
}

}  // namespace

ScalarField ch_force(const ImageTensor& f, const ScalarField& u, const ForceState& s,
                     const CHParams& p)
{
    check_shape(f, u);
    if (!(p.eps3 > 0.0))
        throw InvalidArgument("eps3 must be positive");
    ScalarField out(u.height(), u.width(), u.bc());
    auto ov = out.values();
    const auto fv = f.values();
    const auto uv = u.values();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        const double a = fv[i] - s.c1;
        const double b = fv[i] - s.c2;
        const double d = uv[i] - 0.5;
        ov[i] = (p.lambda1 * a * a - p.lambda2 * b * b) * p.eps3 /
                (std::numbers::pi * (p.eps3 * p.eps3 + d * d));
    }
    return out;
}

double ch_weight_foreground(double u, double eps3)
{
    return 0.5 + std::atan((u - 0.5) / eps3) / std::numbers::pi;
}

double ch_weight_background(double u, double eps3)
{
    return 0.5 - std::atan((u - 0.5) / eps3) / std::numbers::pi;
}

ForceState update_c(const ImageTensor& f, const ScalarField& u, double eps3)
{
    check_shape(f, u);
    const auto fv = f.values();
    const auto uv = u.values();
    double n1 = 0.0, d1 = 0.0, n2 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < fv.size(); ++i) {
        const double w1 = ch_weight_foreground(uv[i], eps3);
        const double w2 = ch_weight_background(uv[i], eps3);
        n1 += w1 * fv[i];
        d1 += w1;
        n2 += w2 * fv[i];
        d2 += w2;
    }
    if (d1 < 1e-12 || d2 < 1e-12)
        throw EmptyRegion("Cahn-Hilliard region weight vanished");
    return {n1 / d1, n2 / d2};
}

double ch_energy(const ImageTensor& f, const ScalarField& u, const ForceState& s,
                 const CHParams& p)
{
    check_shape(f, u);
    double fidelity = 0.0;
    const auto fv = f.values();
    const auto uv = u.values();
    for (std::size_t i = 0; i < fv.size(); ++i) {
        if (uv[i] >= 0.5) {
            const double a = fv[i] - s.c1;
            fidelity += p.lambda1 * a * a;
        } else {
            const double b = fv[i] - s.c2;
            fidelity += p.lambda2 * b * b;
        }
    }
    return gl_energy(u, p.eps1, p.eps2, p.h) + fidelity * p.h * p.h;
}

CHInit ch_init_from_string(std::string_view name)
{
    if (name == "image")
        return CHInit::FromImage;
    if (name == "circle")
        return CHInit::Circle;
    if (name == "checkerboard")
        return CHInit::Checkerboard;
    throw InvalidArgument("unknown init '" + std::string(name) + "'");
}

void write_ch_trace(std::ostream& os, const std::vector<CHTraceRow>& trace)
{
    os << "outer_iter,c1,c2,energy,max_delta_u\n";
    os.precision(17);
    for (const CHTraceRow& r : trace)
        os << r.outer_iter << ',' << r.c1 << ',' << r.c2 << ',' << r.energy << ',' << r.max_delta_u
           << '\n';
}

ScalarField ch_initial_field(const ImageTensor& f, CHInit init, BoundaryCondition bc)
{
    ScalarField u(f.height(), f.width(), bc);
    const double cy = 0.5 * (f.height() - 1);
    const double cx = 0.5 * (f.width() - 1);
    const double radius = 0.25 * std::min(f.height(), f.width());
    for (int r = 0; r < f.height(); ++r) {
        for (int c = 0; c < f.width(); ++c) {
            switch (init) {
            case CHInit::FromImage:
                u(r, c) = f.at(0, r, c);
                break;
            case CHInit::Circle:
                u(r, c) = std::hypot(r - cy, c - cx) <= radius ? 1.0 : 0.0;
                break;
            case CHInit::Checkerboard:
                u(r, c) = 0.5 + 0.5 * std::sin(std::numbers::pi * c / 5.0) *
                                    std::sin(std::numbers::pi * r / 5.0);
                break;
            }
        }
    }
    return u;
}

CHResult ch_segment(const ImageTensor& image, const CHParams& p, const CHOptions& options)
{
    p.validate();
    if (options.outer_iters < 1)
        throw InvalidArgument("outer_iters must be >= 1");
    const ImageTensor f = image.luminance();
    ScalarField u = ch_initial_field(f, options.init, options.bc);
    ForceState state;  // c1 = 1, c2 = 0

    CHResult result;
    EvolveOptions evolve_options;
    evolve_options.steady_tol = options.steady_tol;
    for (int outer = 0; outer < options.outer_iters; ++outer) {
        const ForceProvider force = [&](int, const ScalarField& current) {
            return ch_force(f, current, state, p);
        };
        EvolveResult step = evolve(u, force, p, options.scheme, evolve_options);
        u = std::move(step.u);
        result.stability.push_back(std::move(step.report));
        state = update_c(f, u, p.eps3);
        result.trace.push_back(
            {outer + 1, state.c1, state.c2, ch_energy(f, u, state, p), step.last_max_delta});
    }

    result.mask = ScalarField(u.height(), u.width());
    auto mv = result.mask.values();
    const auto uv = u.values();
    for (std::size_t i = 0; i < mv.size(); ++i)
        mv[i] = uv[i] >= 0.5 ? 1.0 : 0.0;
    result.u = std::move(u);
    return result;
}

}  // namespace vmtu
