#include "vmtu/discretization.hpp"

#include "vmtu/error.hpp"
#include "vmtu/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace vmtu {

const char* to_string(Scheme scheme) { return scheme == Scheme::Tfpm ? "tfpm" : "fdm"; }

Scheme scheme_from_string(std::string_view name)
{
    if (name == "tfpm")
        return Scheme::Tfpm;
    if (name == "fdm")
        return Scheme::Fdm;
    throw InvalidArgument("unknown scheme '" + std::string(name) + "'");
}

void CHParams::validate() const
{
    if (!(eps1 > 0.0) || !(eps2 > 0.0) || !(eps3 > 0.0))
        throw InvalidArgument("eps1, eps2, eps3 must be positive");
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0))
        throw InvalidArgument("lambda1, lambda2 must be non-negative");
    if (!(tau > 0.0))
        throw InvalidArgument("tau must be positive");
    if (!(h > 0.0))
        throw InvalidArgument("h must be positive");
    if (M < 1)
        throw InvalidArgument("M must be >= 1");
}

TfpmCoefficients tfpm_lambda_c0(double u, double eps1, double eps2)
{
    const double q = 4.0 * u * u + 2.0;
    return {std::sqrt(q / (eps1 * eps2)), 6.0 * u * u / q};
}

double tfpm_kappa(double lambda, double h)
{
    // 4 cosh^2(x/2) = 2 cosh(x) + 2
    return lambda * lambda / (2.0 * std::cosh(lambda * h) + 2.0);
}

ScalarField tfpm_laplacian(const ScalarField& u, double eps1, double eps2, double h)
{
    if (!(eps1 > 0.0) || !(eps2 > 0.0) || !(h > 0.0))
        throw InvalidArgument("tfpm_laplacian needs eps1, eps2, h > 0");
    const std::size_t n = u.size();
    std::vector<double> kappa(n);
    std::vector<double> c0(n);
    const auto values = u.values();
    for (std::size_t i = 0; i < n; ++i) {
        const TfpmCoefficients tc = tfpm_lambda_c0(values[i], eps1, eps2);
        kappa[i] = tfpm_kappa(tc.lambda, h);
        c0[i] = tc.c0;
    }
    const std::vector<double> padded =
        detail::pad_values(values, u.height(), u.width(), 1, u.bc());
    ScalarField out(u.height(), u.width(), u.bc());
    simd::kernels().tfpm_combine(padded.data(), static_cast<std::size_t>(u.width() + 2),
                                 kappa.data(), c0.data(), out.data(),
                                 static_cast<std::size_t>(u.width()), u.height(), u.width());
    return out;
}

ScalarField v_step(const ScalarField& u, const CHParams& p, Scheme scheme)
{
    ScalarField v = scheme == Scheme::Tfpm ? tfpm_laplacian(u, p.eps1, p.eps2, p.h)
                                           : laplacian_fdm(u, p.h);
    auto out = v.values();
    const auto in = u.values();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = p.eps1 * out[i] - double_well_prime(in[i]) / p.eps2;
    return v;
}

ScalarField u_step(const ScalarField& u, const ScalarField& v, const ScalarField& force,
                   const CHParams& p)
{
    if (!u.same_shape(v) || !u.same_shape(force))
        throw ShapeMismatch("u_step: u, v and F must share a shape");
    ScalarField lap_v = laplacian_fdm(v, p.h);
    ScalarField next = u;
    auto out = next.values();
    const auto lv = lap_v.values();
    const auto f = force.values();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = out[i] - p.tau * lv[i] - p.tau * f[i];
    return next;
}

void EvolutionTrace::record(const ScalarField& u, double h)
{
    if (norm_u.empty()) {
        u_min = u.min();
        u_max = u.max();
    } else {
        u_min = std::min(u_min, u.min());
        u_max = std::max(u_max, u.max());
    }
    norm_u.push_back(l2_norm_sq(u, h));
    norm_lap_u.push_back(l2_norm_sq(laplacian_fdm(u, h), h));
}

bool StabilityReport::all_hold() const { return violations() == 0; }

std::size_t StabilityReport::violations() const
{
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const StepRecord& s) { return !s.holds; }));
}

void StabilityReport::write_csv(std::ostream& os) const
{
    os << "step,norm_u,norm_lap_u,lhs,rhs,holds\n";
    os.precision(17);
    for (const StepRecord& s : steps)
        os << s.step << ',' << s.norm_u << ',' << s.norm_lap_u << ',' << s.lhs << ',' << s.rhs
           << ',' << (s.holds ? 1 : 0) << '\n';
}

double double_well_lipschitz(double lo, double hi)
{
    double best = std::max(std::abs(double_well_second(lo)), std::abs(double_well_second(hi)));
    if (lo <= 0.5 && 0.5 <= hi)
        best = std::max(best, std::abs(double_well_second(0.5)));
    return best;
}

StabilityReport stability_constants(const EvolutionTrace& trace, const CHParams& p, double delta,
                                     double gamma)
{
    StabilityReport rep;
    rep.L = double_well_lipschitz(trace.u_min, trace.u_max);
    if (!(delta > p.tau))
        throw BadMultipliers("delta must exceed tau");
    if (!(gamma > rep.L / (p.eps1 * p.eps2)))
        throw BadMultipliers("gamma must exceed L / (eps1 eps2)");
    rep.delta = delta;
    rep.gamma = gamma;
    rep.M_F = trace.max_force_norm;
    rep.C_Delta = trace.max_lap_diff;

    const double tau = p.tau;
    rep.A = 0.5 - tau / (2.0 * delta);
    rep.B = tau * p.eps1 / 2.0 - tau * rep.L / (2.0 * p.eps2 * gamma);
    rep.D = 0.5 + tau * rep.L * gamma / (2.0 * p.eps2);
    rep.C = tau * rep.L * gamma / (2.0 * p.eps2) + tau * p.eps1 * rep.C_Delta / 2.0 +
            tau * delta * rep.M_F * rep.M_F / 2.0;

    const std::size_t n = std::min(trace.norm_u.size(), trace.norm_lap_u.size());
    for (std::size_t k = 0; k + 1 < n; ++k) {
        StepRecord s;
        s.step = static_cast<int>(k);
        s.norm_u = trace.norm_u[k];
        s.norm_lap_u = trace.norm_lap_u[k];
        s.lhs = rep.A * trace.norm_u[k + 1] + rep.B * trace.norm_lap_u[k + 1];
        s.rhs = rep.D * (trace.norm_u[k] + trace.norm_lap_u[k]) + rep.C;
        s.holds = s.lhs <= s.rhs;
        rep.steps.push_back(s);
    }
    return rep;
}

StabilityReport stability_constants(const EvolutionTrace& trace, const CHParams& p)
{
    const double L = double_well_lipschitz(trace.u_min, trace.u_max);
    // L vanishes only on a constant field sitting at a root of W''; any gamma > 0 works there.
    const double gamma = L > 0.0 ? 2.0 * L / (p.eps1 * p.eps2) : 1.0;
    return stability_constants(trace, p, 2.0 * p.tau, gamma);
}

ForceProvider zero_force()
{
    return [](int, const ScalarField& u) { return ScalarField(u.height(), u.width(), u.bc()); };
}

EvolveResult evolve(const ScalarField& u0, const ForceProvider& force, const CHParams& p,
                    Scheme scheme, const EvolveOptions& options)
{
    p.validate();
    EvolutionTrace trace;
    trace.record(u0, p.h);

    ScalarField u = u0;
    ScalarField lap_prev = laplacian_fdm(u, p.h);
    int steps = 0;
    double last_delta = 0.0;
    for (int n = 0; n < p.M; ++n) {
        const ScalarField f = force(n, u);
        trace.max_force_norm = std::max(trace.max_force_norm, std::sqrt(l2_norm_sq(f, p.h)));
        const ScalarField v = v_step(u, p, scheme);
        ScalarField next = u_step(u, v, f, p);

        last_delta = 0.0;
        const auto a = u.values();
        const auto b = next.values();
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (!(std::abs(b[i]) <= kDivergenceBound))
                throw Diverged("evolution diverged at step " + std::to_string(n + 1), n + 1);
            last_delta = std::max(last_delta, std::abs(b[i] - a[i]));
        }

        ScalarField lap_next = laplacian_fdm(next, p.h);
        ScalarField diff = lap_next;
        auto d = diff.values();
        const auto lp = lap_prev.values();
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] -= lp[i];
        trace.max_lap_diff = std::max(trace.max_lap_diff, l2_norm_sq(diff, p.h));
        trace.record(next, p.h);

        u = std::move(next);
        lap_prev = std::move(lap_next);
        ++steps;
        if (options.on_step)
            options.on_step(steps, u);
        if (options.steady_tol > 0.0 && last_delta < options.steady_tol)
            break;
    }

    EvolveResult result{std::move(u), stability_constants(trace, p), steps, last_delta};
    return result;
}

}  // namespace vmtu
