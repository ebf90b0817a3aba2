#pragma once

#include "vmtu/field.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace vmtu {

enum class Scheme { Tfpm, Fdm };

const char* to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

/// Coefficients of the modified Cahn-Hilliard model.
struct CHParams {
    double eps1 = 1.0;     // interface coefficient
    double eps2 = 1.0;     // double-well scale
    double eps3 = 0.1;     // arctan width of the region force
    double lambda1 = 1.0;  // fidelity weights
    double lambda2 = 1.0;
    double tau = 0.01;     // time step
    double h = 1.0;        // grid spacing
    int M = 1;             // number of steps / blocks

    /// Throws InvalidArgument when a positivity constraint is violated.
    void validate() const;
};

struct TfpmCoefficients {
    double lambda;
    double c0;
};

/// Closed-form tailored coefficients from the linearized double well at u.
TfpmCoefficients tfpm_lambda_c0(double u, double eps1, double eps2);

/// lambda^2 / (4 cosh^2(lambda h / 2)), the neighbour weight of the tailored stencil.
double tfpm_kappa(double lambda, double h);

ScalarField tfpm_laplacian(const ScalarField& u, double eps1, double eps2, double h);

/// v = eps1 * Lap(u) - W'(u) / eps2, Lap chosen by the scheme.
ScalarField v_step(const ScalarField& u, const CHParams& p, Scheme scheme);

/// u - tau * Lap_fdm(v) - tau * F.
ScalarField u_step(const ScalarField& u, const ScalarField& v, const ScalarField& force,
                   const CHParams& p);

/// Per-step record used by the stability monitor.
struct StepRecord {
    int step = 0;
    double norm_u = 0.0;      // ||u^n||^2
    double norm_lap_u = 0.0;  // ||Lap u^n||^2
    double lhs = 0.0;         // A ||u^{n+1}||^2 + B ||Lap u^{n+1}||^2
    double rhs = 0.0;         // D (||u^n||^2 + ||Lap u^n||^2) + C
    bool holds = true;
};

/// Raw quantities gathered while evolving; stability_constants turns them into a report.
struct EvolutionTrace {
    std::vector<double> norm_u;      // index n = 0..steps
    std::vector<double> norm_lap_u;  // index n = 0..steps
    double u_min = 0.0;
    double u_max = 0.0;
    double max_force_norm = 0.0;     // M_F = max ||F||
    double max_lap_diff = 0.0;       // C_Delta = max ||Lap u^{n+1} - Lap u^n||^2

    void record(const ScalarField& u, double h);
};

struct StabilityReport {
    std::vector<StepRecord> steps;
    double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    double L = 0.0;
    double M_F = 0.0;
    double C_Delta = 0.0;

    bool all_hold() const;
    std::size_t violations() const;
    void write_csv(std::ostream& os) const;
};

/// max |W''(u)| over [lo, hi].
double double_well_lipschitz(double lo, double hi);

StabilityReport stability_constants(const EvolutionTrace& trace, const CHParams& p, double delta,
                                    double gamma);

/// Fills the report with the default multipliers delta = 2 tau, gamma = 2 L / (eps1 eps2).
StabilityReport stability_constants(const EvolutionTrace& trace, const CHParams& p);

/// Supplies F for step n given the current u.
using ForceProvider = std::function<ScalarField(int step, const ScalarField& u)>;

ForceProvider zero_force();

struct EvolveOptions {
    /// Stop early once ||u^{n+1} - u^n||_inf falls below this; 0 disables.
    double steady_tol = 0.0;
    /// Called after every step with (n+1, u^{n+1}).
    std::function<void(int, const ScalarField&)> on_step;
};

struct EvolveResult {
    ScalarField u;
    StabilityReport report;
    int steps_taken = 0;
    double last_max_delta = 0.0;
};

/// Runs p.M (v_step, u_step) iterations. Throws Diverged when |u| exceeds 1e6.
EvolveResult evolve(const ScalarField& u0, const ForceProvider& force, const CHParams& p,
                    Scheme scheme, const EvolveOptions& options = {});

inline constexpr double kDivergenceBound = 1e6;

}  // namespace vmtu
