#pragma once

#include "vmtu/discretization.hpp"
#include "vmtu/field.hpp"

#include <iosfwd>
#include <vector>

namespace vmtu {

/// Region intensity estimates used by the explicit force.
struct ForceState {
    double c1 = 1.0;
    double c2 = 0.0;
};

/// F = [lambda1 (f-c1)^2 - lambda2 (f-c2)^2] * eps3 / (pi (eps3^2 + (u-1/2)^2)).
ScalarField ch_force(const ImageTensor& f, const ScalarField& u, const ForceState& s,
                     const CHParams& p);

/// Arctan-weighted foreground/background weights; w1 + w2 = 1.
double ch_weight_foreground(double u, double eps3);
double ch_weight_background(double u, double eps3);

ForceState update_c(const ImageTensor& f, const ScalarField& u, double eps3);

/// E(u; c1, c2): Ginzburg-Landau energy plus sharp-region fidelity split at u = 1/2.
double ch_energy(const ImageTensor& f, const ScalarField& u, const ForceState& s,
                 const CHParams& p);

enum class CHInit { FromImage, Circle, Checkerboard };

CHInit ch_init_from_string(std::string_view name);

struct CHTraceRow {
    int outer_iter;
    double c1;
    double c2;
    double energy;
    double max_delta_u;
};

struct CHOptions {
    CHInit init = CHInit::FromImage;
    int outer_iters = 30;
    Scheme scheme = Scheme::Tfpm;
    BoundaryCondition bc = BoundaryCondition::NeumannZeroFlux;
    double steady_tol = 1e-6;
};

struct CHResult {
    ScalarField mask;
    ScalarField u;
    std::vector<CHTraceRow> trace;
    std::vector<StabilityReport> stability;  // one per outer iteration
};

void write_ch_trace(std::ostream& os, const std::vector<CHTraceRow>& trace);

/// Initial phase field for the classical solver.
ScalarField ch_initial_field(const ImageTensor& f, CHInit init, BoundaryCondition bc);

/// Alternates p.M inner (v_step, u_step) iterations with update_c, starting from c1=1, c2=0.
CHResult ch_segment(const ImageTensor& f, const CHParams& p, const CHOptions& options);

}  // namespace vmtu
