#pragma once

#include "vmtu/field.hpp"

#include <iosfwd>
#include <variant>
#include <vector>

namespace vmtu {

struct CVParams {
    double mu = 0.1;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double eps = 1.0;
    double dt = 0.1;
    int iters = 500;
    int reinit_every = 0;  // 0 disables reinitialization
    int snapshot_every = 10;

    void validate() const;
};

double heaviside_eps(double phi, double eps);
double delta_eps(double phi, double eps);

struct RegionAverages {
    double c1;
    double c2;
};

/// Inside/outside averages of f weighted by H_eps(phi). f must be single-channel.
RegionAverages region_averages(const ImageTensor& f, const ScalarField& phi, double eps);

/// div(grad phi / |grad phi|) by central differences, |grad phi| floored at 1e-8.
ScalarField curvature(const ScalarField& phi);

ScalarField cv_evolve_step(const ScalarField& phi, const ImageTensor& f, double c1, double c2,
                           const CVParams& p);

/// Level-set energy mu*sum(delta|grad phi|) + lambda1*sum((f-c1)^2 H) + lambda2*sum((f-c2)^2 (1-H)).
double cv_energy(const ScalarField& phi, const ImageTensor& f, double c1, double c2,
                 const CVParams& p);

struct CheckerboardInit {};
struct CircleInit {
    double cx;
    double cy;
    double r;
};
using LevelSetInit = std::variant<CheckerboardInit, CircleInit>;

ScalarField make_level_set(int height, int width, const LevelSetInit& init);

struct CVTraceRow {
    int iter;
    double c1;
    double c2;
    double energy;
};

struct CVResult {
    ScalarField mask;
    ScalarField phi;
    std::vector<CVTraceRow> trace;
};

void write_cv_trace(std::ostream& os, const std::vector<CVTraceRow>& trace);

/// Alternates region_averages and cv_evolve_step. Colour input is reduced to luminance.
CVResult chan_vese_segment(const ImageTensor& f, const CVParams& p, const LevelSetInit& init);

}  // namespace vmtu
