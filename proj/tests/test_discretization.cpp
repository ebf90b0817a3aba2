#include "test_util.hpp"
#include "vmtu/discretization.hpp"
#include "vmtu/error.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace vmtu;
using vmtu::testing::oracle_at;
using vmtu::testing::random_field;

namespace {

// Independent closed forms for the tailored coefficients.
double oracle_lambda(double u, double e1, double e2) { return std::sqrt((4 * u * u + 2) / (e1 * e2)); }
double oracle_c0(double u) { return 6 * u * u / (4 * u * u + 2); }

double oracle_tfpm(const ScalarField& u, int r, int c, double e1, double e2, double h)
{
    const BoundaryCondition bc = u.bc();
    const double lam = oracle_lambda(u(r, c), e1, e2);
    const double k = lam * lam / (2 * std::cosh(lam * h) + 2);
    const double nb = oracle_at(u, r - 1, c, bc) + oracle_at(u, r + 1, c, bc) + oracle_at(u, r, c - 1, bc) +
                      oracle_at(u, r, c + 1, bc);
    return k * (nb - 4 * oracle_c0(u(r, c)));
}

// c0* + a e^{lambda* x} on a 5x5 patch whose centre value is uc; returns the exact Laplacian there.
double ansatz_patch(ScalarField& f, double uc, double h, double e1, double e2)
{
    const double lam = oracle_lambda(uc, e1, e2);
    const double c0 = oracle_c0(uc);
    const double a = uc - c0;
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c)
            f(r, c) = c0 + a * std::exp(lam * (c - 2) * h);
    return lam * lam * a;
}

ScalarField smooth_bump(int n, BoundaryCondition bc)
{
    ScalarField u(n, n, bc);
    const double m = (n - 1) / 2.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            u(r, c) = 0.2 + 0.6 * std::exp(-((r - m) * (r - m) + (c - m) * (c - m)) / 18.0);
    return u;
}

}  // namespace

TEST(Tfpm, CoefficientExamples)
{
    auto t = tfpm_lambda_c0(0.0, 1, 1);
    EXPECT_NEAR(t.lambda, 1.41421356, 1e-8);
    EXPECT_EQ(t.c0, 0.0);
    t = tfpm_lambda_c0(1.0, 1, 1);
    EXPECT_NEAR(t.lambda, std::sqrt(6.0), 1e-14);
    EXPECT_NEAR(t.c0, 1.0, 1e-15);
    t = tfpm_lambda_c0(0.5, 2.0, 0.5);
    EXPECT_NEAR(t.lambda, std::sqrt(3.0), 1e-14);
    EXPECT_NEAR(t.c0, 0.5, 1e-15);
}

TEST(Tfpm, KappaIdentity)
{
    for (double lam : {0.3, 1.4, 2.9})
        for (double h : {0.25, 1.0, 3.0})
            EXPECT_NEAR(tfpm_kappa(lam, h), lam * lam / (2 * std::cosh(lam * h) + 2), 1e-14 * lam * lam);
}

TEST(Tfpm, ZeroOnWellRootsOnly)
{
    for (double v : {0.0, 0.5, 1.0}) {
        const ScalarField lap = tfpm_laplacian(ScalarField(6, 6, BoundaryCondition::Periodic, v), 1, 1, 1);
        for (const auto out = lap; double x : out.values())
            EXPECT_NEAR(x, 0.0, 1e-15) << "u = " << v;
    }
    const ScalarField lap = tfpm_laplacian(ScalarField(6, 6, BoundaryCondition::Periodic, 0.25), 1, 1, 1);
    for (const auto out = lap; double x : out.values())
        EXPECT_GT(std::abs(x), 1e-3);
}

TEST(Tfpm, MatchesOracleOnRandomFields)
{
    for (auto bc : {BoundaryCondition::NeumannZeroFlux, BoundaryCondition::Periodic})
        for (std::uint64_t s = 0; s < 4; ++s) {
            const ScalarField u = random_field(8, 7, s, -0.2, 1.2, bc);
            const ScalarField lap = tfpm_laplacian(u, 0.7, 1.3, 0.9);
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 7; ++c)
                    EXPECT_NEAR(lap(r, c), oracle_tfpm(u, r, c, 0.7, 1.3, 0.9), 1e-12);
        }
}

TEST(Tfpm, ExactOnExponentialAnsatz)
{
    for (double uc : {0.1, 0.3, 0.8, 1.2})
        for (double h : {1.0, 0.5, 0.25}) {
            ScalarField f(5, 5);
            const double exact = ansatz_patch(f, uc, h, 1.0, 1.0);
            const double got = tfpm_laplacian(f, 1.0, 1.0, h)(2, 2);
            EXPECT_LE(std::abs(got - exact), 1e-10 * std::abs(exact)) << "uc=" << uc << " h=" << h;
        }
}

TEST(Tfpm, BeatsFdmOnAnsatzAsHShrinks)
{
    double prev_fdm = INFINITY;
    for (double h : {1.0, 0.5, 0.25}) {
        ScalarField f(5, 5);
        const double exact = ansatz_patch(f, 0.3, h, 1.0, 1.0);
        const double e_tfpm = std::abs(tfpm_laplacian(f, 1, 1, h)(2, 2) - exact);
        const double e_fdm = std::abs(laplacian_fdm(f, h)(2, 2) - exact);
        EXPECT_LT(e_tfpm, e_fdm);
        EXPECT_LT(e_fdm, prev_fdm);
        prev_fdm = e_fdm;
    }
}

TEST(Steps, VStepExamples)
{
    CHParams p;
    for (auto scheme : {Scheme::Fdm, Scheme::Tfpm})
        for (const auto out = v_step(ScalarField(5, 5, BoundaryCondition::NeumannZeroFlux, 0.0), p, scheme); double x : out.values())
            EXPECT_EQ(x, 0.0);
    for (const auto out = v_step(ScalarField(5, 5, BoundaryCondition::NeumannZeroFlux, 0.5), p, Scheme::Fdm); double x : out.values())
        EXPECT_EQ(x, 0.0);
}

TEST(Steps, VStepMatchesOracle)
{
    CHParams p;
    p.eps1 = 0.9;
    p.eps2 = 1.1;
    p.h = 1.0;
    const ScalarField u = random_field(8, 8, 12);
    const ScalarField vf = v_step(u, p, Scheme::Fdm);
    const ScalarField vt = v_step(u, p, Scheme::Tfpm);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            const auto bc = u.bc();
            const double lap = oracle_at(u, r - 1, c, bc) + oracle_at(u, r + 1, c, bc) + oracle_at(u, r, c - 1, bc) +
                               oracle_at(u, r, c + 1, bc) - 4 * u(r, c);
            const double w = double_well_prime(u(r, c)) / p.eps2;
            EXPECT_NEAR(vf(r, c), p.eps1 * lap - w, 1e-12);
            EXPECT_NEAR(vt(r, c), p.eps1 * oracle_tfpm(u, r, c, p.eps1, p.eps2, 1.0) - w, 1e-12);
        }
}

TEST(Steps, UStepExamples)
{
    CHParams p;
    p.tau = 0.5;
    const ScalarField u = random_field(6, 6, 5);
    const ScalarField zero(6, 6);
    const ScalarField same = u_step(u, ScalarField(6, 6, BoundaryCondition::NeumannZeroFlux, 3.0), zero, p);
    EXPECT_TRUE(std::equal(u.values().begin(), u.values().end(), same.values().begin()));
    const ScalarField out = u_step(zero, zero, ScalarField(6, 6, BoundaryCondition::NeumannZeroFlux, 1.0), p);
    for (double x : out.values())
        EXPECT_EQ(x, -0.5);
}

TEST(Steps, UStepMatchesOracle)
{
    CHParams p;
    p.tau = 0.03;
    p.h = 0.8;
    const ScalarField u = random_field(7, 6, 1, 0, 1, BoundaryCondition::Periodic);
    const ScalarField v = random_field(7, 6, 2, -1, 1, BoundaryCondition::Periodic);
    const ScalarField f = random_field(7, 6, 3, -1, 1, BoundaryCondition::Periodic);
    const ScalarField out = u_step(u, v, f, p);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 6; ++c) {
            const auto bc = BoundaryCondition::Periodic;
            const double lap = (oracle_at(v, r - 1, c, bc) + oracle_at(v, r + 1, c, bc) + oracle_at(v, r, c - 1, bc) +
                                oracle_at(v, r, c + 1, bc) - 4 * v(r, c)) /
                               (p.h * p.h);
            EXPECT_NEAR(out(r, c), u(r, c) - p.tau * lap - p.tau * f(r, c), 1e-12);
        }
}

TEST(Params, ValidateRejectsBadCoefficients)
{
    CHParams p;
    p.tau = 0.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = CHParams{};
    p.eps2 = -1;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = CHParams{};
    p.M = 0;
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Evolve, SingleStepIsManualComposition)
{
    CHParams p;
    p.M = 1;
    const ScalarField u = random_field(8, 8, 31);
    const ScalarField f = random_field(8, 8, 32, -0.5, 0.5);
    for (auto scheme : {Scheme::Tfpm, Scheme::Fdm}) {
        const EvolveResult r = evolve(u, [&](int, const ScalarField&) { return f; }, p, scheme);
        const ScalarField manual = u_step(u, v_step(u, p, scheme), f, p);
        EXPECT_TRUE(std::equal(manual.values().begin(), manual.values().end(), r.u.values().begin()));
    }
}

TEST(Evolve, ZeroIsFixedPoint)
{
    CHParams p;
    p.M = 7;
    const EvolveResult r = evolve(ScalarField(6, 6), zero_force(), p, Scheme::Tfpm);
    for (const auto out = r.u; double x : out.values())
        EXPECT_EQ(x, 0.0);
    EXPECT_EQ(r.report.violations(), 0u);
    for (const auto& s : r.report.steps) {
        EXPECT_EQ(s.norm_u, 0.0);
        EXPECT_GE(s.rhs, s.lhs);
    }
    EXPECT_GE(r.report.C, 0.0);
}

TEST(Evolve, PeriodicConservesMean)
{
    CHParams p;
    p.M = 1;
    ScalarField u = smooth_bump(16, BoundaryCondition::Periodic);
    for (int n = 0; n < 100; ++n) {
        const double before = u.mean();
        u = evolve(u, zero_force(), p, Scheme::Tfpm).u;
        ASSERT_LE(std::abs(u.mean() - before), 1e-10) << "step " << n;
    }
}

TEST(Evolve, EnergyNonIncreasingOnBump)
{
    CHParams p;
    p.M = 50;
    std::vector<double> energy{gl_energy(smooth_bump(16, BoundaryCondition::NeumannZeroFlux), 1, 1, 1)};
    EvolveOptions opt;
    opt.on_step = [&](int, const ScalarField& u) { energy.push_back(gl_energy(u, 1, 1, 1)); };
    const EvolveResult r = evolve(smooth_bump(16, BoundaryCondition::NeumannZeroFlux), zero_force(), p, Scheme::Fdm, opt);
    ASSERT_EQ(energy.size(), 51u);
    for (std::size_t i = 1; i < energy.size(); ++i)
        EXPECT_LE(energy[i], energy[i - 1] + 1e-9) << "step " << i;
    EXPECT_EQ(r.report.violations(), 0u);
}

TEST(Evolve, DivergenceIsReported)
{
    CHParams p;
    p.tau = 50.0;
    p.M = 200;
    const ScalarField u = random_field(8, 8, 3);
    try {
        evolve(u, zero_force(), p, Scheme::Fdm);
        FAIL() << "expected Diverged";
    } catch (const Diverged& e) {
        EXPECT_GE(e.step(), 1);
        EXPECT_LE(e.step(), 200);
    }
}

TEST(Stability, LipschitzOnUnitInterval)
{
    EXPECT_DOUBLE_EQ(double_well_lipschitz(0.0, 1.0), 2.0);
    double best = 0.0;
    for (int i = 0; i <= 1000; ++i)
        best = std::max(best, std::abs(double_well_second(i / 1000.0 * 0.6 + 0.2)));
    EXPECT_NEAR(double_well_lipschitz(0.2, 0.8), best, 1e-12);
    EXPECT_DOUBLE_EQ(double_well_lipschitz(-0.5, 1.0), double_well_second(-0.5));
}

TEST(Stability, ClosedFormConstants)
{
    EvolutionTrace t;
    t.u_min = 0.0;
    t.u_max = 1.0;
    t.norm_u = {0.0, 0.0};
    t.norm_lap_u = {0.0, 0.0};
    CHParams p;
    p.tau = 0.5;
    const StabilityReport r = stability_constants(t, p, 1.0, 4.0);
    EXPECT_DOUBLE_EQ(r.L, 2.0);
    EXPECT_DOUBLE_EQ(r.A, 0.25);
    EXPECT_DOUBLE_EQ(r.B, 0.125);
    EXPECT_DOUBLE_EQ(r.D, 2.5);
    EXPECT_TRUE(r.all_hold());
    EXPECT_THROW(stability_constants(t, p, 0.5, 4.0), BadMultipliers);
    EXPECT_THROW(stability_constants(t, p, 1.0, 2.0), BadMultipliers);
    const StabilityReport d = stability_constants(t, p);
    EXPECT_DOUBLE_EQ(d.delta, 1.0);
    EXPECT_DOUBLE_EQ(d.gamma, 4.0);
}
