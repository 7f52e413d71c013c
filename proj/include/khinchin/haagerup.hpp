#pragma once

// Characteristic-function side of the L1-L2 comparison: the representation
// E|Z| = (2/pi) int_0^inf (1 - Re phi_Z(t)) dt / t^2, the functions F(s) and
// Haagerup's F_Haa(s), and the checks built on them.

#include "khinchin/exactprob.hpp"
#include "khinchin/quad.hpp"
#include "khinchin/report.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace khinchin::haagerup {

using quad::QuadratureResult;

/// E cos(tY) = sum of mass * cos(v t).
double charfn(const SymmetricAtomLaw& law, double t);

/// charfn(law, t) - 1 computed as -2 sum mass sin^2(v t / 2), without
/// cancellation near t = 0.
double charfn_minus_one(const SymmetricAtomLaw& law, double t);

/// A period of t -> prod_j phi_Y(a_j t). Exact weights and atoms give
/// 2 pi / gcd of all frequencies a_j v. Float frequencies are accepted when
/// their ratios to the smallest one are rationals with denominator <= 1000
/// to 1e-12 relative accuracy; otherwise nullopt.
std::optional<double> product_period(const WeightVector& weights, const SymmetricAtomLaw& law);

/// E|sum a_j Y_j| from the integral representation. converged is false when
/// the evaluation budget ran out or no period was found for the tail.
QuadratureResult first_abs_moment_integral(const WeightVector& weights,
                                           const SymmetricAtomLaw& law,
                                           double tol = quad::kHaagerupTol,
                                           const Limits& limits = {});

/// (2/pi) int_0^inf [1 - |phi_Y(t / sqrt s)|^s] dt / t^2 for s >= 1.
QuadratureResult F_of_s(const SymmetricAtomLaw& law, double s, double tol = quad::kHaagerupTol,
                        const Limits& limits = {});

/// (2/pi) int_0^inf [1 - |cos(t / sqrt s)|^s] dt / t^2 for s >= 1.
QuadratureResult F_haagerup(double s, double tol = quad::kHaagerupTol, const Limits& limits = {});

/// F(s) >= F(1) on the grid, F(1) = E|Y|, and at rho0 = 1/2 the chain
/// F(s) >= (E R / sqrt 2) F_Haa(2s) >= E R / 2 together with the identity
/// phi_Y(t) = E cos^2(tR/2). Laws with rho0 < 1/2 are labelled exploratory.
VerdictReport verify_F_lower_bound(const SymmetricAtomLaw& law, std::span<const double> s_grid,
                                   double tol = quad::kHaagerupTol, const Limits& limits = {});

/// N_1(a) >= c_1 N_2(a), c_1 = ||Y||_1 / ||Y||_2, by exact enumeration.
VerdictReport l1l2_verdict(const SymmetricAtomLaw& law, const WeightVector& a,
                           const Limits& limits = {});

/// For normalized a: N_1(a) >= sum a_j^2 F(a_j^-2), with N_1 from enumeration.
VerdictReport am_gm_chain(const SymmetricAtomLaw& law, const WeightVector& a,
                          double tol = quad::kHaagerupTol, const Limits& limits = {});

/// Integral representation against exact enumeration; pass iff they agree
/// within `agreement`.
VerdictReport representation_check(const SymmetricAtomLaw& law, const WeightVector& a,
                                   double agreement = 1e-6, double tol = quad::kHaagerupTol,
                                   const Limits& limits = {});

/// Second divided differences of rho0 -> F(s) for the step law are <= their
/// quadrature error budget; also checks that (1 - rho0) E R has exactly zero
/// second differences. Needs >= 3 strictly increasing rho0 in [0, 1].
VerdictReport concavity_in_rho0(int L, double s, std::span<const Rational> rho_grid,
                                double tol = quad::kHaagerupTol, const Limits& limits = {});

struct P0Result {
    double p0 = 0.0;
    /// |Gamma((p0 + 1)/2) - sqrt(pi)/2|.
    double residual = 0.0;
    /// Sign changes of Gamma((p + 1)/2) - sqrt(pi)/2 over a uniform scan of (0, 2).
    int sign_changes = 0;
};

/// Root of Gamma((p + 1)/2) = sqrt(pi)/2 in (1, 1.9) by bisection.
P0Result solve_p0();
VerdictReport verify_p0();

/// Threshold on rho0 for N_1(1,1) >= c_1 N_2(1,1) with Y = X (step law),
/// from the exact enumeration, compared with 1 - 3L(2 - sqrt 2)/(2L + 1).
VerdictReport necessity_sqrt2_minus_1(int L);

struct SweepRow {
    double s;
    double value;
    double error;
};

/// F_Haa (law empty) or F for the law, evaluated per s in parallel.
std::vector<SweepRow> sweep_F(const std::optional<SymmetricAtomLaw>& law,
                              std::span<const double> s_grid, double tol = quad::kHaagerupTol,
                              const Limits& limits = {});

/// Header "s,F_value,err"; numbers at 12 significant digits.
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace khinchin::haagerup
