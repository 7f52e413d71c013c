#pragma once

// Checks of Schur-concavity of a -> N_p(sqrt a), of the Gaussian moment
// comparison N_p <= ||G||_p N_2, and of the thresholds on rho0 beyond which
// these fail.

#include "khinchin/exactprob.hpp"
#include "khinchin/report.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace khinchin::schur {

/// Pass/fail margins below this (absolute) count as failures.
constexpr double kMarginTolerance = 1e-9;

/// `upper` majorizes `lower`: both nonnegative with equal sums.
struct MajorizationPair {
    WeightVector lower;
    WeightVector upper;
};

/// True when sorted prefix sums of `upper` dominate those of `lower` and the
/// totals agree (exactly for exact vectors, within 1e-12 otherwise).
bool majorizes(const WeightVector& upper, const WeightVector& lower);

struct SchurVerdict {
    bool pass = false;
    double worst_margin = 0.0;
    std::optional<MajorizationPair> witness_pair;
};

/// Entrywise square root. Exact where the entry is a rational square.
/// Throws std::invalid_argument on a negative entry.
WeightVector sqrt_weights(const WeightVector& a);

/// E|sum sqrt(a_i) X_i|^p by exact enumeration.
MomentValue big_phi(const WeightVector& a, const SymmetricAtomLaw& law, double p,
                    const Limits& limits = {});

/// Central-difference partials of big_phi in the first two coordinates;
/// margin = dPhi/da_1 - dPhi/da_2, which Schur-concavity makes >= 0 when
/// a_1 < a_2. h defaults to 1e-6 min(a_1, a_2). Throws std::invalid_argument
/// unless 0 < a_1 < a_2, or if h <= 0 or h > 0.1 a_1.
SchurVerdict ostrowski_check(const WeightVector& a, const SymmetricAtomLaw& law, double p,
                             std::optional<double> h = std::nullopt, const Limits& limits = {});

/// The derivative-free form of the Ostrowski condition for the three-atom
/// law: with phi(x) = E F'(x + W), F = |.|^p,
///   (1/rho0 - 1) [(phi(a+b) - phi(b-a))/2a - (phi(a+b) + phi(b-a))/2b]
///     >= phi(b)/b - phi(a)/a.
/// For rho0 = 0 the prefactor is infinite and the margin is the bracket
/// alone. Throws std::invalid_argument unless 0 < a < b and rho0 in [0, 1].
VerdictReport phi_two_point_check(double a, double b, const Rational& rho0, const SumLaw& w_law,
                                  double p);

/// Draws `trials` majorized pairs (random simplex point, then random
/// T-transforms, all in exact rationals) and checks
/// N_p(sqrt lower) >= N_p(sqrt upper). Trial k uses its own generator seeded
/// from (seed, k). Requires 1 <= n <= 6 and p >= 3.
SchurVerdict majorization_sample_test(int n, const SymmetricAtomLaw& law, double p, int trials,
                                      std::uint64_t seed, const Limits& limits = {});

/// True for the three-atom laws (values in {-1, 0, 1}) with mass at zero at
/// most 1/2, where Schur-concavity is known; other laws are exploratory.
bool schur_law_is_covered(const SymmetricAtomLaw& law);

/// Wraps a SchurVerdict, labelling runs outside the covered laws.
VerdictReport schur_report(const SchurVerdict& verdict, const SymmetricAtomLaw& law,
                           OrderedJson params);

/// E|sum a_i X_i|^p <= E|sum a_i G_i|^p with Var G_i = E X_i^2, and
/// N_p <= ||G||_p N_2. Requires p >= 3 and no mass at zero in any law
/// (std::invalid_argument otherwise). margin = min of the two slacks.
VerdictReport comparison_verify(const WeightVector& a, std::span<const SymmetricAtomLaw> laws,
                                double p, const Limits& limits = {});

/// E|c + X|^p <= E|c + G|^p, Var G = E X^2, for every shift c given.
VerdictReport shift_comparison_check(const SymmetricAtomLaw& law, double p,
                                     std::span<const double> shifts, const Limits& limits = {});

/// N_p(1, ..., 1) / N_2(1, ..., 1) for n = 1..n_max.
std::vector<double> equal_weight_ratios(const SymmetricAtomLaw& law, double p, int n_max,
                                        const Limits& limits = {});

struct NecessityResult {
    double value;
    VerdictReport report;
};

/// Boundary 1/2: for L = 1 the difference quotient of N_3^3(sqrt l, sqrt(1-l))
/// at l in {1e-4, 1e-5} must have the sign of (1 - rho0)(1 - 2 rho0) on a grid
/// of rho0 away from 1/2.
NecessityResult necessity_rho_half();

/// Largest rho0 with E|X|^3 <= ||G||_3^3 (E X^2)^{3/2} for the step law.
double rho_p3_threshold(int L);

/// Analytic limit 1 - 27 pi / 128 together with thresholds for
/// L in {1, 10, 100, 1000, 10000} and a Richardson estimate of the limit.
NecessityResult necessity_rho_p3();

}  // namespace khinchin::schur
