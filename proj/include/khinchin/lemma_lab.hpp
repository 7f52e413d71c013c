#pragma once

// Evaluators for the auxiliary inequalities behind the moment comparisons:
// the odd power kernels phi_w and their quotients r_w, the two-point
// inequality for piecewise-linear test functions, h_a, and the functions
// f, f', h that compare E(X^2 - a)_+ for the step law against a Gaussian.

#include "khinchin/quad.hpp"
#include "khinchin/rational.hpp"
#include "khinchin/report.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace khinchin::lemma {

/// sgn(x+w)|x+w|^q + sgn(x-w)|x-w|^q. Requires q >= 2 and w >= 0.
double phi_w(double q, double w, double x);

/// phi_w(x) / x, with the limit 2 q w^(q-1) at x = 0. Accurate near the
/// origin: the difference of powers goes through expm1/log1p.
double r_w(double q, double w, double x);

enum class Cone {
    OddConvex,    ///< odd on R, nondecreasing and convex on (0, inf)
    EvenConvex,   ///< even on R, nondecreasing and convex on (0, inf)
    HalfLine,     ///< nondecreasing and convex on the grid; no parity test
};

struct ConvexityVerdict {
    bool is_even_or_odd = true;
    bool nondecreasing_on_pos = true;
    bool convex_on_pos = true;
    /// Largest violation found, relative to the local magnitude of f.
    double worst_violation = 0.0;
    std::optional<double> witness;

    bool all() const { return is_even_or_odd && nondecreasing_on_pos && convex_on_pos; }
};

/// Parity on +-grid, monotonicity from consecutive differences and convexity
/// from second divided differences (scaled to the local step). A test fails
/// when its violation exceeds tol times the local magnitude of f.
/// Throws std::invalid_argument unless grid has >= 3 strictly increasing
/// positive points.
ConvexityVerdict check_cone_membership(const std::function<double(double)>& f, Cone cone,
                                       std::span<const double> grid, double tol = 1e-9);

/// n points evenly spaced on (lo, hi]: lo + k (hi - lo) / n, k = 1..n.
std::vector<double> uniform_grid(double lo, double hi, int n);

/// Gap (LHS - RHS) of the two-point inequality with D = 1, b = 1 and
/// r(x) = (|x| - gamma)_+. Piecewise linear in gamma. Requires 0 < a < 1 and
/// gamma >= 0.
Rational two_point_gap(const Rational& a, const Rational& gamma);
double two_point_gap(double a, double gamma);

struct NodeEntry {
    Rational gamma;
    Rational value;
};

/// Gap at the breakpoints 0, a, 1 - a, 1, 1 + a (ascending, deduplicated).
struct NodeTable {
    std::vector<NodeEntry> gamma_nodes;
};

NodeTable two_point_nodes(const Rational& a);

/// Pass iff the gap is >= 0 at 0, a, 1 - a and 1 (exact arithmetic). The gap
/// vanishes identically from 1 + a on, so that node does not enter the margin.
VerdictReport verify_two_point(const Rational& a);

/// (1 - a) / (1 - a^2): the smallest D that r(x) = |x| allows at this a.
Rational two_point_witness_ratio(const Rational& a);

struct BestConstant {
    Rational D;
    /// sup of the witness ratio over the grid, attained at `witness_a`.
    Rational witness_lower_bound;
    Rational witness_a;
    /// verify_two_point passed at every grid point.
    bool sufficient_on_grid = false;
    int grid_points = 0;
};

/// D = 1 checked from both sides on a = k / denominator, k = 1..denominator-1.
BestConstant best_constant_D(int denominator = 100);

/// |a + sqrt x|^p + |a - sqrt x|^p. Requires p >= 3 and x >= 0.
double h_a_eval(double p, double a, double x);

/// 6 L^2 / ((L + 1)(2 L + 1)), i.e. L^2 / sigma^2.
Rational t_of_L(int L);

/// (L + 1)(2 L + 1) / 6.
Rational step_variance(int L);

/// E(G^2 - a)_+ - E(X^2 - a)_+ for X the rho0 = 0 step law with parameter L
/// and G Gaussian with the same variance. Requires L >= 1 and a >= 0.
double claim_f(int L, double a);

/// Derivative of claim_f on (b^2, (b+1)^2). Throws std::invalid_argument if a
/// lies outside that open interval or b is not in 0..L-1.
double claim_f_prime(int L, double a, int b);

/// theta_{L,b} = f'(b^2+), b in 0..L-1.
double slope_theta(int L, int b);

/// Published lower bounds for theta_{L,b}, L in 3..6, b in 1..L-2.
double slope_lower_bound(int L, int b);

struct SlopeTable {
    std::map<std::pair<int, int>, double> entries;
};

/// theta_{L,b} for L in 3..6 and b in 1..L-2.
SlopeTable slope_table();

/// v_L = theta_{L,L-1} (2L - 1) + f((L-1)^2).
double tangent_value(int L);
/// Published lower bounds for v_L, L in 2..6.
double tangent_lower_bound(int L);
/// v_L for L in 2..6.
std::map<int, double> tangent_values();

/// sqrt(2/pi) int_0^sqrt(t) (t - x^2) e^{-x^2/2} dx - 2t/3, quadrature at 1e-10.
quad::QuadratureResult claim_h(double t);
/// sqrt(2/pi) int_0^sqrt(t) e^{-x^2/2} dx - 2/3, quadrature at 1e-10.
quad::QuadratureResult claim_h_prime(double t);

struct GridMinimum {
    double value;
    double at;
};

/// Minimum of claim_f over {step, 2 step, ..., L^2}.
GridMinimum claim_f_grid_minimum(int L, double step = 1e-3);

/// The Gaussian comparison claim for one L, following the case split:
/// L = 1 by Jensen, L >= 7 through h, 2..6 through the slopes and the
/// tangent value. Every branch also checks claim_f >= 0 on a 1e-3 grid.
VerdictReport verify_claim(int L);

/// Every slope exceeds its published bound; margin is the smallest excess.
VerdictReport verify_slope_table();
/// Every v_L exceeds its published bound.
VerdictReport verify_tangent_values();
/// h'(49/20) > 0.2 and h(49/20) > 0.01, net of quadrature error.
VerdictReport verify_h_checkpoints();

/// Cone certificates for phi_w, r_w (q in {2, 2.5, 3, 5, 8}, w in {0, 1})
/// and h_a (p in {3, 4, 6}), each on 10^3 points of (0, 10].
VerdictReport verify_cone_suite();

std::string slope_table_csv(const SlopeTable& table);
std::string tangent_values_csv(const std::map<int, double>& values);

}  // namespace khinchin::lemma
