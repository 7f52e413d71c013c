#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

namespace khinchin::quad {

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    std::uint64_t evaluations = 0;
    /// False when the depth cap or the evaluation budget stopped refinement
    /// before the requested tolerance was met; value/abs_error are still the
    /// best available.
    bool converged = true;
};

/// Leaf interval of an adaptive subdivision, for debugging traces.
struct TraceSegment {
    double lo;
    double hi;
    double value;
    double error;
    int depth;
};

struct QuadOptions {
    std::uint64_t max_evaluations = 10'000'000;
    int max_depth = 60;
    /// When set, receives the final leaf segments in left-to-right order.
    std::vector<TraceSegment>* trace = nullptr;
    /// integrate_khinchin_tail only: with a period, panel boundaries are put
    /// on anchor + k * period so that kinks of g at those points never fall
    /// inside a panel, where Gauss-Kronrod nodes can miss them.
    std::optional<double> panel_anchor;
};

inline constexpr double kSmoothTol = 1e-10;
inline constexpr double kHaagerupTol = 1e-8;
/// Below this point the khinchin integrand is replaced by its Taylor limit.
inline constexpr double kTaylorCutoff = 1e-3;

using Integrand = std::function<double(double)>;

/// Globally adaptive Gauss-Kronrod (7/15) bisection on [lo, hi]. Refines
/// until abs_error <= tol * max(1, |value|).
/// Throws std::invalid_argument unless lo < hi are finite and tol > 0.
QuadratureResult integrate_adaptive(const Integrand& f, double lo, double hi, double tol,
                                    const QuadOptions& options = {});

/// Same refinement loop, converging when abs_error <= max(abs_tol, rel_tol * |value|).
QuadratureResult integrate_adaptive_mixed(const Integrand& f, double lo, double hi,
                                          double abs_tol, double rel_tol,
                                          const QuadOptions& options = {});

/// Computes (2/pi) * integral over (0, inf) of g(t) / t^2.
///
/// g must satisfy g(0) = 0, g(t) = O(t^2) near zero and 0 <= g <= 2, which
/// holds for g = 1 - P whenever |P| <= 1 (products of characteristic
/// functions and their absolute powers). When `period` is given, 1 - g must
/// be periodic with that period; the tail past the truncation point is then
/// summed from one period's mean and first moment with an O(period^2 / T^3)
/// remainder bound. Without a period the tail is only bounded by 1/T and the
/// result is usually flagged as not converged.
QuadratureResult integrate_khinchin_tail(const Integrand& g, std::optional<double> period,
                                         double tol = kHaagerupTol,
                                         const QuadOptions& options = {});

nlohmann::json trace_to_json(const std::vector<TraceSegment>& trace);

}  // namespace khinchin::quad
