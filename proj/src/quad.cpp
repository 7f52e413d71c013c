#include "khinchin/quad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>

namespace khinchin::quad {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double lo;
    double hi;
    double value;
    double error;
    int depth;
};

Segment gauss_kronrod15(const Integrand& f, double lo, double hi, int depth) {
    const double centre = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(centre);
    double result_gauss = fc * kWg[3];
    double result_kronrod = fc * kWgk[7];
    double resabs = std::abs(result_kronrod);
    std::array<double, 7> fv1{};
    std::array<double, 7> fv2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = f(centre - dx);
        const double f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        result_kronrod += kWgk[j] * (f1 + f2);
        resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) result_gauss += kWg[j / 2] * (f1 + f2);
    }
    const double mean = 0.5 * result_kronrod;
    double resasc = kWgk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) {
        resasc += kWgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
    }
    const double scale = std::abs(half);
    result_kronrod *= half;
    resabs *= scale;
    resasc *= scale;
    double err = std::abs((result_kronrod - result_gauss * half));
    if (resasc != 0.0 && err != 0.0) {
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    }
    if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
        err = std::max(50.0 * kEps * resabs, err);
    }
    if (!std::isfinite(result_kronrod)) err = std::numeric_limits<double>::infinity();
    return Segment{lo, hi, result_kronrod, err, depth};
}

struct ByError {
    bool operator()(const Segment& a, const Segment& b) const {
        if (a.error != b.error) return a.error < b.error;
        return a.lo > b.lo;
    }
};

void validate_interval(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        throw std::invalid_argument("integration interval must satisfy finite lo < hi");
    }
}

}  // namespace

QuadratureResult integrate_adaptive_mixed(const Integrand& f, double lo, double hi,
                                          double abs_tol, double rel_tol,
                                          const QuadOptions& options) {
    validate_interval(lo, hi);
    if (!(abs_tol > 0.0) || !(rel_tol >= 0.0)) {
        throw std::invalid_argument("quadrature tolerance must be positive");
    }
    std::priority_queue<Segment, std::vector<Segment>, ByError> active;
    std::vector<Segment> frozen;
    QuadratureResult out;

    Segment first = gauss_kronrod15(f, lo, hi, 0);
    out.evaluations = 15;
    active.push(first);
    double total = first.value;
    double total_err = first.error;

    auto accepted = [&] {
        return total_err <= std::max(abs_tol, rel_tol * std::abs(total));
    };

    out.converged = true;
    while (!accepted()) {
        if (active.empty()) {
            out.converged = false;
            break;
        }
        Segment worst = active.top();
        if (worst.depth >= options.max_depth) {
            active.pop();
            frozen.push_back(worst);
            continue;
        }
        if (out.evaluations + 30 > options.max_evaluations) {
            out.converged = false;
            break;
        }
        active.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        Segment left = gauss_kronrod15(f, worst.lo, mid, worst.depth + 1);
        Segment right = gauss_kronrod15(f, mid, worst.hi, worst.depth + 1);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        active.push(left);
        active.push(right);
    }

    // Re-sum in left-to-right order so the result does not depend on the
    // incremental update history.
    std::vector<Segment> leaves = std::move(frozen);
    while (!active.empty()) {
        leaves.push_back(active.top());
        active.pop();
    }
    std::sort(leaves.begin(), leaves.end(),
              [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
    double sum = 0.0;
    double comp = 0.0;
    double err = 0.0;
    for (const auto& s : leaves) {
        const double y = s.value - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        err += s.error;
    }
    out.value = sum;
    out.abs_error = err;
    if (!std::isfinite(err)) out.converged = false;
    if (err > std::max(abs_tol, rel_tol * std::abs(sum))) out.converged = false;
    if (options.trace) {
        options.trace->clear();
        for (const auto& s : leaves) {
            options.trace->push_back({s.lo, s.hi, s.value, s.error, s.depth});
        }
    }
    return out;
}

QuadratureResult integrate_adaptive(const Integrand& f, double lo, double hi, double tol,
                                    const QuadOptions& options) {
    return integrate_adaptive_mixed(f, lo, hi, tol, tol, options);
}

QuadratureResult integrate_khinchin_tail(const Integrand& g, std::optional<double> period,
                                         double tol, const QuadOptions& options) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (period && !(std::isfinite(*period) && *period > 0.0)) {
        throw std::invalid_argument("period must be positive and finite");
    }
    constexpr double two_over_pi = 2.0 / std::numbers::pi;
    const double t0 = kTaylorCutoff;
    // Raw (unscaled) tolerance for the integral of g / t^2.
    const double raw_tol = tol / two_over_pi;

    QuadratureResult out;
    out.converged = true;
    QuadOptions sub = options;
    sub.trace = nullptr;
    auto remaining = [&] {
        return options.max_evaluations > out.evaluations ? options.max_evaluations - out.evaluations
                                                         : std::uint64_t{0};
    };
    auto absorb = [&](const QuadratureResult& r) {
        out.evaluations += r.evaluations;
        out.converged = out.converged && r.converged;
    };

    // Head: g(t)/t^2 -> g''(0)/2 at the origin. Symmetric second differences at
    // h and h/2 give c(h) = c0 - k h^2 + O(h^4); integrate c0 - k t^2 on [0, t0].
    const double g0 = g(0.0);
    auto curvature = [&](double h) { return (g(h) - 2.0 * g0 + g(-h)) / (2.0 * h * h); };
    const double c_full = curvature(t0);
    const double c_half = curvature(0.5 * t0);
    out.evaluations += 5;
    const double k = (c_half - c_full) / (0.75 * t0 * t0);
    const double c0 = c_half + k * 0.25 * t0 * t0;
    const double head = c0 * t0 - k * t0 * t0 * t0 / 3.0;
    const double head_err = std::abs(k) * std::pow(t0, 5) + 64.0 * kEps / t0;

    // Middle: adaptive quadrature panel by panel on [t0, T].
    const double panel_width = period ? *period : 2.0 * std::numbers::pi;
    double t_end;
    if (period) {
        const double tau = *period;
        t_end = std::cbrt(32.0 * tau * tau / raw_tol);  // 8 tau^2 / T^3 <= raw_tol / 4
        t_end = std::max(t_end, t0 + tau);
    } else {
        t_end = 4.0 / raw_tol;  // 1 / T <= raw_tol / 4
    }
    const double panels_exact = std::ceil((t_end - t0) / panel_width);
    const double middle_tol = 0.5 * raw_tol / std::max(1.0, panels_exact);
    auto integrand = [&g](double t) { return g(t) / (t * t); };

    double middle = 0.0;
    double middle_comp = 0.0;
    double middle_err = 0.0;
    double reached = t0;
    if (period && options.panel_anchor) {
        // Shift t_end onto the anchor lattice; the first panel is partial.
        const double tau = *period;
        const double k_end = std::ceil((t_end - *options.panel_anchor) / tau);
        t_end = *options.panel_anchor + k_end * tau;
        const double k_first = std::floor((t0 - *options.panel_anchor) / tau) + 1.0;
        const double first = *options.panel_anchor + k_first * tau;
        if (first < t_end) {
            if (remaining() < 2000) {
                out.converged = false;
            } else {
                sub.max_evaluations = remaining() - 1000;
                auto r = integrate_adaptive_mixed(integrand, t0, first, middle_tol, 1e-13, sub);
                absorb(r);
                middle = r.value;
                middle_err = r.abs_error;
                reached = first;
            }
        }
    }
    while (reached < t_end) {
        const double hi = std::min(reached + panel_width, t_end);
        // Reserve room for the two tail integrals.
        if (remaining() < 2000) {
            out.converged = false;
            break;
        }
        sub.max_evaluations = remaining() - 1000;
        auto r = integrate_adaptive_mixed(integrand, reached, hi, middle_tol, 1e-13, sub);
        absorb(r);
        const double y = r.value - middle_comp;
        const double t = middle + y;
        middle_comp = (t - middle) - y;
        middle = t;
        middle_err += r.abs_error;
        reached = hi;
    }

    // Tail beyond `reached`.
    double tail = 0.0;
    double tail_err = 0.0;
    if (period && reached >= t_end) {
        const double tau = *period;
        const double T = reached;
        sub.max_evaluations = std::max<std::uint64_t>(remaining() / 2, 31);
        auto mean_r = integrate_adaptive_mixed(g, T, T + tau, raw_tol * tau * T / 8.0, 0.0, sub);
        absorb(mean_r);
        const double g_mean = mean_r.value / tau;
        sub.max_evaluations = std::max<std::uint64_t>(remaining(), 31);
        auto moment_r = integrate_adaptive_mixed(
            [&](double t) { return (T + tau - t) * (g(t) - g_mean); }, T, T + tau,
            raw_tol * tau * T * T / 8.0, 0.0, sub);
        absorb(moment_r);
        const double q_mean = moment_r.value / tau;
        tail = g_mean / T + q_mean / (T * T);
        tail_err = 8.0 * tau * tau / (T * T * T) + mean_r.abs_error / (tau * T) +
                   moment_r.abs_error / (tau * T * T);
    } else {
        // 0 <= g <= 2 pins the tail inside [0, 2/T].
        tail = 1.0 / reached;
        tail_err = 1.0 / reached;
    }

    out.value = two_over_pi * (head + middle + tail);
    out.abs_error = two_over_pi * (head_err + middle_err + tail_err) +
                    4.0 * kEps * std::abs(out.value);
    if (out.abs_error > tol) out.converged = false;
    if (options.trace) {
        options.trace->clear();
        options.trace->push_back({0.0, t0, head, head_err, 0});
        options.trace->push_back({t0, reached, middle, middle_err, 0});
        options.trace->push_back({reached, std::numeric_limits<double>::infinity(), tail, tail_err, 0});
    }
    return out;
}

nlohmann::json trace_to_json(const std::vector<TraceSegment>& trace) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : trace) {
        out.push_back({{"lo", s.lo},
                       {"hi", std::isfinite(s.hi) ? nlohmann::json(s.hi) : nlohmann::json("inf")},
                       {"value", s.value},
                       {"error", s.error},
                       {"depth", s.depth}});
    }
    return out;
}

}  // namespace khinchin::quad
