#include "khinchin/lemma_lab.hpp"

#include "khinchin/exactprob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace khinchin::lemma {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

double signed_pow(double y, double q) { return std::copysign(std::pow(std::abs(y), q), y); }

void require_kernel_params(double q, double w) {
    if (!(q >= 2.0) || !std::isfinite(q)) throw std::invalid_argument("q must be >= 2");
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("w must be >= 0");
}

template <class T>
T positive_part(const T& x) {
    return x > 0 ? x : T(0);
}

template <class T>
T gap_formula(const T& a, const T& gamma) {
    const T one(1);
    const T upper = (one + a) * positive_part(T(one + a - gamma));
    const T lower = (one - a) * positive_part(T(one - a - gamma));
    const T lhs = (upper - lower) / (2 * a) - (upper + lower) / 2;
    const T rhs = positive_part(T(one - gamma)) - positive_part(T(a - gamma));
    return lhs - rhs;
}

// sum_{k=1}^n k^2, exact in double for the L range used here.
double sum_of_squares(double n) { return n * (n + 1.0) * (2.0 * n + 1.0) / 6.0; }

double variance_of(int L) { return sum_of_squares(L) / L; }

void require_L(int L, int min) {
    if (L < min) throw std::invalid_argument("L must be >= " + std::to_string(min));
}

double std_normal_pdf(double u) {
    return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double phi_w(double q, double w, double x) {
    require_kernel_params(q, w);
    return signed_pow(x + w, q) + signed_pow(x - w, q);
}

double r_w(double q, double w, double x) {
    require_kernel_params(q, w);
    const double ax = std::abs(x);
    if (w == 0.0) return 2.0 * std::pow(ax, q - 1.0);
    if (ax == 0.0) return 2.0 * q * std::pow(w, q - 1.0);
    const double u = ax / w;
    if (u < 0.5) {
        // (1+u)^q - (1-u)^q = (1-u)^q expm1(q (log1p(u) - log1p(-u))).
        const double diff = std::pow(1.0 - u, q) * std::expm1(2.0 * q * std::atanh(u));
        return std::pow(w, q - 1.0) * diff / u;
    }
    return phi_w(q, w, ax) / ax;
}

ConvexityVerdict check_cone_membership(const std::function<double(double)>& f, Cone cone,
                                       std::span<const double> grid, double tol) {
    if (grid.size() < 3) throw std::invalid_argument("cone check needs at least 3 grid points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw std::invalid_argument("cone check grid must be positive and strictly increasing");
        }
    }
    ConvexityVerdict out;
    auto record = [&](bool& flag, double violation, double x) {
        if (violation > tol) flag = false;
        if (violation > out.worst_violation) {
            out.worst_violation = violation;
            out.witness = x;
        }
    };

    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);

    if (cone != Cone::HalfLine) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double mirrored = f(-grid[i]);
            const double defect = cone == Cone::OddConvex ? v[i] + mirrored : v[i] - mirrored;
            const double scale = std::max({std::abs(v[i]), std::abs(mirrored), kTiny});
            record(out.is_even_or_odd, std::abs(defect) / scale, grid[i]);
        }
    }
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double scale = std::max({std::abs(v[i]), std::abs(v[i + 1]), kTiny});
        record(out.nondecreasing_on_pos, std::max(0.0, v[i] - v[i + 1]) / scale, grid[i + 1]);
    }
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const double h1 = grid[i] - grid[i - 1];
        const double h2 = grid[i + 1] - grid[i];
        // Slope increment times the mean step: the plain second difference on
        // a uniform grid.
        const double d = ((v[i + 1] - v[i]) / h2 - (v[i] - v[i - 1]) / h1) * 0.5 * (h1 + h2);
        const double scale = std::max({std::abs(v[i - 1]), std::abs(v[i]), std::abs(v[i + 1]), kTiny});
        record(out.convex_on_pos, std::max(0.0, -d) / scale, grid[i]);
    }
    return out;
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
    if (n < 1 || !(hi > lo)) throw std::invalid_argument("uniform_grid needs n >= 1 and hi > lo");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) out[static_cast<std::size_t>(k - 1)] = lo + k * (hi - lo) / n;
    return out;
}

Rational two_point_gap(const Rational& a, const Rational& gamma) {
    if (!(a > 0 && a < 1)) throw std::invalid_argument("two-point gap needs 0 < a < 1");
    if (gamma < 0) throw std::invalid_argument("two-point gap needs gamma >= 0");
    Rational out = gap_formula<Rational>(a, gamma);
    out.canonicalize();
    return out;
}

double two_point_gap(double a, double gamma) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("two-point gap needs 0 < a < 1");
    if (!(gamma >= 0.0)) throw std::invalid_argument("two-point gap needs gamma >= 0");
    return gap_formula<double>(a, gamma);
}

NodeTable two_point_nodes(const Rational& a) {
    if (!(a > 0 && a < 1)) throw std::invalid_argument("two-point nodes need 0 < a < 1");
    std::vector<Rational> gammas{Rational(0), a, Rational(1 - a), Rational(1), Rational(1 + a)};
    std::sort(gammas.begin(), gammas.end());
    gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
    NodeTable table;
    for (const auto& g : gammas) table.gamma_nodes.push_back({g, two_point_gap(a, g)});
    return table;
}

VerdictReport verify_two_point(const Rational& a) {
    const NodeTable table = two_point_nodes(a);
    const Rational end = 1 + a;
    const NodeEntry* worst = nullptr;
    for (const auto& node : table.gamma_nodes) {
        if (node.gamma >= end) continue;
        if (!worst || node.value < worst->value) worst = &node;
    }
    VerdictReport report;
    report.claim = "two-point";
    report.params["a"] = to_fraction_string(a);
    report.params["case"] = a * 2 <= 1 ? 1 : 2;
    report.pass = worst->value >= 0;
    report.margin = to_double(worst->value);
    report.witness = OrderedJson{{"gamma", to_fraction_string(worst->gamma)},
                                 {"gap", to_fraction_string(worst->value)}};
    return report;
}

Rational two_point_witness_ratio(const Rational& a) {
    if (!(a > 0 && a < 1)) throw std::invalid_argument("witness ratio needs 0 < a < 1");
    Rational out = (1 - a) / (1 - a * a);
    out.canonicalize();
    return out;
}

BestConstant best_constant_D(int denominator) {
    if (denominator < 2) throw std::invalid_argument("grid denominator must be >= 2");
    BestConstant out;
    out.D = 1;
    out.sufficient_on_grid = true;
    for (int k = 1; k < denominator; ++k) {
        Rational a(k, denominator);
        a.canonicalize();
        const Rational ratio = two_point_witness_ratio(a);
        if (ratio > out.witness_lower_bound) {
            out.witness_lower_bound = ratio;
            out.witness_a = a;
        }
        out.sufficient_on_grid = out.sufficient_on_grid && verify_two_point(a).pass;
        ++out.grid_points;
    }
    return out;
}

double h_a_eval(double p, double a, double x) {
    if (!(p >= 3.0)) throw std::invalid_argument("h_a needs p >= 3");
    if (!(x >= 0.0)) throw std::invalid_argument("h_a needs x >= 0");
    const double r = std::sqrt(x);
    return std::pow(std::abs(a + r), p) + std::pow(std::abs(a - r), p);
}

Rational step_variance(int L) {
    require_L(L, 1);
    Rational out(Integer(L + 1) * Integer(2 * L + 1), 6);
    out.canonicalize();
    return out;
}

Rational t_of_L(int L) {
    require_L(L, 1);
    Rational out = Rational(Integer(L) * L) / step_variance(L);
    out.canonicalize();
    return out;
}

double claim_f(int L, double a) {
    require_L(L, 1);
    if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("claim_f needs a >= 0");
    const double s2 = variance_of(L);
    const double u = std::sqrt(a / s2);

    double gaussian;
    if (u > 4.0) {
        gaussian = plus_part_second_moment(GaussianSpec{std::sqrt(s2)}, a);
    } else {
        const double q = 0.5 * std::erfc(u / std::numbers::sqrt2);
        gaussian = 2.0 * s2 * u * std_normal_pdf(u) + 2.0 * (s2 - a) * q;
    }

    auto b = static_cast<long>(std::floor(std::sqrt(a)));
    while (static_cast<double>(b + 1) * (b + 1) <= a) ++b;
    while (b > 0 && static_cast<double>(b) * b > a) --b;
    double discrete = 0.0;
    if (b < L) {
        discrete = (sum_of_squares(L) - sum_of_squares(static_cast<double>(b)) -
                    static_cast<double>(L - b) * a) /
                   L;
    }
    return gaussian - discrete;
}

double claim_f_prime(int L, double a, int b) {
    require_L(L, 1);
    if (b < 0 || b >= L) throw std::invalid_argument("claim_f_prime needs b in 0..L-1");
    const double lo = static_cast<double>(b) * b;
    const double hi = static_cast<double>(b + 1) * (b + 1);
    if (!(a > lo && a < hi)) {
        throw std::invalid_argument("claim_f_prime needs b^2 < a < (b+1)^2");
    }
    const double sigma = std::sqrt(variance_of(L));
    return -std::erfc(std::sqrt(a) / (sigma * std::numbers::sqrt2)) + static_cast<double>(L - b) / L;
}

double slope_theta(int L, int b) {
    require_L(L, 1);
    if (b < 0 || b >= L) throw std::invalid_argument("slope_theta needs b in 0..L-1");
    const double sigma = std::sqrt(variance_of(L));
    return -std::erfc(b / (sigma * std::numbers::sqrt2)) + static_cast<double>(L - b) / L;
}

double slope_lower_bound(int L, int b) {
    static const std::map<std::pair<int, int>, double> bounds = {
        {{3, 1}, 0.02}, {{4, 1}, 0.03}, {{4, 2}, 0.03}, {{5, 1}, 0.03}, {{5, 2}, 0.05},
        {{5, 3}, 0.03}, {{6, 1}, 0.03}, {{6, 2}, 0.05}, {{6, 3}, 0.05}, {{6, 4}, 0.02}};
    const auto it = bounds.find({L, b});
    if (it == bounds.end()) throw std::invalid_argument("no published slope bound for this (L, b)");
    return it->second;
}

SlopeTable slope_table() {
    SlopeTable table;
    for (int L = 3; L <= 6; ++L) {
        for (int b = 1; b <= L - 2; ++b) table.entries[{L, b}] = slope_theta(L, b);
    }
    return table;
}

double tangent_value(int L) {
    require_L(L, 2);
    const double corner = static_cast<double>(L - 1) * (L - 1);
    return slope_theta(L, L - 1) * (2 * L - 1) + claim_f(L, corner);
}

double tangent_lower_bound(int L) {
    static const std::map<int, double> bounds = {{2, 0.2}, {3, 0.7}, {4, 1.2}, {5, 1.9}, {6, 2.6}};
    const auto it = bounds.find(L);
    if (it == bounds.end()) throw std::invalid_argument("no published tangent bound for this L");
    return it->second;
}

std::map<int, double> tangent_values() {
    std::map<int, double> out;
    for (int L = 2; L <= 6; ++L) out[L] = tangent_value(L);
    return out;
}

quad::QuadratureResult claim_h(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("claim_h needs t >= 0");
    quad::QuadratureResult out{0.0, 0.0, 0, true};
    if (t == 0.0) return out;
    const double c = std::sqrt(2.0 / std::numbers::pi);
    auto r = quad::integrate_adaptive([t](double x) { return (t - x * x) * std::exp(-0.5 * x * x); },
                                      0.0, std::sqrt(t), quad::kSmoothTol);
    out = r;
    out.value = c * r.value - 2.0 / 3.0 * t;
    out.abs_error = c * r.abs_error;
    return out;
}

quad::QuadratureResult claim_h_prime(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("claim_h_prime needs t >= 0");
    quad::QuadratureResult out{-2.0 / 3.0, 0.0, 0, true};
    if (t == 0.0) return out;
    const double c = std::sqrt(2.0 / std::numbers::pi);
    auto r = quad::integrate_adaptive([](double x) { return std::exp(-0.5 * x * x); }, 0.0,
                                      std::sqrt(t), quad::kSmoothTol);
    out = r;
    out.value = c * r.value - 2.0 / 3.0;
    out.abs_error = c * r.abs_error;
    return out;
}

GridMinimum claim_f_grid_minimum(int L, double step) {
    require_L(L, 1);
    if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
    const auto n = static_cast<long>(std::llround(static_cast<double>(L) * L / step));
    GridMinimum out{std::numeric_limits<double>::infinity(), 0.0};
    for (long k = 1; k <= n; ++k) {
        const double a = static_cast<double>(k) * step;
        const double v = claim_f(L, a);
        if (v < out.value) out = {v, a};
    }
    return out;
}

VerdictReport verify_claim(int L) {
    require_L(L, 1);
    VerdictReport report;
    report.claim = "gaussian-comparison";
    report.params["L"] = L;
    const GridMinimum grid = claim_f_grid_minimum(L);
    OrderedJson witness{{"grid_min", grid.value}, {"grid_argmin", grid.at}};
    double margin = grid.value;

    if (L == 1) {
        report.params["branch"] = "jensen";
    } else if (L >= 7) {
        report.params["branch"] = "h-function";
        const double t0 = to_double(t_of_L(7));
        const double t = to_double(t_of_L(L));
        const auto hp = claim_h_prime(t0);
        const auto h = claim_h(t);
        witness["h_prime_t0"] = hp.value;
        witness["h_t"] = h.value;
        margin = std::min({margin, hp.value - hp.abs_error, h.value - h.abs_error});
    } else {
        report.params["branch"] = "slopes-tangent";
        for (int b = 1; b <= L - 2; ++b) margin = std::min(margin, slope_theta(L, b));
        const double v = tangent_value(L);
        witness["tangent_value"] = v;
        margin = std::min(margin, v);
    }
    report.margin = margin;
    report.pass = margin >= 0.0;
    report.witness = witness;
    return report;
}

VerdictReport verify_slope_table() {
    VerdictReport report;
    report.claim = "slope-table";
    const auto table = slope_table();
    report.params["cells"] = static_cast<int>(table.entries.size());
    report.margin = std::numeric_limits<double>::infinity();
    for (const auto& [key, theta] : table.entries) {
        const double bound = slope_lower_bound(key.first, key.second);
        if (theta - bound < report.margin) {
            report.margin = theta - bound;
            report.witness = OrderedJson{
                {"L", key.first}, {"b", key.second}, {"theta", theta}, {"bound", bound}};
        }
    }
    report.pass = report.margin >= 0.0;
    return report;
}

VerdictReport verify_tangent_values() {
    VerdictReport report;
    report.claim = "tangent-values";
    report.params["L_range"] = "2..6";
    report.margin = std::numeric_limits<double>::infinity();
    for (const auto& [L, v] : tangent_values()) {
        const double bound = tangent_lower_bound(L);
        if (v - bound < report.margin) {
            report.margin = v - bound;
            report.witness = OrderedJson{{"L", L}, {"v", v}, {"bound", bound}};
        }
    }
    report.pass = report.margin > 0.0;
    return report;
}

VerdictReport verify_h_checkpoints() {
    VerdictReport report;
    report.claim = "h-checkpoints";
    const Rational t0 = t_of_L(7);
    report.params["t0"] = to_fraction_string(t0);
    report.params["tol"] = quad::kSmoothTol;
    const auto hp = claim_h_prime(to_double(t0));
    const auto h = claim_h(to_double(t0));
    report.margin = std::min(hp.value - hp.abs_error - 0.2, h.value - h.abs_error - 0.01);
    report.pass = report.margin > 0.0 && hp.converged && h.converged;
    report.witness = OrderedJson{{"h_prime", hp.value}, {"h", h.value}};
    return report;
}

VerdictReport verify_cone_suite() {
    constexpr double tol = 1e-9;
    const auto grid = uniform_grid(0.0, 10.0, 1000);
    VerdictReport report;
    report.claim = "cone-membership";
    report.params["tol"] = tol;
    report.params["grid_points"] = static_cast<int>(grid.size());
    report.pass = true;
    double worst = 0.0;
    int checks = 0;
    auto run = [&](const std::function<double(double)>& f, Cone cone, OrderedJson label) {
        const auto verdict = check_cone_membership(f, cone, grid, tol);
        ++checks;
        report.pass = report.pass && verdict.all();
        if (verdict.worst_violation > worst || !report.witness) {
            worst = std::max(worst, verdict.worst_violation);
            label["violation"] = verdict.worst_violation;
            label["x"] = verdict.witness ? OrderedJson(*verdict.witness) : OrderedJson();
            report.witness = label;
        }
    };
    for (double q : {2.0, 2.5, 3.0, 5.0, 8.0}) {
        for (double w : {0.0, 1.0}) {
            run([=](double x) { return phi_w(q, w, x); }, Cone::OddConvex,
                {{"function", "phi_w"}, {"q", q}, {"w", w}});
            run([=](double x) { return r_w(q, w, x); }, Cone::EvenConvex,
                {{"function", "r_w"}, {"q", q}, {"w", w}});
        }
    }
    for (double p : {3.0, 4.0, 6.0}) {
        for (double a : {0.0, 0.5, 1.0, -2.0}) {
            run([=](double x) { return h_a_eval(p, a, x); }, Cone::HalfLine,
                {{"function", "h_a"}, {"p", p}, {"a", a}});
        }
    }
    report.params["checks"] = checks;
    report.margin = tol - worst;
    return report;
}

std::string slope_table_csv(const SlopeTable& table) {
    std::ostringstream out;
    out << "L,b,theta\n";
    for (const auto& [key, theta] : table.entries) {
        out << key.first << ',' << key.second << ',' << format12(theta) << '\n';
    }
    return out.str();
}

std::string tangent_values_csv(const std::map<int, double>& values) {
    std::ostringstream out;
    out << "L,v\n";
    for (const auto& [L, v] : values) out << L << ',' << format12(v) << '\n';
    return out.str();
}

}  // namespace khinchin::lemma
