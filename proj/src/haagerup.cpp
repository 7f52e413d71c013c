#include "khinchin/haagerup.hpp"

#include "khinchin/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace khinchin::haagerup {

namespace {

constexpr double kPi = std::numbers::pi;

quad::QuadOptions options_from(const Limits& limits) {
    quad::QuadOptions o;
    o.max_evaluations = limits.max_evaluations;
    return o;
}

void require_s(double s) {
    if (!(std::isfinite(s) && s >= 1.0)) throw std::invalid_argument("s must be >= 1");
}

// 1 - |1 + d|^s, accurate when d is small.
double one_minus_power(double d, double s) {
    const double base = 1.0 + d;
    if (base > 0.0) return -std::expm1(s * std::log1p(d));
    return 1.0 - std::pow(std::abs(base), s);
}

// Best rational approximation with denominator <= max_den, by continued fractions.
std::optional<Rational> small_rational(double x, long max_den, double rel_tol) {
    long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double r = x;
    for (int iter = 0; iter < 64; ++iter) {
        const double fl = std::floor(r);
        if (fl > 1e15) break;
        const long a = static_cast<long>(fl);
        const long h2 = a * h1 + h0;
        const long k2 = a * k1 + k0;
        if (k2 > max_den) break;
        h0 = h1, h1 = h2, k0 = k1, k1 = k2;
        if (std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= rel_tol * x) {
            Rational q(h1, k1);
            q.canonicalize();
            return q;
        }
        const double frac = r - fl;
        if (frac == 0.0) break;
        r = 1.0 / frac;
    }
    return std::nullopt;
}

Rational rho0_of(const SymmetricAtomLaw& law) { return law.mass_at_zero(); }

Rational exact_first_moment(const SumLaw& law) {
    Rational total = 0;
    for (const auto& atom : law.atoms()) total += atom.mass * abs(atom.value.exact());
    return total;
}

OrderedJson law_json(const SymmetricAtomLaw& law) {
    OrderedJson out = OrderedJson::object();
    out["rho0"] = to_fraction_string(rho0_of(law));
    out["support_max"] = law.atoms().back().value.to_string();
    return out;
}

OrderedJson weights_json(const WeightVector& a) {
    OrderedJson out = OrderedJson::array();
    for (const auto& x : a.entries()) out.push_back(x.to_string());
    return out;
}

// E|Y| and E Y^2 for one summand.
struct SummandMoments {
    double first;
    double second;
};

SummandMoments summand_moments(const SymmetricAtomLaw& law) {
    const auto single = SumLaw::of(law);
    return {abs_moment(single, 1.0).value, abs_moment(single, 2.0).value};
}

double l1l2_margin(const SymmetricAtomLaw& law, const WeightVector& a, const Limits& limits) {
    const auto m = summand_moments(law);
    const double n1 = abs_moment(convolve_iid(law, a, limits), 1.0).value;
    const double c1 = m.first / std::sqrt(m.second);
    const double n2 = std::sqrt(m.second * a.squared_norm());
    return n1 - c1 * n2;
}

}  // namespace

double charfn(const SymmetricAtomLaw& law, double t) {
    double sum = 0.0;
    for (const auto& atom : law.atoms()) sum += to_double(atom.mass) * std::cos(atom.value.value() * t);
    return sum;
}

double charfn_minus_one(const SymmetricAtomLaw& law, double t) {
    double sum = 0.0;
    for (const auto& atom : law.atoms()) {
        const double s = std::sin(0.5 * atom.value.value() * t);
        sum += to_double(atom.mass) * s * s;
    }
    return -2.0 * sum;
}

std::optional<double> product_period(const WeightVector& weights, const SymmetricAtomLaw& law) {
    bool exact = law.exact_values() && weights.all_exact();
    std::vector<Scalar> freqs;
    for (const auto& w : weights.entries()) {
        if (w.is_zero()) continue;
        for (const auto& atom : law.atoms()) {
            if (atom.value.sign() <= 0) continue;
            freqs.push_back(abs(w) * atom.value);
        }
    }
    if (freqs.empty()) return std::nullopt;
    if (exact) {
        Rational g = freqs.front().exact();
        for (const auto& f : freqs) g = rational_gcd(g, f.exact());
        return 2.0 * kPi / to_double(g);
    }
    double smallest = freqs.front().value();
    for (const auto& f : freqs) smallest = std::min(smallest, f.value());
    std::optional<Rational> g;
    for (const auto& f : freqs) {
        auto ratio = small_rational(f.value() / smallest, 1000, 1e-12);
        if (!ratio) return std::nullopt;
        g = g ? rational_gcd(*g, *ratio) : *ratio;
    }
    return 2.0 * kPi / (smallest * to_double(*g));
}

QuadratureResult first_abs_moment_integral(const WeightVector& weights,
                                           const SymmetricAtomLaw& law, double tol,
                                           const Limits& limits) {
    std::vector<double> a;
    for (const auto& w : weights.entries()) {
        if (!w.is_zero()) a.push_back(std::abs(w.value()));
    }
    if (a.empty() || law.size() == 1) return {};
    // 1 - prod(1 + d_j) accumulated as g <- g - (1 - g) d_j.
    auto g = [&](double t) {
        double acc = 0.0;
        for (double aj : a) acc -= (1.0 - acc) * charfn_minus_one(law, aj * t);
        return acc;
    };
    return quad::integrate_khinchin_tail(g, product_period(weights, law), tol, options_from(limits));
}

QuadratureResult F_of_s(const SymmetricAtomLaw& law, double s, double tol, const Limits& limits) {
    require_s(s);
    if (law.size() == 1) return {};  // point mass at zero
    const double scale = 1.0 / std::sqrt(s);
    auto g = [&](double t) { return one_minus_power(charfn_minus_one(law, t * scale), s); };
    const auto unit = WeightVector::from_rationals(std::vector<Rational>{Rational(1)});
    std::optional<double> period = product_period(unit, law);
    if (period) *period *= std::sqrt(s);
    return quad::integrate_khinchin_tail(g, period, tol, options_from(limits));
}

QuadratureResult F_haagerup(double s, double tol, const Limits& limits) {
    require_s(s);
    const double scale = 1.0 / std::sqrt(s);
    auto g = [&](double t) {
        const double h = std::sin(0.5 * t * scale);
        return one_minus_power(-2.0 * h * h, s);
    };
    // |cos| has kinks at the zeros of cos(t / sqrt s).
    auto options = options_from(limits);
    options.panel_anchor = 0.5 * kPi * std::sqrt(s);
    return quad::integrate_khinchin_tail(g, kPi * std::sqrt(s), tol, options);
}

VerdictReport verify_F_lower_bound(const SymmetricAtomLaw& law, std::span<const double> s_grid,
                                   double tol, const Limits& limits) {
    if (s_grid.empty()) throw std::invalid_argument("s grid is empty");
    const Rational rho0 = rho0_of(law);
    const auto f1 = F_of_s(law, 1.0, tol, limits);
    const double abs_y = summand_moments(law).first;

    VerdictReport report;
    report.claim = "F-lower-bound";
    report.params = law_json(law);
    report.params["grid_points"] = static_cast<int>(s_grid.size());
    report.params["exploratory"] = rho0 * 2 < 1;

    std::vector<QuadratureResult> fs(s_grid.size());
    parallel_for(s_grid.size(), [&](std::size_t i) { fs[i] = F_of_s(law, s_grid[i], tol, limits); });

    bool pass = std::abs(f1.value - abs_y) <= f1.abs_error + tol;
    double margin = std::numeric_limits<double>::infinity();
    double worst_s = s_grid.front();
    OrderedJson rows = OrderedJson::array();
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        const double gap = fs[i].value - f1.value;
        const double budget = fs[i].abs_error + f1.abs_error + 2.0 * tol;
        if (gap < -budget || !fs[i].converged) pass = false;
        if (gap < margin) margin = gap, worst_s = s_grid[i];
        rows.push_back({{"s", s_grid[i]}, {"F", fs[i].value}, {"err", fs[i].abs_error}});
    }

    OrderedJson witness = {{"F1", f1.value}, {"E_abs_Y", abs_y}, {"worst_s", worst_s}, {"rows", rows}};

    if (rho0 * 2 == 1) {
        // phi_Y(t) = 1/2 + 1/2 E cos(tR) = E cos^2(tR/2).
        double identity_gap = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const double t = 0.05 * k;
            double cos2 = 0.0;
            for (const auto& atom : law.atoms()) {
                if (atom.value.sign() == 0) continue;
                const double c = std::cos(0.5 * atom.value.value() * t);
                cos2 += 2.0 * to_double(atom.mass) * c * c;
            }
            identity_gap = std::max(identity_gap, std::abs(charfn(law, t) - cos2));
        }
        const double e_r = 2.0 * abs_y;
        double chain_margin = std::numeric_limits<double>::infinity();
        double haagerup_margin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s_grid.size(); ++i) {
            const auto haa = F_haagerup(2.0 * s_grid[i], tol, limits);
            const double lower = e_r / std::numbers::sqrt2 * haa.value;
            const double lower_err = e_r / std::numbers::sqrt2 * haa.abs_error;
            const double c = fs[i].value - lower;
            const double h = haa.value - 1.0 / std::numbers::sqrt2;
            if (c < -(fs[i].abs_error + lower_err + 2.0 * tol)) pass = false;
            if (h < -(haa.abs_error + tol)) pass = false;
            chain_margin = std::min(chain_margin, c);
            haagerup_margin = std::min(haagerup_margin, h);
        }
        if (identity_gap > 1e-14) pass = false;
        witness["cos2_identity_gap"] = identity_gap;
        witness["convexity_step_margin"] = chain_margin;
        witness["F_haagerup_2s_margin"] = haagerup_margin;
    }
    report.pass = pass;
    report.margin = margin;
    report.witness = std::move(witness);
    return report;
}

VerdictReport l1l2_verdict(const SymmetricAtomLaw& law, const WeightVector& a,
                           const Limits& limits) {
    const auto m = summand_moments(law);
    const double n1 = abs_moment(convolve_iid(law, a, limits), 1.0).value;
    const double c1 = m.first / std::sqrt(m.second);
    const double n2 = std::sqrt(m.second * a.squared_norm());

    VerdictReport report;
    report.claim = "l1-l2";
    report.params = law_json(law);
    report.params["n"] = static_cast<int>(a.size());
    report.params["weights"] = weights_json(a);
    report.params["exploratory"] = rho0_of(law) * 2 < 1;
    report.margin = n1 - c1 * n2;
    report.pass = report.margin >= -1e-9;
    report.witness = OrderedJson{{"N1", n1}, {"c1", c1}, {"N2", n2}};
    return report;
}

VerdictReport am_gm_chain(const SymmetricAtomLaw& law, const WeightVector& a, double tol,
                          const Limits& limits) {
    const double norm2 = a.squared_norm();
    if (!(norm2 > 0.0)) throw std::invalid_argument("weights are all zero");
    const double n1 = abs_moment(convolve_iid(law, a, limits), 1.0).value / std::sqrt(norm2);
    std::vector<std::pair<double, QuadratureResult>> terms;
    for (const auto& w : a.entries()) {
        if (w.is_zero()) continue;
        const double share = w.value() * w.value() / norm2;
        terms.emplace_back(share, QuadratureResult{});
    }
    parallel_for(terms.size(), [&](std::size_t i) {
        terms[i].second = F_of_s(law, 1.0 / terms[i].first, tol, limits);
    });
    double lower = 0.0, err = 0.0;
    bool converged = true;
    for (const auto& [share, f] : terms) {
        lower += share * f.value;
        err += share * f.abs_error;
        converged = converged && f.converged;
    }

    VerdictReport report;
    report.claim = "am-gm-chain";
    report.params = law_json(law);
    report.params["weights"] = weights_json(a);
    report.margin = n1 - lower;
    report.pass = converged && report.margin >= -(err + tol);
    report.witness = OrderedJson{{"N1_normalized", n1}, {"sum_F", lower}, {"err", err}};
    return report;
}

VerdictReport representation_check(const SymmetricAtomLaw& law, const WeightVector& a,
                                   double agreement, double tol, const Limits& limits) {
    const auto integral = first_abs_moment_integral(a, law, tol, limits);
    const double exact = abs_moment(convolve_iid(law, a, limits), 1.0).value;

    VerdictReport report;
    report.claim = "first-moment-representation";
    report.params = law_json(law);
    report.params["weights"] = weights_json(a);
    report.margin = agreement - std::abs(integral.value - exact);
    report.pass = integral.converged && report.margin >= 0.0;
    report.witness = OrderedJson{{"integral", integral.value},
                                 {"enumeration", exact},
                                 {"err", integral.abs_error},
                                 {"evaluations", integral.evaluations},
                                 {"converged", integral.converged}};
    return report;
}

VerdictReport concavity_in_rho0(int L, double s, std::span<const Rational> rho_grid, double tol,
                                const Limits& limits) {
    require_s(s);
    if (rho_grid.size() < 3) throw std::invalid_argument("concavity needs at least 3 grid points");
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        if (rho_grid[i] < 0 || rho_grid[i] > 1) throw std::invalid_argument("rho0 outside [0, 1]");
        if (i > 0 && !(rho_grid[i - 1] < rho_grid[i])) {
            throw std::invalid_argument("rho0 grid must be strictly increasing");
        }
    }
    std::vector<QuadratureResult> f(rho_grid.size());
    parallel_for(rho_grid.size(), [&](std::size_t i) {
        f[i] = F_of_s(make_step_law({rho_grid[i], L}), s, tol, limits);
    });

    // (1 - rho0) E R with E R = (L + 1)/2; exact second divided differences.
    Rational e_r(L + 1, 2);
    e_r.canonicalize();
    bool linear_exact = true;
    double worst = -std::numeric_limits<double>::infinity();
    double margin = std::numeric_limits<double>::infinity();
    bool converged = true;
    for (const auto& r : f) converged = converged && r.converged;
    for (std::size_t i = 1; i + 1 < rho_grid.size(); ++i) {
        const Rational& r0 = rho_grid[i - 1];
        const Rational& r1 = rho_grid[i];
        const Rational& r2 = rho_grid[i + 1];
        const Rational lin0 = (1 - r0) * e_r, lin1 = (1 - r1) * e_r, lin2 = (1 - r2) * e_r;
        const Rational lin_dd = ((lin2 - lin1) / (r2 - r1) - (lin1 - lin0) / (r1 - r0)) / (r2 - r0);
        if (lin_dd != 0) linear_exact = false;

        const double h0 = to_double(r1 - r0), h1 = to_double(r2 - r1), span = to_double(r2 - r0);
        const double w0 = 2.0 / (h0 * span), w1 = 2.0 / (h0 * h1), w2 = 2.0 / (h1 * span);
        const double dd = w0 * f[i - 1].value - w1 * f[i].value + w2 * f[i + 1].value;
        const double budget = w0 * (f[i - 1].abs_error + tol) + w1 * (f[i].abs_error + tol) +
                              w2 * (f[i + 1].abs_error + tol);
        worst = std::max(worst, dd);
        margin = std::min(margin, budget - dd);
    }

    VerdictReport report;
    report.claim = "concavity-in-rho0";
    report.params["L"] = L;
    report.params["s"] = s;
    report.params["grid_points"] = static_cast<int>(rho_grid.size());
    report.margin = margin;
    report.pass = converged && linear_exact && margin >= 0.0;
    report.witness = OrderedJson{{"max_second_difference", worst}, {"linear_side_exact", linear_exact}};
    return report;
}

P0Result solve_p0() {
    const double target = 0.5 * std::sqrt(kPi);
    auto g = [&](double p) { return std::tgamma(0.5 * (p + 1.0)) - target; };
    double lo = 1.0, hi = 1.9;  // g(lo) > 0 > g(hi)
    while (hi - lo > 1e-15) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    P0Result out;
    out.p0 = 0.5 * (lo + hi);
    out.residual = std::abs(g(out.p0));
    constexpr int kScan = 20000;
    double prev = g(2.0 / kScan);
    for (int k = 2; k < kScan; ++k) {
        const double cur = g(2.0 * k / kScan);
        if ((prev > 0.0) != (cur > 0.0)) ++out.sign_changes;
        prev = cur;
    }
    return out;
}

VerdictReport verify_p0() {
    const auto r = solve_p0();
    VerdictReport report;
    report.claim = "p0";
    report.params["interval"] = "(0,2)";
    report.margin = std::min({r.p0 - 1.8469, 1.8476 - r.p0, 1e-12 - r.residual});
    report.pass = report.margin > 0.0 && r.sign_changes == 1;
    report.witness = OrderedJson{{"p0", r.p0}, {"residual", r.residual}, {"sign_changes", r.sign_changes}};
    return report;
}

VerdictReport necessity_sqrt2_minus_1(int L) {
    if (L < 1) throw std::invalid_argument("L must be >= 1");
    // With X = rho0 delta_0 + (1 - rho0) eps R, and D = E|eps R + eps' R'|:
    //   N_1(1,1) - c_1 N_2(1,1) = (1 - rho0) [rho0 (2 E R - D) - (sqrt2 E R - D)].
    const auto base = make_step_law({Rational(0), L});
    const auto pair = WeightVector::from_rationals(std::vector<Rational>{Rational(1), Rational(1)});
    const Rational d = exact_first_moment(convolve_iid(base, pair));
    Rational e_r(L + 1, 2);
    e_r.canonicalize();
    const long double sqrt2 = std::sqrt(2.0L);
    const long double er = to_double(e_r), dd = to_double(d);
    const double threshold = static_cast<double>((sqrt2 * er - dd) / (2 * er - dd));
    const double formula = static_cast<double>(1.0L - 3.0L * L * (2.0L - sqrt2) / (2.0L * L + 1.0L));

    auto enumerated_margin = [&](double rho) {
        return l1l2_margin(make_step_law({rational_from_double(rho), L}), pair, {});
    };
    auto displayed_holds = [&](double rho) {
        return (1.0 - rho) * (2.0 * L + 1.0) / (3.0 * L) >= 2.0 - std::numbers::sqrt2;
    };
    constexpr double kDelta = 1e-6;
    const double below = enumerated_margin(threshold - kDelta);
    const double above = enumerated_margin(threshold + kDelta);
    const double probe = std::min(1.0, threshold + 1e-3);
    const bool disagree = (enumerated_margin(probe) >= 0.0) != displayed_holds(probe);

    VerdictReport report;
    report.claim = "necessity-sqrt2-minus-1";
    report.params["L"] = L;
    report.margin = std::min(-below, above);
    report.pass = below < 0.0 && above > 0.0;
    if (L == 1) report.pass = report.pass && std::abs(threshold - (std::numbers::sqrt2 - 1.0)) <= 1e-12;
    report.witness = OrderedJson{{"computed_threshold", threshold},
                                 {"computed_condition", "rho0 >= threshold"},
                                 {"formula_value", formula},
                                 {"formula_condition", "(1-rho0)(2L+1)/(3L) >= 2-sqrt(2)"},
                                 {"value_difference", threshold - formula},
                                 {"direction_disagrees", disagree},
                                 {"E_R", to_fraction_string(e_r)},
                                 {"D", to_fraction_string(d)}};
    return report;
}

std::vector<SweepRow> sweep_F(const std::optional<SymmetricAtomLaw>& law,
                              std::span<const double> s_grid, double tol, const Limits& limits) {
    std::vector<SweepRow> rows(s_grid.size());
    parallel_for(s_grid.size(), [&](std::size_t i) {
        const auto r = law ? F_of_s(*law, s_grid[i], tol, limits) : F_haagerup(s_grid[i], tol, limits);
        rows[i] = {s_grid[i], r.value, r.abs_error};
    });
    return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
    std::ostringstream out;
    out << "s,F_value,err\n";
    for (const auto& r : rows) out << format12(r.s) << ',' << format12(r.value) << ',' << format12(r.error) << '\n';
    return out.str();
}

}  // namespace khinchin::haagerup
