#include "khinchin/schur.hpp"

#include "khinchin/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace khinchin::schur {

namespace {

void require_nonnegative(const WeightVector& a) {
    for (const auto& x : a.entries()) {
        if (x.sign() < 0) throw std::invalid_argument("weights must be nonnegative");
    }
}

std::optional<Rational> exact_sqrt(const Rational& r) {
    if (r < 0) return std::nullopt;
    const Integer num = r.get_num();
    const Integer den = r.get_den();
    if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t())) {
        return std::nullopt;
    }
    Rational out(Integer(sqrt(num)), Integer(sqrt(den)));
    out.canonicalize();
    return out;
}

// E|G|^p for a standard Gaussian.
double gaussian_pth_moment(double p) {
    return std::exp(0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0)) -
                    0.5 * std::log(std::numbers::pi));
}

OrderedJson weights_json(const WeightVector& a) {
    OrderedJson out = OrderedJson::array();
    for (const auto& x : a.entries()) out.push_back(x.to_string());
    return out;
}

std::mt19937_64 trial_generator(std::uint64_t seed, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

bool majorizes(const WeightVector& upper, const WeightVector& lower) {
    if (upper.size() != lower.size()) return false;
    for (const auto* v : {&upper, &lower}) {
        for (const auto& x : v->entries()) {
            if (x.sign() < 0) return false;
        }
    }
    if (upper.all_exact() && lower.all_exact()) {
        auto sorted = [](const WeightVector& v) {
            std::vector<Rational> out;
            for (const auto& x : v.entries()) out.push_back(x.exact());
            std::sort(out.begin(), out.end(), std::greater<>());
            return out;
        };
        const auto u = sorted(upper);
        const auto l = sorted(lower);
        Rational su = 0, sl = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            su += u[i];
            sl += l[i];
            if (su < sl) return false;
        }
        return su == sl;
    }
    auto sorted = [](const WeightVector& v) {
        std::vector<double> out;
        for (const auto& x : v.entries()) out.push_back(x.value());
        std::sort(out.begin(), out.end(), std::greater<>());
        return out;
    };
    const auto u = sorted(upper);
    const auto l = sorted(lower);
    double su = 0.0, sl = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        su += u[i];
        sl += l[i];
        if (su < sl - 1e-12 * (1.0 + sl)) return false;
    }
    return std::abs(su - sl) <= 1e-12 * (1.0 + su);
}

WeightVector sqrt_weights(const WeightVector& a) {
    require_nonnegative(a);
    std::vector<Scalar> out;
    out.reserve(a.size());
    for (const auto& x : a.entries()) {
        if (x.is_exact()) {
            if (auto r = exact_sqrt(x.exact())) {
                out.emplace_back(*r);
                continue;
            }
        }
        out.push_back(Scalar::real(std::sqrt(x.value())));
    }
    return WeightVector(std::move(out));
}

MomentValue big_phi(const WeightVector& a, const SymmetricAtomLaw& law, double p,
                    const Limits& limits) {
    return abs_moment(convolve_iid(law, sqrt_weights(a), limits), p);
}

SchurVerdict ostrowski_check(const WeightVector& a, const SymmetricAtomLaw& law, double p,
                             std::optional<double> h, const Limits& limits) {
    if (a.size() < 2) throw std::invalid_argument("ostrowski_check needs at least two weights");
    require_nonnegative(a);
    const double a1 = a[0].value();
    const double a2 = a[1].value();
    if (!(a1 > 0.0 && a1 < a2)) throw std::invalid_argument("ostrowski_check needs 0 < a_1 < a_2");
    const double step = h.value_or(1e-6 * std::min(a1, a2));
    if (!(step > 0.0) || step > 0.1 * a1) {
        throw std::invalid_argument("finite-difference step must be in (0, 0.1 a_1]");
    }
    auto phi_at = [&](std::size_t coord, double delta) {
        std::vector<Scalar> entries(a.entries().begin(), a.entries().end());
        entries[coord] = Scalar::real(entries[coord].value() + delta);
        return big_phi(WeightVector(std::move(entries)), law, p, limits).value;
    };
    const double d1 = (phi_at(0, step) - phi_at(0, -step)) / (2.0 * step);
    const double d2 = (phi_at(1, step) - phi_at(1, -step)) / (2.0 * step);
    SchurVerdict out;
    out.worst_margin = d1 - d2;
    out.pass = out.worst_margin >= -kMarginTolerance;
    return out;
}

VerdictReport phi_two_point_check(double a, double b, const Rational& rho0, const SumLaw& w_law,
                                  double p) {
    if (!(a > 0.0 && a < b)) throw std::invalid_argument("phi_two_point_check needs 0 < a < b");
    if (rho0 < 0 || rho0 > 1) throw std::invalid_argument("rho0 must lie in [0, 1]");
    if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
    auto phi = [&](double x) {
        double total = 0.0;
        for (const auto& atom : w_law.atoms()) {
            const double y = x + atom.value.value();
            total += to_double(atom.mass) * p * std::copysign(std::pow(std::abs(y), p - 1.0), y);
        }
        return total;
    };
    const double plus = phi(a + b);
    const double minus = phi(b - a);
    const double bracket = (plus - minus) / (2.0 * a) - (plus + minus) / (2.0 * b);
    const double rhs = phi(b) / b - phi(a) / a;

    VerdictReport report;
    report.claim = "phi-two-point";
    report.params["a"] = a;
    report.params["b"] = b;
    report.params["rho0"] = to_fraction_string(rho0);
    report.params["p"] = p;
    if (rho0 == 0) {
        report.params["path"] = "limit";
        report.margin = bracket;
    } else {
        report.params["path"] = "direct";
        const double prefactor = to_double(1 / rho0 - 1);
        report.margin = prefactor * bracket - rhs;
    }
    report.pass = report.margin >= -kMarginTolerance;
    report.witness = OrderedJson{{"bracket", bracket}, {"rhs", rhs}};
    return report;
}

SchurVerdict majorization_sample_test(int n, const SymmetricAtomLaw& law, double p, int trials,
                                      std::uint64_t seed, const Limits& limits) {
    if (n < 1 || n > 6) throw std::invalid_argument("majorization_sample_test needs 1 <= n <= 6");
    if (!(p >= 3.0)) throw std::invalid_argument("majorization_sample_test needs p >= 3");
    if (trials < 0) throw std::invalid_argument("trials must be nonnegative");

    struct Trial {
        double margin;
        MajorizationPair pair;
    };
    std::vector<std::optional<Trial>> results(static_cast<std::size_t>(trials));
    parallel_for(results.size(), [&](std::size_t k) {
        auto rng = trial_generator(seed, k);
        std::uniform_int_distribution<int> mass(0, 12);
        std::vector<Rational> upper(static_cast<std::size_t>(n));
        Rational total = 0;
        for (auto& x : upper) {
            x = mass(rng);
            total += x;
        }
        if (total == 0) {
            upper[0] = 1;
            total = 1;
        }
        for (auto& x : upper) {
            x /= total;
            x.canonicalize();
        }
        std::vector<Rational> lower = upper;
        if (n > 1) {
            std::uniform_int_distribution<int> index(0, n - 1);
            std::uniform_int_distribution<int> weight(0, 8);
            const int moves = n + static_cast<int>(rng() % 4);
            for (int m = 0; m < moves; ++m) {
                const int i = index(rng);
                int j = index(rng);
                if (j == i) j = (i + 1) % n;
                Rational lam(weight(rng), 8);
                lam.canonicalize();
                const Rational xi = lower[static_cast<std::size_t>(i)];
                const Rational xj = lower[static_cast<std::size_t>(j)];
                lower[static_cast<std::size_t>(i)] = lam * xi + (1 - lam) * xj;
                lower[static_cast<std::size_t>(j)] = (1 - lam) * xi + lam * xj;
            }
        }
        MajorizationPair pair{WeightVector::from_rationals(lower), WeightVector::from_rationals(upper)};
        if (!majorizes(pair.upper, pair.lower)) throw std::logic_error("T-transform broke majorization");
        const double at_lower = root_moment(big_phi(pair.lower, law, p, limits), p).value;
        const double at_upper = root_moment(big_phi(pair.upper, law, p, limits), p).value;
        results[k] = Trial{at_lower - at_upper, std::move(pair)};
    });

    SchurVerdict out;
    out.worst_margin = std::numeric_limits<double>::infinity();
    for (auto& r : results) {
        if (r->margin < out.worst_margin) {
            out.worst_margin = r->margin;
            out.witness_pair = r->pair;
        }
    }
    if (results.empty()) out.worst_margin = 0.0;
    out.pass = out.worst_margin >= -kMarginTolerance;
    return out;
}

bool schur_law_is_covered(const SymmetricAtomLaw& law) {
    if (law.mass_at_zero() * 2 > 1) return false;
    for (const auto& atom : law.atoms()) {
        if (!atom.value.is_exact()) return false;
        if (abs(atom.value.exact()) > 1) return false;
    }
    return true;
}

VerdictReport schur_report(const SchurVerdict& verdict, const SymmetricAtomLaw& law,
                           OrderedJson params) {
    VerdictReport report;
    report.claim = "schur-concavity";
    report.params = std::move(params);
    report.params["exploratory"] = !schur_law_is_covered(law);
    report.pass = verdict.pass;
    report.margin = verdict.worst_margin;
    if (verdict.witness_pair) {
        report.witness = OrderedJson{{"lower", weights_json(verdict.witness_pair->lower)},
                                     {"upper", weights_json(verdict.witness_pair->upper)}};
    }
    return report;
}

VerdictReport comparison_verify(const WeightVector& a, std::span<const SymmetricAtomLaw> laws,
                                double p, const Limits& limits) {
    if (!(p >= 3.0)) throw std::invalid_argument("the Gaussian comparison needs p >= 3");
    if (laws.size() != a.size()) throw std::invalid_argument("one law per weight is required");
    for (const auto& law : laws) {
        if (law.mass_at_zero() != 0) {
            throw std::invalid_argument(
                "the Gaussian comparison needs laws without mass at zero (rho0 = 0)");
        }
    }
    const auto sum = convolve_weighted(laws, a, limits);
    const MomentValue lhs = abs_moment(sum, p);

    double variance = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        variance += a[i].value() * a[i].value() * second_moment(laws[i]).value();
    }
    const double n2 = std::sqrt(variance);
    const double gauss = std::pow(n2, p) * gaussian_pth_moment(p);
    const double np = root_moment(lhs, p).value;

    const double moment_margin = gauss - lhs.value;
    const double norm_margin = gaussian_norm(p) * n2 - np;

    VerdictReport report;
    report.claim = "gaussian-comparison-moments";
    report.params["n"] = static_cast<int>(a.size());
    report.params["p"] = p;
    report.params["weights"] = weights_json(a);
    report.margin = std::min(moment_margin, norm_margin);
    report.pass = report.margin >= -kMarginTolerance;
    report.witness = OrderedJson{{"N_p", np},
                                 {"N_2", n2},
                                 {"ratio", n2 > 0.0 ? np / n2 : 0.0},
                                 {"gaussian_norm", gaussian_norm(p)},
                                 {"moment_margin", moment_margin},
                                 {"norm_margin", norm_margin}};
    return report;
}

VerdictReport shift_comparison_check(const SymmetricAtomLaw& law, double p,
                                     std::span<const double> shifts, const Limits& limits) {
    if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
    if (shifts.empty()) throw std::invalid_argument("at least one shift is required");
    const double sigma = sigma_of(law);
    VerdictReport report;
    report.claim = "shift-comparison";
    report.params["p"] = p;
    report.params["shifts"] = static_cast<int>(shifts.size());
    report.margin = std::numeric_limits<double>::infinity();
    for (double c : shifts) {
        double discrete = 0.0;
        for (const auto& atom : law.atoms()) {
            discrete += to_double(atom.mass) * std::pow(std::abs(c + atom.value.value()), p);
        }
        const auto gauss = shifted_gaussian_abs_moment(c, sigma, p, limits);
        const double margin = gauss.value - gauss.abs_error - discrete;
        if (margin < report.margin) {
            report.margin = margin;
            report.witness = OrderedJson{{"shift", c}, {"discrete", discrete}, {"gaussian", gauss.value}};
        }
    }
    report.pass = report.margin >= -kMarginTolerance;
    return report;
}

std::vector<double> equal_weight_ratios(const SymmetricAtomLaw& law, double p, int n_max,
                                        const Limits& limits) {
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    const double var = second_moment(law).value();
    std::vector<double> out;
    for (int n = 1; n <= n_max; ++n) {
        const std::vector<Rational> ones(static_cast<std::size_t>(n), Rational(1));
        const double np = n_p(WeightVector::from_rationals(ones), law, p, limits).value;
        out.push_back(np / std::sqrt(n * var));
    }
    return out;
}

NecessityResult necessity_rho_half() {
    const std::vector<const char*> rhos = {"0", "1/10", "1/5", "3/10", "2/5",
                                           "3/5", "7/10", "4/5", "9/10"};
    VerdictReport report;
    report.claim = "necessity-rho-half";
    report.params["L"] = 1;
    report.params["p"] = 3;
    report.params["boundary"] = "1/2";
    report.margin = std::numeric_limits<double>::infinity();
    OrderedJson rows = OrderedJson::array();
    for (const char* text : rhos) {
        const Rational rho = parse_rational(text);
        const auto law = make_step_law({rho, 1});
        const double r = to_double(rho);
        const double limit = 1.5 * (1.0 - r) * (1.0 - 2.0 * r);
        const double phi0 = 1.0 - r;  // E|X|^3
        for (double lambda : {1e-4, 1e-5}) {
            const auto a = WeightVector::from_doubles(std::vector{lambda, 1.0 - lambda});
            const double quotient = (big_phi(a, law, 3.0).value - phi0) / lambda;
            const double agreement = (limit > 0.0 ? 1.0 : -1.0) * quotient;
            report.margin = std::min(report.margin, agreement);
            rows.push_back({{"rho0", text}, {"lambda", lambda}, {"quotient", quotient}, {"limit", limit}});
        }
    }
    report.pass = report.margin > 0.0;
    report.witness = OrderedJson{{"rows", rows}};
    return {0.5, report};
}

double rho_p3_threshold(int L) {
    if (L < 1) throw std::invalid_argument("L must be >= 1");
    const auto law = SumLaw::of(make_step_law({Rational(0), L}));
    const double third = abs_moment(law, 3.0).value;
    const double second = abs_moment(law, 2.0).value;
    const double ratio = third / (gaussian_pth_moment(3.0) * std::pow(second, 1.5));
    return 1.0 - ratio * ratio;
}

NecessityResult necessity_rho_p3() {
    const double analytic = 1.0 - 27.0 * std::numbers::pi / 128.0;
    const std::vector<int> Ls = {1, 10, 100, 1000, 10000};
    std::vector<double> thresholds(Ls.size());
    std::vector<int> flips_ok(Ls.size(), 0);
    parallel_for(Ls.size(), [&](std::size_t i) {
        const int L = Ls[i];
        thresholds[i] = rho_p3_threshold(L);
        // The inequality must hold just below the threshold and fail just above.
        auto holds = [&](double rho) {
            const auto law = SumLaw::of(make_step_law({rational_from_double(rho), L}));
            const double third = abs_moment(law, 3.0).value;
            const double second = abs_moment(law, 2.0).value;
            return third <= gaussian_pth_moment(3.0) * std::pow(second, 1.5);
        };
        flips_ok[i] = holds(thresholds[i] - 1e-6) && !holds(thresholds[i] + 1e-6);
    });

    bool monotone = true;
    for (std::size_t i = 1; i < thresholds.size(); ++i) monotone = monotone && thresholds[i] < thresholds[i - 1];
    const double last = thresholds.back();
    const double richardson = (10.0 * last - thresholds[thresholds.size() - 2]) / 9.0;

    VerdictReport report;
    report.claim = "necessity-rho-p3";
    report.params["p"] = 3;
    report.params["analytic"] = analytic;
    OrderedJson sweep = OrderedJson::array();
    bool flips = true;
    for (std::size_t i = 0; i < Ls.size(); ++i) {
        sweep.push_back({{"L", Ls[i]}, {"threshold", thresholds[i]}});
        flips = flips && flips_ok[i];
    }
    report.margin = 1e-4 - std::abs(last - analytic);
    report.pass = monotone && flips && report.margin >= 0.0;
    report.witness = OrderedJson{{"sweep", sweep},
                                 {"richardson", richardson},
                                 {"monotone", monotone},
                                 {"sign_flip_confirmed", flips}};
    return {analytic, report};
}

}  // namespace khinchin::schur
