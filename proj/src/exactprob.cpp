#include "khinchin/exactprob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace khinchin {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kMergeRelTol = 1e-12;

bool scalar_less(const Scalar& a, const Scalar& b) {
    if (a.is_exact() && b.is_exact()) return a.exact() < b.exact();
    return a.value() < b.value();
}

/// Sorts and validates: positive masses summing to one, distinct values,
/// mirror symmetry. Returns true iff every value is exact.
bool normalize_atoms(std::vector<Atom>& atoms, const char* what) {
    if (atoms.empty()) throw std::invalid_argument(std::string(what) + ": no atoms");
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& x, const Atom& y) { return scalar_less(x.value, y.value); });
    Rational total = 0;
    bool exact = true;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto& atom = atoms[i];
        if (!std::isfinite(atom.value.value())) {
            throw std::invalid_argument(std::string(what) + ": non-finite atom value");
        }
        if (atom.mass <= 0) {
            throw std::invalid_argument(std::string(what) + ": atom masses must be positive");
        }
        if (i > 0 && !scalar_less(atoms[i - 1].value, atom.value)) {
            throw std::invalid_argument(std::string(what) + ": duplicate atom value " +
                                        atom.value.to_string());
        }
        exact = exact && atom.value.is_exact();
        total += atom.mass;
    }
    if (total != 1) {
        throw std::invalid_argument(std::string(what) + ": masses sum to " +
                                    to_fraction_string(total) + ", not 1");
    }
    const std::size_t n = atoms.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Atom& lo = atoms[i];
        const Atom& hi = atoms[n - 1 - i];
        if (!(lo.value == -hi.value) || lo.mass != hi.mass) {
            throw std::invalid_argument(std::string(what) + ": law is not symmetric at " +
                                        lo.value.to_string());
        }
    }
    return exact;
}

Integer lcm(const Integer& a, const Integer& b) {
    Integer out;
    mpz_lcm(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return out;
}

/// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::uint64_t projected_support(std::span<const SymmetricAtomLaw> laws, const WeightVector& w) {
    std::uint64_t size = 1;
    for (std::size_t i = 0; i < laws.size(); ++i) {
        if (w[i].is_zero()) continue;
        const std::uint64_t k = laws[i].size();
        if (size > std::numeric_limits<std::uint64_t>::max() / k) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        size *= k;
    }
    return size;
}

std::vector<Atom> convolve_exact_scaled(std::span<const SymmetricAtomLaw> laws,
                                        const WeightVector& weights,
                                        const Integer& denominator) {
    // Every value a_i * x is an integer multiple of 1 / denominator.
    using Table = std::vector<std::pair<std::int64_t, Rational>>;
    Table current{{0, Rational(1)}};
    for (std::size_t i = 0; i < laws.size(); ++i) {
        if (weights[i].is_zero()) continue;
        const Rational& a = weights[i].exact();
        std::vector<std::pair<std::int64_t, const Rational*>> steps;
        for (const auto& atom : laws[i].atoms()) {
            Rational scaled = a * atom.value.exact() * denominator;
            steps.emplace_back(scaled.get_num().get_si(), &atom.mass);
        }
        std::unordered_map<std::int64_t, Rational> next;
        next.reserve(current.size() * steps.size());
        for (const auto& [value, mass] : current) {
            for (const auto& [step, step_mass] : steps) {
                next[value + step] += mass * *step_mass;
            }
        }
        current.clear();
        current.reserve(next.size());
        for (auto& [value, mass] : next) current.emplace_back(value, std::move(mass));
        std::sort(current.begin(), current.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
    }
    std::vector<Atom> atoms;
    atoms.reserve(current.size());
    for (auto& [value, mass] : current) {
        Rational v(Integer(static_cast<long>(value)), denominator);
        v.canonicalize();
        atoms.push_back(Atom{Scalar(v), std::move(mass)});
    }
    return atoms;
}

std::vector<Atom> convolve_exact_generic(std::span<const SymmetricAtomLaw> laws,
                                         const WeightVector& weights) {
    std::vector<std::pair<Rational, Rational>> current{{Rational(0), Rational(1)}};
    for (std::size_t i = 0; i < laws.size(); ++i) {
        if (weights[i].is_zero()) continue;
        const Rational& a = weights[i].exact();
        std::vector<std::pair<Rational, Rational>> next;
        next.reserve(current.size() * laws[i].size());
        for (const auto& [value, mass] : current) {
            for (const auto& atom : laws[i].atoms()) {
                next.emplace_back(value + a * atom.value.exact(), mass * atom.mass);
            }
        }
        std::sort(next.begin(), next.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        current.clear();
        for (auto& entry : next) {
            if (!current.empty() && current.back().first == entry.first) {
                current.back().second += entry.second;
            } else {
                current.push_back(std::move(entry));
            }
        }
    }
    std::vector<Atom> atoms;
    atoms.reserve(current.size());
    for (auto& [value, mass] : current) atoms.push_back(Atom{Scalar(value), std::move(mass)});
    return atoms;
}

/// Merges a symmetric multiset of float atoms. Only the nonnegative half is
/// clustered; the negative half is its mirror image, so symmetry is exact.
std::vector<std::pair<double, Rational>> merge_symmetric(
    std::vector<std::pair<double, Rational>>& raw) {
    double max_abs = 0.0;
    for (const auto& entry : raw) max_abs = std::max(max_abs, std::abs(entry.first));
    const double threshold = kMergeRelTol * max_abs;
    Rational zero_mass = 0;
    std::vector<std::size_t> positive;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = raw[i].first;
        if (std::abs(v) <= threshold) {
            zero_mass += raw[i].second;
        } else if (v > 0) {
            positive.push_back(i);
        }
    }
    std::sort(positive.begin(), positive.end(),
              [&](std::size_t x, std::size_t y) { return raw[x].first < raw[y].first; });
    std::vector<std::pair<double, Rational>> clusters;
    for (std::size_t idx : positive) {
        const double v = raw[idx].first;
        if (!clusters.empty() && v - clusters.back().first <= threshold) {
            clusters.back().second += raw[idx].second;
        } else {
            clusters.emplace_back(v, raw[idx].second);
        }
    }
    std::vector<std::pair<double, Rational>> out;
    out.reserve(2 * clusters.size() + 1);
    for (auto it = clusters.rbegin(); it != clusters.rend(); ++it) {
        out.emplace_back(-it->first, it->second);
    }
    if (zero_mass > 0) out.emplace_back(0.0, zero_mass);
    for (auto& c : clusters) out.push_back(std::move(c));
    return out;
}

std::vector<Atom> convolve_float(std::span<const SymmetricAtomLaw> laws,
                                 const WeightVector& weights) {
    std::vector<std::pair<double, Rational>> current{{0.0, Rational(1)}};
    for (std::size_t i = 0; i < laws.size(); ++i) {
        if (weights[i].is_zero()) continue;
        const double a = weights[i].value();
        std::vector<std::pair<double, Rational>> next;
        next.reserve(current.size() * laws[i].size());
        for (const auto& [value, mass] : current) {
            for (const auto& atom : laws[i].atoms()) {
                next.emplace_back(value + a * atom.value.value(), mass * atom.mass);
            }
        }
        current = merge_symmetric(next);
    }
    std::vector<Atom> atoms;
    atoms.reserve(current.size());
    for (auto& [value, mass] : current) {
        atoms.push_back(Atom{Scalar::real(value), std::move(mass)});
    }
    return atoms;
}

void require_p(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
        throw std::invalid_argument("moment order p must be a finite real >= 1");
    }
}

double std_normal_pdf(double u) {
    return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_upper_tail(double u) { return 0.5 * std::erfc(u / std::numbers::sqrt2); }

nlohmann::json atoms_to_json(std::span<const Atom> atoms) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& atom : atoms) {
        list.push_back({{"v", atom.value.to_string()}, {"m", to_fraction_string(atom.mass)}});
    }
    return nlohmann::json{{"atoms", list}};
}

std::vector<Atom> atoms_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("atoms") || !j.at("atoms").is_array()) {
        throw std::invalid_argument("law JSON must be an object with an \"atoms\" array");
    }
    std::vector<Atom> atoms;
    for (const auto& entry : j.at("atoms")) {
        if (!entry.is_object() || !entry.contains("v") || !entry.contains("m") ||
            !entry.at("v").is_string() || !entry.at("m").is_string()) {
            throw std::invalid_argument("atom JSON must be {\"v\": string, \"m\": string}");
        }
        atoms.push_back(Atom{Scalar::parse(entry.at("v").get<std::string>()),
                             parse_rational(entry.at("m").get<std::string>())});
    }
    return atoms;
}

}  // namespace

// ---------------------------------------------------------------------------
// Laws

SymmetricAtomLaw::SymmetricAtomLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    normalize_atoms(atoms_, "SymmetricAtomLaw");
}

Rational SymmetricAtomLaw::mass_at_zero() const {
    for (const auto& atom : atoms_) {
        if (atom.value.is_zero()) return atom.mass;
    }
    return 0;
}

bool SymmetricAtomLaw::exact_values() const {
    return std::all_of(atoms_.begin(), atoms_.end(),
                       [](const Atom& a) { return a.value.is_exact(); });
}

bool operator==(const SymmetricAtomLaw& a, const SymmetricAtomLaw& b) {
    if (a.atoms_.size() != b.atoms_.size()) return false;
    for (std::size_t i = 0; i < a.atoms_.size(); ++i) {
        if (!(a.atoms_[i].value == b.atoms_[i].value) || a.atoms_[i].mass != b.atoms_[i].mass) {
            return false;
        }
    }
    return true;
}

SymmetricAtomLaw make_step_law(const StepLawParams& params) {
    if (params.rho0 < 0 || params.rho0 > 1) {
        throw std::invalid_argument("rho0 must lie in [0, 1], got " +
                                    to_fraction_string(params.rho0));
    }
    if (params.L < 1) throw std::invalid_argument("L must be a positive integer");
    std::vector<Atom> atoms;
    if (params.rho0 > 0) atoms.push_back(Atom{Scalar::integer(0), params.rho0});
    if (params.rho0 < 1) {
        const Rational side = (1 - params.rho0) / Rational(2 * params.L);
        for (int j = 1; j <= params.L; ++j) {
            atoms.push_back(Atom{Scalar::integer(j), side});
            atoms.push_back(Atom{Scalar::integer(-j), side});
        }
    }
    return SymmetricAtomLaw(std::move(atoms));
}

Scalar second_moment(const SymmetricAtomLaw& law) {
    if (law.exact_values()) {
        Rational total = 0;
        for (const auto& atom : law.atoms()) {
            total += atom.mass * atom.value.exact() * atom.value.exact();
        }
        return Scalar(total);
    }
    CompensatedSum total;
    for (const auto& atom : law.atoms()) {
        total.add(to_double(atom.mass) * atom.value.value() * atom.value.value());
    }
    return Scalar::real(total.value());
}

double sigma_of(const SymmetricAtomLaw& law) { return std::sqrt(second_moment(law).value()); }

// ---------------------------------------------------------------------------
// Weights

WeightVector::WeightVector(std::vector<Scalar> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("weight vector must be nonempty");
    for (const auto& e : entries_) {
        if (!std::isfinite(e.value())) throw std::invalid_argument("weights must be finite");
    }
}

WeightVector WeightVector::from_doubles(std::span<const double> values) {
    std::vector<Scalar> entries;
    for (double v : values) entries.push_back(Scalar::real(v));
    return WeightVector(std::move(entries));
}

WeightVector WeightVector::from_rationals(std::span<const Rational> values) {
    std::vector<Scalar> entries;
    for (const auto& v : values) entries.emplace_back(v);
    return WeightVector(std::move(entries));
}

bool WeightVector::all_exact() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const Scalar& s) { return s.is_exact(); });
}

bool WeightVector::all_zero() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const Scalar& s) { return s.is_zero(); });
}

double WeightVector::squared_norm() const {
    double total = 0.0;
    for (const auto& e : entries_) total += e.value() * e.value();
    return total;
}

// ---------------------------------------------------------------------------
// Sum laws

SumLaw::SumLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    exact_ = normalize_atoms(atoms_, "SumLaw");
}

SumLaw SumLaw::of(const SymmetricAtomLaw& law) {
    return SumLaw(std::vector<Atom>(law.atoms().begin(), law.atoms().end()));
}

Rational SumLaw::mass_at(const Scalar& value) const {
    for (const auto& atom : atoms_) {
        if (atom.value == value) return atom.mass;
    }
    return 0;
}

SumLaw convolve_weighted(std::span<const SymmetricAtomLaw> laws, const WeightVector& weights,
                         const Limits& limits) {
    if (laws.size() != weights.size()) {
        throw std::invalid_argument("convolve_weighted: " + std::to_string(laws.size()) +
                                    " laws but " + std::to_string(weights.size()) + " weights");
    }
    const std::uint64_t projected = projected_support(laws, weights);
    if (projected > limits.max_atoms) {
        throw std::length_error("projected support " + std::to_string(projected) +
                                " exceeds the atom budget " + std::to_string(limits.max_atoms));
    }
    const bool exact = weights.all_exact() &&
                       std::all_of(laws.begin(), laws.end(),
                                   [](const SymmetricAtomLaw& l) { return l.exact_values(); });
    if (!exact) return SumLaw(convolve_float(laws, weights));

    Integer denominator = 1;
    for (std::size_t i = 0; i < laws.size(); ++i) {
        if (weights[i].is_zero()) continue;
        for (const auto& atom : laws[i].atoms()) {
            Rational v = weights[i].exact() * atom.value.exact();
            denominator = lcm(denominator, v.get_den());
        }
    }
    // Fast path when every partial sum numerator fits comfortably in int64.
    Integer bound = 0;
    for (std::size_t i = 0; i < laws.size(); ++i) {
        if (weights[i].is_zero()) continue;
        Integer largest = 0;
        for (const auto& atom : laws[i].atoms()) {
            Rational v = ::abs(weights[i].exact() * atom.value.exact()) * denominator;
            largest = std::max(largest, Integer(v.get_num()));
        }
        bound += largest;
    }
    if (bound < Integer(1) << 62 && denominator.fits_slong_p()) {
        return SumLaw(convolve_exact_scaled(laws, weights, denominator));
    }
    return SumLaw(convolve_exact_generic(laws, weights));
}

SumLaw convolve_iid(const SymmetricAtomLaw& law, const WeightVector& weights,
                    const Limits& limits) {
    std::vector<SymmetricAtomLaw> laws(weights.size(), law);
    return convolve_weighted(laws, weights, limits);
}

// ---------------------------------------------------------------------------
// Moments

MomentValue abs_moment(const SumLaw& law, double p, bool force_float) {
    require_p(p);
    const bool even_integer = p == std::floor(p) && std::fmod(p, 2.0) == 0.0 && p < 1e6;
    if (even_integer && law.exact_values() && !force_float) {
        const auto k = static_cast<unsigned long>(p);
        Rational total = 0;
        for (const auto& atom : law.atoms()) {
            const Rational& v = atom.value.exact();
            Integer num;
            Integer den;
            mpz_pow_ui(num.get_mpz_t(), v.get_num_mpz_t(), k);
            mpz_pow_ui(den.get_mpz_t(), v.get_den_mpz_t(), k);
            Rational power(num, den);
            power.canonicalize();
            total += atom.mass * power;
        }
        MomentValue out;
        out.value = to_double(total);
        out.method = MomentMethod::ExactRational;
        out.abs_error = 0.0;
        out.exact = total;
        return out;
    }
    CompensatedSum total;
    for (const auto& atom : law.atoms()) {
        total.add(to_double(atom.mass) * std::pow(std::abs(atom.value.value()), p));
    }
    MomentValue out;
    out.value = total.value();
    out.method = MomentMethod::Float;
    out.abs_error = static_cast<double>(law.size()) * kEps * out.value;
    return out;
}

MomentValue root_moment(const MomentValue& moment, double p) {
    require_p(p);
    MomentValue out;
    out.method = MomentMethod::Float;
    out.value = moment.value > 0 ? std::pow(moment.value, 1.0 / p) : 0.0;
    if (moment.value > 0) {
        out.abs_error = out.value * (moment.abs_error / moment.value) / p + 2.0 * kEps * out.value;
    } else {
        out.abs_error = std::pow(moment.abs_error, 1.0 / p);
    }
    return out;
}

MomentValue n_p(const WeightVector& weights, const SymmetricAtomLaw& law, double p,
                const Limits& limits) {
    require_p(p);
    return root_moment(abs_moment(convolve_iid(law, weights, limits), p), p);
}

double gaussian_norm(double p) {
    if (!(p > 0.0)) throw std::invalid_argument("gaussian_norm requires p > 0");
    return std::numbers::sqrt2 *
           std::exp((std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(std::numbers::pi)) / p);
}

double gaussian_abs_moment(double p, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_abs_moment requires sigma > 0");
    return sigma * gaussian_norm(p);
}

quad::QuadratureResult shifted_gaussian_abs_moment(double a, double sigma, double p,
                                                   const Limits& limits) {
    require_p(p);
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!std::isfinite(a)) throw std::invalid_argument("shift must be finite");
    // Work with U = G / sigma and shift c = a / sigma.
    const double c = a / sigma;
    const double gp = std::pow(gaussian_norm(p), p);
    const double lower = std::max(std::pow(std::abs(c), p), gp);
    const double moment_2p = std::exp(p * std::log(2.0) + std::lgamma(p + 0.5) -
                                      0.5 * std::log(std::numbers::pi));
    // |c + u|^p <= 2^(p-1) (|c|^p + |u|^p); Cauchy-Schwarz on the |u|^p part.
    auto tail_bound = [&](double k) {
        const double prob = std::erfc(k / std::numbers::sqrt2);
        return std::pow(2.0, p - 1.0) * (std::pow(std::abs(c), p) * prob + std::sqrt(moment_2p * prob));
    };
    double k = 8.0;
    while (tail_bound(k) > 1e-12 * lower && k < 64.0) k += 1.0;

    auto integrand = [&](double u) { return std::pow(std::abs(c + u), p) * std_normal_pdf(u); };
    quad::QuadOptions options;
    options.max_evaluations = limits.max_evaluations;
    constexpr double tol = 1e-13;
    quad::QuadratureResult total;
    if (-c > -k && -c < k) {
        auto left = quad::integrate_adaptive(integrand, -k, -c, tol, options);
        auto right = quad::integrate_adaptive(integrand, -c, k, tol, options);
        total.value = left.value + right.value;
        total.abs_error = left.abs_error + right.abs_error;
        total.evaluations = left.evaluations + right.evaluations;
        total.converged = left.converged && right.converged;
    } else {
        total = quad::integrate_adaptive(integrand, -k, k, tol, options);
    }
    const double scale = std::pow(sigma, p);
    total.value *= scale;
    total.abs_error = (total.abs_error + tail_bound(k)) * scale;
    return total;
}

Rational plus_part_second_moment(const SymmetricAtomLaw& law, const Rational& a) {
    if (a < 0) throw std::invalid_argument("plus_part_second_moment requires a >= 0");
    if (!law.exact_values()) {
        throw std::invalid_argument("exact plus-part moment needs exact atom values");
    }
    Rational total = 0;
    for (const auto& atom : law.atoms()) {
        Rational excess = atom.value.exact() * atom.value.exact() - a;
        if (excess > 0) total += atom.mass * excess;
    }
    return total;
}

double plus_part_second_moment(const SymmetricAtomLaw& law, double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("plus_part_second_moment requires a >= 0");
    CompensatedSum total;
    for (const auto& atom : law.atoms()) {
        const double v = atom.value.value();
        const double excess = v * v - a;
        if (excess > 0) total.add(to_double(atom.mass) * excess);
    }
    return total.value();
}

quad::QuadratureResult plus_part_second_moment_quadrature(const GaussianSpec& gauss, double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("plus_part_second_moment requires a >= 0");
    if (!(gauss.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    const double s = gauss.sigma;
    const double c = std::sqrt(a);
    // 2 * int_0^inf (2 c y + y^2) pdf_sigma(c + y) dy, no cancellation.
    auto integrand = [&](double y) {
        return 2.0 * (2.0 * c * y + y * y) * std_normal_pdf((c + y) / s) / s;
    };
    auto r = quad::integrate_adaptive(integrand, 0.0, 40.0 * s, 1e-13);
    return r;
}

double plus_part_second_moment(const GaussianSpec& gauss, double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("plus_part_second_moment requires a >= 0");
    if (!(gauss.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    const double s = gauss.sigma;
    const double u = std::sqrt(a) / s;
    if (u > 4.0) return plus_part_second_moment_quadrature(gauss, a).value;
    const double q = std_normal_upper_tail(u);
    return 2.0 * (s * s * (u * std_normal_pdf(u) + q) - a * q);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const SymmetricAtomLaw& law) { return atoms_to_json(law.atoms()); }
nlohmann::json to_json(const SumLaw& law) { return atoms_to_json(law.atoms()); }

SymmetricAtomLaw law_from_json(const nlohmann::json& j) {
    return SymmetricAtomLaw(atoms_from_json(j));
}

SumLaw sum_law_from_json(const nlohmann::json& j) { return SumLaw(atoms_from_json(j)); }

}  // namespace khinchin
