#pragma once

#include "khinchin/quad.hpp"
#include "khinchin/rational.hpp"
#include "khinchin/scalar.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace khinchin {

struct Atom {
    Scalar value;
    Rational mass;
};

/// Per-computation resource caps. The CLI's --budget sets both.
struct Limits {
    /// Upper bound on the projected support size of a convolution.
    std::uint64_t max_atoms = 10'000'000;
    /// Upper bound on integrand evaluations per integral.
    std::uint64_t max_evaluations = 10'000'000;
};

/// Finite symmetric law with exact rational masses. Atoms are kept sorted by
/// value; masses are positive and sum to exactly one; the atom at -v carries
/// the same mass as the atom at v.
class SymmetricAtomLaw {
public:
    /// Throws std::invalid_argument if the atoms violate any invariant.
    explicit SymmetricAtomLaw(std::vector<Atom> atoms);

    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    Rational mass_at_zero() const;
    bool exact_values() const;

    friend bool operator==(const SymmetricAtomLaw& a, const SymmetricAtomLaw& b);

private:
    std::vector<Atom> atoms_;
};

/// rho0 in [0, 1] and L >= 1.
struct StepLawParams {
    Rational rho0;
    int L = 1;
};

/// Mass rho0 at zero (omitted if rho0 = 0) and (1 - rho0) / (2L) at each of
/// +-1, ..., +-L.
SymmetricAtomLaw make_step_law(const StepLawParams& params);

/// sqrt(E X^2).
double sigma_of(const SymmetricAtomLaw& law);
/// E X^2, exact when the atom values are.
Scalar second_moment(const SymmetricAtomLaw& law);

/// Coefficients a_1..a_n, each exact or float. Never empty.
class WeightVector {
public:
    explicit WeightVector(std::vector<Scalar> entries);
    static WeightVector from_doubles(std::span<const double> values);
    static WeightVector from_rationals(std::span<const Rational> values);

    std::span<const Scalar> entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const Scalar& operator[](std::size_t i) const { return entries_[i]; }
    bool all_exact() const;
    bool all_zero() const;
    /// sum of a_i^2 in double precision.
    double squared_norm() const;

private:
    std::vector<Scalar> entries_;
};

/// Exact law of a weighted sum. Same invariants as SymmetricAtomLaw; values
/// are exact only when every weight and every atom value was exact.
class SumLaw {
public:
    explicit SumLaw(std::vector<Atom> atoms);
    static SumLaw of(const SymmetricAtomLaw& law);

    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool exact_values() const { return exact_; }
    Rational mass_at(const Scalar& value) const;

private:
    std::vector<Atom> atoms_;
    bool exact_ = true;
};

/// Exact law of sum a_i X_i for independent X_i ~ laws[i]. Float values that
/// fall within 1e-12 * max|value| of each other are merged.
/// Throws std::invalid_argument on a length mismatch and std::length_error
/// when the projected support exceeds limits.max_atoms.
SumLaw convolve_weighted(std::span<const SymmetricAtomLaw> laws, const WeightVector& weights,
                         const Limits& limits = {});

/// i.i.d. convenience overload.
SumLaw convolve_iid(const SymmetricAtomLaw& law, const WeightVector& weights,
                    const Limits& limits = {});

enum class MomentMethod { ExactRational, Float };

struct MomentValue {
    double value = 0.0;
    MomentMethod method = MomentMethod::Float;
    double abs_error = 0.0;
    /// Present iff method == ExactRational.
    std::optional<Rational> exact;
};

/// E|S|^p (not rooted). Exact when p is an even integer and the law's values
/// are exact, unless force_float is set. Throws std::invalid_argument for p < 1.
MomentValue abs_moment(const SumLaw& law, double p, bool force_float = false);

/// ||sum a_i X_i||_p for i.i.d. copies of `law`. Always reported in float
/// mode; abs_error propagates the moment's bound through the root.
MomentValue n_p(const WeightVector& weights, const SymmetricAtomLaw& law, double p,
                const Limits& limits = {});

/// p-th root of an unrooted moment, with error propagation.
MomentValue root_moment(const MomentValue& moment, double p);

/// ||G||_p for a standard Gaussian, via the gamma function.
double gaussian_norm(double p);
/// sigma * ||G||_p. Throws std::invalid_argument unless p > 0 and sigma > 0.
double gaussian_abs_moment(double p, double sigma);

/// E|a + G|^p with G ~ N(0, sigma^2), by quadrature over a truncated range
/// whose tail contribution is bounded by 1e-12 relative.
quad::QuadratureResult shifted_gaussian_abs_moment(double a, double sigma, double p,
                                                   const Limits& limits = {});

struct GaussianSpec {
    double sigma = 1.0;
};

/// E(Z^2 - a)_+ for Z ~ law, exact for exact values.
Rational plus_part_second_moment(const SymmetricAtomLaw& law, const Rational& a);
double plus_part_second_moment(const SymmetricAtomLaw& law, double a);
/// E(G^2 - a)_+ for G ~ N(0, sigma^2), closed form (erfc) with a quadrature
/// path far in the tail where the closed form cancels.
double plus_part_second_moment(const GaussianSpec& gauss, double a);
/// Quadrature-only evaluation of the Gaussian case, kept as a cross-check.
quad::QuadratureResult plus_part_second_moment_quadrature(const GaussianSpec& gauss, double a);

// JSON: {"atoms":[{"v":"-1","m":"1/2"},...]}
nlohmann::json to_json(const SymmetricAtomLaw& law);
nlohmann::json to_json(const SumLaw& law);
SymmetricAtomLaw law_from_json(const nlohmann::json& j);
SumLaw sum_law_from_json(const nlohmann::json& j);

}  // namespace khinchin
