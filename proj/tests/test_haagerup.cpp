#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "khinchin/haagerup.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace khinchin;
using namespace khinchin::haagerup;

namespace {

Rational q(const char* text) { return parse_rational(text); }

SymmetricAtomLaw step(const char* rho0, int L) { return make_step_law({q(rho0), L}); }

WeightVector rw(std::initializer_list<const char*> xs) {
    std::vector<Rational> v;
    for (const char* x : xs) v.push_back(q(x));
    return WeightVector::from_rationals(v);
}

double enumerate_first_moment(const SymmetricAtomLaw& law, const WeightVector& a) {
    return abs_moment(convolve_iid(law, a), 1.0).value;
}

}  // namespace

TEST_CASE("charfn: examples and bounds") {
    CHECK(charfn(step("1/3", 4), 0.0) == 1.0);
    for (double t : {0.1, 1.0, 2.5, 7.0}) CHECK(charfn(step("0", 1), t) == doctest::Approx(std::cos(t)).epsilon(1e-15));
    CHECK(charfn(step("1/2", 1), std::numbers::pi) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));

    for (const char* rho : {"1/2", "3/5", "3/4", "9/10"}) {
        for (int L = 1; L <= 5; ++L) {
            const auto law = step(rho, L);
            const double floor = 2.0 * to_double(q(rho)) - 1.0;
            for (int k = 0; k < 400; ++k) {
                const double t = 0.037 * k;
                const double phi = charfn(law, t);
                CHECK(phi >= floor - 1e-12);
                CHECK(std::abs(phi) <= 1.0 + 1e-15);
            }
        }
    }
}

TEST_CASE("charfn_minus_one avoids cancellation near zero") {
    const auto law = step("1/4", 3);
    const double second = to_double(second_moment(law).exact());
    for (double t : {1e-9, 1e-6, 1e-4}) {
        CHECK(charfn_minus_one(law, t) == doctest::Approx(-0.5 * second * t * t).epsilon(1e-6));
    }
    CHECK(charfn_minus_one(law, 0.8) == doctest::Approx(charfn(law, 0.8) - 1.0).epsilon(1e-14));
}

TEST_CASE("product_period") {
    CHECK(*product_period(rw({"1"}), step("0", 1)) == doctest::Approx(2.0 * std::numbers::pi));
    CHECK(*product_period(rw({"1/2", "1/3"}), step("0", 2)) == doctest::Approx(12.0 * std::numbers::pi));
    CHECK(*product_period(rw({"0", "2"}), step("0", 1)) == doctest::Approx(std::numbers::pi));
    const double r = 1.0 / std::numbers::sqrt2;
    const auto unit_float = WeightVector::from_doubles(std::vector<double>{r, r});
    CHECK(*product_period(unit_float, step("0", 1)) == doctest::Approx(2.0 * std::numbers::pi / r));
    const auto incommensurate = WeightVector::from_doubles(std::vector<double>{1.0, std::numbers::sqrt2});
    CHECK_FALSE(product_period(incommensurate, step("0", 1)).has_value());
    CHECK_FALSE(product_period(rw({"0"}), step("0", 1)).has_value());
}

TEST_CASE("first_abs_moment_integral: examples") {
    auto one = first_abs_moment_integral(rw({"1"}), step("0", 1));
    CHECK(one.converged);
    CHECK(one.value == doctest::Approx(1.0).epsilon(1e-8));

    // E|Y1 + Y2| = 1 - rho0^2 for the three-atom law.
    auto lazy = first_abs_moment_integral(rw({"1", "1"}), step("1/2", 1));
    CHECK(lazy.value == doctest::Approx(0.75).epsilon(1e-8));

    const double r = 1.0 / std::numbers::sqrt2;
    auto szarek = first_abs_moment_integral(WeightVector::from_doubles(std::vector<double>{r, r}), step("0", 1));
    CHECK(szarek.converged);
    CHECK(szarek.value == doctest::Approx(r).epsilon(1e-8));

    auto nothing = first_abs_moment_integral(rw({"0", "0"}), step("0", 1));
    CHECK(nothing.value == 0.0);

    // No period for the tail: the result is flagged, not silently trusted.
    auto loose = first_abs_moment_integral(WeightVector::from_doubles(std::vector<double>{1.0, std::numbers::sqrt2}),
                                           step("0", 1), 1e-8, Limits{10'000'000, 200'000});
    CHECK_FALSE(loose.converged);
}

TEST_CASE("first_abs_moment_integral agrees with enumeration") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> num(-4, 4), den(1, 3), len(1, 4), Ls(1, 3), rho(0, 2);
    const char* rhos[] = {"0", "1/2", "3/4"};
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<Rational> w;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) {
            w.emplace_back(num(rng), den(rng));
            w.back().canonicalize();
        }
        const auto a = WeightVector::from_rationals(w);
        const auto law = step(rhos[rho(rng)], Ls(rng));
        const auto r = first_abs_moment_integral(a, law);
        CHECK(r.converged);
        CHECK(std::abs(r.value - enumerate_first_moment(law, a)) <= 2e-8);
        CHECK(representation_check(law, a).pass);
    }
}

TEST_CASE("F_of_s: examples") {
    CHECK(F_of_s(step("1/2", 1), 1.0).value == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(F_of_s(step("3/4", 2), 1.0).value == doctest::Approx(0.375).epsilon(1e-8));
    // For large s, |phi(t/sqrt s)|^s -> exp(-sigma^2 t^2 / 2): the Gaussian first moment.
    const auto law = step("1/2", 2);
    const double sigma = sigma_of(law);
    const double gaussian = sigma * std::sqrt(2.0 / std::numbers::pi);
    CHECK(F_of_s(law, 1000.0).value == doctest::Approx(gaussian).epsilon(2e-3));
    CHECK_THROWS_AS(F_of_s(law, 0.5), std::invalid_argument);
}

TEST_CASE("F_haagerup: values and monotonicity") {
    CHECK(F_haagerup(2.0).value == doctest::Approx(1.0 / std::numbers::sqrt2).epsilon(1e-9));
    // |cos t| = 2/pi + (4/pi) sum (-1)^(k+1) cos(2kt)/(4k^2 - 1) gives
    // F_Haa(1) = (8/pi) sum (-1)^(k+1) k/(4k^2 - 1) = 2/pi.
    double series = 0.0;
    for (int k = 1; k <= 2'000'000; ++k) series += (k % 2 ? 1.0 : -1.0) * k / (4.0 * k * k - 1.0);
    CHECK(8.0 / std::numbers::pi * series == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-6));
    CHECK(F_haagerup(1.0).value == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-9));

    double prev = 0.0;
    for (double s : {1.0, 1.5, 2.0, 3.0, 5.0, 10.0}) {
        const double v = F_haagerup(s).value;
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(prev < std::sqrt(2.0 / std::numbers::pi));
    CHECK_THROWS_AS(F_haagerup(0.99), std::invalid_argument);
}

TEST_CASE("verify_F_lower_bound") {
    const double grid[] = {1.0, 2.0, 4.0, 8.0};
    auto half = verify_F_lower_bound(step("1/2", 1), grid);
    CHECK(half.pass);
    CHECK(half.params["exploratory"] == false);
    CHECK((*half.witness)["cos2_identity_gap"].get<double>() <= 1e-14);
    CHECK((*half.witness)["F_haagerup_2s_margin"].get<double>() >= -1e-8);
    CHECK(half.margin == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));  // s = 1 is in the grid

    const double wide[] = {1.5, 3.0, 6.0, 20.0};
    auto heavy = verify_F_lower_bound(step("3/4", 3), wide);
    CHECK(heavy.pass);
    CHECK(heavy.margin > 0.0);
    CHECK_FALSE(heavy.witness->contains("cos2_identity_gap"));

    auto low = verify_F_lower_bound(step("1/4", 1), grid);
    CHECK(low.params["exploratory"] == true);
    std::vector<double> none;
    CHECK_THROWS_AS(verify_F_lower_bound(step("1/2", 1), none), std::invalid_argument);
}

TEST_CASE("l1l2_verdict: equality at a single weight, examples") {
    for (const char* rho : {"1/2", "2/3", "9/10"}) {
        for (int L = 1; L <= 4; ++L) {
            auto r = l1l2_verdict(step(rho, L), rw({"1"}));
            CHECK(r.pass);
            CHECK(std::abs(r.margin) <= 1e-12);
            CHECK(std::abs(l1l2_verdict(step(rho, L), rw({"3", "0", "0"})).margin) <= 1e-12);
        }
    }
    auto two = l1l2_verdict(step("1/2", 1), rw({"1", "1"}));
    CHECK(two.margin == doctest::Approx(0.75 - 1.0 / std::numbers::sqrt2).epsilon(1e-12));
    CHECK(two.pass);

    CHECK(l1l2_verdict(step("3/5", 2), rw({"1/2", "-2/3", "1", "3/7", "5/4"})).pass);
    auto below = l1l2_verdict(step("0", 1), rw({"1", "1"}));
    CHECK_FALSE(below.pass);
    CHECK(below.params["exploratory"] == true);
}

TEST_CASE("am_gm_chain holds for normalized and unnormalized weights") {
    CHECK(am_gm_chain(step("1/2", 1), rw({"1", "1"})).pass);
    CHECK(am_gm_chain(step("3/4", 2), rw({"1", "2", "3"})).pass);
    auto single = am_gm_chain(step("2/3", 3), rw({"5"}));
    CHECK(single.pass);
    CHECK(std::abs(single.margin) <= 1e-7);  // F(1) = E|Y| = N_1
    CHECK_THROWS_AS(am_gm_chain(step("1/2", 1), rw({"0"})), std::invalid_argument);
}

TEST_CASE("concavity_in_rho0") {
    const Rational small[] = {q("1/2"), q("3/5"), q("7/10")};
    auto r = concavity_in_rho0(1, 2.0, small);
    CHECK(r.pass);
    CHECK((*r.witness)["linear_side_exact"] == true);
    CHECK((*r.witness)["max_second_difference"].get<double>() <= 1e-6);

    std::vector<Rational> nine;
    for (int k = 0; k <= 8; ++k) {
        nine.emplace_back(8 + k, 16);
        nine.back().canonicalize();
    }
    CHECK(concavity_in_rho0(3, 4.0, nine).pass);

    const Rational two[] = {q("1/2"), q("1")};
    CHECK_THROWS_AS(concavity_in_rho0(1, 2.0, two), std::invalid_argument);
    const Rational unsorted[] = {q("1/2"), q("1/3"), q("1")};
    CHECK_THROWS_AS(concavity_in_rho0(1, 2.0, unsorted), std::invalid_argument);
}

TEST_CASE("solve_p0") {
    const auto r = solve_p0();
    CHECK(r.p0 > 1.8469);
    CHECK(r.p0 < 1.8476);
    CHECK(r.residual <= 1e-12);
    CHECK(r.sign_changes == 1);
    CHECK(std::tgamma(1.5) == doctest::Approx(0.5 * std::sqrt(std::numbers::pi)).epsilon(1e-15));
    CHECK(verify_p0().pass);
}

TEST_CASE("necessity_sqrt2_minus_1") {
    auto one = necessity_sqrt2_minus_1(1);
    CHECK(one.pass);
    const double t1 = (*one.witness)["computed_threshold"].get<double>();
    CHECK(std::abs(t1 - (std::numbers::sqrt2 - 1.0)) <= 1e-12);
    CHECK((*one.witness)["direction_disagrees"] == true);

    // L = 2: E R = 3/2 and E|R eps + R' eps'| = 7/4.
    auto two = necessity_sqrt2_minus_1(2);
    CHECK(two.pass);
    CHECK((*two.witness)["D"] == "7/4");
    CHECK((*two.witness)["computed_threshold"].get<double>() ==
          doctest::Approx((1.5 * std::numbers::sqrt2 - 1.75) / 1.25).epsilon(1e-14));
    CHECK_THROWS_AS(necessity_sqrt2_minus_1(0), std::invalid_argument);
}

TEST_CASE("sweep_F and its CSV") {
    const double grid[] = {1.0, 2.0};
    const auto rows = sweep_F(std::nullopt, grid);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].value == doctest::Approx(1.0 / std::numbers::sqrt2).epsilon(1e-9));
    const auto csv = sweep_csv(rows);
    CHECK(csv.rfind("s,F_value,err\n1,0.636619772", 0) == 0);
    CHECK(csv.find("\n2,0.707106781") != std::string::npos);
    const auto with_law = sweep_F(step("1/2", 1), grid);
    CHECK(with_law[0].value == doctest::Approx(0.5).epsilon(1e-8));
}
