#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "khinchin/lemma_lab.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace khinchin;
using namespace khinchin::lemma;

namespace {

Rational q(const char* text) { return parse_rational(text); }

Rational frac(long n, long d) {
    Rational r(n, d);
    r.canonicalize();
    return r;
}

double sigma2_of(int L) { return (L + 1.0) * (2.0 * L + 1.0) / 6.0; }

// Gaussian plus-part moment by direct quadrature of its defining integral,
// minus the discrete sum written out term by term.
double f_oracle(int L, double a) {
    const double s2 = sigma2_of(L);
    const double s = std::sqrt(s2);
    const double lo = std::sqrt(a);
    auto r = quad::integrate_adaptive(
        [&](double x) { return (x * x - a) * std::exp(-x * x / (2.0 * s2)); }, lo, lo + 40.0 * s,
        1e-13);
    double discrete = 0.0;
    for (int k = 1; k <= L; ++k) {
        if (k * k > a) discrete += (k * k - a) / L;
    }
    return std::sqrt(2.0 / (std::numbers::pi * s2)) * r.value - discrete;
}

}  // namespace

TEST_CASE("phi_w: examples and oddness") {
    for (double x : {0.1, 0.5, 0.9}) CHECK(phi_w(2.0, 1.0, x) == doctest::Approx(4.0 * x).epsilon(1e-15));
    CHECK(phi_w(3.0, 1.0, 2.0) == 28.0);
    CHECK(phi_w(2.5, 0.0, -3.0) == doctest::Approx(-2.0 * std::pow(3.0, 2.5)).epsilon(1e-15));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> qd(2.0, 8.0), wd(0.0, 3.0), xd(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        const double qq = qd(rng), w = wd(rng), x = xd(rng);
        CHECK(phi_w(qq, w, -x) == -phi_w(qq, w, x));
        CHECK(r_w(qq, w, -x) == r_w(qq, w, x));
    }
    CHECK_THROWS_AS(phi_w(1.5, 1.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(phi_w(3.0, -1.0, 0.3), std::invalid_argument);
}

TEST_CASE("r_w: examples, limit at zero and agreement with the cubic closed form") {
    CHECK(r_w(2.0, 1.0, 0.5) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(r_w(3.0, 1.0, 0.0) == 6.0);
    CHECK(r_w(3.0, 1.0, 1e-12) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(r_w(5.0, 2.0, 0.0) == 2.0 * 5.0 * 16.0);
    CHECK(r_w(4.0, 0.0, 0.0) == 0.0);
    // For q = 3, w = 1: ((x+1)^3 + sgn(x-1)|x-1|^3) / x = 2x^2 + 6 on all of R.
    for (double x = 1e-9; x < 10.0; x *= 1.7) {
        CHECK(r_w(3.0, 1.0, x) == doctest::Approx(2.0 * x * x + 6.0).epsilon(1e-13));
    }
    // Near zero the series 2q + (q)(q-1)(q-2)/3 x^2 dominates.
    for (double qq : {2.5, 4.0, 7.5}) {
        const double x = 1e-6;
        const double series = 2.0 * qq + qq * (qq - 1.0) * (qq - 2.0) / 3.0 * x * x;
        CHECK(r_w(qq, 1.0, x) == doctest::Approx(series).epsilon(1e-14));
    }
}

TEST_CASE("check_cone_membership: positive and negative examples") {
    const auto grid = uniform_grid(0.0, 10.0, 1000);
    auto r = check_cone_membership([](double x) { return r_w(3.0, 1.0, x); }, Cone::EvenConvex, grid);
    CHECK(r.all());
    CHECK(r.worst_violation == 0.0);
    CHECK_FALSE(r.witness);

    auto phi = check_cone_membership([](double x) { return phi_w(3.0, 1.0, x); }, Cone::OddConvex, grid);
    CHECK(phi.all());

    auto neg = check_cone_membership([](double x) { return -std::abs(x); }, Cone::EvenConvex, grid);
    CHECK(neg.is_even_or_odd);
    CHECK_FALSE(neg.nondecreasing_on_pos);
    CHECK(neg.convex_on_pos);
    REQUIRE(neg.witness);
    CHECK(*neg.witness > 0.0);

    auto concave = check_cone_membership([](double x) { return std::sqrt(x); }, Cone::HalfLine, grid);
    CHECK(concave.nondecreasing_on_pos);
    CHECK_FALSE(concave.convex_on_pos);

    auto even_as_odd = check_cone_membership([](double x) { return x * x; }, Cone::OddConvex, grid);
    CHECK_FALSE(even_as_odd.is_even_or_odd);

    std::vector<double> short_grid{1.0, 2.0};
    CHECK_THROWS_AS(check_cone_membership([](double x) { return x; }, Cone::HalfLine, short_grid),
                    std::invalid_argument);
    std::vector<double> unsorted{1.0, 3.0, 2.0};
    CHECK_THROWS_AS(check_cone_membership([](double x) { return x; }, Cone::HalfLine, unsorted),
                    std::invalid_argument);
    std::vector<double> with_zero{0.0, 1.0, 2.0};
    CHECK_THROWS_AS(check_cone_membership([](double x) { return x; }, Cone::HalfLine, with_zero),
                    std::invalid_argument);
}

TEST_CASE("check_cone_membership: kernels and h_a on a non-uniform grid") {
    std::vector<double> grid;
    for (double x = 1e-3; x < 20.0; x *= 1.01) grid.push_back(x);
    for (double qq : {2.0, 2.5, 3.0, 5.0, 8.0}) {
        for (double w : {0.0, 0.3, 1.0, 4.0}) {
            CHECK(check_cone_membership([=](double x) { return phi_w(qq, w, x); }, Cone::OddConvex, grid).all());
            CHECK(check_cone_membership([=](double x) { return r_w(qq, w, x); }, Cone::EvenConvex, grid).all());
        }
    }
    for (double p : {3.0, 3.5, 4.0, 6.0}) {
        for (double a : {-1.0, 0.0, 0.25, 2.0}) {
            CHECK(check_cone_membership([=](double x) { return h_a_eval(p, a, x); }, Cone::HalfLine, grid).all());
        }
    }
}

TEST_CASE("two_point_gap: published node values") {
    CHECK(two_point_gap(q("1/2"), q("0")) == q("1/4"));
    CHECK(two_point_gap(q("1/2"), q("1")) == q("3/8"));
    CHECK(two_point_gap(q("1/2"), q("1/2")) == q("1/4"));
    CHECK(two_point_gap(0.5, 1.0) == 0.375);
    for (int k = 1; k < 100; ++k) {
        const Rational a = frac(k, 100);
        CHECK(two_point_gap(a, Rational(0)) == a - a * a);
        CHECK(two_point_gap(a, Rational(1)) == (1 + a) * (1 - a) / 2);
        CHECK(two_point_gap(a, Rational(1 + a)) == 0);
        CHECK(two_point_gap(a, Rational(3)) == 0);
        if (a * 2 <= 1) {
            CHECK(two_point_gap(a, a) == a * (1 - a));
            CHECK(two_point_gap(a, Rational(1 - a)) == 1 - a * a - a);
        } else {
            CHECK(two_point_gap(a, a) == (1 - a) * (1 - a) / (2 * a));
            CHECK(two_point_gap(a, Rational(1 - a)) == a * (1 - a));
        }
    }
    CHECK_THROWS_AS(two_point_gap(q("0"), q("1")), std::invalid_argument);
    CHECK_THROWS_AS(two_point_gap(q("1"), q("1")), std::invalid_argument);
    CHECK_THROWS_AS(two_point_gap(q("1/2"), q("-1")), std::invalid_argument);
}

TEST_CASE("two_point_gap: linear between consecutive nodes, exactly") {
    for (int k = 1; k < 40; ++k) {
        const Rational a = frac(k, 40);
        const auto table = two_point_nodes(a);
        REQUIRE(table.gamma_nodes.size() >= 4);
        CHECK(table.gamma_nodes.back().gamma == 1 + a);
        CHECK(table.gamma_nodes.back().value == 0);
        for (std::size_t i = 0; i + 1 < table.gamma_nodes.size(); ++i) {
            const auto& lo = table.gamma_nodes[i];
            const auto& hi = table.gamma_nodes[i + 1];
            const Rational mid = (lo.gamma + hi.gamma) / 2;
            CHECK(two_point_gap(a, mid) == (lo.value + hi.value) / 2);
            const Rational third = (2 * lo.gamma + hi.gamma) / 3;
            CHECK(two_point_gap(a, third) == (2 * lo.value + hi.value) / 3);
        }
    }
}

TEST_CASE("verify_two_point: both cases") {
    auto small = verify_two_point(q("1/4"));
    CHECK(small.pass);
    CHECK(small.margin == 3.0 / 16.0);
    CHECK(small.params["case"] == 1);

    auto large = verify_two_point(q("3/4"));
    CHECK(large.pass);
    CHECK(large.margin == doctest::Approx(1.0 / 24.0).epsilon(1e-15));
    CHECK(large.params["case"] == 2);
    CHECK((*large.witness)["gap"] == "1/24");

    double previous = 1.0;
    for (const char* a : {"9/10", "99/100", "999/1000", "99999/100000"}) {
        auto r = verify_two_point(q(a));
        CHECK(r.pass);
        CHECK(r.margin < previous);
        previous = r.margin;
    }
    CHECK(previous < 1e-9);
    CHECK_THROWS_AS(verify_two_point(q("3/2")), std::invalid_argument);
}

TEST_CASE("best_constant_D: witness ratio and sufficiency") {
    CHECK(two_point_witness_ratio(q("9/10")) == q("10/19"));
    CHECK(two_point_witness_ratio(q("1/1000000")) == q("1000000/1000001"));
    auto d = best_constant_D(100);
    CHECK(d.D == 1);
    CHECK(d.sufficient_on_grid);
    CHECK(d.grid_points == 99);
    CHECK(d.witness_lower_bound == q("100/101"));
    CHECK(d.witness_a == q("1/100"));
    CHECK(d.witness_lower_bound < d.D);
}

TEST_CASE("h_a_eval: examples and slope at the origin") {
    for (double p : {3.0, 4.5, 7.0}) CHECK(h_a_eval(p, 0.0, 4.0) == doctest::Approx(2.0 * std::pow(2.0, p)).epsilon(1e-15));
    CHECK(h_a_eval(3.0, 1.0, 1.0) == 8.0);
    // h_1(x) = 2 + p(p-1) x + O(x^2), so the one-sided difference tends to p(p-1).
    for (double p : {3.0, 4.0, 6.0}) {
        const double dx = 1e-7;
        const double slope = (h_a_eval(p, 1.0, dx) - h_a_eval(p, 1.0, 0.0)) / dx;
        CHECK(slope == doctest::Approx(p * (p - 1.0)).epsilon(1e-5));
    }
    CHECK_THROWS_AS(h_a_eval(2.5, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(h_a_eval(3.0, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("claim_f: zero at the origin, positive beyond L^2, matches quadrature") {
    for (int L = 1; L <= 12; ++L) {
        CHECK(claim_f(L, 0.0) == 0.0);
        CHECK(claim_f(L, L * L + 0.5) > 0.0);
        CHECK(claim_f(L, 4.0 * L * L) > 0.0);
    }
    CHECK(claim_f(2, 1.0) == doctest::Approx(f_oracle(2, 1.0)).epsilon(1e-10));
    CHECK(claim_f(2, 1.0) > 0.3);
    for (int L : {2, 3, 5, 9}) {
        for (double a : {0.01, 0.7, 1.0, 2.3, 4.0, 6.25, 17.0, 40.0, 200.0}) {
            CHECK(std::abs(claim_f(L, a) - f_oracle(L, a)) <= 1e-10);
        }
    }
    CHECK_THROWS_AS(claim_f(2, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(claim_f(0, 1.0), std::invalid_argument);
}

TEST_CASE("claim_f_prime: matches finite differences and increases on each piece") {
    for (int L = 2; L <= 6; ++L) {
        CHECK(slope_theta(L, 0) == 0.0);
        for (int b = 0; b < L; ++b) {
            const double lo = b * b, hi = (b + 1) * (b + 1);
            double previous = -INFINITY;
            for (int k = 1; k < 20; ++k) {
                const double a = lo + (hi - lo) * k / 20.0;
                const double d = claim_f_prime(L, a, b);
                CHECK(d > previous);
                previous = d;
                const double h = 1e-5;
                const double fd = (claim_f(L, a + h) - claim_f(L, a - h)) / (2.0 * h);
                CHECK(d == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
            }
            // f' - theta grows like sqrt(a - b^2) at b = 0 and linearly otherwise.
            const double offset = b == 0 ? 1e-30 : 1e-12;
            CHECK(slope_theta(L, b) == doctest::Approx(claim_f_prime(L, lo + offset, b)).epsilon(1e-9).scale(1.0));
        }
    }
    CHECK_THROWS_AS(claim_f_prime(3, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(claim_f_prime(3, 4.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(claim_f_prime(3, 10.0, 3), std::invalid_argument);
}

TEST_CASE("slope_table: every published bound is exceeded") {
    const auto table = slope_table();
    CHECK(table.entries.size() == 10);
    for (const auto& [key, theta] : table.entries) {
        CHECK(theta > 0.0);
        CHECK(theta >= slope_lower_bound(key.first, key.second));
    }
    CHECK(table.entries.at({3, 1}) >= 0.02);
    CHECK(table.entries.at({5, 2}) >= 0.05);
    CHECK(table.entries.at({6, 4}) >= 0.02);
    CHECK(slope_theta(3, 2) < 0.0);
    CHECK_THROWS_AS(slope_lower_bound(7, 1), std::invalid_argument);
    auto v = verify_slope_table();
    CHECK(v.pass);
    CHECK(v.margin >= 0.0);
}

TEST_CASE("tangent_values: every published bound is exceeded") {
    const auto values = tangent_values();
    REQUIRE(values.size() == 5);
    for (const auto& [L, v] : values) CHECK(v > tangent_lower_bound(L));
    // Independent evaluation of v_2 from the quadrature oracle.
    const double theta = -std::erfc(1.0 / std::sqrt(2.0 * sigma2_of(2))) + 0.5;
    CHECK(values.at(2) == doctest::Approx(3.0 * theta + f_oracle(2, 1.0)).epsilon(1e-10));
    CHECK(verify_tangent_values().pass);
}

TEST_CASE("claim_h: t(L) and the published checkpoints") {
    CHECK(t_of_L(7) == q("49/20"));
    CHECK(t_of_L(1) == 1);
    CHECK(step_variance(7) == 20);
    for (int L = 1; L <= 50; ++L) CHECK(t_of_L(L) * step_variance(L) == L * L);
    const double t0 = 49.0 / 20.0;
    auto hp = claim_h_prime(t0);
    CHECK(hp.converged);
    CHECK(std::abs(hp.value - (std::erf(std::sqrt(t0 / 2.0)) - 2.0 / 3.0)) <= 1e-10);
    CHECK(hp.value > 0.2);
    auto h = claim_h(t0);
    CHECK(h.value > 0.01);
    CHECK(claim_h(0.0).value == 0.0);
    CHECK(claim_h_prime(0.0).value == doctest::Approx(-2.0 / 3.0));
    // h' is increasing: t(L) increases in L toward 3, so h(t(L)) >= h(t0).
    for (int L = 8; L <= 40; ++L) CHECK(claim_h(to_double(t_of_L(L))).value > h.value);
    auto v = verify_h_checkpoints();
    CHECK(v.pass);
    CHECK(v.params["t0"] == "49/20");
}

TEST_CASE("verify_claim: each branch of the case split") {
    auto one = verify_claim(1);
    CHECK(one.pass);
    CHECK(one.params["branch"] == "jensen");
    for (int L = 2; L <= 6; ++L) {
        auto r = verify_claim(L);
        CHECK(r.pass);
        CHECK(r.params["branch"] == "slopes-tangent");
        CHECK((*r.witness)["tangent_value"].get<double>() > tangent_lower_bound(L));
    }
    for (int L : {7, 8, 12}) {
        auto r = verify_claim(L);
        CHECK(r.pass);
        CHECK(r.params["branch"] == "h-function");
    }
    CHECK_THROWS_AS(verify_claim(0), std::invalid_argument);
}

TEST_CASE("cone suite and CSV output") {
    auto suite = verify_cone_suite();
    CHECK(suite.pass);
    CHECK(suite.params["checks"] == 32);
    CHECK(suite.margin > 0.0);

    const auto csv = slope_table_csv(slope_table());
    CHECK(csv.rfind("L,b,theta\n3,1,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
    const auto tcsv = tangent_values_csv(tangent_values());
    CHECK(tcsv.rfind("L,v\n2,0.24", 0) == 0);
}
