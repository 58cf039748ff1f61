#include <array>

#include <catch2/catch_amalgamated.hpp>

#include <kostant/jets.hpp>
#include <kostant/separable.hpp>

#include "support.hpp"

using namespace kostant;
using testing_support::random_series;
using testing_support::rng;
using Q = gaussian_rational;
using SQ = truncated_series<Q>;
using F = separable_function<Q>;

namespace
{

F poly(int n, multi_index m, Q c = Q(1))
{
    F f(n);
    f.add_monomial(m, c);
    f.normalize();
    return f;
}

// c * e_offsets * num / prod (m - i h_j)^p
F rational(int n, std::vector<int> offsets, h_poly<Q> num, std::map<std::pair<int, int>, int> den, factor_tag tag = {})
{
    F f(n);
    term_key k{std::move(offsets), std::move(den), tag};
    f.add_term(k, num);
    f.normalize();
    return f;
}

h_poly<Q> hc(int n, std::vector<int> e, Q c)
{
    h_poly<Q> p(n);
    p.add_to(e, c);
    return p;
}

} // namespace

TEST_CASE("pair solve of the basic monomials")
{
    const Q i = Q::i();
    // y -> y / (1 - ih)
    CHECK(poly(1, {0, 1}).solve_pair(1) == rational(1, {1}, hc(1, {0}, Q(1)), {{{1, 1}, 1}}));
    // x -> -x / (1 + ih) = -x / (-1 - ih) * (-1) ... stored over (m - ih) with m = -1
    CHECK(poly(1, {1, 0}).solve_pair(1) == rational(1, {-1}, hc(1, {0}, Q(1)), {{{1, -1}, 1}}));
    // xy -> i
    CHECK(poly(1, {1, 1}).solve_pair(1) == F::constant(1, i));
    CHECK(F(1).solve_pair(1).is_zero());
}

TEST_CASE("solve then cohom is the identity on random polynomials")
{
    auto &g = rng();
    for (int trial = 0; trial < 40; ++trial) {
        const auto s = random_series<Q>(g, 2, 8, 8, 8, {1});
        const auto f = F::from_series(s);
        const auto sol = f.solve_pair(1);
        CHECK((sol.cohom(1) - f).is_zero());
        CHECK(sol.taylor(6) == solve_pair_recursive(1, s));
    }
}

TEST_CASE("taylor of separable solutions matches the recursion")
{
    auto &g = rng();
    for (int trial = 0; trial < 40; ++trial) {
        const auto s = random_series<Q>(g, 1, 14, 8, 8, {1});
        const auto sol = F::from_series(s).solve_pair(1);
        CHECK(sol.taylor(12) == solve_jets_recursive(s));
    }
}

TEST_CASE("constant terms and kernel tags are rejected by the pair solve")
{
    try {
        (void)F::constant(1, Q(1)).solve_pair(1);
        FAIL("expected NONZERO_CONSTANT_TERM");
    } catch (const error &e) {
        CHECK(e.code() == error_code::nonzero_constant_term);
    }
    const auto k = rational(1, {0}, hc(1, {0}, Q(1)), {}, factor_tag::kernel(1, 1, 1.0));
    try {
        (void)k.solve_pair(1);
        FAIL("expected UNSOLVABLE_FACTOR");
    } catch (const error &e) {
        CHECK(e.code() == error_code::unsolvable_factor);
    }
}

TEST_CASE("kernel factors solve the homogeneous equation and pass through other pairs")
{
    const auto k1 = rational(2, {0, 0}, hc(2, {0, 0}, Q(1)), {}, factor_tag::kernel(1, 3, 2.0));
    CHECK(k1.cohom(1).is_zero());
    CHECK_FALSE(k1.apply_x(1).is_zero());
    // kappa_1 y_2 solved in pair 2 keeps the kernel factor
    const auto f = k1 * poly(2, {0, 0, 0, 1});
    const auto sol = f.solve_pair(2);
    const auto expect = rational(2, {0, 1}, hc(2, {0, 0}, Q(1)), {{{2, 1}, 1}}, factor_tag::kernel(1, 3, 2.0));
    CHECK(sol == expect);
    CHECK((sol.cohom(2) - f).is_zero());
    CHECK(sol.cohom(1).is_zero());
}

TEST_CASE("flat factors solve by division with Laurent numerators")
{
    const auto flat = rational(1, {0}, hc(1, {1}, Q(3)), {}, factor_tag::flat(1, 1.0));
    const auto sol = flat.solve_pair(1);
    CHECK((sol.cohom(1) - flat).is_zero());
    // diagonal flat term with no h factor needs i F / h
    const auto bare = rational(1, {0}, hc(1, {0}, Q(1)), {}, factor_tag::flat(1, 1.0));
    const auto sb = bare.solve_pair(1);
    CHECK((sb.cohom(1) - bare).is_zero());
    const std::array<double, 2> p{0.7, 0.9};
    const double h = 0.63;
    CHECK(std::abs(sb.evaluate(p) - complex(0.0, 1.0) * std::exp(-1.0 / (h * h)) / h) < 1e-15);
    // flat terms have zero Taylor series
    CHECK(sb.taylor(8).is_zero());
}

TEST_CASE("evaluation agrees with the series and the rational closed form")
{
    const auto sol = poly(1, {0, 1}).solve_pair(1);
    const std::array<double, 2> p{0.3, -1.2};
    const complex h{0.3 * -1.2, 0.0};
    CHECK(std::abs(sol.evaluate(p) - complex(-1.2, 0.0) / (1.0 - complex(0.0, 1.0) * h)) < 1e-15);

    auto &g = rng();
    const auto s = random_series<Q>(g, 2, 6, 6, 8);
    const std::array<double, 4> q{0.4, -0.3, 0.8, 0.5};
    CHECK(std::abs(F::from_series(s).evaluate(q) - s.evaluate(q)) < 1e-13);
}

TEST_CASE("normalisation cancels common factors")
{
    // (1 - i h) y / (1 - i h) = y
    h_poly<Q> num(1);
    num.add_to({0}, Q(1));
    num.add_to({1}, -Q::i());
    CHECK(rational(1, {1}, num, {{{1, 1}, 1}}) == poly(1, {0, 1}));
    // a product with two tagged factors is outside the class
    const auto k = rational(1, {0}, hc(1, {0}, Q(1)), {}, factor_tag::kernel(1, 1, 1.0));
    CHECK_THROWS_AS(k * k, error);
}

TEST_CASE("cohom operators of different pairs commute")
{
    auto &g = rng();
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = F::from_series(random_series<Q>(g, 3, 8, 8, 8, {1, 2})).solve_pair(1).solve_pair(2);
        CHECK(f.cohom(1).cohom(3) == f.cohom(3).cohom(1));
        CHECK(f.cohom(2).cohom(1) == f.cohom(1).cohom(2));
    }
}
