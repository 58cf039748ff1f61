#include <array>
#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include <kostant/hyperbolic2d.hpp>
#include <kostant/verify.hpp>

#include "support.hpp"

using namespace kostant;
using Catch::Matchers::WithinAbs;
using Q = gaussian_rational;
using SQ = truncated_series<Q>;
using F = separable_function<Q>;

namespace
{

const complex I{0.0, 1.0};

F poly(multi_index m, Q c = Q(1))
{
    F f(1);
    f.add_monomial(m, c);
    f.normalize();
    return f;
}

flat_factor<Q> gauss(double c, std::vector<Q> pre = {Q(1)})
{
    return flat_factor<Q>{c, std::move(pre)};
}

evaluable eval_of(const smooth_function_2d<Q> &g)
{
    return [g](std::span<const double> p) { return g.evaluate(p); };
}

evaluable eval_of(const F &f)
{
    return [f](std::span<const double> p) { return f.evaluate(p); };
}

} // namespace

TEST_CASE("solve_poly_exact examples")
{
    const auto gy = solve_poly_exact(poly({0, 1}));
    const std::array<double, 2> p{0.4, -0.7};
    const double h = 0.4 * -0.7;
    CHECK(std::abs(gy.evaluate(p) - complex(-0.7, 0.0) / (1.0 - I * h)) < 1e-15);

    const auto gx = solve_poly_exact(poly({1, 0}));
    CHECK(std::abs(gx.evaluate(p) - complex(-0.4, 0.0) / (1.0 + I * h)) < 1e-15);
    // Taylor head -x + i x^2 y
    const auto t = gx.closed().taylor(3);
    CHECK(t.coeff({1, 0}) == Q(-1));
    CHECK(t.coeff({2, 1}) == Q::i());

    CHECK(solve_poly_exact(poly({1, 1})).closed() == F::constant(1, Q::i()));
    CHECK(solve_poly_exact(F(1)).is_zero());
    CHECK_THROWS_AS(solve_poly_exact(F::constant(1, Q(1))), error);
}

TEST_CASE("exact solutions have identically zero residual and match the recursion")
{
    auto &g = testing_support::rng();
    for (int trial = 0; trial < 30; ++trial) {
        const auto s = testing_support::random_series<Q>(g, 1, 14, 8, 10, {1});
        const auto f = F::from_series(s);
        const auto sol = solve_poly_exact(s);
        CHECK((sol.closed().cohom(1) - f).is_zero());
        CHECK(sol.closed().taylor(12) == solve_jets_recursive(s));
    }
}

TEST_CASE("homotopy integral examples")
{
    const auto zero = F(1);
    const std::array<double, 2> p{0.3, 0.8};
    CHECK(homotopy_flat_integral(zero, p) == complex{});

    const auto f = gauss(1.0).as_function(1, 1);
    const std::array<double, 2> diag{0.6, 0.6};
    CHECK(homotopy_flat_integral(f, diag) == complex{});
    const std::array<double, 2> axis{0.0, 0.6};
    CHECK(homotopy_flat_integral(f, axis) == complex{});

    // F is constant along the flow; the integral is F (1 - e^{ih}) / (-ih) with ln gamma = 1
    const double e2 = std::exp(2.0);
    const std::array<double, 2> q{1.0, e2};
    const complex expect = std::exp(-std::exp(-4.0)) * (1.0 - std::exp(I * e2)) / (-I * e2);
    const auto got = homotopy_flat_integral(f, q);
    CHECK(std::abs(got - expect) < 1e-14);
    CHECK(std::abs(homotopy_flat_integral(f, q, 1e-12, homotopy_method::quadrature) - expect) < 1e-11);
}

TEST_CASE("antiderivative and quadrature routes agree")
{
    auto &g = testing_support::rng();
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // pre(z) = z - 2 z^3 with an off-diagonal factor y: e_1 N(h) flat
    F f(1);
    term_key k = f.plain_key();
    k.offsets = {1};
    k.tag = factor_tag::flat(1, 1.5);
    h_poly<Q> num(1);
    num.add_to({1}, Q(1));
    num.add_to({3}, Q(-2));
    f.add_term(k, num);
    f = f + gauss(2.0, {Q(0), Q(0), Q::i()}).as_function(1, 1);
    f.normalize();
    for (int trial = 0; trial < 60; ++trial) {
        const std::array<double, 2> p{u(g), u(g)};
        const auto a = homotopy_flat_integral(f, p, 1e-12, homotopy_method::antiderivative);
        const auto b = homotopy_flat_integral(f, p, 1e-12, homotopy_method::quadrature);
        CHECK(std::abs(a - b) <= 1e-10);
    }
}

TEST_CASE("homotopy solution satisfies the flow equation and the bound")
{
    const auto f = gauss(1.0, {Q(0), Q(1)}).as_function(1, 1);
    const auto sol = solve_full_2d(f);
    CHECK(sol.closed().is_zero());
    CHECK(sol.homotopy_sources().size() == 1);
    const auto model = build_model({0, 1, 0});
    const auto rep = flow_residual(model, 1, eval_of(sol), eval_of(f), grid_spec::standard(1), {}, 1e-6);
    CHECK(rep.within_tolerance());
    CHECK(*rep.grid_max <= 1e-6);

    const evaluable fe = eval_of(f);
    for (const auto &p : grid_spec::standard(1).points()) {
        const double bound = homotopy_bound(fe, p);
        CHECK(std::abs(sol.evaluate(p)) <= bound * (1.0 + 1e-12) + 1e-300);
    }
}

TEST_CASE("homotopy solution vanishes towards the axes")
{
    const auto f = gauss(1.0, {Q(2), Q(-1)}).as_function(1, 1);
    const auto sol = solve_full_2d(f);
    double prev = std::abs(sol.evaluate(std::array<double, 2>{0.5, 0.8}));
    for (double y = 0.4; y > 1e-3; y /= 2.0) {
        const double v = std::abs(sol.evaluate(std::array<double, 2>{0.5, y}));
        CHECK(v <= prev);
        prev = v;
    }
    CHECK(prev < 1e-100);
}

TEST_CASE("full solve combines the rational and homotopy parts")
{
    const auto f = poly({0, 1}) + gauss(1.0, {Q(0), Q(1)}).as_function(1, 1);
    const auto sol = solve_full_2d(f);
    CHECK(sol.closed() == solve_poly_exact(poly({0, 1})).closed());
    const auto model = build_model({0, 1, 0});
    CHECK(flow_residual(model, 1, eval_of(sol), eval_of(f), grid_spec::standard(1), {}, 1e-6).within_tolerance());

    const auto k = flat_section_build(quadrant_kernel<Q>{{gauss(1.0), std::nullopt, std::nullopt, std::nullopt}});
    CHECK_THROWS_AS(solve_full_2d(k.closed()), error);
}

TEST_CASE("flat sections solve the kernel equation")
{
    const auto model = build_model({0, 1, 0});
    const evaluable zero = [](std::span<const double>) { return complex{}; };

    CHECK(flat_section_build(quadrant_kernel<Q>{}).is_zero());

    const auto k1 = flat_section_build(quadrant_kernel<Q>{{gauss(1.0), std::nullopt, std::nullopt, std::nullopt}});
    CHECK(k1.closed().cohom(1).is_zero());
    CHECK(flow_residual(model, 1, eval_of(k1), zero, grid_spec::standard(1), {}, 1e-8).within_tolerance());
    CHECK(k1.evaluate(std::array<double, 2>{0.8, 0.9}) != complex{});
    CHECK(k1.evaluate(std::array<double, 2>{-0.8, 0.9}) == complex{});
    CHECK(k1.evaluate(std::array<double, 2>{0.8, -0.9}) == complex{});
    CHECK(k1.evaluate(std::array<double, 2>{-0.8, -0.9}) == complex{});
    CHECK(k1.evaluate(std::array<double, 2>{0.0, 0.9}) == complex{});

    const auto z = gauss(1.0, {Q(0), Q(1)});
    const auto k14 = flat_section_build(quadrant_kernel<Q>{{z, std::nullopt, std::nullopt, z}});
    CHECK(flow_residual(model, 1, eval_of(k14), zero, grid_spec::standard(1), {}, 1e-8).within_tolerance());
    CHECK(k14.evaluate(std::array<double, 2>{-0.8, -0.9}) != complex{});
    CHECK(k14.evaluate(std::array<double, 2>{-0.8, 0.9}) == complex{});

    // f e^{ih} = a(h) exp((i/2) h ln|y/x|) on the first quadrant
    const std::array<double, 2> p{0.7, 1.3};
    const double h = 0.7 * 1.3;
    const complex s = k1.evaluate(p) * std::exp(I * h);
    CHECK(std::abs(s - std::exp(-1.0 / (h * h)) * std::exp(0.5 * I * h * std::log(1.3 / 0.7))) < 1e-15);
}
