#ifndef KOSTANT_TESTS_SUPPORT_HPP
#define KOSTANT_TESTS_SUPPORT_HPP

#include <cstdint>
#include <random>
#include <vector>

#include <kostant/scalar.hpp>
#include <kostant/series.hpp>

namespace testing_support
{

using kostant::complex;
using kostant::gaussian_rational;
using kostant::multi_index;
using kostant::truncated_series;

inline std::mt19937_64 &rng()
{
    static std::mt19937_64 g(20260419ULL);
    return g;
}

template <typename S>
S random_scalar(std::mt19937_64 &g);

template <>
inline complex random_scalar<complex>(std::mt19937_64 &g)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(g), u(g)};
}

// Small Gaussian rationals p/q + i r/s.
template <>
inline gaussian_rational random_scalar<gaussian_rational>(std::mt19937_64 &g)
{
    std::uniform_int_distribution<int> num(-9, 9);
    std::uniform_int_distribution<int> den(1, 6);
    mpq_class re(num(g), den(g));
    mpq_class im(num(g), den(g));
    return {re, im};
}

// Random multi-index of total degree <= max_degree.
inline multi_index random_index(std::mt19937_64 &g, int arity, int max_degree)
{
    std::uniform_int_distribution<int> d(0, max_degree);
    std::uniform_int_distribution<int> slot(0, 2 * arity - 1);
    multi_index m(2 * static_cast<std::size_t>(arity), 0);
    const int deg = d(g);
    for (int k = 0; k < deg; ++k) {
        ++m[static_cast<std::size_t>(slot(g))];
    }
    return m;
}

// Random series with `terms` monomials of degree <= max_degree. Pairs listed
// in polarised get a nonzero exponent in every monomial.
template <typename S>
truncated_series<S> random_series(std::mt19937_64 &g, int arity, int order, int max_degree, int terms,
                                  const std::vector<int> &polarised = {})
{
    truncated_series<S> f(arity, order);
    std::bernoulli_distribution coin(0.5);
    for (int t = 0; t < terms; ++t) {
        multi_index m = random_index(g, arity, max_degree);
        for (int j : polarised) {
            const auto k = static_cast<std::size_t>(2 * (j - 1));
            if (m[k] == 0 && m[k + 1] == 0) {
                ++m[k + (coin(g) ? 1 : 0)];
            }
        }
        if (kostant::total_degree(m) <= max_degree) {
            f.add_to(m, random_scalar<S>(g));
        }
    }
    return f;
}

} // namespace testing_support

#endif
