#ifndef KOSTANT_JETS_HPP
#define KOSTANT_JETS_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <utility>

#include <kostant/error.hpp>
#include <kostant/scalar.hpp>
#include <kostant/series.hpp>

namespace kostant
{

namespace detail
{

// Splits f into 2D coefficient tables in pair j, keyed by the remaining
// exponents (pair-j entries zeroed).
template <scalar S>
std::map<multi_index, std::map<std::pair<int, int>, S>> split_pair(int j, const truncated_series<S> &f)
{
    const auto kx = static_cast<std::size_t>(2 * (j - 1));
    std::map<multi_index, std::map<std::pair<int, int>, S>> out;
    for (const auto &[m, c] : f.coeffs()) {
        multi_index rest = m;
        rest[kx] = 0;
        rest[kx + 1] = 0;
        out[rest].emplace(std::make_pair(m[kx], m[kx + 1]), c);
    }
    return out;
}

inline multi_index with_pair(multi_index rest, int j, int k, int l)
{
    const auto kx = static_cast<std::size_t>(2 * (j - 1));
    rest[kx] = k;
    rest[kx + 1] = l;
    return rest;
}

template <scalar S>
void check_jet_input(int j, const truncated_series<S> &f)
{
    truncated_series<S>::check_pair(f.arity(), j);
    if (f.order() < 2) {
        throw error(error_code::order_mismatch, "jet solve needs input order >= 2");
    }
    const auto kx = static_cast<std::size_t>(2 * (j - 1));
    for (const auto &[m, c] : f.coeffs()) {
        if (m[kx] == 0 && m[kx + 1] == 0) {
            throw error(error_code::nonzero_constant_term,
                        "data has a nonzero term independent of pair " + std::to_string(j)
                            + "; it cannot vanish on the singular set of X_" + std::to_string(j));
        }
    }
}

template <scalar S>
S lookup(const std::map<std::pair<int, int>, S> &t, int k, int l)
{
    auto it = t.find({k, l});
    return it == t.end() ? S{} : it->second;
}

} // namespace detail

// Formal solution of (X_j - i h_j) g = f in pair j, the other pairs acting
// as parameters. Input order N + 2, output order N.
//
// Coefficients in pair j (for each fixed monomial in the other pairs):
//   g_{k,k} = i f_{k+1,k+1}
//   g_{0,l} = f_{0,l} / l
//   g_{k,0} = -f_{k,0} / k
//   g_{k,l} = (f_{k,l} + i g_{k-1,l-1}) / (l - k),  k != l, k, l > 0
// Off-diagonal coefficients are filled along each diagonal l - k = const,
// starting from the axis.
template <scalar S>
truncated_series<S> solve_pair_recursive(int j, const truncated_series<S> &f)
{
    detail::check_jet_input(j, f);
    const int n_out = f.order() - 2;
    const S i = imag_unit<S>();
    truncated_series<S> g(f.arity(), n_out);

    for (const auto &[rest, table] : detail::split_pair(j, f)) {
        const int budget = n_out - total_degree(rest);
        if (budget < 0) {
            continue;
        }
        std::map<int, bool> diagonals;
        for (const auto &[kl, c] : table) {
            diagonals[kl.second - kl.first] = true;
        }
        for (const auto &[m, unused] : diagonals) {
            if (m == 0) {
                for (int k = 0; 2 * k <= budget; ++k) {
                    g.add_to(detail::with_pair(rest, j, k, k), i * detail::lookup(table, k + 1, k + 1));
                }
                continue;
            }
            int k = std::max(0, -m);
            int l = std::max(0, m);
            S prev{};
            for (; k + l <= budget; ++k, ++l) {
                S cur;
                if (k == 0) {
                    cur = detail::lookup(table, 0, l) / from_int<S>(l);
                } else if (l == 0) {
                    cur = -detail::lookup(table, k, 0) / from_int<S>(k);
                } else {
                    cur = (detail::lookup(table, k, l) + i * prev) / from_int<S>(l - k);
                }
                g.add_to(detail::with_pair(rest, j, k, l), cur);
                prev = cur;
            }
        }
    }
    return g;
}

// Arity-1 formal solve by the recursive relations.
template <scalar S>
truncated_series<S> solve_jets_recursive(const truncated_series<S> &f)
{
    if (f.arity() != 1) {
        throw error(error_code::arity_mismatch, "2D jet solve expects an arity-1 series");
    }
    return solve_pair_recursive(1, f);
}

// Arity-1 formal solve by explicit sums down each diagonal:
//   g_{k,k} = i f_{k+1,k+1}
//   g_{k,l} = sum_{s=0}^{min(k,l)} i^s f_{k-s,l-s} / (l-k)^{s+1},  k != l.
// Independent of solve_jets_recursive; both must agree coefficientwise.
template <scalar S>
truncated_series<S> solve_jets_closed_form(const truncated_series<S> &f)
{
    if (f.arity() != 1) {
        throw error(error_code::arity_mismatch, "2D jet solve expects an arity-1 series");
    }
    detail::check_jet_input(1, f);
    const int n_out = f.order() - 2;
    const S i = imag_unit<S>();
    auto fc = [&f](int k, int l) { return f.coeff({k, l}); };
    truncated_series<S> g(1, n_out);

    for (int k = 0; k <= n_out; ++k) {
        for (int l = 0; k + l <= n_out; ++l) {
            S v{};
            if (k == l) {
                v = i * fc(k + 1, k + 1);
            } else if (k == 0) {
                v = fc(0, l) / from_int<S>(l);
            } else if (l == 0) {
                v = -fc(k, 0) / from_int<S>(k);
            } else {
                const S m = from_int<S>(l - k);
                const int steps = std::min(k, l);
                S ipow_s = from_int<S>(1);
                S mpow = m;
                for (int s = 0; s <= steps; ++s) {
                    v += ipow_s * fc(k - s, l - s) / mpow;
                    ipow_s *= i;
                    mpow *= m;
                }
            }
            g.add_to({k, l}, v);
        }
    }
    return g;
}

} // namespace kostant

#endif
