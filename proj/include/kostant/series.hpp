#ifndef KOSTANT_SERIES_HPP
#define KOSTANT_SERIES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <kostant/error.hpp>
#include <kostant/scalar.hpp>

namespace kostant
{

// Exponents ordered (k_1, l_1, ..., k_n, l_n): k_j is the x_j exponent and
// l_j the y_j exponent.
using multi_index = std::vector<int>;

inline int total_degree(const multi_index &m)
{
    return std::accumulate(m.begin(), m.end(), 0);
}

// Truncated multivariate power series in (x_1, y_1, ..., x_n, y_n).
//
// Coefficients of total degree above order() are never stored. Zero
// coefficients are pruned on insertion, so two series are equal exactly when
// their coefficient maps are equal.
template <scalar S>
class truncated_series
{
public:
    using coeff_map = std::map<multi_index, S>;

    truncated_series(int arity, int order) : arity_(arity), order_(order)
    {
        if (arity < 1) {
            throw error(error_code::arity_mismatch, "series arity must be positive");
        }
        if (order < 0) {
            throw error(error_code::order_mismatch, "series order must be nonnegative");
        }
    }

    static truncated_series monomial(int arity, int order, const multi_index &m, const S &c)
    {
        truncated_series r(arity, order);
        r.add_to(m, c);
        return r;
    }

    static truncated_series constant(int arity, int order, const S &c)
    {
        return monomial(arity, order, multi_index(2 * static_cast<std::size_t>(arity), 0), c);
    }

    // The pair Hamiltonian h_j = x_j y_j (j is 1-based).
    static truncated_series hamiltonian(int arity, int order, int j)
    {
        check_pair(arity, j);
        multi_index m(2 * static_cast<std::size_t>(arity), 0);
        m[2 * (j - 1)] = 1;
        m[2 * (j - 1) + 1] = 1;
        return monomial(arity, order, m, from_int<S>(1));
    }

    [[nodiscard]] int arity() const noexcept
    {
        return arity_;
    }
    [[nodiscard]] int order() const noexcept
    {
        return order_;
    }
    [[nodiscard]] const coeff_map &coeffs() const noexcept
    {
        return coeffs_;
    }
    [[nodiscard]] bool is_zero() const noexcept
    {
        return coeffs_.empty();
    }
    [[nodiscard]] std::size_t size() const noexcept
    {
        return coeffs_.size();
    }

    [[nodiscard]] S coeff(const multi_index &m) const
    {
        check_index(m);
        auto it = coeffs_.find(m);
        return it == coeffs_.end() ? S{} : it->second;
    }

    // Adds c at m. Terms above the truncation order are discarded.
    void add_to(const multi_index &m, const S &c)
    {
        check_index(m);
        if (total_degree(m) > order_ || kostant::is_zero(c)) {
            return;
        }
        auto [it, inserted] = coeffs_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (kostant::is_zero(it->second)) {
                coeffs_.erase(it);
            }
        }
    }

    void set(const multi_index &m, const S &c)
    {
        check_index(m);
        coeffs_.erase(m);
        add_to(m, c);
    }

    [[nodiscard]] double max_abs() const
    {
        double r = 0.0;
        for (const auto &[m, c] : coeffs_) {
            r = std::max(r, magnitude(c));
        }
        return r;
    }

    [[nodiscard]] truncated_series truncated(int new_order) const
    {
        if (new_order > order_) {
            throw error(error_code::order_mismatch, "cannot raise the truncation order of a series");
        }
        truncated_series r(arity_, new_order);
        for (const auto &[m, c] : coeffs_) {
            r.add_to(m, c);
        }
        return r;
    }

    // Evaluates the stored polynomial at a point (x_1, y_1, ..., x_n, y_n).
    [[nodiscard]] complex evaluate(std::span<const double> p) const
    {
        if (p.size() != 2 * static_cast<std::size_t>(arity_)) {
            throw error(error_code::arity_mismatch, "point dimension does not match series arity");
        }
        complex acc{};
        for (const auto &[m, c] : coeffs_) {
            double v = 1.0;
            for (std::size_t k = 0; k < m.size(); ++k) {
                if (m[k] != 0) {
                    v *= std::pow(p[k], m[k]);
                }
            }
            acc += to_complex(c) * v;
        }
        return acc;
    }

    friend bool operator==(const truncated_series &a, const truncated_series &b)
    {
        return a.arity_ == b.arity_ && a.order_ == b.order_ && a.coeffs_ == b.coeffs_;
    }

    static void check_pair(int arity, int j)
    {
        if (j < 1 || j > arity) {
            throw error(error_code::index_out_of_range,
                        "pair index " + std::to_string(j) + " outside 1.." + std::to_string(arity));
        }
    }

private:
    void check_index(const multi_index &m) const
    {
        if (m.size() != 2 * static_cast<std::size_t>(arity_)) {
            throw error(error_code::arity_mismatch, "multi-index length does not match 2*arity");
        }
        if (std::any_of(m.begin(), m.end(), [](int e) { return e < 0; })) {
            throw error(error_code::index_out_of_range, "negative exponent in multi-index");
        }
    }

    int arity_;
    int order_;
    coeff_map coeffs_;
};

namespace detail
{

template <scalar S>
void check_compatible(const truncated_series<S> &a, const truncated_series<S> &b)
{
    if (a.arity() != b.arity()) {
        throw error(error_code::arity_mismatch, "series arities differ");
    }
    if (a.order() != b.order()) {
        throw error(error_code::order_mismatch,
                    "series orders differ (" + std::to_string(a.order()) + " vs " + std::to_string(b.order()) + ")");
    }
}

} // namespace detail

template <scalar S>
truncated_series<S> operator+(const truncated_series<S> &a, const truncated_series<S> &b)
{
    detail::check_compatible(a, b);
    truncated_series<S> r = a;
    for (const auto &[m, c] : b.coeffs()) {
        r.add_to(m, c);
    }
    return r;
}

template <scalar S>
truncated_series<S> operator-(const truncated_series<S> &a)
{
    truncated_series<S> r(a.arity(), a.order());
    for (const auto &[m, c] : a.coeffs()) {
        r.add_to(m, -c);
    }
    return r;
}

template <scalar S>
truncated_series<S> operator-(const truncated_series<S> &a, const truncated_series<S> &b)
{
    detail::check_compatible(a, b);
    truncated_series<S> r = a;
    for (const auto &[m, c] : b.coeffs()) {
        r.add_to(m, -c);
    }
    return r;
}

template <scalar S>
truncated_series<S> operator*(const truncated_series<S> &a, const truncated_series<S> &b)
{
    detail::check_compatible(a, b);
    truncated_series<S> r(a.arity(), a.order());
    multi_index m(2 * static_cast<std::size_t>(a.arity()));
    for (const auto &[ma, ca] : a.coeffs()) {
        const int da = total_degree(ma);
        for (const auto &[mb, cb] : b.coeffs()) {
            if (da + total_degree(mb) > r.order()) {
                continue;
            }
            std::transform(ma.begin(), ma.end(), mb.begin(), m.begin(), std::plus<>{});
            r.add_to(m, ca * cb);
        }
    }
    return r;
}

template <scalar S>
truncated_series<S> operator*(const S &c, const truncated_series<S> &a)
{
    truncated_series<S> r(a.arity(), a.order());
    for (const auto &[m, v] : a.coeffs()) {
        r.add_to(m, c * v);
    }
    return r;
}

// X_j = -x_j d/dx_j + y_j d/dy_j acts diagonally: x^k y^l -> (l - k) x^k y^l.
template <scalar S>
truncated_series<S> apply_x(int j, const truncated_series<S> &f)
{
    truncated_series<S>::check_pair(f.arity(), j);
    truncated_series<S> r(f.arity(), f.order());
    const auto kx = static_cast<std::size_t>(2 * (j - 1));
    for (const auto &[m, c] : f.coeffs()) {
        const int w = m[kx + 1] - m[kx];
        if (w != 0) {
            r.add_to(m, from_int<S>(w) * c);
        }
    }
    return r;
}

// Multiplication by h_j = x_j y_j, truncated.
template <scalar S>
truncated_series<S> mul_h(int j, const truncated_series<S> &f)
{
    truncated_series<S>::check_pair(f.arity(), j);
    truncated_series<S> r(f.arity(), f.order());
    const auto kx = static_cast<std::size_t>(2 * (j - 1));
    for (const auto &[m, c] : f.coeffs()) {
        multi_index s = m;
        ++s[kx];
        ++s[kx + 1];
        r.add_to(s, c);
    }
    return r;
}

// g -> X_j(g) - i h_j g.
template <scalar S>
truncated_series<S> cohom_operator(int j, const truncated_series<S> &f)
{
    return apply_x(j, f) - imag_unit<S>() * mul_h(j, f);
}

// d/dp_k for the 0-based coordinate k of (x_1, y_1, ..., x_n, y_n). The
// result is known one degree less than the input.
template <scalar S>
truncated_series<S> partial(std::size_t k, const truncated_series<S> &f)
{
    if (k >= 2 * static_cast<std::size_t>(f.arity())) {
        throw error(error_code::index_out_of_range, "coordinate index out of range");
    }
    truncated_series<S> r(f.arity(), std::max(f.order() - 1, 0));
    for (const auto &[m, c] : f.coeffs()) {
        if (m[k] == 0) {
            continue;
        }
        multi_index s = m;
        --s[k];
        r.add_to(s, from_int<S>(m[k]) * c);
    }
    return r;
}

// Linear vector field X(p) = A p applied to f: sum_k (A p)_k df/dp_k.
// A is row-major 2n x 2n with integer entries. Degree preserving.
template <scalar S>
truncated_series<S> apply_linear_field(std::span<const int> a, const truncated_series<S> &f)
{
    const auto dim = 2 * static_cast<std::size_t>(f.arity());
    if (a.size() != dim * dim) {
        throw error(error_code::arity_mismatch, "field matrix size does not match series arity");
    }
    truncated_series<S> r(f.arity(), f.order());
    for (const auto &[m, c] : f.coeffs()) {
        for (std::size_t k = 0; k < dim; ++k) {
            if (m[k] == 0) {
                continue;
            }
            for (std::size_t col = 0; col < dim; ++col) {
                const int w = a[k * dim + col];
                if (w == 0) {
                    continue;
                }
                multi_index s = m;
                --s[k];
                ++s[col];
                r.add_to(s, from_int<S>(static_cast<long>(w) * m[k]) * c);
            }
        }
    }
    return r;
}

template <scalar T, scalar S>
truncated_series<T> convert(const truncated_series<S> &f, T (*conv)(const S &))
{
    truncated_series<T> r(f.arity(), f.order());
    for (const auto &[m, c] : f.coeffs()) {
        r.add_to(m, conv(c));
    }
    return r;
}

} // namespace kostant

#endif
