#ifndef KOSTANT_SEPARABLE_HPP
#define KOSTANT_SEPARABLE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <kostant/error.hpp>
#include <kostant/scalar.hpp>
#include <kostant/series.hpp>

namespace kostant
{

// Laurent polynomial in (h_1, ..., h_n). Negative exponents are only ever
// produced on a pair carrying a flat or kernel factor, where the product is
// still smooth.
template <scalar S>
class h_poly
{
public:
    using exponents = std::vector<int>;
    using term_map = std::map<exponents, S>;

    explicit h_poly(int arity = 1) : arity_(arity) {}

    static h_poly constant(int arity, const S &c)
    {
        h_poly r(arity);
        r.add_to(exponents(static_cast<std::size_t>(arity), 0), c);
        return r;
    }

    [[nodiscard]] int arity() const noexcept
    {
        return arity_;
    }
    [[nodiscard]] const term_map &terms() const noexcept
    {
        return terms_;
    }
    [[nodiscard]] bool is_zero() const noexcept
    {
        return terms_.empty();
    }

    void add_to(const exponents &e, const S &c)
    {
        if (kostant::is_zero(c)) {
            return;
        }
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (kostant::is_zero(it->second)) {
                terms_.erase(it);
            }
        }
    }

    [[nodiscard]] double max_abs() const
    {
        double r = 0.0;
        for (const auto &[e, c] : terms_) {
            r = std::max(r, magnitude(c));
        }
        return r;
    }

    // Smallest exponent of h_j (0 for the zero polynomial).
    [[nodiscard]] int min_exponent(int j) const
    {
        int r = 0;
        bool first = true;
        for (const auto &[e, c] : terms_) {
            const int v = e[static_cast<std::size_t>(j - 1)];
            r = first ? v : std::min(r, v);
            first = false;
        }
        return r;
    }

    friend h_poly operator+(h_poly a, const h_poly &b)
    {
        for (const auto &[e, c] : b.terms_) {
            a.add_to(e, c);
        }
        return a;
    }
    friend h_poly operator-(h_poly a, const h_poly &b)
    {
        for (const auto &[e, c] : b.terms_) {
            a.add_to(e, -c);
        }
        return a;
    }
    friend h_poly operator*(const S &s, const h_poly &a)
    {
        h_poly r(a.arity_);
        for (const auto &[e, c] : a.terms_) {
            r.add_to(e, s * c);
        }
        return r;
    }
    friend h_poly operator*(const h_poly &a, const h_poly &b)
    {
        h_poly r(a.arity_);
        exponents e(static_cast<std::size_t>(a.arity_));
        for (const auto &[ea, ca] : a.terms_) {
            for (const auto &[eb, cb] : b.terms_) {
                std::transform(ea.begin(), ea.end(), eb.begin(), e.begin(), std::plus<>{});
                r.add_to(e, ca * cb);
            }
        }
        return r;
    }
    friend bool operator==(const h_poly &, const h_poly &) = default;

    // Multiplication by h_j^p (p may be negative).
    [[nodiscard]] h_poly shifted(int j, int p) const
    {
        h_poly r(arity_);
        for (const auto &[e0, c] : terms_) {
            exponents e = e0;
            e[static_cast<std::size_t>(j - 1)] += p;
            r.terms_.emplace(std::move(e), c);
        }
        return r;
    }

    // Multiplication by (m - i h_j).
    [[nodiscard]] h_poly times_linear(int j, int m) const
    {
        return from_int<S>(m) * (*this) - imag_unit<S>() * shifted(j, 1);
    }

    // Exact division by (m - i h_j), m != 0, or nullopt when the remainder
    // exceeds rem_tol times the largest coefficient (rem_tol = 0 for exact
    // scalars).
    [[nodiscard]] std::optional<h_poly> divided_by_linear(int j, int m, double rem_tol) const
    {
        // (m - i h) = -i (h - r) with root r = -i m.
        const S root = -imag_unit<S>() * from_int<S>(m);
        const auto jj = static_cast<std::size_t>(j - 1);
        std::map<exponents, std::map<int, S>> by_rest;
        for (const auto &[e, c] : terms_) {
            exponents rest = e;
            rest[jj] = 0;
            by_rest[rest].emplace(e[jj], c);
        }
        const double scale = std::max(max_abs(), 1.0);
        h_poly q(arity_);
        for (auto &[rest, coeffs] : by_rest) {
            const int lo = coeffs.begin()->first;
            const int hi = coeffs.rbegin()->first;
            // synthetic division, descending powers
            S carry{};
            std::vector<std::pair<int, S>> quotient;
            for (int p = hi; p >= lo; --p) {
                auto it = coeffs.find(p);
                S a = it == coeffs.end() ? S{} : it->second;
                S b = a + root * carry;
                if (p == lo) {
                    if (magnitude(b) > rem_tol * scale || (rem_tol == 0.0 && !kostant::is_zero(b))) {
                        return std::nullopt;
                    }
                } else {
                    quotient.emplace_back(p - 1, b);
                }
                carry = b;
            }
            for (auto &[p, b] : quotient) {
                exponents e = rest;
                e[jj] = p;
                // 1/(m - i h) = i/(h - r)
                q.add_to(e, imag_unit<S>() * b);
            }
        }
        return q;
    }

    [[nodiscard]] complex evaluate(std::span<const double> hs) const
    {
        complex acc{};
        for (const auto &[e, c] : terms_) {
            double v = 1.0;
            for (std::size_t k = 0; k < e.size(); ++k) {
                if (e[k] != 0) {
                    v *= std::pow(hs[k], e[k]);
                }
            }
            acc += to_complex(c) * v;
        }
        return acc;
    }

private:
    int arity_;
    term_map terms_;
};

// Non-polynomial factor carried by (at most) one pair of a separable term.
//   flat:   exp(-c / h_j^2), extended by 0 on h_j = 0
//   kernel: flat factor times exp(i h_j (ln gamma_j - 1)) restricted to one
//           open quadrant of the (x_j, y_j) plane; solves X_j K = i h_j K
struct factor_tag {
    enum class kind { none, flat, kernel };

    kind type = kind::none;
    int pair = 0;
    double c = 0.0;
    // quadrants: 1 (x>0,y>0), 2 (x>0,y<0), 3 (x<0,y>0), 4 (x<0,y<0)
    int quadrant = 0;

    static factor_tag flat(int j, double c)
    {
        return {kind::flat, j, c, 0};
    }
    static factor_tag kernel(int j, int q, double c)
    {
        return {kind::kernel, j, c, q};
    }

    [[nodiscard]] bool on(int j) const noexcept
    {
        return type != kind::none && pair == j;
    }

    friend bool operator<(const factor_tag &a, const factor_tag &b)
    {
        return std::tie(a.type, a.pair, a.c, a.quadrant) < std::tie(b.type, b.pair, b.c, b.quadrant);
    }
    friend bool operator==(const factor_tag &, const factor_tag &) = default;
};

inline int quadrant_of(double x, double y) noexcept
{
    if (x > 0.0 && y > 0.0) {
        return 1;
    }
    if (x > 0.0 && y < 0.0) {
        return 2;
    }
    if (x < 0.0 && y > 0.0) {
        return 3;
    }
    if (x < 0.0 && y < 0.0) {
        return 4;
    }
    return 0;
}

// Structural part of a separable term: per-pair offsets m_j (the pair-j
// monomial is y_j^{m_j} for m_j >= 0 and x_j^{-m_j} otherwise), the
// denominator factors (m - i h_j)^power keyed by (j, m), and the tag.
struct term_key {
    std::vector<int> offsets;
    std::map<std::pair<int, int>, int> denominators;
    factor_tag tag;

    friend bool operator<(const term_key &a, const term_key &b)
    {
        return std::tie(a.offsets, a.tag, a.denominators) < std::tie(b.offsets, b.tag, b.denominators);
    }
    friend bool operator==(const term_key &, const term_key &) = default;
};

// Finite sum of terms
//     coeff * prod_j e_{m_j}(x_j, y_j) * N(h) / prod (m - i h_j)^p * tag
// with N a (Laurent) polynomial in the pair Hamiltonians. The class is closed
// under X_j, multiplication by h_j and the pair-j solve. Values are kept in a
// normalized form: one term per (offsets, tag), common denominators reduced.
template <scalar S>
class separable_function
{
public:
    using term_map = std::map<term_key, h_poly<S>>;

    explicit separable_function(int arity = 1) : arity_(arity)
    {
        if (arity < 1) {
            throw error(error_code::arity_mismatch, "separable function arity must be positive");
        }
    }

    static separable_function from_series(const truncated_series<S> &f)
    {
        separable_function r(f.arity());
        for (const auto &[m, c] : f.coeffs()) {
            r.add_monomial(m, c);
        }
        r.normalize();
        return r;
    }

    static separable_function constant(int arity, const S &c)
    {
        separable_function r(arity);
        r.add_term(r.plain_key(), h_poly<S>::constant(arity, c));
        r.normalize();
        return r;
    }

    [[nodiscard]] int arity() const noexcept
    {
        return arity_;
    }
    [[nodiscard]] const term_map &terms() const noexcept
    {
        return terms_;
    }
    [[nodiscard]] bool is_zero() const noexcept
    {
        return terms_.empty();
    }

    [[nodiscard]] term_key plain_key() const
    {
        return {std::vector<int>(static_cast<std::size_t>(arity_), 0), {}, {}};
    }

    // Adds c * x^k y^l for the multi-index (k_1, l_1, ..., k_n, l_n).
    void add_monomial(const multi_index &m, const S &c, const factor_tag &tag = {})
    {
        if (m.size() != 2 * static_cast<std::size_t>(arity_)) {
            throw error(error_code::arity_mismatch, "multi-index length does not match 2*arity");
        }
        term_key key = plain_key();
        key.tag = tag;
        std::vector<int> e(static_cast<std::size_t>(arity_), 0);
        for (std::size_t j = 0; j < e.size(); ++j) {
            key.offsets[j] = m[2 * j + 1] - m[2 * j];
            e[j] = std::min(m[2 * j], m[2 * j + 1]);
        }
        h_poly<S> p(arity_);
        p.add_to(e, c);
        add_term(key, p);
    }

    // Raw accumulation; call normalize() afterwards.
    void add_term(const term_key &key, const h_poly<S> &num)
    {
        check_key(key);
        if (num.is_zero()) {
            return;
        }
        auto [it, inserted] = terms_.try_emplace(key, num);
        if (!inserted) {
            it->second = it->second + num;
            if (it->second.is_zero()) {
                terms_.erase(it);
            }
        }
    }

    // Groups terms by (offsets, tag) over a common denominator and cancels
    // denominator factors that divide the numerator.
    void normalize()
    {
        std::map<std::pair<std::vector<int>, factor_tag>, std::vector<std::pair<term_key, h_poly<S>>>> groups;
        for (auto &[k, p] : terms_) {
            groups[{k.offsets, k.tag}].emplace_back(k, p);
        }
        term_map out;
        for (auto &[gk, members] : groups) {
            std::map<std::pair<int, int>, int> lcm;
            for (const auto &[k, p] : members) {
                for (const auto &[f, pw] : k.denominators) {
                    lcm[f] = std::max(lcm[f], pw);
                }
            }
            h_poly<S> num(arity_);
            for (const auto &[k, p] : members) {
                h_poly<S> q = p;
                for (const auto &[f, pw] : lcm) {
                    auto it = k.denominators.find(f);
                    const int have = it == k.denominators.end() ? 0 : it->second;
                    for (int r = have; r < pw; ++r) {
                        q = q.times_linear(f.first, f.second);
                    }
                }
                num = num + q;
            }
            if (num.is_zero()) {
                continue;
            }
            for (auto it = lcm.begin(); it != lcm.end();) {
                while (it->second > 0) {
                    auto q = num.divided_by_linear(it->first.first, it->first.second, remainder_tolerance());
                    if (!q) {
                        break;
                    }
                    num = std::move(*q);
                    --it->second;
                }
                it = it->second == 0 ? lcm.erase(it) : std::next(it);
            }
            if (!scalar_traits<S>::exact && num.max_abs() == 0.0) {
                continue;
            }
            out.emplace(term_key{gk.first, std::move(lcm), gk.second}, std::move(num));
        }
        terms_ = std::move(out);
    }

    // Largest numerator coefficient after normalization.
    [[nodiscard]] double max_abs() const
    {
        double r = 0.0;
        for (const auto &[k, p] : terms_) {
            r = std::max(r, p.max_abs());
        }
        return r;
    }

    [[nodiscard]] bool has_tags() const
    {
        return std::any_of(terms_.begin(), terms_.end(),
                           [](const auto &kv) { return kv.first.tag.type != factor_tag::kind::none; });
    }

    friend separable_function operator+(const separable_function &a, const separable_function &b)
    {
        check_same(a, b);
        separable_function r = a;
        for (const auto &[k, p] : b.terms_) {
            r.add_term(k, p);
        }
        r.normalize();
        return r;
    }
    friend separable_function operator-(const separable_function &a, const separable_function &b)
    {
        check_same(a, b);
        separable_function r = a;
        for (const auto &[k, p] : b.terms_) {
            r.add_term(k, from_int<S>(-1) * p);
        }
        r.normalize();
        return r;
    }
    friend separable_function operator*(const S &c, const separable_function &a)
    {
        separable_function r(a.arity_);
        for (const auto &[k, p] : a.terms_) {
            r.add_term(k, c * p);
        }
        r.normalize();
        return r;
    }
    friend bool operator==(const separable_function &a, const separable_function &b)
    {
        return a.arity_ == b.arity_ && (a - b).is_zero();
    }

    // Product of two separable functions. At most one factor may carry tags.
    friend separable_function operator*(const separable_function &a, const separable_function &b)
    {
        check_same(a, b);
        separable_function r(a.arity_);
        for (const auto &[ka, pa] : a.terms_) {
            for (const auto &[kb, pb] : b.terms_) {
                if (ka.tag.type != factor_tag::kind::none && kb.tag.type != factor_tag::kind::none) {
                    throw error(error_code::unsolvable_factor,
                                "product of two flat/kernel factors is outside the separable class");
                }
                term_key k = ka;
                k.tag = ka.tag.type != factor_tag::kind::none ? ka.tag : kb.tag;
                h_poly<S> p = pa * pb;
                for (std::size_t j = 0; j < k.offsets.size(); ++j) {
                    const int ma = ka.offsets[j];
                    const int mb = kb.offsets[j];
                    k.offsets[j] = ma + mb;
                    if ((ma > 0 && mb < 0) || (ma < 0 && mb > 0)) {
                        // y^a x^b = h^min(a,b) e_{a-b}
                        p = p.shifted(static_cast<int>(j) + 1, std::min(std::abs(ma), std::abs(mb)));
                    }
                }
                for (const auto &[f, pw] : kb.denominators) {
                    k.denominators[f] += pw;
                }
                r.add_term(k, p);
            }
        }
        r.normalize();
        return r;
    }

    // X_j, with X_j(e_m N(h)) = m e_m N(h) and X_j K = i h_j K on kernel tags.
    [[nodiscard]] separable_function apply_x(int j) const
    {
        check_pair(j);
        separable_function r(arity_);
        for (const auto &[k, p] : terms_) {
            const int m = k.offsets[static_cast<std::size_t>(j - 1)];
            h_poly<S> q = from_int<S>(m) * p;
            if (k.tag.on(j) && k.tag.type == factor_tag::kind::kernel) {
                q = q + imag_unit<S>() * p.shifted(j, 1);
            }
            r.add_term(k, q);
        }
        r.normalize();
        return r;
    }

    [[nodiscard]] separable_function mul_h(int j) const
    {
        check_pair(j);
        separable_function r(arity_);
        for (const auto &[k, p] : terms_) {
            r.add_term(k, p.shifted(j, 1));
        }
        r.normalize();
        return r;
    }

    // g -> X_j(g) - i h_j g.
    [[nodiscard]] separable_function cohom(int j) const
    {
        check_pair(j);
        separable_function r(arity_);
        for (const auto &[k, p] : terms_) {
            const int m = k.offsets[static_cast<std::size_t>(j - 1)];
            if (k.tag.on(j) && k.tag.type == factor_tag::kind::kernel) {
                r.add_term(k, from_int<S>(m) * p);
            } else {
                r.add_term(k, p.times_linear(j, m));
            }
        }
        r.normalize();
        return r;
    }

    // Exact solution of (X_j - i h_j) g = *this, pair by pair, with the other
    // pairs as parameters. Offset m != 0 divides by (m - i h_j); offset 0
    // divides by -i h_j, which needs the numerator to vanish at h_j = 0 unless
    // the pair carries a flat factor.
    [[nodiscard]] separable_function solve_pair(int j) const
    {
        check_pair(j);
        separable_function r(arity_);
        for (const auto &[k, p] : terms_) {
            const int m = k.offsets[static_cast<std::size_t>(j - 1)];
            const bool kernel = k.tag.on(j) && k.tag.type == factor_tag::kind::kernel;
            const bool flat = k.tag.on(j) && k.tag.type == factor_tag::kind::flat;
            if (kernel) {
                if (m == 0) {
                    throw error(error_code::unsolvable_factor,
                                "offset-0 kernel factor in pair " + std::to_string(j)
                                    + " lies in the kernel of X_j - i h_j");
                }
                r.add_term(k, (from_int<S>(1) / from_int<S>(m)) * p);
                continue;
            }
            if (m != 0) {
                term_key k2 = k;
                ++k2.denominators[{j, m}];
                r.add_term(k2, p);
                continue;
            }
            if (!flat) {
                for (const auto &[e, c] : p.terms()) {
                    if (e[static_cast<std::size_t>(j - 1)] <= 0) {
                        throw error(error_code::nonzero_constant_term,
                                    "data does not vanish on the singular set of X_" + std::to_string(j));
                    }
                }
            }
            r.add_term(k, imag_unit<S>() * p.shifted(j, -1));
        }
        r.normalize();
        return r;
    }

    [[nodiscard]] complex evaluate(std::span<const double> pt) const
    {
        if (pt.size() != 2 * static_cast<std::size_t>(arity_)) {
            throw error(error_code::arity_mismatch, "point dimension does not match function arity");
        }
        std::vector<double> hs(static_cast<std::size_t>(arity_));
        for (std::size_t j = 0; j < hs.size(); ++j) {
            hs[j] = pt[2 * j] * pt[2 * j + 1];
        }
        complex acc{};
        for (const auto &[k, p] : terms_) {
            acc += evaluate_term(k, p, pt, hs);
        }
        return acc;
    }

    // Taylor expansion at the origin through the given order. Flat and kernel
    // terms contribute nothing.
    [[nodiscard]] truncated_series<S> taylor(int order) const
    {
        truncated_series<S> out(arity_, order);
        for (const auto &[k, p] : terms_) {
            if (k.tag.type != factor_tag::kind::none) {
                continue;
            }
            truncated_series<S> t(arity_, order);
            for (const auto &[e, c] : p.terms()) {
                multi_index m(2 * static_cast<std::size_t>(arity_), 0);
                for (std::size_t j = 0; j < e.size(); ++j) {
                    m[2 * j] = e[j] + std::max(0, -k.offsets[j]);
                    m[2 * j + 1] = e[j] + std::max(0, k.offsets[j]);
                }
                t.add_to(m, c);
            }
            for (const auto &[f, pw] : k.denominators) {
                t = t * inverse_linear_power(f.first, f.second, pw, order);
            }
            out = out + t;
        }
        return out;
    }

private:
    static void check_same(const separable_function &a, const separable_function &b)
    {
        if (a.arity_ != b.arity_) {
            throw error(error_code::arity_mismatch, "separable function arities differ");
        }
    }

    void check_pair(int j) const
    {
        if (j < 1 || j > arity_) {
            throw error(error_code::index_out_of_range,
                        "pair index " + std::to_string(j) + " outside 1.." + std::to_string(arity_));
        }
    }

    void check_key(const term_key &k) const
    {
        if (k.offsets.size() != static_cast<std::size_t>(arity_)) {
            throw error(error_code::arity_mismatch, "term offsets do not match arity");
        }
        for (const auto &[f, pw] : k.denominators) {
            if (f.first < 1 || f.first > arity_ || f.second == 0 || pw < 0) {
                throw error(error_code::schema_error, "denominator factors need a valid pair, m != 0, power >= 0");
            }
        }
        if (k.tag.type != factor_tag::kind::none) {
            check_pair(k.tag.pair);
            if (!(k.tag.c > 0.0)) {
                throw error(error_code::schema_error, "flat factor constant c must be positive");
            }
            if (k.tag.type == factor_tag::kind::kernel && (k.tag.quadrant < 1 || k.tag.quadrant > 4)) {
                throw error(error_code::schema_error, "kernel quadrant must be in 1..4");
            }
        }
    }

    static double remainder_tolerance()
    {
        return scalar_traits<S>::exact ? 0.0 : 1e-13;
    }

    // 1/(m - i h_j)^p = m^-p sum_k C(p+k-1, k) (i h_j / m)^k.
    truncated_series<S> inverse_linear_power(int j, int m, int p, int order) const
    {
        truncated_series<S> r(arity_, order);
        const S ratio = imag_unit<S>() / from_int<S>(m);
        S lead = from_int<S>(1);
        for (int q = 0; q < p; ++q) {
            lead /= from_int<S>(m);
        }
        S binom = from_int<S>(1);
        S rk = from_int<S>(1);
        for (int k = 0; 2 * k <= order; ++k) {
            multi_index e(2 * static_cast<std::size_t>(arity_), 0);
            e[static_cast<std::size_t>(2 * (j - 1))] = k;
            e[static_cast<std::size_t>(2 * (j - 1) + 1)] = k;
            r.add_to(e, lead * binom * rk);
            // C(p+k, k+1) = C(p+k-1, k) * (p+k) / (k+1)
            binom = binom * from_int<S>(p + k) / from_int<S>(k + 1);
            rk *= ratio;
        }
        return r;
    }

    static complex evaluate_term(const term_key &k, const h_poly<S> &p, std::span<const double> pt,
                                 std::span<const double> hs)
    {
        complex tag_factor{1.0, 0.0};
        if (k.tag.type != factor_tag::kind::none) {
            const auto jj = static_cast<std::size_t>(k.tag.pair - 1);
            const double h = hs[jj];
            if (h == 0.0) {
                return {};
            }
            const double damp = std::exp(-k.tag.c / (h * h));
            if (damp == 0.0) {
                return {};
            }
            tag_factor = damp;
            if (k.tag.type == factor_tag::kind::kernel) {
                const double x = pt[2 * jj];
                const double y = pt[2 * jj + 1];
                if (quadrant_of(x, y) != k.tag.quadrant) {
                    return {};
                }
                const double lng = 0.5 * std::log(std::abs(y / x));
                tag_factor *= std::exp(complex{0.0, h * (lng - 1.0)});
            }
        }
        double mono = 1.0;
        for (std::size_t j = 0; j < k.offsets.size(); ++j) {
            const int m = k.offsets[j];
            if (m > 0) {
                mono *= std::pow(pt[2 * j + 1], m);
            } else if (m < 0) {
                mono *= std::pow(pt[2 * j], -m);
            }
        }
        complex den{1.0, 0.0};
        for (const auto &[f, pw] : k.denominators) {
            den *= std::pow(complex{static_cast<double>(f.second), -hs[static_cast<std::size_t>(f.first - 1)]}, pw);
        }
        return tag_factor * mono * p.evaluate(hs) / den;
    }

    int arity_;
    term_map terms_;
};

} // namespace kostant

#endif
