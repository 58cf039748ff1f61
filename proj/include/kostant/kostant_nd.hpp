#ifndef KOSTANT_KOSTANT_ND_HPP
#define KOSTANT_KOSTANT_ND_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <kostant/error.hpp>
#include <kostant/jets.hpp>
#include <kostant/scalar.hpp>
#include <kostant/separable.hpp>
#include <kostant/series.hpp>
#include <kostant/verify.hpp>

namespace kostant
{

// Coefficient algebras a polarised form can be stored in: formal jets
// (truncated_series) or the exact separable class.
template <typename C>
struct coefficient_traits;

template <scalar S>
struct coefficient_traits<truncated_series<S>> {
    using value_type = truncated_series<S>;
    using scalar_type = S;
    static constexpr bool formal = true;

    static int arity(const value_type &c)
    {
        return c.arity();
    }
    static value_type zero_like(const value_type &like)
    {
        return value_type(like.arity(), like.order());
    }
    static value_type cohom(int j, const value_type &c)
    {
        return cohom_operator(j, c);
    }
    static value_type solve(int j, const value_type &c)
    {
        return solve_pair_recursive(j, c);
    }
    // c truncated to the order of like.
    static value_type restrict_to(const value_type &c, const value_type &like)
    {
        return c.order() == like.order() ? c : c.truncated(like.order());
    }
    static double size(const value_type &c)
    {
        return c.max_abs();
    }
    static bool is_zero(const value_type &c)
    {
        return c.is_zero();
    }
};

template <scalar S>
struct coefficient_traits<separable_function<S>> {
    using value_type = separable_function<S>;
    using scalar_type = S;
    static constexpr bool formal = false;

    static int arity(const value_type &c)
    {
        return c.arity();
    }
    static value_type zero_like(const value_type &like)
    {
        return value_type(like.arity());
    }
    static value_type cohom(int j, const value_type &c)
    {
        return c.cohom(j);
    }
    static value_type solve(int j, const value_type &c)
    {
        return c.solve_pair(j);
    }
    static value_type restrict_to(const value_type &c, const value_type &)
    {
        return c;
    }
    static double size(const value_type &c)
    {
        return c.max_abs();
    }
    static bool is_zero(const value_type &c)
    {
        return c.is_zero();
    }
};

template <typename C>
concept coefficient = requires { coefficient_traits<C>::formal; };

using index_tuple = std::vector<int>;

// Strictly increasing k-subsets of {1, ..., n}, lexicographic.
inline std::vector<index_tuple> increasing_tuples(int n, int k)
{
    std::vector<index_tuple> out;
    if (k < 0 || k > n) {
        return out;
    }
    index_tuple t(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        t[static_cast<std::size_t>(i)] = i + 1;
    }
    while (true) {
        out.push_back(t);
        int i = k - 1;
        while (i >= 0 && t[static_cast<std::size_t>(i)] == n - k + i + 1) {
            --i;
        }
        if (i < 0) {
            break;
        }
        ++t[static_cast<std::size_t>(i)];
        for (int r = i + 1; r < k; ++r) {
            t[static_cast<std::size_t>(r)] = t[static_cast<std::size_t>(r - 1)] + 1;
        }
    }
    return out;
}

// Line-bundle-valued polarised k-form, stored through its values
// alpha(X_{i_1}, ..., X_{i_k}) on strictly increasing index tuples. Missing
// tuples are zero.
template <coefficient C>
class polarized_form
{
    using traits = coefficient_traits<C>;

public:
    polarized_form(int degree, int arity, C prototype)
        : degree_(degree), arity_(arity), zero_(traits::zero_like(prototype))
    {
        if (arity < 1 || degree < 0 || degree > arity) {
            throw error(error_code::degree_overflow, "form degree must lie in 0..n");
        }
        if (traits::arity(prototype) != arity) {
            throw error(error_code::arity_mismatch, "coefficient arity does not match the form");
        }
    }

    [[nodiscard]] int degree() const noexcept
    {
        return degree_;
    }
    [[nodiscard]] int arity() const noexcept
    {
        return arity_;
    }
    [[nodiscard]] const C &zero() const noexcept
    {
        return zero_;
    }
    [[nodiscard]] const std::map<index_tuple, C> &coeffs() const noexcept
    {
        return coeffs_;
    }

    [[nodiscard]] const C &get(const index_tuple &t) const
    {
        check_tuple(t);
        auto it = coeffs_.find(t);
        return it == coeffs_.end() ? zero_ : it->second;
    }

    void set(const index_tuple &t, const C &c)
    {
        check_tuple(t);
        if (traits::arity(c) != arity_) {
            throw error(error_code::arity_mismatch, "coefficient arity does not match the form");
        }
        C v = traits::restrict_to(c, zero_);
        if (traits::is_zero(v)) {
            coeffs_.erase(t);
        } else {
            coeffs_.insert_or_assign(t, std::move(v));
        }
    }

    [[nodiscard]] bool is_zero() const noexcept
    {
        return coeffs_.empty();
    }

    [[nodiscard]] double max_abs() const
    {
        double r = 0.0;
        for (const auto &[t, c] : coeffs_) {
            r = std::max(r, traits::size(c));
        }
        return r;
    }

    // Same form with every coefficient restricted to the prototype of like
    // (truncation in formal mode).
    [[nodiscard]] polarized_form restricted(const C &like) const
    {
        polarized_form r(degree_, arity_, like);
        for (const auto &[t, c] : coeffs_) {
            r.set(t, c);
        }
        return r;
    }

    friend polarized_form operator-(const polarized_form &a, const polarized_form &b)
    {
        if (a.degree_ != b.degree_ || a.arity_ != b.arity_) {
            throw error(error_code::arity_mismatch, "forms differ in degree or arity");
        }
        polarized_form r(a.degree_, a.arity_, a.zero_);
        for (const auto &t : increasing_tuples(a.arity_, a.degree_)) {
            r.set(t, a.get(t) - traits::restrict_to(b.get(t), a.zero_));
        }
        return r;
    }

    void check_tuple(const index_tuple &t) const
    {
        if (static_cast<int>(t.size()) != degree_) {
            throw error(error_code::index_out_of_range, "index tuple length differs from the form degree");
        }
        for (std::size_t r = 0; r < t.size(); ++r) {
            if (t[r] < 1 || t[r] > arity_ || (r > 0 && t[r] <= t[r - 1])) {
                throw error(error_code::index_out_of_range, "index tuple must be strictly increasing in 1..n");
            }
        }
    }

private:
    int degree_;
    int arity_;
    C zero_;
    std::map<index_tuple, C> coeffs_;
};

// Tolerances for the solvers: 0 demands exact vanishing (exact scalars).
struct solve_options {
    double tolerance = 0.0;
};

template <coefficient C>
solve_options default_options()
{
    return {scalar_traits<typename coefficient_traits<C>::scalar_type>::exact ? 0.0 : 1e-10};
}

namespace detail
{

template <coefficient C>
bool negligible(const C &c, double tol)
{
    return tol == 0.0 ? coefficient_traits<C>::is_zero(c) : coefficient_traits<C>::size(c) <= tol;
}

template <coefficient C>
residual_report coefficient_report(const std::string &label, const C &c, double tol)
{
    residual_report r;
    r.label = label;
    r.symbolic_max = coefficient_traits<C>::size(c);
    r.exact_zero = coefficient_traits<C>::is_zero(c);
    r.tolerance = tol;
    return r;
}

inline std::string tuple_name(const index_tuple &t)
{
    std::string s;
    for (int i : t) {
        s += std::to_string(i);
    }
    return s;
}

} // namespace detail

// (d^nabla beta)(X_{i_0}, ..., X_{i_k})
//     = sum_r (-1)^r (X_{i_r} - i h_{i_r}) beta(X_{i_0}, ..., ^X_{i_r}, ..., X_{i_k}).
template <coefficient C>
polarized_form<C> apply_dnabla(const polarized_form<C> &beta)
{
    using traits = coefficient_traits<C>;
    if (beta.degree() >= beta.arity()) {
        throw error(error_code::degree_overflow, "d^nabla of a top-degree form leaves the complex");
    }
    polarized_form<C> out(beta.degree() + 1, beta.arity(), beta.zero());
    for (const auto &t : increasing_tuples(beta.arity(), beta.degree() + 1)) {
        C acc = beta.zero();
        for (std::size_t r = 0; r < t.size(); ++r) {
            index_tuple sub = t;
            sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(r));
            const C &b = beta.get(sub);
            if (traits::is_zero(b)) {
                continue;
            }
            const C term = traits::cohom(t[r], b);
            acc = r % 2 == 0 ? acc + term : acc - term;
        }
        out.set(t, acc);
    }
    return out;
}

// Residual of d^nabla alpha. Top-degree forms are closed.
template <coefficient C>
residual_report check_closed(const polarized_form<C> &alpha, double tol = -1.0)
{
    if (alpha.degree() < 1) {
        throw error(error_code::precondition_violated, "closedness is checked on forms of degree >= 1");
    }
    if (tol < 0.0) {
        tol = default_options<C>().tolerance;
    }
    residual_report r;
    r.label = "closedness";
    r.tolerance = tol;
    if (alpha.degree() == alpha.arity()) {
        r.symbolic_max = 0.0;
        r.exact_zero = true;
        return r;
    }
    const auto d = apply_dnabla(alpha);
    r.symbolic_max = d.max_abs();
    r.exact_zero = d.is_zero();
    return r;
}

// g with (X_j - i h_j) g = f, solving in pair j with the others as parameters.
template <coefficient C>
C solve_pair(int j, const C &f)
{
    return coefficient_traits<C>::solve(j, f);
}

// solve_pair(j, f) for f already satisfying (X_l - i h_l) f = 0 for l in L;
// the solution inherits the same constraints.
template <coefficient C>
C solve_preserving(int j, const C &f, const std::set<int> &constraints, const solve_options &opt = default_options<C>())
{
    using traits = coefficient_traits<C>;
    for (int l : constraints) {
        if (!detail::negligible(traits::cohom(l, f), opt.tolerance)) {
            throw error(error_code::precondition_violated,
                        "data does not satisfy (X_" + std::to_string(l) + " - i h_" + std::to_string(l) + ") f = 0");
        }
    }
    C g = traits::solve(j, f);
    for (int l : constraints) {
        if (!detail::negligible(traits::cohom(l, g), opt.tolerance)) {
            throw error(error_code::postcondition_violated,
                        "solution lost the constraint for pair " + std::to_string(l));
        }
    }
    return g;
}

template <coefficient C>
struct h1_result {
    C solution;
    // closedness-transport checks on every intermediate f_{1..k}
    std::vector<residual_report> transport;
    residual_report residual;
};

// Primitive g of a closed polarised 1-form: (X_j - i h_j) g = alpha(X_j) for
// all j. Solves pair 1, then corrects pair by pair with constrained solves.
// Formal mode loses two orders per pair.
template <coefficient C>
h1_result<C> solve_h1(const polarized_form<C> &alpha, const solve_options &opt = default_options<C>())
{
    using traits = coefficient_traits<C>;
    if (alpha.degree() != 1) {
        throw error(error_code::precondition_violated, "solve_h1 expects a 1-form");
    }
    const double scale = std::max(1.0, alpha.max_abs());
    const double tol = opt.tolerance * scale;
    const auto closed = check_closed(alpha, tol);
    if (!closed.within_tolerance()) {
        throw error(error_code::not_closed, "1-form is not d^nabla-closed");
    }
    const int n = alpha.arity();
    h1_result<C> out{traits::solve(1, alpha.get({1})), {}, {}};
    C &g = out.solution;
    for (int k = 2; k <= n; ++k) {
        const C f = traits::cohom(k, g) - traits::restrict_to(alpha.get({k}), g);
        std::set<int> previous;
        for (int l = 1; l < k; ++l) {
            previous.insert(l);
            out.transport.push_back(detail::coefficient_report(
                "transport f_1.." + std::to_string(k) + " pair " + std::to_string(l), traits::cohom(l, f), tol));
        }
        const C correction = solve_preserving(k, f, previous, {tol});
        g = traits::restrict_to(g, correction) - correction;
    }
    C worst = traits::zero_like(g);
    double worst_size = -1.0;
    for (int j = 1; j <= n; ++j) {
        const C r = traits::cohom(j, g) - traits::restrict_to(alpha.get({j}), g);
        if (traits::size(r) > worst_size) {
            worst_size = traits::size(r);
            worst = r;
        }
    }
    out.residual = detail::coefficient_report("h1 residual", worst, tol);
    out.residual.exact_zero = true;
    for (int j = 1; j <= n; ++j) {
        const C r = traits::cohom(j, g) - traits::restrict_to(alpha.get({j}), g);
        out.residual.exact_zero = out.residual.exact_zero && traits::is_zero(r);
    }
    return out;
}

template <coefficient C>
struct form_result {
    polarized_form<C> solution;
    std::vector<residual_report> transport;
    residual_report residual;
};

namespace detail
{

template <coefficient C>
residual_report exactness_report(const std::string &label, const polarized_form<C> &beta,
                                 const polarized_form<C> &alpha, double tol)
{
    const auto d = apply_dnabla(beta);
    const auto diff = d - alpha.restricted(d.zero());
    residual_report r;
    r.label = label;
    r.symbolic_max = diff.max_abs();
    r.exact_zero = diff.is_zero();
    r.tolerance = tol;
    return r;
}

} // namespace detail

// Primitive of a top-degree form with iota_{X_1} beta = 0: the only
// nontrivial equation is (X_1 - i h_1) beta(X_2, ..., X_n) = alpha(X_1, ..., X_n).
template <coefficient C>
form_result<C> solve_top(const polarized_form<C> &alpha, const solve_options &opt = default_options<C>())
{
    using traits = coefficient_traits<C>;
    const int n = alpha.arity();
    if (alpha.degree() != n) {
        throw error(error_code::precondition_violated, "solve_top expects a top-degree form");
    }
    index_tuple all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        all[static_cast<std::size_t>(i)] = i + 1;
    }
    const C b = traits::solve(1, alpha.get(all));
    polarized_form<C> beta(n - 1, n, b);
    beta.set(index_tuple(all.begin() + 1, all.end()), b);
    const double tol = opt.tolerance * std::max(1.0, alpha.max_abs());
    auto rep = detail::exactness_report("top residual", beta, alpha, tol);
    return {std::move(beta), {}, rep};
}

// Primitive of a closed 2-form in dimension 6 (n = 3), with beta(X_1) = 0:
//   beta(X_2) from  alpha_12 = (X_1 - i h_1) beta(X_2)
//   g_3 = beta(X_3) from the reduced system
//     f_13 = alpha_13                              = (X_1 - i h_1) g_3
//     f_23 = alpha_23 + (X_3 - i h_3) beta(X_2)    = (X_2 - i h_2) g_3
// by a pair-1 solve g_13 of the first equation and a constrained pair-2
// correction of r = (X_2 - i h_2) g_13 - f_23, which lies in ker(X_1 - i h_1).
template <coefficient C>
form_result<C> solve_h2_dim6(const polarized_form<C> &alpha, const solve_options &opt = default_options<C>())
{
    using traits = coefficient_traits<C>;
    if (alpha.arity() != 3 || alpha.degree() != 2) {
        throw error(error_code::precondition_violated, "solve_h2_dim6 expects a 2-form with n = 3");
    }
    const double tol = opt.tolerance * std::max(1.0, alpha.max_abs());
    if (!check_closed(alpha, tol).within_tolerance()) {
        throw error(error_code::not_closed, "2-form is not d^nabla-closed");
    }
    const C beta2 = traits::solve(1, alpha.get({1, 2}));
    const C f13 = traits::restrict_to(alpha.get({1, 3}), beta2);
    const C f23 = traits::restrict_to(alpha.get({2, 3}), beta2) + traits::cohom(3, beta2);
    const C g13 = traits::solve(1, f13);
    const C r = traits::cohom(2, g13) - traits::restrict_to(f23, g13);

    std::vector<residual_report> transport;
    transport.push_back(detail::coefficient_report("transport r pair 1", traits::cohom(1, r), tol));
    const C correction = solve_preserving(2, r, {1}, {tol});
    const C g3 = traits::restrict_to(g13, correction) - correction;

    polarized_form<C> beta(1, 3, g3);
    beta.set({2}, beta2);
    beta.set({3}, g3);
    auto rep = detail::exactness_report("h2 residual", beta, alpha, tol);
    return {std::move(beta), std::move(transport), rep};
}

} // namespace kostant

#endif
