#ifndef KOSTANT_HYPERBOLIC2D_HPP
#define KOSTANT_HYPERBOLIC2D_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <kostant/error.hpp>
#include <kostant/jets.hpp>
#include <kostant/normal_forms.hpp>
#include <kostant/scalar.hpp>
#include <kostant/separable.hpp>
#include <kostant/series.hpp>

namespace kostant
{

// z -> pre(z) exp(-c / z^2), extended by 0 at z = 0. Applied at z = h = xy it
// is smooth and Taylor-flat along both axes.
template <scalar S>
struct flat_factor {
    double c = 1.0;
    // ascending coefficients of pre
    std::vector<S> pre;

    [[nodiscard]] complex evaluate(double z) const
    {
        if (z == 0.0) {
            return {};
        }
        const double damp = std::exp(-c / (z * z));
        if (damp == 0.0) {
            return {};
        }
        complex acc{};
        for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
            acc = acc * z + to_complex(*it);
        }
        return acc * damp;
    }

    // The factor as an arity-n separable term living on pair j.
    [[nodiscard]] separable_function<S> as_function(int arity, int j, std::optional<int> quadrant = {}) const
    {
        if (!(c > 0.0)) {
            throw error(error_code::schema_error, "flat factor needs c > 0");
        }
        separable_function<S> f(arity);
        term_key key = f.plain_key();
        key.tag = quadrant ? factor_tag::kernel(j, *quadrant, c) : factor_tag::flat(j, c);
        h_poly<S> num(arity);
        for (std::size_t d = 0; d < pre.size(); ++d) {
            std::vector<int> e(static_cast<std::size_t>(arity), 0);
            e[static_cast<std::size_t>(j - 1)] = static_cast<int>(d);
            num.add_to(e, pre[d]);
        }
        f.add_term(key, num);
        f.normalize();
        return f;
    }
};

// Four one-variable flat functions, one per open quadrant (1: x>0,y>0;
// 2: x>0,y<0; 3: x<0,y>0; 4: x<0,y<0). Missing entries are zero.
template <scalar S>
struct quadrant_kernel {
    std::array<std::optional<flat_factor<S>>, 4> a;
};

// Solution-side function on R^2: a closed-form part in the separable class
// (polynomial, rational, flat and kernel terms) plus homotopy integrals of
// flat sources, evaluated pointwise.
template <scalar S>
class smooth_function_2d
{
public:
    smooth_function_2d() : closed_(1) {}
    explicit smooth_function_2d(separable_function<S> closed, std::vector<separable_function<S>> homotopy = {})
        : closed_(std::move(closed)), homotopy_(std::move(homotopy))
    {
        if (closed_.arity() != 1) {
            throw error(error_code::arity_mismatch, "2D functions have arity 1");
        }
    }

    [[nodiscard]] const separable_function<S> &closed() const noexcept
    {
        return closed_;
    }
    [[nodiscard]] const std::vector<separable_function<S>> &homotopy_sources() const noexcept
    {
        return homotopy_;
    }
    [[nodiscard]] bool is_zero() const
    {
        return closed_.is_zero()
               && std::all_of(homotopy_.begin(), homotopy_.end(), [](const auto &h) { return h.is_zero(); });
    }

    [[nodiscard]] complex evaluate(std::span<const double> p) const;

private:
    separable_function<S> closed_;
    std::vector<separable_function<S>> homotopy_;
};

// Solves (X - i h) g = f exactly for f in the untagged (polynomial/rational)
// part of the separable class. Per offset m = l - k the operator acts as
// multiplication by (m - i h), so g carries the factor 1/(m - i h), or i/h on
// the diagonal.
template <scalar S>
smooth_function_2d<S> solve_poly_exact(const separable_function<S> &f)
{
    if (f.arity() != 1) {
        throw error(error_code::arity_mismatch, "2D solve expects arity 1");
    }
    if (f.has_tags()) {
        throw error(error_code::precondition_violated, "solve_poly_exact takes polynomial/rational data only");
    }
    return smooth_function_2d<S>(f.solve_pair(1));
}

template <scalar S>
smooth_function_2d<S> solve_poly_exact(const truncated_series<S> &f)
{
    return solve_poly_exact(separable_function<S>::from_series(f));
}

namespace detail
{

inline double log_gamma_2d(double x, double y)
{
    return 0.5 * std::log(std::abs(y / x));
}

// int_{-L}^{0} e^{a t} dt
inline complex exp_primitive(complex a, double lg)
{
    if (a == complex{}) {
        return {lg, 0.0};
    }
    return (1.0 - std::exp(-a * lg)) / a;
}

} // namespace detail

// G(p) = int_{-ln gamma(p)}^{0} e^{-i h t} F(phi_t(p)) dt for F in the flat
// class (every term flat-tagged on the pair). Along the flow each term scales
// as e^{m t}, so every term integrates in closed form.
template <scalar S>
complex homotopy_flat_integral(const separable_function<S> &flat, std::span<const double> p)
{
    if (flat.arity() != 1) {
        throw error(error_code::arity_mismatch, "homotopy integral is two-dimensional");
    }
    const double x = p[0];
    const double y = p[1];
    const double h = x * y;
    if (h == 0.0) {
        return {};
    }
    const double lg = detail::log_gamma_2d(x, y);
    complex acc{};
    for (const auto &[k, num] : flat.terms()) {
        if (k.tag.type != factor_tag::kind::flat) {
            throw error(error_code::precondition_violated, "homotopy source must be Taylor-flat on the axes");
        }
        separable_function<S> single(1);
        single.add_term(k, num);
        const complex value = single.evaluate(p);
        if (value == complex{}) {
            continue;
        }
        const complex rate{static_cast<double>(k.offsets[0]), -h};
        acc += value * detail::exp_primitive(rate, lg);
    }
    return acc;
}

// Adaptive Gauss-Kronrod evaluation of the same integral for an arbitrary
// evaluable F. Absolute error target tol.
inline complex homotopy_integral_quadrature(const std::function<complex(std::span<const double>)> &source,
                                            std::span<const double> p, double tol)
{
    if (!(tol > 0.0)) {
        throw error(error_code::precondition_violated, "quadrature tolerance must be positive");
    }
    const double x = p[0];
    const double y = p[1];
    const double h = x * y;
    if (h == 0.0) {
        return {};
    }
    const double lg = detail::log_gamma_2d(x, y);
    if (lg == 0.0) {
        return {};
    }
    auto integrand = [&](double t) {
        const std::array<double, 2> q{std::exp(-t) * x, std::exp(t) * y};
        return std::exp(complex{0.0, -h * t}) * source(q);
    };
    // Boost stops on a relative criterion; a single-panel pass gives the L1
    // scale that turns the absolute target into a relative one.
    using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    double err = 0.0;
    double l1 = 0.0;
    const complex coarse = gk::integrate(integrand, -lg, 0.0, 0, 0.0, &err, &l1);
    if (err <= 0.1 * tol || l1 == 0.0) {
        return coarse;
    }
    const double rel = std::clamp(0.1 * tol / l1, 1e-14, 1e-3);
    const complex v = gk::integrate(integrand, -lg, 0.0, 15, rel, &err);
    if (!(err <= tol) || !std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw error(error_code::quadrature_failure, "homotopy quadrature did not reach the requested tolerance");
    }
    return v;
}

enum class homotopy_method { antiderivative, quadrature };

// Homotopy integral of a flat source with an explicit method choice. The
// quadrature route only uses F pointwise, so it checks the antiderivative
// route independently.
template <scalar S>
complex homotopy_flat_integral(const separable_function<S> &flat, std::span<const double> p, double tol,
                               homotopy_method method)
{
    if (method == homotopy_method::antiderivative) {
        const complex v = homotopy_flat_integral(flat, p);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw error(error_code::quadrature_failure, "homotopy integral is not finite");
        }
        return v;
    }
    for (const auto &[k, num] : flat.terms()) {
        if (k.tag.type != factor_tag::kind::flat) {
            throw error(error_code::precondition_violated, "homotopy source must be Taylor-flat on the axes");
        }
    }
    return homotopy_integral_quadrature([&flat](std::span<const double> q) { return flat.evaluate(q); }, p, tol);
}

// |ln gamma(p)| max_{t in [-ln gamma, 0]} |F(phi_t(p))|, sampled on `samples`
// equispaced times plus the endpoints.
inline double homotopy_bound(const std::function<complex(std::span<const double>)> &source,
                             std::span<const double> p, int samples = 257)
{
    const double x = p[0];
    const double y = p[1];
    if (x * y == 0.0) {
        return 0.0;
    }
    const double lg = detail::log_gamma_2d(x, y);
    double mx = 0.0;
    for (int s = 0; s <= samples; ++s) {
        const double t = -lg * static_cast<double>(s) / samples;
        const std::array<double, 2> q{std::exp(-t) * x, std::exp(t) * y};
        mx = std::max(mx, std::abs(source(q)));
    }
    return std::abs(lg) * mx;
}

template <scalar S>
complex smooth_function_2d<S>::evaluate(std::span<const double> p) const
{
    if (p.size() != 2) {
        throw error(error_code::arity_mismatch, "2D functions take points (x, y)");
    }
    complex v = closed_.evaluate(p);
    for (const auto &src : homotopy_) {
        v += homotopy_flat_integral(src, p);
    }
    return v;
}

// Splits f into its untagged part and its flat-tagged part.
template <scalar S>
std::pair<separable_function<S>, separable_function<S>> split_flat(const separable_function<S> &f)
{
    separable_function<S> plain(f.arity());
    separable_function<S> flat(f.arity());
    for (const auto &[k, num] : f.terms()) {
        switch (k.tag.type) {
            case factor_tag::kind::none:
                plain.add_term(k, num);
                break;
            case factor_tag::kind::flat:
                flat.add_term(k, num);
                break;
            case factor_tag::kind::kernel:
                throw error(error_code::precondition_violated, "kernel terms are not admissible data here");
        }
    }
    plain.normalize();
    flat.normalize();
    return {plain, flat};
}

// Full smooth solve: exact rational solution of the polynomial part plus the
// homotopy integral of the flat remainder. (X - i h) g = f.
template <scalar S>
smooth_function_2d<S> solve_full_2d(const separable_function<S> &f)
{
    if (f.arity() != 1) {
        throw error(error_code::arity_mismatch, "2D solve expects arity 1");
    }
    auto [plain, flat] = split_flat(f);
    auto closed = plain.solve_pair(1);
    std::vector<separable_function<S>> homotopy;
    if (!flat.is_zero()) {
        homotopy.push_back(std::move(flat));
    }
    return smooth_function_2d<S>(std::move(closed), std::move(homotopy));
}

// f with f e^{ih} flat: on quadrant q, f = a_q(h) exp(i h (ln gamma - 1)),
// i.e. f e^{ih} = a_q(xy) exp((i/2) xy ln|y/x|); f = 0 on the axes.
template <scalar S>
smooth_function_2d<S> flat_section_build(const quadrant_kernel<S> &k)
{
    separable_function<S> f(1);
    for (int q = 1; q <= 4; ++q) {
        const auto &a = k.a[static_cast<std::size_t>(q - 1)];
        if (a) {
            f = f + a->as_function(1, 1, q);
        }
    }
    return smooth_function_2d<S>(std::move(f));
}

} // namespace kostant

#endif
