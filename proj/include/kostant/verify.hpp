#ifndef KOSTANT_VERIFY_HPP
#define KOSTANT_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <kostant/error.hpp>
#include <kostant/normal_forms.hpp>
#include <kostant/scalar.hpp>
#include <kostant/separable.hpp>
#include <kostant/series.hpp>

namespace kostant
{

struct residual_report {
    std::string label;
    // symbolic / coefficient residual
    std::optional<double> symbolic_max;
    bool exact_zero = false;
    // pointwise residual over a grid
    std::optional<double> grid_max;
    std::optional<double> grid_mean;
    std::size_t grid_points = 0;
    std::string grid;
    double tolerance = 0.0;

    [[nodiscard]] bool within_tolerance() const
    {
        if (symbolic_max && !exact_zero && !(*symbolic_max <= tolerance)) {
            return false;
        }
        if (grid_max && !(*grid_max <= tolerance)) {
            return false;
        }
        return true;
    }
};

using evaluable = std::function<complex(std::span<const double>)>;

struct grid_spec {
    // one closed interval per coordinate
    std::vector<std::pair<double, double>> box;
    int points_per_axis = 41;
    // exclude points with |x_j y_j| < delta on the active pair
    std::optional<double> exclude_abs_h_below;
    int active_pair = 1;

    static grid_spec standard(int arity, int active_pair = 1)
    {
        grid_spec g;
        g.box.assign(2 * static_cast<std::size_t>(arity), {-1.0, 1.0});
        g.points_per_axis = 41;
        g.exclude_abs_h_below = 0.05;
        g.active_pair = active_pair;
        return g;
    }

    void validate() const
    {
        if (box.empty() || box.size() % 2 != 0) {
            throw error(error_code::schema_error, "grid box needs an even, nonzero number of intervals");
        }
        for (const auto &[lo, hi] : box) {
            if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
                throw error(error_code::schema_error, "grid intervals must be finite and nonempty");
            }
        }
        if (points_per_axis < 2) {
            throw error(error_code::schema_error, "grid needs at least 2 points per axis");
        }
        if (exclude_abs_h_below && !(*exclude_abs_h_below >= 0.0)) {
            throw error(error_code::schema_error, "exclusion threshold must be nonnegative");
        }
        if (active_pair < 1 || 2 * static_cast<std::size_t>(active_pair) > box.size()) {
            throw error(error_code::schema_error, "grid active pair outside the box dimension");
        }
    }

    [[nodiscard]] bool excluded(std::span<const double> p) const
    {
        if (!exclude_abs_h_below) {
            return false;
        }
        const auto k = static_cast<std::size_t>(2 * (active_pair - 1));
        return std::abs(p[k] * p[k + 1]) < *exclude_abs_h_below;
    }

    // All admitted grid points, lexicographic order.
    [[nodiscard]] std::vector<point> points() const
    {
        validate();
        const std::size_t dim = box.size();
        std::vector<point> out;
        std::vector<int> idx(dim, 0);
        point p(dim);
        while (true) {
            for (std::size_t d = 0; d < dim; ++d) {
                const auto [lo, hi] = box[d];
                p[d] = lo + (hi - lo) * idx[d] / (points_per_axis - 1);
            }
            if (!excluded(p)) {
                out.push_back(p);
            }
            std::size_t d = 0;
            while (d < dim && ++idx[d] == points_per_axis) {
                idx[d] = 0;
                ++d;
            }
            if (d == dim) {
                break;
            }
        }
        return out;
    }

    [[nodiscard]] std::string describe() const
    {
        std::ostringstream os;
        os << "box";
        for (const auto &[lo, hi] : box) {
            os << '[' << lo << ',' << hi << ']';
        }
        os << " points " << points_per_axis;
        if (exclude_abs_h_below) {
            os << " exclude |h_" << active_pair << "|<" << *exclude_abs_h_below;
        }
        return os.str();
    }
};

struct derivative_probe {
    double step = 1e-4;
    int order = 4;

    void validate() const
    {
        if (!(step > 0.0)) {
            throw error(error_code::schema_error, "probe step must be positive");
        }
        if (order != 2 && order != 4) {
            throw error(error_code::schema_error, "probe order must be 2 or 4");
        }
    }
};

// d/ds G(phi^j_s(p)) at s = 0 by central differences along the exact flow.
inline complex flow_derivative(const model_system &model, int j, const evaluable &g, std::span<const double> p,
                               const derivative_probe &probe)
{
    auto at = [&](double s) { return g(model.flow(j, s, p)); };
    const double s = probe.step;
    if (probe.order == 2) {
        return (at(s) - at(-s)) / (2.0 * s);
    }
    return (-at(2.0 * s) + 8.0 * at(s) - 8.0 * at(-s) + at(-2.0 * s)) / (12.0 * s);
}

// R(p) = X_j(G)(p) - i h_j(p) G(p) - F(p) on every admitted grid point.
inline residual_report flow_residual(const model_system &model, int j, const evaluable &g, const evaluable &f,
                                     const grid_spec &grid, const derivative_probe &probe, double tolerance = 1e-8)
{
    probe.validate();
    if (model.kind(j) != component_kind::hyperbolic) {
        throw error(error_code::model_error, "flow residual is defined for hyperbolic components");
    }
    if (grid.box.size() != static_cast<std::size_t>(2 * model.arity())) {
        throw error(error_code::arity_mismatch, "grid dimension does not match the model");
    }
    residual_report r;
    r.label = "flow_residual";
    r.grid = grid.describe();
    r.tolerance = tolerance;
    double mx = 0.0;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto &p : grid.points()) {
        const complex gv = g(p);
        const complex res = flow_derivative(model, j, g, p, probe) - complex{0.0, model.hamiltonian(j, p)} * gv - f(p);
        const double a = std::abs(res);
        if (!std::isfinite(a)) {
            throw error(error_code::evaluation_failure, "non-finite residual at a grid point");
        }
        mx = std::max(mx, a);
        sum += a;
        ++count;
    }
    r.grid_max = mx;
    r.grid_mean = count == 0 ? 0.0 : sum / static_cast<double>(count);
    r.grid_points = count;
    return r;
}

// Maximum relative coefficient discrepancy |a - b| / |a| over the union of
// supports (|b| when a vanishes; zero against zero counts as equal).
template <scalar S>
residual_report compare_series(const truncated_series<S> &a, const truncated_series<S> &b, double rel_tol)
{
    if (a.arity() != b.arity()) {
        throw error(error_code::arity_mismatch, "compared series have different arities");
    }
    if (a.order() != b.order()) {
        throw error(error_code::order_mismatch, "compared series have different orders");
    }
    double mx = 0.0;
    auto visit = [&](const multi_index &m) {
        const complex ca = to_complex(a.coeff(m));
        const complex cb = to_complex(b.coeff(m));
        const double diff = std::abs(ca - cb);
        if (diff == 0.0) {
            return;
        }
        const double ref = std::abs(ca) != 0.0 ? std::abs(ca) : std::abs(cb);
        mx = std::max(mx, diff / ref);
    };
    for (const auto &[m, c] : a.coeffs()) {
        visit(m);
    }
    for (const auto &[m, c] : b.coeffs()) {
        if (a.coeffs().count(m) == 0) {
            visit(m);
        }
    }
    residual_report r;
    r.label = "compare_series";
    r.symbolic_max = mx;
    r.exact_zero = mx == 0.0;
    r.tolerance = rel_tol;
    return r;
}

// Coefficient residual of a truncated series that should vanish.
template <scalar S>
residual_report series_residual(const std::string &label, const truncated_series<S> &r, double tol)
{
    residual_report rep;
    rep.label = label;
    rep.symbolic_max = r.max_abs();
    rep.exact_zero = r.is_zero();
    rep.tolerance = tol;
    return rep;
}

// Symbolic residual of a separable function that should vanish.
template <scalar S>
residual_report symbolic_residual(const std::string &label, const separable_function<S> &r, double tol)
{
    residual_report rep;
    rep.label = label;
    rep.symbolic_max = r.max_abs();
    rep.exact_zero = r.is_zero();
    rep.tolerance = tol;
    return rep;
}

} // namespace kostant

#endif
