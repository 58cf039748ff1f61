#ifndef KOSTANT_NORMAL_FORMS_HPP
#define KOSTANT_NORMAL_FORMS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <kostant/error.hpp>
#include <kostant/scalar.hpp>

namespace kostant
{

// Model symplectic coordinates (x_1, y_1, ..., x_n, y_n).
using point = std::vector<double>;

struct williamson_spec {
    int ke = 0;
    int kh = 0;
    int kf = 0;

    [[nodiscard]] int arity() const noexcept
    {
        return ke + kh + 2 * kf;
    }
    friend bool operator==(const williamson_spec &, const williamson_spec &) = default;
};

enum class component_kind { elliptic, hyperbolic, focus_focus_radial, focus_focus_angular };

struct block {
    enum class type { elliptic, hyperbolic, focus_focus } kind;
    // 1-based first component index; focus-focus blocks also own first + 1.
    int first;
};

// Linear model of a nondegenerate rank-0 singularity of Williamson type
// (k_e, k_h, k_f): elliptic components first, then hyperbolic, then the
// focus-focus pairs. Components and pairs are 1-based.
class model_system
{
public:
    explicit model_system(williamson_spec spec) : spec_(spec)
    {
        if (spec.ke < 0 || spec.kh < 0 || spec.kf < 0) {
            throw error(error_code::invalid_spec, "Williamson counts must be nonnegative");
        }
        if (spec.arity() < 1) {
            throw error(error_code::invalid_spec, "Williamson type must have at least one component");
        }
        int i = 1;
        for (int e = 0; e < spec.ke; ++e, ++i) {
            blocks_.push_back({block::type::elliptic, i});
            kinds_.push_back(component_kind::elliptic);
        }
        for (int h = 0; h < spec.kh; ++h, ++i) {
            blocks_.push_back({block::type::hyperbolic, i});
            kinds_.push_back(component_kind::hyperbolic);
        }
        for (int f = 0; f < spec.kf; ++f, i += 2) {
            blocks_.push_back({block::type::focus_focus, i});
            kinds_.push_back(component_kind::focus_focus_radial);
            kinds_.push_back(component_kind::focus_focus_angular);
        }
    }

    [[nodiscard]] const williamson_spec &spec() const noexcept
    {
        return spec_;
    }
    [[nodiscard]] int arity() const noexcept
    {
        return spec_.arity();
    }
    [[nodiscard]] const std::vector<block> &blocks() const noexcept
    {
        return blocks_;
    }
    [[nodiscard]] bool purely_hyperbolic() const noexcept
    {
        return spec_.ke == 0 && spec_.kf == 0;
    }

    [[nodiscard]] component_kind kind(int j) const
    {
        check_component(j);
        return kinds_[static_cast<std::size_t>(j - 1)];
    }

    // h_j(p).
    [[nodiscard]] double hamiltonian(int j, std::span<const double> p) const
    {
        check_point(p);
        const auto [x, y] = pair_coords(j, p);
        switch (kind(j)) {
            case component_kind::elliptic:
                return x * x + y * y;
            case component_kind::hyperbolic:
                return x * y;
            case component_kind::focus_focus_radial: {
                const auto [x2, y2] = pair_coords(j + 1, p);
                return x * y + x2 * y2;
            }
            case component_kind::focus_focus_angular: {
                const auto [x1, y1] = pair_coords(j - 1, p);
                return x1 * y - x * y1;
            }
        }
        return 0.0;
    }

    // Row-major 2n x 2n integer matrix A_j with X_j(p) = A_j p.
    [[nodiscard]] std::vector<int> field_matrix(int j) const
    {
        check_component(j);
        const auto dim = static_cast<std::size_t>(2 * arity());
        std::vector<int> a(dim * dim, 0);
        auto at = [&](std::size_t r, std::size_t c) -> int & { return a[r * dim + c]; };
        auto xi = [](int i) { return static_cast<std::size_t>(2 * (i - 1)); };
        switch (kind(j)) {
            case component_kind::elliptic:
                at(xi(j), xi(j) + 1) = -2;
                at(xi(j) + 1, xi(j)) = 2;
                break;
            case component_kind::hyperbolic:
                at(xi(j), xi(j)) = -1;
                at(xi(j) + 1, xi(j) + 1) = 1;
                break;
            case component_kind::focus_focus_radial:
                at(xi(j), xi(j)) = -1;
                at(xi(j) + 1, xi(j) + 1) = 1;
                at(xi(j + 1), xi(j + 1)) = -1;
                at(xi(j + 1) + 1, xi(j + 1) + 1) = 1;
                break;
            case component_kind::focus_focus_angular: {
                const auto x1 = xi(j - 1);
                const auto x2 = xi(j);
                at(x1, x2) = 1;
                at(x1 + 1, x2 + 1) = 1;
                at(x2, x1) = -1;
                at(x2 + 1, x1 + 1) = -1;
                break;
            }
        }
        return a;
    }

    // X_j(p).
    [[nodiscard]] point field(int j, std::span<const double> p) const
    {
        check_point(p);
        const auto a = field_matrix(j);
        const std::size_t dim = p.size();
        point v(dim, 0.0);
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                v[r] += a[r * dim + c] * p[c];
            }
        }
        return v;
    }

    // Closed-form time-t flow of X_j.
    [[nodiscard]] point flow(int j, double t, std::span<const double> p) const
    {
        check_point(p);
        point q(p.begin(), p.end());
        const auto xj = static_cast<std::size_t>(2 * (j - 1));
        switch (kind(j)) {
            case component_kind::elliptic: {
                const double c = std::cos(2.0 * t);
                const double s = std::sin(2.0 * t);
                q[xj] = c * p[xj] - s * p[xj + 1];
                q[xj + 1] = s * p[xj] + c * p[xj + 1];
                break;
            }
            case component_kind::hyperbolic:
                q[xj] = std::exp(-t) * p[xj];
                q[xj + 1] = std::exp(t) * p[xj + 1];
                break;
            case component_kind::focus_focus_radial:
                q[xj] = std::exp(-t) * p[xj];
                q[xj + 1] = std::exp(t) * p[xj + 1];
                q[xj + 2] = std::exp(-t) * p[xj + 2];
                q[xj + 3] = std::exp(t) * p[xj + 3];
                break;
            case component_kind::focus_focus_angular: {
                // simultaneous rotation of (x_i, x_{i+1}) and (y_i, y_{i+1})
                const std::size_t x1 = xj - 2;
                const double c = std::cos(t);
                const double s = std::sin(t);
                q[x1] = c * p[x1] + s * p[xj];
                q[xj] = -s * p[x1] + c * p[xj];
                q[x1 + 1] = c * p[x1 + 1] + s * p[xj + 1];
                q[xj + 1] = -s * p[x1 + 1] + c * p[xj + 1];
                break;
            }
        }
        return q;
    }

    // Flow time from the diagonal to p along a hyperbolic X_j: 1/2 ln|y_j / x_j|.
    [[nodiscard]] double log_gamma(int j, std::span<const double> p) const
    {
        check_point(p);
        if (kind(j) != component_kind::hyperbolic) {
            throw error(error_code::index_out_of_range, "ln gamma is defined for hyperbolic components only");
        }
        const auto [x, y] = pair_coords(j, p);
        if (x * y == 0.0) {
            throw error(error_code::undefined_on_axes, "ln gamma is undefined where x_j y_j = 0");
        }
        return 0.5 * std::log(std::abs(y / x));
    }

    // Theta(X_j)(p) for Theta = 1/2 sum (x_k dy_k - y_k dx_k).
    [[nodiscard]] std::vector<complex> connection_potential(std::span<const double> p) const
    {
        check_point(p);
        std::vector<complex> out;
        out.reserve(static_cast<std::size_t>(arity()));
        for (int j = 1; j <= arity(); ++j) {
            const auto v = field(j, p);
            double acc = 0.0;
            for (std::size_t k = 0; k < p.size(); k += 2) {
                acc += p[k] * v[k + 1] - p[k + 1] * v[k];
            }
            out.emplace_back(0.5 * acc, 0.0);
        }
        return out;
    }

    void check_component(int j) const
    {
        if (j < 1 || j > arity()) {
            throw error(error_code::index_out_of_range,
                        "component index " + std::to_string(j) + " outside 1.." + std::to_string(arity()));
        }
    }

    void check_point(std::span<const double> p) const
    {
        if (p.size() != static_cast<std::size_t>(2 * arity())) {
            throw error(error_code::arity_mismatch, "point has " + std::to_string(p.size())
                                                        + " coordinates, model needs " + std::to_string(2 * arity()));
        }
    }

private:
    [[nodiscard]] std::pair<double, double> pair_coords(int j, std::span<const double> p) const
    {
        check_component(j);
        const auto k = static_cast<std::size_t>(2 * (j - 1));
        return {p[k], p[k + 1]};
    }

    williamson_spec spec_;
    std::vector<block> blocks_;
    std::vector<component_kind> kinds_;
};

inline model_system build_model(williamson_spec spec)
{
    return model_system(spec);
}

} // namespace kostant

#endif
