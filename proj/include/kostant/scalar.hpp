#ifndef KOSTANT_SCALAR_HPP
#define KOSTANT_SCALAR_HPP

#include <cmath>
#include <complex>
#include <ostream>
#include <utility>

#include <gmpxx.h>

namespace kostant
{

using complex = std::complex<double>;

// Exact element of Q(i). Used wherever an identity has to hold with no
// rounding at all (d∘d = 0, roundtrips of the cohomology solvers).
class gaussian_rational
{
public:
    gaussian_rational() = default;
    gaussian_rational(long re) : re_(re), im_(0) {}
    gaussian_rational(mpq_class re, mpq_class im) : re_(std::move(re)), im_(std::move(im))
    {
        re_.canonicalize();
        im_.canonicalize();
    }

    static gaussian_rational i()
    {
        return {mpq_class(0), mpq_class(1)};
    }

    [[nodiscard]] const mpq_class &real() const noexcept
    {
        return re_;
    }
    [[nodiscard]] const mpq_class &imag() const noexcept
    {
        return im_;
    }

    gaussian_rational &operator+=(const gaussian_rational &o)
    {
        re_ += o.re_;
        im_ += o.im_;
        return *this;
    }
    gaussian_rational &operator-=(const gaussian_rational &o)
    {
        re_ -= o.re_;
        im_ -= o.im_;
        return *this;
    }
    gaussian_rational &operator*=(const gaussian_rational &o)
    {
        mpq_class r = re_ * o.re_ - im_ * o.im_;
        mpq_class m = re_ * o.im_ + im_ * o.re_;
        re_ = std::move(r);
        im_ = std::move(m);
        return *this;
    }
    gaussian_rational &operator/=(const gaussian_rational &o)
    {
        mpq_class den = o.re_ * o.re_ + o.im_ * o.im_;
        mpq_class r = (re_ * o.re_ + im_ * o.im_) / den;
        mpq_class m = (im_ * o.re_ - re_ * o.im_) / den;
        re_ = std::move(r);
        im_ = std::move(m);
        return *this;
    }

    friend gaussian_rational operator+(gaussian_rational a, const gaussian_rational &b)
    {
        return a += b;
    }
    friend gaussian_rational operator-(gaussian_rational a, const gaussian_rational &b)
    {
        return a -= b;
    }
    friend gaussian_rational operator*(gaussian_rational a, const gaussian_rational &b)
    {
        return a *= b;
    }
    friend gaussian_rational operator/(gaussian_rational a, const gaussian_rational &b)
    {
        return a /= b;
    }
    friend gaussian_rational operator-(const gaussian_rational &a)
    {
        return {-a.re_, -a.im_};
    }
    friend bool operator==(const gaussian_rational &a, const gaussian_rational &b)
    {
        return a.re_ == b.re_ && a.im_ == b.im_;
    }

    friend std::ostream &operator<<(std::ostream &os, const gaussian_rational &q)
    {
        return os << '(' << q.re_ << ',' << q.im_ << ')';
    }

private:
    mpq_class re_{0};
    mpq_class im_{0};
};

template <typename S>
struct scalar_traits;

template <>
struct scalar_traits<complex> {
    static constexpr bool exact = false;

    static complex i() noexcept
    {
        return {0.0, 1.0};
    }
    static complex from_int(long v) noexcept
    {
        return {static_cast<double>(v), 0.0};
    }
    static bool is_zero(const complex &c) noexcept
    {
        return c.real() == 0.0 && c.imag() == 0.0;
    }
    static double abs(const complex &c) noexcept
    {
        return std::abs(c);
    }
    static complex to_complex(const complex &c) noexcept
    {
        return c;
    }
};

template <>
struct scalar_traits<gaussian_rational> {
    static constexpr bool exact = true;

    static gaussian_rational i()
    {
        return gaussian_rational::i();
    }
    static gaussian_rational from_int(long v)
    {
        return {v};
    }
    static bool is_zero(const gaussian_rational &c)
    {
        return sgn(c.real()) == 0 && sgn(c.imag()) == 0;
    }
    static double abs(const gaussian_rational &c)
    {
        return std::hypot(c.real().get_d(), c.imag().get_d());
    }
    static complex to_complex(const gaussian_rational &c)
    {
        return {c.real().get_d(), c.imag().get_d()};
    }
};

template <typename S>
concept scalar = requires { scalar_traits<S>::exact; };

template <scalar S>
S imag_unit()
{
    return scalar_traits<S>::i();
}

template <scalar S>
S from_int(long v)
{
    return scalar_traits<S>::from_int(v);
}

template <scalar S>
bool is_zero(const S &c)
{
    return scalar_traits<S>::is_zero(c);
}

template <scalar S>
double magnitude(const S &c)
{
    return scalar_traits<S>::abs(c);
}

template <scalar S>
complex to_complex(const S &c)
{
    return scalar_traits<S>::to_complex(c);
}

// Integer power of a scalar, p >= 0.
template <scalar S>
S ipow(S base, unsigned p)
{
    S r = from_int<S>(1);
    while (p != 0u) {
        if ((p & 1u) != 0u) {
            r *= base;
        }
        base *= base;
        p >>= 1u;
    }
    return r;
}

} // namespace kostant

#endif
