#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "ncbf/error.hpp"

namespace ncbf {

namespace detail {

inline double next_down(double v)
{
    return std::isfinite(v) ? std::nextafter(v, -std::numeric_limits<double>::infinity()) : v;
}

inline double next_up(double v)
{
    return std::isfinite(v) ? std::nextafter(v, std::numeric_limits<double>::infinity()) : v;
}

// Directed rounding from error-free transformations: the rounded result is
// kept when exact and nudged one ulp outward otherwise.

inline double two_sum_error(double a, double b, double s)
{
    const double bb = s - a;
    return (a - (s - bb)) + (b - bb);
}

inline double add_down(double a, double b)
{
    const double s = a + b;
    return std::isfinite(s) && two_sum_error(a, b, s) < 0.0 ? next_down(s) : s;
}

inline double add_up(double a, double b)
{
    const double s = a + b;
    return std::isfinite(s) && two_sum_error(a, b, s) > 0.0 ? next_up(s) : s;
}

inline double mul_down(double a, double b)
{
    if (a == 0.0 || b == 0.0) {
        return 0.0;
    }
    const double p = a * b;
    return std::isfinite(p) && std::fma(a, b, -p) < 0.0 ? next_down(p) : p;
}

inline double mul_up(double a, double b)
{
    if (a == 0.0 || b == 0.0) {
        return 0.0;
    }
    const double p = a * b;
    return std::isfinite(p) && std::fma(a, b, -p) > 0.0 ? next_up(p) : p;
}

// Sign of (exact a/b) - fl(a/b).
inline double div_error_sign(double a, double b, double q)
{
    const double r = std::fma(-q, b, a);
    return (r == 0.0) ? 0.0 : ((r > 0.0) == (b > 0.0) ? 1.0 : -1.0);
}

inline double div_down(double a, double b)
{
    const double q = a / b;
    return std::isfinite(q) && div_error_sign(a, b, q) < 0.0 ? next_down(q) : q;
}

inline double div_up(double a, double b)
{
    const double q = a / b;
    return std::isfinite(q) && div_error_sign(a, b, q) > 0.0 ? next_up(q) : q;
}

} // namespace detail

/// Closed interval [lo, hi] with outward rounding on every operation, so
/// the true real-valued result is always enclosed.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    constexpr Interval() = default;
    constexpr Interval(double point) : lo(point), hi(point) {} // NOLINT(google-explicit-constructor)
    constexpr Interval(double l, double h) : lo(l), hi(h) {}

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
    bool subset_of(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval hull(const Interval& a, const Interval& b)
{
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval intersect(const Interval& a, const Interval& b)
{
    return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline Interval operator+(const Interval& a, const Interval& b)
{
    return {detail::add_down(a.lo, b.lo), detail::add_up(a.hi, b.hi)};
}

inline Interval operator-(const Interval& a)
{
    return {-a.hi, -a.lo};
}

inline Interval operator-(const Interval& a, const Interval& b)
{
    return {detail::add_down(a.lo, -b.hi), detail::add_up(a.hi, -b.lo)};
}

inline Interval operator*(const Interval& a, const Interval& b)
{
    const double lo = std::min({detail::mul_down(a.lo, b.lo), detail::mul_down(a.lo, b.hi),
                                detail::mul_down(a.hi, b.lo), detail::mul_down(a.hi, b.hi)});
    const double hi = std::max({detail::mul_up(a.lo, b.lo), detail::mul_up(a.lo, b.hi), detail::mul_up(a.hi, b.lo),
                                detail::mul_up(a.hi, b.hi)});
    return {lo, hi};
}

inline Interval operator/(const Interval& a, const Interval& b)
{
    if (b.contains_zero()) {
        throw DomainError("interval division: divisor interval contains zero");
    }
    const double lo = std::min({detail::div_down(a.lo, b.lo), detail::div_down(a.lo, b.hi),
                                detail::div_down(a.hi, b.lo), detail::div_down(a.hi, b.hi)});
    const double hi = std::max({detail::div_up(a.lo, b.lo), detail::div_up(a.lo, b.hi), detail::div_up(a.hi, b.lo),
                                detail::div_up(a.hi, b.hi)});
    return {lo, hi};
}

inline Interval ipow(const Interval& a, int exponent)
{
    if (exponent == 0) {
        return {1.0, 1.0};
    }
    if (exponent < 0) {
        return Interval(1.0) / ipow(a, -exponent);
    }
    if (exponent % 2 == 1 || a.lo >= 0.0) {
        // Monotone: odd power everywhere, even power on the nonnegative axis.
        // Endpoint powers are enclosed by repeated outward-rounded products.
        Interval pl(1.0);
        Interval ph(1.0);
        for (int i = 0; i < exponent; ++i) {
            pl = pl * Interval(a.lo);
            ph = ph * Interval(a.hi);
        }
        return {std::min(pl.lo, ph.lo), std::max(pl.hi, ph.hi)};
    }
    if (a.hi <= 0.0) {
        return ipow(-a, exponent);
    }
    // Even power over an interval straddling zero.
    const Interval m(0.0, std::max(-a.lo, a.hi));
    const Interval p = ipow(m, exponent);
    return {0.0, p.hi};
}

inline Interval sqrt(const Interval& a)
{
    if (a.lo < 0.0) {
        throw DomainError("interval sqrt: interval reaches negative values");
    }
    auto root_down = [](double v) {
        const double r = std::sqrt(v);
        return std::fma(-r, r, v) < 0.0 ? detail::next_down(r) : r;
    };
    auto root_up = [](double v) {
        const double r = std::sqrt(v);
        return std::isfinite(r) && std::fma(-r, r, v) > 0.0 ? detail::next_up(r) : r;
    };
    return {std::max(0.0, root_down(a.lo)), root_up(a.hi)};
}

inline Interval abs(const Interval& a)
{
    if (a.lo >= 0.0) {
        return a;
    }
    if (a.hi <= 0.0) {
        return -a;
    }
    return {0.0, std::max(-a.lo, a.hi)};
}

inline Interval min(const Interval& a, const Interval& b)
{
    return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline Interval max(const Interval& a, const Interval& b)
{
    return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval sin(const Interval& a)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.width() >= two_pi) {
        return {-1.0, 1.0};
    }
    const double s_lo = std::sin(a.lo);
    const double s_hi = std::sin(a.hi);
    double lo = std::min(s_lo, s_hi);
    double hi = std::max(s_lo, s_hi);
    // Does [a.lo, a.hi] contain pi/2 + 2k pi (max) or -pi/2 + 2k pi (min)?
    auto contains_phase = [&](double phase) {
        const double k = std::ceil((a.lo - phase) / two_pi);
        return phase + k * two_pi <= a.hi;
    };
    if (contains_phase(std::numbers::pi / 2.0)) {
        hi = 1.0;
    }
    if (contains_phase(-std::numbers::pi / 2.0)) {
        lo = -1.0;
    }
    // libm sin is accurate to about one ulp; widen by a few ulps.
    constexpr double pad = 4.0 * std::numeric_limits<double>::epsilon();
    return {std::max(-1.0, lo - pad), std::min(1.0, hi + pad)};
}

inline Interval cos(const Interval& a)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.width() >= two_pi) {
        return {-1.0, 1.0};
    }
    const double c_lo = std::cos(a.lo);
    const double c_hi = std::cos(a.hi);
    double lo = std::min(c_lo, c_hi);
    double hi = std::max(c_lo, c_hi);
    auto contains_phase = [&](double phase) {
        const double k = std::ceil((a.lo - phase) / two_pi);
        return phase + k * two_pi <= a.hi;
    };
    if (contains_phase(0.0)) {
        hi = 1.0;
    }
    if (contains_phase(std::numbers::pi)) {
        lo = -1.0;
    }
    constexpr double pad = 4.0 * std::numeric_limits<double>::epsilon();
    return {std::max(-1.0, lo - pad), std::min(1.0, hi + pad)};
}

inline std::ostream& operator<<(std::ostream& os, const Interval& i)
{
    return os << '[' << i.lo << ", " << i.hi << ']';
}

} // namespace ncbf
