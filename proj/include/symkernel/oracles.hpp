#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "symkernel/error.hpp"
#include "symkernel/quadrature.hpp"

namespace symkernel {

// Exact heat and Green kernels on R^n, H^3 and H^2, radial in the distance r.
// They are the ground truth the envelopes are measured against.

enum class KernelMethod { closed_form, quadrature, laplace_transform };

inline const char* method_name(KernelMethod method)
{
    switch (method) {
    case KernelMethod::closed_form:
        return "closed-form";
    case KernelMethod::quadrature:
        return "quadrature";
    case KernelMethod::laplace_transform:
        return "laplace-transform";
    }
    return "?";
}

struct KernelSample {
    double r = 0.0;
    std::complex<double> t_or_s;
    double value = 0.0;
    KernelMethod method = KernelMethod::closed_form;
};

struct QuadBudget {
    double rel_tol = 1e-10;
    int max_intervals = 2000;
};

/// A quadrature-backed kernel value with its relative error estimate.
struct OracleValue {
    double value = 0.0;
    double log_value = 0.0;
    double rel_error = 0.0;
};

namespace detail {

inline double log_sinh(double x)
{
    if (x > 20.0)
        return x - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * x));
    return std::log(std::sinh(x));
}

/// sinh(y)/y, continuous at 0.
inline double sinhc(double y)
{
    if (std::abs(y) < 1e-4)
        return 1.0 + y * y / 6.0;
    return std::sinh(y) / y;
}

/// log(r / sinh r), continuous at 0.
inline double log_r_over_sinh(double r)
{
    if (r < 1e-4)
        return -r * r / 6.0;
    return std::log(r) - log_sinh(r);
}

/// Distance between two points at distances rho and r from o separated by
/// angle theta, via cosh d - 1 = 2 sinh^2((rho-r)/2) + sinh rho sinh r (1 - cos theta).
inline double law_of_cosines(double rho, double r, double one_minus_cos)
{
    const double half = std::sinh(0.5 * (rho - r));
    const double excess = 2.0 * half * half + std::sinh(rho) * std::sinh(r) * one_minus_cos;
    return std::log1p(excess + std::sqrt(excess * (excess + 2.0)));
}

} // namespace detail

inline double log_euclid_heat(int n, double t, double r)
{
    if (!(t > 0.0))
        throw DomainError("euclid_heat requires t > 0");
    return -0.5 * n * std::log(4.0 * std::numbers::pi * t) - r * r / (4.0 * t);
}

/// (4 pi t)^{-n/2} e^{-r^2/4t}.
inline double euclid_heat(int n, double t, double r) { return std::exp(log_euclid_heat(n, t, r)); }

inline double log_h3_heat(double t, double r)
{
    if (!(t > 0.0) || !(r >= 0.0))
        throw DomainError("h3_heat requires t > 0 and r >= 0");
    return -1.5 * std::log(4.0 * std::numbers::pi * t) + detail::log_r_over_sinh(r) - t - r * r / (4.0 * t);
}

/// (4 pi t)^{-3/2} (r / sinh r) e^{-t - r^2/4t}.
inline double h3_heat(double t, double r) { return std::exp(log_h3_heat(t, r)); }

/// McKean's formula on H^2:
///   (sqrt 2 / (4 pi t)^{3/2}) e^{-t/4} int_r^inf u e^{-u^2/4t} / sqrt(cosh u - cosh r) du.
///
/// With u = r + v^2 and cosh u - cosh r = 2 sinh(r + v^2/2) sinh(v^2/2) the
/// endpoint singularity disappears, and e^{-r^2/4t} is factored out so the
/// integrand is O(1) where it matters.
inline OracleValue h2_heat_mckean(double t, double r, const QuadBudget& budget = {})
{
    if (!(t > 0.0) || !(r >= 0.0))
        throw DomainError("h2_heat_mckean requires t > 0 and r >= 0");
    auto integrand = [&](double v) {
        const double v2 = v * v;
        const double y = 0.5 * v2;
        // 2v(r+v^2) / sqrt(2 sinh(r+y) sinh y) with v / sqrt(sinh y) = sqrt(2 / sinhc(y))
        const double log_rest = -(2.0 * r * v2 + v2 * v2) / (4.0 * t) - 0.5 * (std::numbers::ln2 + detail::log_sinh(r + y));
        return 2.0 * (r + v2) * std::sqrt(2.0 / detail::sinhc(y)) * std::exp(log_rest);
    };
    constexpr double kCutoffExponent = 800.0;
    const double upper = std::sqrt(-r + std::sqrt(r * r + 4.0 * t * kCutoffExponent));
    const auto q = integrate(integrand, 0.0, upper, QuadOptions{budget.rel_tol, 0.0, budget.max_intervals});
    const double log_prefactor = 0.5 * std::numbers::ln2 - 1.5 * std::log(4.0 * std::numbers::pi * t) - 0.25 * t -
                                 r * r / (4.0 * t);
    OracleValue out;
    out.log_value = log_prefactor + std::log(q.value);
    out.value = std::exp(out.log_value);
    out.rel_error = q.abs_error / std::abs(q.value);
    if (!q.converged)
        throw QuadratureError("h2_heat_mckean: budget exhausted before tolerance", out.value, out.value * out.rel_error);
    return out;
}

// Heat oracles with a common interface for the Laplace transform. The spectral
// bottom is the exponential decay rate of t -> h_t(r).

struct EuclideanHeat {
    int dim = 3;
    double spectral_bottom() const { return 0.0; }
    double log_value(double t, double r) const { return log_euclid_heat(dim, t, r); }
};

struct H3Heat {
    double spectral_bottom() const { return 1.0; }
    double log_value(double t, double r) const { return log_h3_heat(t, r); }
};

struct H2Heat {
    QuadBudget budget{1e-11, 2000};
    double spectral_bottom() const { return 0.25; }
    double log_value(double t, double r) const { return h2_heat_mckean(t, r, budget).log_value; }
};

struct GreenValue {
    std::complex<double> value;
    double abs_error = 0.0;
    bool converged = false;
};

/// G_s(r) = int_0^inf e^{(alpha0 - s^2) t} h_t(r) dt, the resolvent kernel of
/// (L - alpha0 + s^2)^{-1}. Integrated in u = log t, in unit panels walking
/// outward from the peak of the integrand until panels stop contributing.
template <class Heat>
GreenValue green_from_heat(const Heat& heat, double alpha0, std::complex<double> s, double r,
                           const QuadBudget& budget = {})
{
    if (!(s.real() > 0.0))
        throw DomainError("green_from_heat requires Re(s) > 0");
    if (!(r > 0.0))
        throw DomainError("green_from_heat requires r > 0 (the kernel is singular on the diagonal)");
    const std::complex<double> s2 = s * s;
    const double decay = s2.real() - alpha0 + heat.spectral_bottom();
    if (!(decay > 1e-9))
        throw DomainError("green_from_heat: Laplace transform diverges (Re(s^2) at or below the spectral gap)");

    auto log_modulus = [&](double u) {
        const double t = std::exp(u);
        return u + heat.log_value(t, r) + (alpha0 - s2.real()) * t;
    };
    auto integrand = [&](double u) -> std::complex<double> {
        const double t = std::exp(u);
        const double modulus = std::exp(log_modulus(u));
        const double phase = -s2.imag() * t;
        return {modulus * std::cos(phase), modulus * std::sin(phase)};
    };

    double peak_u = 0.0;
    double peak_log = -std::numeric_limits<double>::infinity();
    for (double u = -40.0; u <= 40.0; u += 0.125) {
        const double value = log_modulus(u);
        if (value > peak_log) {
            peak_log = value;
            peak_u = u;
        }
    }
    if (!std::isfinite(peak_log))
        throw DomainError("green_from_heat: integrand vanishes on the scanned range");

    const double peak = std::exp(peak_log);
    const QuadOptions panel_options{budget.rel_tol, budget.rel_tol * peak * 1e-3, budget.max_intervals};
    GreenValue out;
    out.converged = true;
    std::complex<double> total = 0.0;
    for (const double direction : {-1.0, 1.0}) {
        int quiet = 0;
        double edge = peak_u;
        for (int panel = 0; panel < 400 && quiet < 3; ++panel) {
            const double next = edge + direction;
            const auto q = direction < 0 ? integrate(integrand, next, edge, panel_options)
                                         : integrate(integrand, edge, next, panel_options);
            total += q.value;
            out.abs_error += q.abs_error;
            out.converged = out.converged && q.converged;
            quiet = std::abs(q.value) <= 1e-18 * std::abs(total) ? quiet + 1 : 0;
            edge = next;
        }
    }
    out.value = total;
    return out;
}

/// The H^3 resolvent kernel e^{-s r} / (4 pi sinh r) for alpha0 = 1, real s > 0.
inline double h3_green_closed_form(double s, double r)
{
    return std::exp(-s * r - std::log(4.0 * std::numbers::pi) - detail::log_sinh(r));
}

/// The Yukawa kernel e^{-s r} / (4 pi r) on R^3.
inline double euclid3_green_closed_form(double s, double r) { return std::exp(-s * r) / (4.0 * std::numbers::pi * r); }

struct SemigroupCheck {
    double quadrature = 0.0;
    double exact = 0.0;
    double rel_error = 0.0;
};

/// int_{H^3} h_t(o,z) h_s(z,y) dz against h_{t+s}(o,y), d(o,y) = r. Geodesic
/// polar coordinates about o; c = cos(angle between z and y).
inline SemigroupCheck h3_chapman_kolmogorov(double t, double s, double r, double rel_tol = 1e-10)
{
    const QuadOptions options{rel_tol, 0.0, 2000};
    auto radial = [&](double rho) {
        auto angular = [&](double c) { return h3_heat(s, detail::law_of_cosines(rho, r, 1.0 - c)); };
        const double inner = integrate(angular, -1.0, 1.0, options).value;
        const double sh = std::sinh(rho);
        return 2.0 * std::numbers::pi * sh * sh * h3_heat(t, rho) * inner;
    };
    const double upper = r + 2.0 * (t + s) + std::sqrt(400.0 * (t + s)) + 10.0;
    SemigroupCheck check;
    check.quadrature = integrate(radial, 0.0, upper, options).value;
    check.exact = h3_heat(t + s, r);
    check.rel_error = std::abs(check.quadrature - check.exact) / check.exact;
    return check;
}

/// Same check on H^2 with McKean kernels; the angle runs over [0, pi] twice.
inline SemigroupCheck h2_chapman_kolmogorov(double t, double s, double r, const QuadBudget& budget = {1e-10, 2000})
{
    const QuadOptions options{1e-8, 0.0, 2000};
    auto radial = [&](double rho) {
        auto angular = [&](double theta) {
            return h2_heat_mckean(s, detail::law_of_cosines(rho, r, 1.0 - std::cos(theta)), budget).value;
        };
        const double inner = integrate(angular, 0.0, std::numbers::pi, options).value;
        return 2.0 * std::sinh(rho) * h2_heat_mckean(t, rho, budget).value * inner;
    };
    const double upper = r + 2.0 * (t + s) + std::sqrt(400.0 * (t + s)) + 10.0;
    SemigroupCheck check;
    check.quadrature = integrate(radial, 0.0, upper, options).value;
    check.exact = h2_heat_mckean(t + s, r, budget).value;
    check.rel_error = std::abs(check.quadrature - check.exact) / check.exact;
    return check;
}

/// int_0^inf h_t(rho) 4 pi sinh^2(rho) d rho.
inline double h3_heat_mass(double t)
{
    auto f = [&](double rho) {
        const double sh = std::sinh(rho);
        return 4.0 * std::numbers::pi * sh * sh * h3_heat(t, rho);
    };
    return integrate(f, 0.0, 2.0 * t + std::sqrt(4000.0 * t) + 10.0, QuadOptions{1e-12, 0.0, 2000}).value;
}

/// int_0^inf h_t(rho) 2 pi sinh(rho) d rho with the McKean kernel.
inline double h2_heat_mass(double t, const QuadBudget& budget = {1e-11, 2000})
{
    auto f = [&](double rho) { return 2.0 * std::numbers::pi * std::sinh(rho) * h2_heat_mckean(t, rho, budget).value; };
    return integrate(f, 0.0, t + std::sqrt(4000.0 * t) + 10.0, QuadOptions{1e-10, 0.0, 2000}).value;
}

} // namespace symkernel
