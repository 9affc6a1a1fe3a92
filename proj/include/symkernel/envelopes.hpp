#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "symkernel/error.hpp"
#include "symkernel/models.hpp"
#include "symkernel/rootdata.hpp"

namespace symkernel {

/// Scalar spectral data of the operator L: alpha0 is the bottom of its L^2 spectrum.
struct OperatorSpec {
    double alpha0 = 0.0;

    /// The scalar Laplacian, whose spectrum starts at |rho|^2.
    static OperatorSpec scalar_laplacian(const RestrictedRootSystem& rs) { return OperatorSpec{rs.rho().squaredNorm()}; }
};

/// The resolvent parameter s with Re(s) > 0.
class SpectralParameter {
public:
    SpectralParameter(std::complex<double> s) : s_(s)
    {
        if (!(s.real() > 0.0) || !std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw DomainError("spectral parameter needs Re(s) > 0");
    }
    SpectralParameter(double s) : SpectralParameter(std::complex<double>(s, 0.0)) {}

    std::complex<double> value() const { return s_; }
    double real() const { return s_.real(); }

private:
    std::complex<double> s_;
};

/// Whether an envelope may be evaluated below the distance threshold d(x,o) >= 2.
enum class HypothesisPolicy { enforce, allow_outside };

enum class EnvelopeBranch { green, near_diagonal, far_field };

inline const char* branch_name(EnvelopeBranch branch)
{
    switch (branch) {
    case EnvelopeBranch::green:
        return "green";
    case EnvelopeBranch::near_diagonal:
        return "d<t";
    case EnvelopeBranch::far_field:
        return "d>=t";
    }
    return "?";
}

/// An envelope value carried in log form as well, since the heat envelope
/// underflows long before its ratio to the kernel does.
struct EnvelopeValue {
    double value = 0.0;
    double log_value = 0.0;
    EnvelopeBranch branch = EnvelopeBranch::green;
    bool within_hypothesis = true;
};

inline constexpr double kEnvelopeMinDistance = 2.0;

namespace detail {

inline bool check_hypothesis(const CartanCoordinate& coord, HypothesisPolicy policy, const char* what)
{
    const bool inside = coord.distance >= kEnvelopeMinDistance;
    if (!inside && policy == HypothesisPolicy::enforce)
        throw HypothesisError(std::string(what) + " requires d(x,o) >= 2");
    return inside;
}

inline EnvelopeValue from_log(double log_value, EnvelopeBranch branch, bool inside)
{
    return EnvelopeValue{std::exp(log_value), log_value, branch, inside};
}

} // namespace detail

/// e^{-rho(x+) - Re(s) d(x,o)}: the Green-function bound with unit constant.
inline EnvelopeValue green_envelope(const RestrictedRootSystem& rs, const CartanCoordinate& coord,
                                    const SpectralParameter& s, HypothesisPolicy policy = HypothesisPolicy::enforce)
{
    const bool inside = detail::check_hypothesis(coord, policy, "green_envelope");
    const double log_value = -eval_rho(rs, coord.x_plus) - s.real() * coord.distance;
    return detail::from_log(log_value, EnvelopeBranch::green, inside);
}

/// The polynomial correction phi_t.
///
///   d <  t : sqrt(t) / (d + sqrt(t))
///   d >= t : d^{(D+l)/2-1} / t^{(D+l-1)/2} * prod ((1+alpha(x+)) / (t/d + alpha(x+)))^{m_alpha/2}
///
/// with D = dim X and l the rank. The two branches differ at d = t by the
/// factor sqrt(t)/(sqrt(t)+1); the far-field branch owns d = t.
inline EnvelopeValue phi_t(const RestrictedRootSystem& rs, const CartanCoordinate& coord, double t,
                           HypothesisPolicy policy = HypothesisPolicy::enforce)
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError("phi_t requires t > 0");
    const bool inside = detail::check_hypothesis(coord, policy, "phi_t");
    if (!rs.in_closed_chamber(coord.x_plus.coords))
        throw DomainError(rs.name() + ": phi_t outside the closed chamber");
    const double d = coord.distance;
    const double root_t = std::sqrt(t);
    if (d < t)
        return detail::from_log(std::log(root_t) - std::log(d + root_t), EnvelopeBranch::near_diagonal, inside);

    const double total = rs.dim() + rs.rank();
    double log_value = (0.5 * total - 1.0) * std::log(d) - 0.5 * (total - 1.0) * std::log(t);
    for (const auto& root : rs.positive_roots()) {
        const double a = std::max(0.0, root.covector.dot(coord.x_plus.coords));
        log_value += 0.5 * root.multiplicity * (std::log1p(a) - std::log(t / d + a));
    }
    return detail::from_log(log_value, EnvelopeBranch::far_field, inside);
}

/// e^{-alpha0 t - rho(x+) - d^2/(4t)} phi_t(x): the heat-kernel bound with unit constant.
inline EnvelopeValue heat_envelope(const RestrictedRootSystem& rs, const CartanCoordinate& coord, double t,
                                   const OperatorSpec& op, HypothesisPolicy policy = HypothesisPolicy::enforce)
{
    const EnvelopeValue phi = phi_t(rs, coord, t, policy);
    const double d = coord.distance;
    const double log_value = -op.alpha0 * t - eval_rho(rs, coord.x_plus) - d * d / (4.0 * t) + phi.log_value;
    return detail::from_log(log_value, phi.branch, phi.within_hypothesis);
}

/// Scaled complementary error function e^{z^2} erfc(z), for z >= 0.
inline double erfcx(double z)
{
    if (z < 0.0)
        return 2.0 * std::exp(z * z) - erfcx(-z);
    if (z < 3.0)
        return std::exp(z * z) * std::erfc(z);
    // Laplace continued fraction, evaluated bottom-up; 60 terms is far past
    // double precision for z >= 3.
    double tail = z;
    for (int k = 60; k >= 1; --k)
        tail = z + 0.5 * k / tail;
    return 1.0 / (std::sqrt(std::numbers::pi) * tail);
}

/// sup over z >= 0 of sqrt(pi) erfcx(z) (2z + 1), attained near z = 1.30861,
/// found by a bounded scalar maximization and rounded up in the last digit.
inline constexpr double kGaussianTailConstant = 2.282063436762;

struct GaussianTail {
    double lhs = 0.0;
    double rhs = 0.0;
    double log_lhs = 0.0;
    double log_rhs = 0.0;
};

/// lhs = int_A^inf e^{-xi^2/4t} d xi, rhs = C* sqrt(t)/(A/sqrt(t) + 1) e^{-A^2/4t}.
inline GaussianTail gaussian_tail_bound(double A, double t)
{
    if (!(A >= 0.0) || !(t > 0.0))
        throw DomainError("gaussian_tail_bound requires A >= 0 and t > 0");
    const double root_t = std::sqrt(t);
    const double z = A / (2.0 * root_t);
    const double gauss = A * A / (4.0 * t);
    GaussianTail tail;
    tail.log_lhs = std::log(std::sqrt(std::numbers::pi) * root_t * erfcx(z)) - gauss;
    tail.log_rhs = std::log(kGaussianTailConstant * root_t / (A / root_t + 1.0)) - gauss;
    tail.lhs = std::exp(tail.log_lhs);
    tail.rhs = std::exp(tail.log_rhs);
    return tail;
}

} // namespace symkernel
