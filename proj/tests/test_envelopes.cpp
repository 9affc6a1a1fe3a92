#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "symkernel/envelopes.hpp"
#include "symkernel/rootdata.hpp"

using namespace symkernel;

namespace {

CartanCoordinate along(const RestrictedRootSystem& rs, const Eigen::VectorXd& u, double r)
{
    return CartanCoordinate{ChamberVector{r * u}, r};
}

CartanCoordinate radial(double r) { return CartanCoordinate{ChamberVector{Eigen::VectorXd::Constant(1, r)}, r}; }

} // namespace

TEST(Envelopes, GreenOnH3)
{
    const auto rs = catalog_space("H3R");
    const auto v = green_envelope(rs, radial(3.0), SpectralParameter(0.5));
    EXPECT_NEAR(v.value, std::exp(-4.5), 1e-15);
    EXPECT_EQ(v.branch, EnvelopeBranch::green);
    EXPECT_TRUE(v.within_hypothesis);
}

TEST(Envelopes, GreenDecreasesInRealPart)
{
    const auto rs = catalog_space("SL3R");
    const Eigen::VectorXd u = interior_direction(rs).coords.normalized();
    double previous = 1e300;
    for (const double s : {0.05, 0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double v = green_envelope(rs, along(rs, u, 4.0), SpectralParameter(s)).value;
        EXPECT_LT(v, previous);
        previous = v;
    }
}

TEST(Envelopes, GreenLogIsLinearAlongRays)
{
    const auto rs = catalog_space("SL3R");
    const Eigen::VectorXd u = Eigen::Vector3d(2.0, -1.0, -1.0).normalized();
    const double s = 0.7;
    const double slope = -(rs.rho().dot(u) + s);
    for (const double r : {2.0, 5.0, 11.0, 40.0}) {
        const double log_value = green_envelope(rs, along(rs, u, r), SpectralParameter(s)).log_value;
        EXPECT_NEAR(log_value, slope * r, 1e-12 * r);
    }
}

TEST(Envelopes, ComplexParameterUsesRealPart)
{
    const auto rs = catalog_space("H3R");
    const auto a = green_envelope(rs, radial(5.0), SpectralParameter(std::complex<double>(0.5, 3.0)));
    const auto b = green_envelope(rs, radial(5.0), SpectralParameter(0.5));
    EXPECT_EQ(a.value, b.value);
    EXPECT_THROW(SpectralParameter(std::complex<double>(0.0, 1.0)), DomainError);
    EXPECT_THROW(SpectralParameter(-0.1), DomainError);
}

TEST(Envelopes, HypothesisThreshold)
{
    const auto rs = catalog_space("H3R");
    EXPECT_THROW(green_envelope(rs, radial(1.5), SpectralParameter(1.0)), HypothesisError);
    EXPECT_THROW(heat_envelope(rs, radial(1.99), 1.0, OperatorSpec{1.0}), HypothesisError);
    const auto v = green_envelope(rs, radial(1.5), SpectralParameter(1.0), HypothesisPolicy::allow_outside);
    EXPECT_FALSE(v.within_hypothesis);
    EXPECT_NO_THROW(green_envelope(rs, radial(2.0), SpectralParameter(1.0)));
}

TEST(Envelopes, PhiBranches)
{
    const auto rs = catalog_space("H3R");
    // d < t
    const auto near = phi_t(rs, radial(3.0), 4.0);
    EXPECT_EQ(near.branch, EnvelopeBranch::near_diagonal);
    EXPECT_NEAR(near.value, 2.0 / 5.0, 1e-15);
    // d >= t on H3 (D + l = 4): d / t^{3/2} * (1 + d)/(t/d + d)
    const double d = 6.0;
    const double t = 2.0;
    const auto far = phi_t(rs, radial(d), t);
    EXPECT_EQ(far.branch, EnvelopeBranch::far_field);
    EXPECT_NEAR(far.value, d / std::pow(t, 1.5) * (1.0 + d) / (t / d + d), 1e-14);
    EXPECT_EQ(phi_t(rs, radial(5.0), 5.0).branch, EnvelopeBranch::far_field);
    EXPECT_THROW(phi_t(rs, radial(5.0), 0.0), DomainError);
}

// At d = t the branches differ by a bounded factor.
TEST(Envelopes, BranchesCrossWithinFactorFour)
{
    for (const char* label : {"H2R", "H3R", "SL3R"}) {
        const auto rs = catalog_space(label);
        const Eigen::VectorXd u = interior_direction(rs).coords.normalized();
        for (const double d : {2.0, 3.0, 5.0, 10.0, 20.0, 30.0}) {
            const auto c = along(rs, u, d);
            const double far = phi_t(rs, c, d).value;
            const double near = phi_t(rs, c, d * (1.0 + 1e-12)).value;
            const double factor = std::max(far / near, near / far);
            EXPECT_LE(factor, 4.0) << label << " d=" << d;
        }
    }
}

TEST(Envelopes, HeatEnvelopeClosedFormOnH3)
{
    const auto rs = catalog_space("H3R");
    const double r = 6.0;
    const double t = 2.0;
    const double phi = r / std::pow(t, 1.5) * (1.0 + r) / (t / r + r);
    const double expected = std::exp(-t - r - r * r / (4.0 * t)) * phi;
    EXPECT_NEAR(heat_envelope(rs, radial(r), t, OperatorSpec::scalar_laplacian(rs)).value, expected, 1e-15);
    EXPECT_DOUBLE_EQ(OperatorSpec::scalar_laplacian(catalog_space("SL3R")).alpha0, 2.0);
}

TEST(Envelopes, HeatLogSurvivesUnderflow)
{
    const auto rs = catalog_space("H3R");
    const auto v = heat_envelope(rs, radial(100.0), 0.1, OperatorSpec{1.0});
    EXPECT_EQ(v.value, 0.0);
    EXPECT_TRUE(std::isfinite(v.log_value));
    EXPECT_LT(v.log_value, -20000.0);
}

TEST(Envelopes, Erfcx)
{
    for (const double z : {0.0, 0.5, 1.0, 2.5, 2.999})
        EXPECT_NEAR(erfcx(z), std::exp(z * z) * std::erfc(z), 1e-14 * erfcx(z));
    // continued-fraction branch against exp*erfc where the latter is still accurate
    for (const double z : {3.0, 4.0, 6.0, 9.0})
        EXPECT_NEAR(erfcx(z), std::exp(z * z) * std::erfc(z), 1e-12 * erfcx(z));
    EXPECT_NEAR(erfcx(1e4) * 1e4 * std::sqrt(std::numbers::pi), 1.0, 1e-8);
}

TEST(Envelopes, GaussianTailAtAKnownPoint)
{
    const auto g = gaussian_tail_bound(4.0, 1.0);
    EXPECT_NEAR(g.lhs, 0.008291069380672667, 1e-15);
    EXPECT_LE(g.lhs, g.rhs);
}

TEST(Envelopes, GaussianTailConstantIsTheSupremum)
{
    double best = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double z = i * 5e-5;
        best = std::max(best, std::sqrt(std::numbers::pi) * erfcx(z) * (2.0 * z + 1.0));
    }
    EXPECT_LE(best, kGaussianTailConstant);
    EXPECT_GT(best, kGaussianTailConstant - 1e-9);
}

TEST(Envelopes, GaussianTailDomain)
{
    EXPECT_THROW(gaussian_tail_bound(-1.0, 1.0), DomainError);
    EXPECT_THROW(gaussian_tail_bound(1.0, 0.0), DomainError);
    const auto far = gaussian_tail_bound(5000.0, 0.1);
    EXPECT_LE(far.log_lhs, far.log_rhs);
}
