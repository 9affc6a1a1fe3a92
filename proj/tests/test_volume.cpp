#include <cmath>

#include <gtest/gtest.h>

#include "symkernel/rootdata.hpp"
#include "symkernel/volume.hpp"

using namespace symkernel;

namespace {

ChamberVector vec1(double x) { return ChamberVector{Eigen::VectorXd::Constant(1, x)}; }

} // namespace

TEST(Volume, DensityOnSL3)
{
    const auto rs = catalog_space("SL3R");
    EXPECT_NEAR(density_J(rs, ChamberVector{Eigen::Vector3d(1.0, 0.0, -1.0)}), 5.009049095358428, 1e-12);
    EXPECT_EQ(density_J(rs, ChamberVector{Eigen::Vector3d(1.0, 1.0, -2.0)}), 0.0); // wall
    EXPECT_THROW(density_J(rs, ChamberVector{Eigen::Vector3d(-1.0, 0.0, 1.0)}), DomainError);
}

TEST(Volume, DensityOnH3IsSinhSquared)
{
    const auto rs = catalog_space("H3R");
    for (const double r : {0.1, 1.0, 4.0})
        EXPECT_NEAR(density_J(rs, vec1(r)), std::sinh(r) * std::sinh(r), 1e-12 * std::sinh(r) * std::sinh(r));
}

// Each root contributes (1 - e^{-2a})(1 + a)/(2a), which lies in [1/2, 1).
TEST(Volume, DensityComparisonIsBounded)
{
    const auto rs = catalog_space("SL3R");
    const Eigen::VectorXd e1 = rs.dual_basis().col(0).normalized();
    const Eigen::VectorXd e2 = rs.dual_basis().col(1).normalized();
    for (int i = 1; i < 20; ++i) {
        for (const double length : {0.01, 0.5, 2.0, 6.0, 30.0}) {
            const double w = i / 20.0;
            const ChamberVector h{length * ((1.0 - w) * e1 + w * e2)};
            const double c = density_comparison(rs, h);
            EXPECT_GT(c, 0.125);
            EXPECT_LE(c, 1.0);
        }
    }
    EXPECT_THROW(density_comparison(rs, ChamberVector{Eigen::Vector3d(1.0, 1.0, -2.0)}), DomainError);
}

TEST(Volume, EnvelopeMonotoneInEpsilonAndVanishingAtZero)
{
    for (const char* label : {"H3R", "SL3R"}) {
        const auto rs = catalog_space(label);
        const ChamberVector x{interior_direction(rs).coords};
        double previous = volume_envelope(rs, x, 0.0).value;
        EXPECT_EQ(previous, 0.0);
        for (int i = 1; i < 100; ++i) {
            const double value = volume_envelope(rs, x, i / 100.0).value;
            EXPECT_GT(value, previous);
            previous = value;
        }
        EXPECT_LT(volume_envelope(rs, x, 1e-8).value, 1e-6);
    }
    EXPECT_THROW(volume_envelope(catalog_space("H3R"), vec1(1.0), 1.0), DomainError);
}

TEST(Volume, H3QuadratureMatchesAntiderivative)
{
    const auto rs = catalog_space("H3R");
    const auto deep = volume_quadrature(rs, vec1(2.0), 0.5, {100000, 7, 1});
    EXPECT_LE(std::abs(deep.estimate - 15.546333912594712), 3.0 * deep.std_error);
    EXPECT_GT(deep.std_error, 0.0);
    // at the origin only half the interval lies in the chamber
    const auto origin = volume_quadrature(rs, vec1(0.0), 0.5, {100000, 7, 1});
    EXPECT_LE(std::abs(origin.estimate - 0.043800298410950345), 3.0 * origin.std_error);
    EXPECT_NEAR(static_cast<double>(origin.in_chamber) / origin.samples, 0.5, 0.01);
}

TEST(Volume, QuadratureIsDeterministicAcrossThreadCounts)
{
    const auto rs = catalog_space("SL3R");
    const ChamberVector x{Eigen::Vector3d(1.0, 0.0, -1.0)};
    const auto a = volume_quadrature(rs, x, 0.4, {50000, 42, 1});
    const auto b = volume_quadrature(rs, x, 0.4, {50000, 42, 4});
    const auto c = volume_quadrature(rs, x, 0.4, {50000, 43, 1});
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_NE(a.estimate, c.estimate);
    EXPECT_EQ(a.samples, 50000);
}

TEST(Volume, QuadraturePreconditions)
{
    const auto rs = catalog_space("H3R");
    EXPECT_THROW(volume_quadrature(rs, vec1(1.0), 0.0), DomainError);
    EXPECT_THROW(volume_quadrature(rs, vec1(1.0), 0.5, {9999, 1, 1}), DomainError);
    EXPECT_THROW(volume_quadrature(rs, vec1(-1.0), 0.5), DomainError);
}

// Ratio to the envelope stays within a modest band when x+ slides along a ray.
TEST(Volume, RatioBoundedAlongInteriorRay)
{
    const auto rs = catalog_space("SL3R");
    const Eigen::VectorXd u = interior_direction(rs).coords.normalized();
    double lo = 1e300;
    double hi = 0.0;
    for (const double length : {0.0, 0.5, 1.5, 3.0, 6.0}) {
        const ChamberVector x{length * u};
        const double ratio = volume_quadrature(rs, x, 0.5, {20000, 3, 1}).estimate / volume_envelope(rs, x, 0.5).value;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    EXPECT_LT(hi / lo, 1e3);
}
