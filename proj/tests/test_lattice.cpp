#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "symkernel/lattice.hpp"

using namespace symkernel;

namespace {

LatticeSpec cyclic(double length)
{
    return LatticeSpec{Model::hyperboloid, 3, {lorentz_boost(3, 1, length).matrix}, "cyclic"};
}

LatticeSpec schottky(double length)
{
    return LatticeSpec{Model::hyperboloid,
                       3,
                       {lorentz_boost(3, 1, length).matrix, lorentz_boost(3, 2, length).matrix},
                       "schottky"};
}

std::vector<OrbitSample> enumerate(const LatticeSpec& spec, int depth, int threads = 1)
{
    return enumerate_orbit(spec, OrbitOptions{depth, 1e-7, 200000, threads}).samples;
}

// Synthetic SL3R orbit: 3^k points at distance k along a unit chamber direction u.
std::vector<OrbitSample> synthetic_sl3(const Eigen::VectorXd& u, int depth)
{
    const auto rs = catalog_space("SL3R");
    std::vector<OrbitSample> samples{{0, 0.0, 0.0}};
    for (int k = 1; k <= depth; ++k)
        for (int i = 0; i < static_cast<int>(std::pow(3, k)); ++i)
            samples.push_back({k, static_cast<double>(k), rs.rho().dot(u) * k});
    return samples;
}

} // namespace

TEST(Lattice, CyclicOrbit)
{
    const auto samples = enumerate(cyclic(1.0), 10);
    ASSERT_EQ(samples.size(), 21u);
    std::map<long, int> hits;
    for (const auto& s : samples)
        ++hits[std::lround(s.dist)];
    EXPECT_EQ(hits[0], 1);
    for (long d = 1; d <= 10; ++d)
        EXPECT_EQ(hits[d], 2) << d;
    for (const auto& s : samples)
        EXPECT_NEAR(s.dist, s.word_length, 1e-9);
}

TEST(Lattice, FreeGroupCountsReducedWords)
{
    EXPECT_EQ(enumerate(schottky(2.0), 3).size(), 53u);
    EXPECT_EQ(enumerate(schottky(6.0), 6).size(), 1u + 2u * (729u - 1u));
}

// Deep reduced words must not be merged even though their matrices agree
// entrywise to machine precision.
TEST(Lattice, DeepFreeWordsStayDistinct)
{
    const auto samples = enumerate(schottky(6.0), 9);
    EXPECT_EQ(samples.size(), 39365u);
}

TEST(Lattice, RelationsAreDetected)
{
    // Z^2 of commuting diagonal matrices: |i| + |j| <= n gives 2n^2 + 2n + 1 elements
    const Eigen::Vector3d a(1.0, 0.0, -1.0);
    const Eigen::Vector3d b(0.5, -1.0, 0.5);
    const LatticeSpec spec{Model::unimodular,
                           3,
                           {Eigen::MatrixXd(a.array().exp().matrix().asDiagonal()),
                            Eigen::MatrixXd(b.array().exp().matrix().asDiagonal())},
                           "z2"};
    for (int n = 1; n <= 5; ++n)
        EXPECT_EQ(enumerate(spec, n).size(), static_cast<std::size_t>(2 * n * n + 2 * n + 1)) << n;
}

TEST(Lattice, IdentityOnly)
{
    const auto samples = enumerate(LatticeSpec{Model::hyperboloid, 3, {}, "trivial"}, 4);
    ASSERT_EQ(samples.size(), 1u);
    EXPECT_EQ(samples[0].word_length, 0);
    EXPECT_EQ(samples[0].dist, 0.0);
    EXPECT_EQ(samples[0].rho_radial, 0.0);
    EXPECT_DOUBLE_EQ(modified_series(samples, 0.3), 1.0);
    EXPECT_DOUBLE_EQ(modified_series(samples, 7.0), 1.0);
    EXPECT_THROW(critical_exponents(samples), EstimationError);
}

TEST(Lattice, RhoRadialWithinBounds)
{
    const auto rank1 = enumerate(schottky(3.0), 5);
    for (const auto& s : rank1)
        EXPECT_NEAR(s.rho_radial, 0.5 * s.dist, 1e-9);

    const Eigen::Vector3d a(1.0, 0.0, -1.0);
    Eigen::Matrix3d u = Eigen::Matrix3d::Identity();
    u(0, 1) = 1.0;
    u(1, 2) = 2.0;
    const LatticeSpec spec{Model::unimodular, 3, {Eigen::MatrixXd(a.array().exp().matrix().asDiagonal()), u}, "mixed"};
    const double rho = catalog_space("SL3R").rho_norm();
    for (const auto& s : enumerate(spec, 4)) {
        EXPECT_GE(s.rho_radial, 0.0);
        EXPECT_LE(s.rho_radial, rho * s.dist + 1e-9);
    }
}

TEST(Lattice, DeeperEnumerationKeepsShallowSamples)
{
    auto key = [](std::vector<OrbitSample> v, int depth) {
        std::vector<std::pair<int, double>> out;
        for (const auto& s : v)
            if (s.word_length <= depth)
                out.emplace_back(s.word_length, s.dist);
        std::sort(out.begin(), out.end());
        return out;
    };
    for (int n = 1; n <= 5; ++n)
        EXPECT_EQ(key(enumerate(schottky(1.5), n), n), key(enumerate(schottky(1.5), n + 1), n)) << n;
}

TEST(Lattice, ThreadCountDoesNotChangeSamples)
{
    const auto a = enumerate(schottky(4.0), 7, 1);
    const auto b = enumerate(schottky(4.0), 7, 4);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].word_length, b[i].word_length);
        EXPECT_EQ(a[i].dist, b[i].dist);
        EXPECT_EQ(a[i].rho_radial, b[i].rho_radial);
    }
}

TEST(Lattice, TruncationCarriesPartialResults)
{
    try {
        enumerate_orbit(schottky(2.0), OrbitOptions{8, 1e-7, 100, 1});
        FAIL() << "expected truncation";
    } catch (const TruncationError& e) {
        EXPECT_EQ(e.partial_orbit.samples.size(), 101u);
        EXPECT_GT(e.partial_orbit.depth, 0);
    }
}

TEST(Lattice, TorsionIsReported)
{
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    rotation.bottomRightCorner<2, 2>() << 0.0, -1.0, 1.0, 0.0;
    const auto orbit = enumerate_orbit(LatticeSpec{Model::hyperboloid, 3, {rotation}, "elliptic"}, OrbitOptions{4});
    EXPECT_FALSE(orbit.warnings.empty());
    EXPECT_EQ(orbit.samples.size(), 4u); // the rotation has order 4
}

TEST(Lattice, InvalidSpecs)
{
    Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
    bad(0, 1) = 0.3;
    EXPECT_THROW(enumerate(LatticeSpec{Model::hyperboloid, 3, {bad}, "bad"}, 2), ModelError);
    EXPECT_THROW(enumerate(LatticeSpec{Model::hyperboloid, 4, {lorentz_boost(3, 1, 1.0).matrix}, "size"}, 2),
                 ModelError);
    EXPECT_THROW(enumerate(cyclic(1.0), 0), DomainError);
}

TEST(Lattice, ModifiedSeriesGeometricSum)
{
    const auto samples = enumerate(cyclic(1.0), 10);
    for (const double s : {3.0, 5.0, 8.0}) {
        const double q = std::exp(-0.5 - s);
        EXPECT_NEAR(modified_series(samples, s), 1.0 + 2.0 * q / (1.0 - q), 1e-12);
    }
}

TEST(Lattice, ModifiedSeriesMonotoneAndOverflow)
{
    const auto samples = enumerate(schottky(2.0), 5);
    double previous = 1e300;
    for (double s = -0.5; s <= 3.0; s += 0.25) {
        const double v = modified_series(samples, s);
        EXPECT_LT(v, previous);
        previous = v;
    }
    EXPECT_TRUE(std::isinf(modified_series(samples, -1000.0)));
    EXPECT_LT(poincare_series(samples, 1.0), poincare_series(samples, 0.5));
}

TEST(Lattice, CyclicExponents)
{
    const auto ce = critical_exponents(enumerate(cyclic(1.0), 10));
    EXPECT_NEAR(ce.delta, 0.0, 0.05);
    EXPECT_NEAR(ce.delta_tilde, ce.delta - 0.5, 1e-9);
    EXPECT_GE(ce.diagnostics.shells, 3);
}

TEST(Lattice, RankOneIdentityOnAnySampleSet)
{
    // lengths above the ping-pong threshold, so the group is discrete and free
    for (const double length : {2.5, 4.0, 6.0}) {
        const auto ce = critical_exponents(enumerate(schottky(length), 7));
        EXPECT_NEAR(ce.delta_tilde, ce.delta - 0.5, 1e-9) << length;
        const auto check = exponent_inequality_check(catalog_space("H2R"), ce.delta, ce.delta_tilde);
        EXPECT_TRUE(check.holds);
        EXPECT_NEAR(check.lower_margin, 0.0, 1e-9);
        EXPECT_NEAR(check.upper_margin, 0.0, 1e-9);
    }
}

TEST(Lattice, SchottkyExponentNearLog3OverL)
{
    const auto ce = critical_exponents(enumerate(schottky(6.0), 9));
    EXPECT_NEAR(ce.delta, std::log(3.0) / 6.0, 0.2 * std::log(3.0) / 6.0);
}

TEST(Lattice, FewerThanThreeShells)
{
    const std::vector<OrbitSample> samples{{0, 0.0, 0.0}, {1, 1.0, 0.5}, {1, 1.0, 0.5}, {2, 2.0, 1.0}};
    EXPECT_THROW(critical_exponents(samples), EstimationError);
    EXPECT_THROW(critical_exponents({}), EstimationError);
}

TEST(Lattice, SyntheticSL3AlongRho)
{
    const auto rs = catalog_space("SL3R");
    const Eigen::VectorXd u = rs.rho().normalized();
    const auto ce = critical_exponents(synthetic_sl3(u, 8));
    EXPECT_NEAR(ce.delta, std::log(3.0), 1e-9);
    EXPECT_NEAR(exponent_inequality_check(rs, ce.delta, ce.delta_tilde).upper_margin, 0.0, 1e-9);
}

TEST(Lattice, SyntheticSL3AlongMinimizingEdge)
{
    const auto rs = catalog_space("SL3R");
    Eigen::VectorXd best;
    double lowest = 1e300;
    for (Eigen::Index i = 0; i < rs.dual_basis().cols(); ++i) {
        const Eigen::VectorXd e = rs.dual_basis().col(i).normalized();
        if (rs.rho().dot(e) < lowest) {
            lowest = rs.rho().dot(e);
            best = e;
        }
    }
    const auto ce = critical_exponents(synthetic_sl3(best, 8));
    EXPECT_NEAR(exponent_inequality_check(rs, ce.delta, ce.delta_tilde).lower_margin, 0.0, 1e-9);
}

// delta~ <= delta - rho_min on arbitrary chamber-valued samples
TEST(Lattice, EmpiricalLowerInequality)
{
    const auto rs = catalog_space("SL3R");
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<OrbitSample> samples{{0, 0.0, 0.0}};
        for (int k = 1; k <= 8; ++k) {
            const int count = 1 + static_cast<int>(rng.uniform(0.0, 1.0) * std::pow(2.5, k));
            for (int i = 0; i < count; ++i) {
                const double w = rng.uniform();
                const Eigen::VectorXd h =
                    ((1.0 - w) * rs.dual_basis().col(0) + w * rs.dual_basis().col(1)).normalized();
                const double d = k + rng.uniform(-0.3, 0.3);
                samples.push_back({k, d, rs.rho().dot(h) * d});
            }
        }
        const auto ce = critical_exponents(samples);
        EXPECT_LE(ce.delta_tilde, ce.delta - rho_min(rs) + 1e-9);
        EXPECT_GE(ce.delta_tilde, ce.delta - rs.rho_norm() - 1e-9);
    }
}

TEST(Lattice, SpectralLowerBound)
{
    EXPECT_DOUBLE_EQ(lambda0_lower_bound(OperatorSpec{0.25}, -0.5), 0.25);
    EXPECT_NEAR(lambda0_lower_bound(OperatorSpec{0.25}, 0.3), 0.16, 1e-15);
    EXPECT_DOUBLE_EQ(lambda0_lower_bound(OperatorSpec{1.0}, 0.0), 1.0);
    EXPECT_NE(spectral_bound_statement(OperatorSpec{0.25}, -0.5).find("injectivity radius"), std::string::npos);
}
