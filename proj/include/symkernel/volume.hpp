#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "symkernel/error.hpp"
#include "symkernel/random.hpp"
#include "symkernel/rootdata.hpp"

namespace symkernel {

/// Closed-form two-sided envelope for vol KB(x, epsilon), without its constants.
struct VolumeEnvelope {
    double value = 0.0;
    ChamberVector x_plus;
    double epsilon = 0.0;
};

struct VolumeEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t samples = 0;
    std::int64_t in_chamber = 0;
    std::string warning;
};

/// J(h) = prod sinh(alpha(h))^{m_alpha}, the polar-coordinate density with unit constant.
inline double density_J(const RestrictedRootSystem& rs, const ChamberVector& h)
{
    if (!rs.in_closed_chamber(h.coords))
        throw DomainError(rs.name() + ": density_J outside the closed chamber");
    double value = 1.0;
    for (const auto& root : rs.positive_roots())
        value *= std::pow(std::sinh(std::max(0.0, root.covector.dot(h.coords))), root.multiplicity);
    return value;
}

/// J(h) / (e^{2 rho(h)} prod (alpha(h)/(1+alpha(h)))^{m_alpha}); bounded above and
/// below on the open chamber.
inline double density_comparison(const RestrictedRootSystem& rs, const ChamberVector& h)
{
    if (!rs.in_closed_chamber(h.coords))
        throw DomainError(rs.name() + ": density comparison outside the closed chamber");
    double log_ratio = 0.0;
    for (const auto& root : rs.positive_roots()) {
        const double a = root.covector.dot(h.coords);
        if (!(a > 0.0))
            throw DomainError(rs.name() + ": density comparison is undefined on a wall");
        // log sinh(a) - a - log(a/(1+a)), written to survive large a
        const double log_sinh = a + std::log1p(-std::exp(-2.0 * a)) - std::numbers::ln2;
        log_ratio += root.multiplicity * (log_sinh - a - std::log(a) + std::log1p(a));
    }
    return std::exp(log_ratio);
}

inline VolumeEnvelope volume_envelope(const RestrictedRootSystem& rs, const ChamberVector& x_plus, double epsilon)
{
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw DomainError("volume_envelope requires 0 <= epsilon < 1");
    if (!rs.in_closed_chamber(x_plus.coords))
        throw DomainError(rs.name() + ": volume_envelope outside the closed chamber");
    double log_value = 2.0 * rs.rho().dot(x_plus.coords);
    double value = std::pow(epsilon, rs.rank());
    for (const auto& root : rs.positive_roots()) {
        const double a = std::max(0.0, root.covector.dot(x_plus.coords));
        value *= std::pow((epsilon + a) / (1.0 + a), root.multiplicity);
    }
    return VolumeEnvelope{value * std::exp(log_value), x_plus, epsilon};
}

struct VolumeSampling {
    std::int64_t budget = 100000;
    std::uint64_t seed = 1;
    int threads = 1;
};

namespace detail {

struct ShardSums {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t count = 0;
    std::int64_t in_chamber = 0;
};

inline constexpr std::int64_t kVolumeShardSize = 8192;

inline double unit_ball_volume(int dim)
{
    return std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

} // namespace detail

/// Monte Carlo estimate of the integral of J over B(x+, epsilon) intersected with the chamber.
///
/// Points are drawn uniformly in the rank-dimensional ball (rejection from the
/// bounding cube) and J is integrated against the indicator of the chamber.
/// Samples are split into fixed shards with independent seeded streams and the
/// shards are merged in order, so the result depends on the seed only, not on
/// the thread count.
inline VolumeEstimate volume_quadrature(const RestrictedRootSystem& rs, const ChamberVector& x_plus, double epsilon,
                                        const VolumeSampling& sampling = {})
{
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw DomainError("volume_quadrature requires 0 < epsilon < 1");
    if (sampling.budget < 10000)
        throw DomainError("volume_quadrature requires a budget of at least 1e4 samples");
    if (!rs.in_closed_chamber(x_plus.coords))
        throw DomainError(rs.name() + ": volume_quadrature outside the closed chamber");

    const int rank = rs.rank();
    const Eigen::MatrixXd& basis = rs.flat_basis();
    const auto roots = rs.positive_roots();
    const std::int64_t shard_count = (sampling.budget + detail::kVolumeShardSize - 1) / detail::kVolumeShardSize;
    std::vector<detail::ShardSums> shards(static_cast<std::size_t>(shard_count));

    auto run_shard = [&](std::int64_t shard) {
        Rng rng(mix_seed(sampling.seed, static_cast<std::uint64_t>(shard)));
        const std::int64_t begin = shard * detail::kVolumeShardSize;
        const std::int64_t wanted = std::min(detail::kVolumeShardSize, sampling.budget - begin);
        detail::ShardSums sums;
        Eigen::VectorXd u(rank);
        while (sums.count < wanted) {
            for (int i = 0; i < rank; ++i)
                u[i] = rng.uniform(-1.0, 1.0);
            if (u.squaredNorm() > 1.0)
                continue;
            ++sums.count;
            const Eigen::VectorXd h = x_plus.coords + epsilon * (basis * u);
            double value = 1.0;
            bool inside = true;
            for (const auto& root : roots) {
                const double a = root.covector.dot(h);
                if (a < 0.0) {
                    inside = false;
                    break;
                }
                value *= std::pow(std::sinh(a), root.multiplicity);
            }
            if (!inside)
                continue;
            ++sums.in_chamber;
            sums.sum += value;
            sums.sum_sq += value * value;
        }
        shards[static_cast<std::size_t>(shard)] = sums;
    };

    const int workers = std::max(1, std::min<int>(sampling.threads, static_cast<int>(shard_count)));
    if (workers == 1) {
        for (std::int64_t s = 0; s < shard_count; ++s)
            run_shard(s);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::int64_t s = w; s < shard_count; s += workers)
                    run_shard(s);
            });
        }
        for (auto& thread : pool)
            thread.join();
    }

    detail::ShardSums total;
    for (const auto& s : shards) {
        total.sum += s.sum;
        total.sum_sq += s.sum_sq;
        total.count += s.count;
        total.in_chamber += s.in_chamber;
    }
    const double ball = detail::unit_ball_volume(rank) * std::pow(epsilon, rank);
    const double n = static_cast<double>(total.count);
    const double mean = total.sum / n;
    const double variance = std::max(0.0, total.sum_sq / n - mean * mean);

    VolumeEstimate result;
    result.estimate = ball * mean;
    result.std_error = ball * std::sqrt(variance / std::max(1.0, n - 1.0));
    result.samples = total.count;
    result.in_chamber = total.in_chamber;
    if (total.in_chamber == 0)
        result.warning = "no samples fell inside the chamber; estimate reported as 0";
    return result;
}

} // namespace symkernel
