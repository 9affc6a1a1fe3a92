#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "symkernel/error.hpp"

namespace symkernel {

/// A positive restricted root alpha together with m_alpha = dim n_alpha.
struct PositiveRoot {
    Eigen::VectorXd covector;
    int multiplicity = 1;
};

/// An element h of the closed Weyl chamber, in the ambient coordinates of its
/// root system (R for rank one, traceless diagonals of R^n for SLnR).
struct ChamberVector {
    Eigen::VectorXd coords;
};

/// Absolute tolerance on alpha(h) for closed-chamber membership.
inline constexpr double kChamberTolerance = 1e-12;

class RestrictedRootSystem;

namespace detail {
RestrictedRootSystem build_root_system(std::string name, int dim, std::vector<PositiveRoot> roots,
                                       std::vector<std::size_t> base);
}

/// Restricted root data of a symmetric space of noncompact type: the positive
/// roots with multiplicities, a base of simple roots, and the derived rho.
///
/// Covectors and chamber vectors share one ambient Euclidean space; the flat a
/// is the span of the roots. Instances are immutable and only come out of
/// catalog_space() (or detail::build_root_system, which runs the same checks).
class RestrictedRootSystem {
public:
    const std::string& name() const { return name_; }
    int rank() const { return static_cast<int>(base_.size()); }
    int dim() const { return dim_; }
    int ambient_dim() const { return static_cast<int>(rho_.size()); }

    std::span<const PositiveRoot> positive_roots() const { return roots_; }
    const std::vector<std::size_t>& base_roots() const { return base_; }
    const Eigen::VectorXd& rho() const { return rho_; }
    double rho_norm() const { return rho_.norm(); }

    int multiplicity_sum() const
    {
        int total = 0;
        for (const auto& root : roots_)
            total += root.multiplicity;
        return total;
    }

    /// Columns E_1..E_l: the basis of a dual to the base roots.
    const Eigen::MatrixXd& dual_basis() const { return dual_; }

    /// Orthonormal basis of a, ambient_dim x rank.
    const Eigen::MatrixXd& flat_basis() const { return flat_; }

    double root_value(std::size_t index, const Eigen::VectorXd& h) const { return roots_[index].covector.dot(h); }

    double min_root_value(const Eigen::VectorXd& h) const
    {
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& root : roots_)
            lowest = std::min(lowest, root.covector.dot(h));
        return lowest;
    }

    /// Distance from h to the flat a (nonzero only for ambient coordinates off a).
    double flat_residual(const Eigen::VectorXd& h) const { return (h - flat_ * (flat_.transpose() * h)).norm(); }

    bool in_closed_chamber(const Eigen::VectorXd& h) const
    {
        if (h.size() != ambient_dim())
            return false;
        if (flat_residual(h) > 1e-9 * std::max(1.0, h.norm()))
            return false;
        return min_root_value(h) >= -kChamberTolerance;
    }

    /// Wraps h after checking it lies in the closed chamber.
    ChamberVector chamber_vector(Eigen::VectorXd h) const
    {
        if (h.size() != ambient_dim())
            throw DomainError(name_ + ": chamber vector has " + std::to_string(h.size()) + " coordinates, expected " +
                              std::to_string(ambient_dim()));
        if (!in_closed_chamber(h))
            throw DomainError(name_ + ": vector lies outside the closed Weyl chamber");
        return ChamberVector{std::move(h)};
    }

    /// Re-runs every structural invariant; throws StructuralError on the first failure.
    void validate() const
    {
        const int ambient = ambient_dim();
        if (roots_.empty())
            throw StructuralError(name_ + ": no positive roots");
        for (const auto& root : roots_) {
            if (root.covector.size() != ambient)
                throw StructuralError(name_ + ": covector dimension mismatch");
            if (root.multiplicity <= 0)
                throw StructuralError(name_ + ": multiplicities must be positive");
        }
        Eigen::VectorXd half_sum = Eigen::VectorXd::Zero(ambient);
        for (const auto& root : roots_)
            half_sum += 0.5 * root.multiplicity * root.covector;
        if ((half_sum - rho_).norm() > 1e-12 * std::max(1.0, rho_.norm()))
            throw StructuralError(name_ + ": rho differs from half the weighted root sum");
        if (dim_ != rank() + multiplicity_sum())
            throw StructuralError(name_ + ": dim != rank + sum of multiplicities");

        // Every positive root must be a nonnegative integer combination of the base.
        const Eigen::MatrixXd base = base_matrix();
        for (const auto& root : roots_) {
            const Eigen::VectorXd coeffs = dual_.transpose() * root.covector;
            const Eigen::VectorXd rebuilt = base.transpose() * coeffs;
            if ((rebuilt - root.covector).norm() > 1e-9)
                throw StructuralError(name_ + ": a positive root is not in the span of the base roots");
            for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
                const double c = coeffs[i];
                if (c < -1e-9 || std::abs(c - std::round(c)) > 1e-9)
                    throw StructuralError(name_ + ": a positive root is not a nonnegative integer combination of the base");
            }
        }
    }

    Eigen::MatrixXd base_matrix() const
    {
        Eigen::MatrixXd base(rank(), ambient_dim());
        for (int i = 0; i < rank(); ++i)
            base.row(i) = roots_[base_[static_cast<std::size_t>(i)]].covector.transpose();
        return base;
    }

private:
    RestrictedRootSystem(std::string name, int dim, std::vector<PositiveRoot> roots, std::vector<std::size_t> base)
        : name_(std::move(name)), dim_(dim), roots_(std::move(roots)), base_(std::move(base))
    {
        if (roots_.empty() || base_.empty())
            throw StructuralError(name_ + ": empty root data");
        const auto ambient = roots_.front().covector.size();
        for (const std::size_t index : base_)
            if (index >= roots_.size())
                throw StructuralError(name_ + ": base root index out of range");

        rho_ = Eigen::VectorXd::Zero(ambient);
        for (const auto& root : roots_) {
            if (root.covector.size() != ambient)
                throw StructuralError(name_ + ": covector dimension mismatch");
            rho_ += 0.5 * root.multiplicity * root.covector;
        }

        const Eigen::MatrixXd base_rows = base_matrix();
        const Eigen::MatrixXd gram = base_rows * base_rows.transpose();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
        lu.setThreshold(1e-12);
        if (lu.rank() != rank())
            throw StructuralError(name_ + ": base roots are linearly dependent");
        dual_ = base_rows.transpose() * lu.inverse();

        // The dual basis spans a; orthonormalize it.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(dual_);
        flat_ = qr.householderQ() * Eigen::MatrixXd::Identity(ambient, rank());

        // The roots must not span more than the base does.
        Eigen::MatrixXd all(static_cast<Eigen::Index>(roots_.size()), ambient);
        for (std::size_t i = 0; i < roots_.size(); ++i)
            all.row(static_cast<Eigen::Index>(i)) = roots_[i].covector.transpose();
        Eigen::FullPivLU<Eigen::MatrixXd> span_lu(all);
        span_lu.setThreshold(1e-10);
        if (span_lu.rank() != rank())
            throw StructuralError(name_ + ": base does not span the root lattice");

        validate();
    }

    friend RestrictedRootSystem detail::build_root_system(std::string, int, std::vector<PositiveRoot>,
                                                          std::vector<std::size_t>);

    std::string name_;
    int dim_ = 0;
    std::vector<PositiveRoot> roots_;
    std::vector<std::size_t> base_;
    Eigen::VectorXd rho_;
    Eigen::MatrixXd dual_;
    Eigen::MatrixXd flat_;
};

namespace detail {

inline RestrictedRootSystem build_root_system(std::string name, int dim, std::vector<PositiveRoot> roots,
                                              std::vector<std::size_t> base)
{
    return RestrictedRootSystem(std::move(name), dim, std::move(roots), std::move(base));
}

inline bool parse_family(std::string_view label, std::string_view prefix, std::string_view suffix, int& n)
{
    if (label.size() <= prefix.size() + suffix.size() || !label.starts_with(prefix) || !label.ends_with(suffix))
        return false;
    const std::string_view digits = label.substr(prefix.size(), label.size() - prefix.size() - suffix.size());
    if (digits.empty() || digits.front() == '0')
        return false;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    return ec == std::errc() && end == digits.data() + digits.size();
}

inline Eigen::VectorXd scalar_vector(double value)
{
    Eigen::VectorXd v(1);
    v << value;
    return v;
}

} // namespace detail

/// Root data for "H{n}R", "H{n}C" (n >= 2) and "SL{n}R" (n >= 2).
///
/// Rank-one spaces are normalized so that the indivisible root has unit length
/// (real hyperbolic space has curvature -1). For SLnR, a is the traceless
/// diagonal matrices with the form sum h_i^2 and the roots are e_i - e_j.
inline RestrictedRootSystem catalog_space(std::string_view label)
{
    constexpr int kMaxN = 64;
    int n = 0;
    if (detail::parse_family(label, "SL", "R", n)) {
        if (n < 2 || n > kMaxN)
            throw CatalogError("SLnR requires 2 <= n <= 64: " + std::string(label));
        std::vector<PositiveRoot> roots;
        std::vector<std::size_t> base;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
                alpha[i] = 1.0;
                alpha[j] = -1.0;
                if (j == i + 1)
                    base.push_back(roots.size());
                roots.push_back({std::move(alpha), 1});
            }
        }
        const int dim = (n - 1) + n * (n - 1) / 2;
        return detail::build_root_system(std::string(label), dim, std::move(roots), std::move(base));
    }
    if (detail::parse_family(label, "H", "R", n)) {
        if (n < 2 || n > 4096)
            throw CatalogError("HnR requires n >= 2: " + std::string(label));
        return detail::build_root_system(std::string(label), n, {{detail::scalar_vector(1.0), n - 1}}, {0});
    }
    if (detail::parse_family(label, "H", "C", n)) {
        if (n < 2 || n > 4096)
            throw CatalogError("HnC requires n >= 2: " + std::string(label));
        return detail::build_root_system(std::string(label), 2 * n,
                                         {{detail::scalar_vector(1.0), 2 * (n - 1)}, {detail::scalar_vector(2.0), 1}},
                                         {0});
    }
    throw CatalogError("unknown space label: " + std::string(label));
}

/// rho(h) for h in the closed chamber.
inline double eval_rho(const RestrictedRootSystem& rs, const ChamberVector& h)
{
    if (!rs.in_closed_chamber(h.coords))
        throw DomainError(rs.name() + ": eval_rho outside the closed chamber");
    return rs.rho().dot(h.coords);
}

/// inf of rho(h)/|h| over the closed chamber. A linear functional restricted to
/// a polyhedral cone attains its minimum over the unit sphere on an extreme
/// ray, and the extreme rays are the dual basis vectors E_i.
inline double rho_min(const RestrictedRootSystem& rs)
{
    const Eigen::MatrixXd& rays = rs.dual_basis();
    if (rays.cols() == 0)
        throw StructuralError(rs.name() + ": chamber has no interior");
    double lowest = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < rays.cols(); ++i) {
        const double length = rays.col(i).norm();
        if (!(length > 0.0))
            throw StructuralError(rs.name() + ": degenerate chamber ray");
        lowest = std::min(lowest, rs.rho().dot(rays.col(i)) / length);
    }
    return lowest;
}

/// Indivisible positive roots: alpha with alpha/2 not a root.
inline std::vector<std::size_t> indivisible_roots(const RestrictedRootSystem& rs)
{
    const auto roots = rs.positive_roots();
    std::vector<std::size_t> result;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const bool divisible = std::any_of(roots.begin(), roots.end(), [&](const PositiveRoot& other) {
            return (2.0 * other.covector - roots[i].covector).norm() <= 1e-9;
        });
        if (!divisible)
            result.push_back(i);
    }
    return result;
}

/// beta = |indivisible positive roots| + (l - 1)/2.
inline double beta_exponent(const RestrictedRootSystem& rs)
{
    return static_cast<double>(indivisible_roots(rs).size()) + 0.5 * (rs.rank() - 1);
}

/// v = sum_i E_i, which satisfies alpha(v) >= 1 for every positive root.
inline ChamberVector interior_direction(const RestrictedRootSystem& rs)
{
    const Eigen::VectorXd v = rs.dual_basis().rowwise().sum();
    if (rs.min_root_value(v) < 1.0 - 1e-12)
        throw StructuralError(rs.name() + ": interior direction has alpha(v) < 1");
    return ChamberVector{v};
}

inline void to_json(nlohmann::ordered_json& out, const RestrictedRootSystem& rs)
{
    auto roots = nlohmann::ordered_json::array();
    for (const auto& root : rs.positive_roots()) {
        roots.push_back({{"covector", std::vector<double>(root.covector.data(), root.covector.data() + root.covector.size())},
                         {"multiplicity", root.multiplicity}});
    }
    out = nlohmann::ordered_json{
        {"name", rs.name()},
        {"rank", rs.rank()},
        {"dim", rs.dim()},
        {"positive_roots", std::move(roots)},
        {"base_roots", rs.base_roots()},
        {"rho", std::vector<double>(rs.rho().data(), rs.rho().data() + rs.rho().size())},
    };
}

} // namespace symkernel
