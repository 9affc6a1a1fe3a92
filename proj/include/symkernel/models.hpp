#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

#include "symkernel/error.hpp"
#include "symkernel/random.hpp"
#include "symkernel/rootdata.hpp"

namespace symkernel {

/// Concrete models: the upper sheet of the hyperboloid x0^2 - |x|^2 = 1 in
/// R^{n,1} for HnR, and cosets gK of SL(n,R)/SO(n) for SLnR.
enum class Model { hyperboloid, unimodular };

inline std::string model_name(Model model)
{
    return model == Model::hyperboloid ? "hyperboloid" : "unimodular-coset";
}

inline Model parse_model(std::string_view label)
{
    if (label == "hyperboloid")
        return Model::hyperboloid;
    if (label == "unimodular-coset" || label == "unimodular")
        return Model::unimodular;
    throw ModelError("unknown model: " + std::string(label));
}

/// Catalog label for a model whose matrices (or vectors) have the given size.
inline std::string space_label(Model model, int size)
{
    return model == Model::hyperboloid ? "H" + std::to_string(size - 1) + "R" : "SL" + std::to_string(size) + "R";
}

/// A point of X. Hyperboloid points are (n+1) x 1 column vectors; coset points
/// store a representative g of gK.
struct SpacePoint {
    Model model = Model::hyperboloid;
    Eigen::MatrixXd data;

    int size() const { return static_cast<int>(data.rows()); }
};

/// An isometry: a Lorentz-orthochronous (n+1) x (n+1) matrix or an element of SL(n,R).
struct GroupElement {
    Model model = Model::hyperboloid;
    Eigen::MatrixXd matrix;

    int size() const { return static_cast<int>(matrix.rows()); }
};

/// Radial coordinate x+ in the closed chamber with d(x,o) = |x+|.
struct CartanCoordinate {
    ChamberVector x_plus;
    double distance = 0.0;
};

inline constexpr double kModelTolerance = 1e-9;
inline constexpr double kDistanceFloor = 1e-12;

inline double minkowski(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    return x[0] * y[0] - x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
}

inline Eigen::MatrixXd minkowski_form(int size)
{
    Eigen::MatrixXd j = -Eigen::MatrixXd::Identity(size, size);
    j(0, 0) = 1.0;
    return j;
}

inline void check_point(const SpacePoint& p)
{
    if (p.data.size() == 0)
        throw ModelError("empty point");
    if (p.model == Model::hyperboloid) {
        if (p.data.cols() != 1 || p.data.rows() < 3)
            throw ModelError("hyperboloid points are column vectors of length >= 3");
        const Eigen::VectorXd x = p.data.col(0);
        if (!x.allFinite())
            throw ModelError("non-finite hyperboloid point");
        if (x[0] < 1.0 - kModelTolerance)
            throw ModelError("hyperboloid point is not on the upper sheet (x0 < 1)");
        const double form = minkowski(x, x);
        if (std::abs(form - 1.0) > kModelTolerance * std::max(1.0, x[0] * x[0]))
            throw ModelError("hyperboloid point violates <x,x> = 1");
        return;
    }
    if (p.data.rows() != p.data.cols() || p.data.rows() < 2)
        throw ModelError("coset representatives must be square of size >= 2");
    if (!p.data.allFinite())
        throw ModelError("non-finite coset representative");
    const double det = p.data.determinant();
    const double hadamard = p.data.colwise().norm().prod();
    if (std::abs(det - 1.0) > kModelTolerance * std::max(1.0, hadamard))
        throw ModelError("coset representative is not unimodular (det != 1)");
}

inline SpacePoint hyperboloid_point(Eigen::VectorXd x)
{
    SpacePoint p{Model::hyperboloid, std::move(x)};
    check_point(p);
    return p;
}

inline SpacePoint unimodular_point(Eigen::MatrixXd g)
{
    SpacePoint p{Model::unimodular, std::move(g)};
    check_point(p);
    return p;
}

/// The basepoint o: (1,0,...,0) on the hyperboloid, the identity coset otherwise.
inline SpacePoint basepoint(Model model, int size)
{
    if (model == Model::hyperboloid) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(size);
        x[0] = 1.0;
        return SpacePoint{model, x};
    }
    return SpacePoint{model, Eigen::MatrixXd::Identity(size, size)};
}

inline void check_element(const GroupElement& g)
{
    const Eigen::MatrixXd& m = g.matrix;
    if (m.rows() != m.cols() || m.rows() < 2 || !m.allFinite())
        throw ModelError("group elements must be finite square matrices");
    const double scale = std::max(1.0, m.squaredNorm());
    if (g.model == Model::hyperboloid) {
        const Eigen::MatrixXd j = minkowski_form(static_cast<int>(m.rows()));
        if ((m.transpose() * j * m - j).cwiseAbs().maxCoeff() > kModelTolerance * scale)
            throw ModelError("matrix does not preserve the Minkowski form");
        if (m(0, 0) < 1.0 - kModelTolerance)
            throw ModelError("Lorentz matrix is not orthochronous");
        return;
    }
    const double hadamard = m.colwise().norm().prod();
    if (std::abs(m.determinant() - 1.0) > kModelTolerance * std::max(1.0, hadamard))
        throw ModelError("matrix is not unimodular");
}

inline SpacePoint act(const GroupElement& g, const SpacePoint& x)
{
    if (g.model != x.model || g.size() != x.size())
        throw ModelError("group element and point belong to different models");
    return SpacePoint{x.model, g.matrix * x.data};
}

inline GroupElement compose(const GroupElement& a, const GroupElement& b)
{
    if (a.model != b.model || a.size() != b.size())
        throw ModelError("cannot compose elements of different models");
    return GroupElement{a.model, a.matrix * b.matrix};
}

/// Inverse; exact J M^T J for Lorentz matrices.
inline GroupElement inverse(const GroupElement& g)
{
    if (g.model == Model::hyperboloid) {
        const Eigen::MatrixXd j = minkowski_form(g.size());
        return GroupElement{g.model, j * g.matrix.transpose() * j};
    }
    return GroupElement{g.model, g.matrix.inverse()};
}

/// Logarithms of the singular values of g, sorted descending and shifted to
/// sum zero. The top half comes from a Jacobi SVD of g, the bottom half except
/// the last from the inverse, and the last from the sum, so each entry keeps
/// the accuracy its end of the spectrum allows. (Eigenvalues of g^T g would
/// square the condition number and wipe out the middle of the spectrum.)
/// g is taken to be unimodular: a computed determinant is useless here since
/// its relative error grows with the condition number.
inline Eigen::VectorXd log_singular_values(const Eigen::MatrixXd& g)
{
    const Eigen::Index n = g.rows();
    if (g.cols() != n)
        throw ModelError("log_singular_values needs a square matrix");
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(g);
    const double det = lu.determinant();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det))
        throw ModelError("matrix is not invertible");

    auto descending_logs = [](const Eigen::MatrixXd& m) {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        Eigen::VectorXd logs = svd.singularValues();
        for (Eigen::Index i = 0; i < logs.size(); ++i)
            logs[i] = std::log(std::max(logs[i], 1e-300));
        return logs;
    };

    Eigen::VectorXd result = descending_logs(g);
    const Eigen::Index top = (n + 1) / 2;
    if (n > 2) {
        const Eigen::VectorXd from_inverse = descending_logs(lu.inverse());
        for (Eigen::Index i = top; i < n - 1; ++i)
            result[i] = -from_inverse[n - 1 - i];
    }
    if (n > 1)
        result[n - 1] = -result.head(n - 1).sum();
    std::sort(result.data(), result.data() + n, std::greater<>());
    return result;
}

inline double floor_distance(double d) { return d < kDistanceFloor ? 0.0 : d; }

inline CartanCoordinate cartan_plus_sl(const SpacePoint& g)
{
    if (g.model != Model::unimodular)
        throw ModelError("cartan_plus_sl expects a unimodular coset");
    check_point(g);
    Eigen::VectorXd logs = log_singular_values(g.data);
    // Ties on a wall are kept; clamp roundoff so alpha(x+) >= 0 exactly.
    for (Eigen::Index i = 1; i < logs.size(); ++i)
        logs[i] = std::min(logs[i], logs[i - 1]);
    const double d = floor_distance(logs.norm());
    return CartanCoordinate{ChamberVector{std::move(logs)}, d};
}

inline CartanCoordinate cartan_plus_hyperbolic(const SpacePoint& x)
{
    if (x.model != Model::hyperboloid)
        throw ModelError("cartan_plus_hyperbolic expects a hyperboloid point");
    check_point(x);
    const Eigen::VectorXd v = x.data.col(0);
    const double d = floor_distance(std::asinh(v.tail(v.size() - 1).norm()));
    return CartanCoordinate{ChamberVector{detail::scalar_vector(d)}, d};
}

inline CartanCoordinate cartan_plus(const SpacePoint& x)
{
    return x.model == Model::hyperboloid ? cartan_plus_hyperbolic(x) : cartan_plus_sl(x);
}

inline double distance(const SpacePoint& x, const SpacePoint& y)
{
    if (x.model != y.model || x.size() != y.size())
        throw ModelError("distance between points of different models");
    if (x.model == Model::hyperboloid) {
        const Eigen::VectorXd a = x.data.col(0);
        const Eigen::VectorXd b = y.data.col(0);
        const double pairing = minkowski(a, b);
        if (pairing > 2.0)
            return std::acosh(pairing);
        // Near the diagonal the chord form avoids acosh cancellation.
        const Eigen::VectorXd diff = a - b;
        const double chord2 = std::max(0.0, -minkowski(diff, diff));
        return floor_distance(2.0 * std::asinh(0.5 * std::sqrt(chord2)));
    }
    const Eigen::MatrixXd relative = x.data.partialPivLu().solve(y.data);
    return floor_distance(log_singular_values(relative).norm());
}

/// Haar-random element of SO(n).
inline Eigen::MatrixXd random_rotation(int n, Rng& rng)
{
    Eigen::MatrixXd gauss(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            gauss(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
        if (r(i, i) < 0.0)
            q.col(i) *= -1.0;
    if (q.determinant() < 0.0)
        q.col(0) *= -1.0;
    return q;
}

/// Boost with the given rapidity in the (x0, x_axis) plane.
inline GroupElement lorentz_boost(int size, int axis, double rapidity)
{
    if (axis < 1 || axis >= size)
        throw ModelError("boost axis must be a spatial coordinate");
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(size, size);
    m(0, 0) = m(axis, axis) = std::cosh(rapidity);
    m(0, axis) = m(axis, 0) = std::sinh(rapidity);
    return GroupElement{Model::hyperboloid, m};
}

/// An element of the stabilizer K of the basepoint.
inline GroupElement random_stabilizer(Model model, int size, Rng& rng)
{
    if (model == Model::hyperboloid) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(size, size);
        m.bottomRightCorner(size - 1, size - 1) = random_rotation(size - 1, rng);
        return GroupElement{model, m};
    }
    return GroupElement{model, random_rotation(size, rng)};
}

/// Deterministic pseudo-random isometry k1 a k2 with a bounded Cartan part
/// (boost rapidity or log-diagonal entries at most max_radial).
inline GroupElement random_isometry(Model model, int size, Rng& rng, double max_radial = 2.0)
{
    const GroupElement k1 = random_stabilizer(model, size, rng);
    GroupElement a;
    if (model == Model::hyperboloid) {
        a = lorentz_boost(size, 1, rng.uniform(0.0, max_radial));
    } else {
        Eigen::VectorXd logs(size);
        for (int i = 0; i < size; ++i)
            logs[i] = rng.uniform(-1.0, 1.0);
        logs.array() -= logs.mean();
        const double scale = logs.cwiseAbs().maxCoeff();
        if (scale > 0.0)
            logs *= max_radial * rng.uniform() / scale;
        a = GroupElement{model, logs.array().exp().matrix().asDiagonal()};
    }
    const GroupElement k2 = random_stabilizer(model, size, rng);
    return compose(compose(k1, a), k2);
}

inline GroupElement random_isometry(Model model, int size, std::uint64_t seed, double max_radial = 2.0)
{
    Rng rng(seed);
    return random_isometry(model, size, rng, max_radial);
}

} // namespace symkernel
