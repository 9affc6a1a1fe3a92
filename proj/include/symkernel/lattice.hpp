#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "symkernel/envelopes.hpp"
#include "symkernel/error.hpp"
#include "symkernel/models.hpp"
#include "symkernel/rootdata.hpp"

namespace symkernel {

/// Generators of a discrete subgroup Gamma acting on one of the concrete models.
struct LatticeSpec {
    Model model = Model::hyperboloid;
    int size = 3;
    std::vector<Eigen::MatrixXd> generators;
    std::string name;
};

inline void validate(const LatticeSpec& spec)
{
    for (const auto& g : spec.generators) {
        if (g.rows() != spec.size || g.cols() != spec.size)
            throw ModelError(spec.name + ": generator has the wrong size");
        check_element(GroupElement{spec.model, g});
    }
}

/// The root system of the space the lattice acts on.
inline RestrictedRootSystem lattice_space(const LatticeSpec& spec) { return catalog_space(space_label(spec.model, spec.size)); }

/// One group element gamma: its word length, d(gamma o, o) and rho(gamma+).
struct OrbitSample {
    int word_length = 0;
    double dist = 0.0;
    double rho_radial = 0.0;
};

struct OrbitOptions {
    int max_word_length = 6;
    double dedup_tol = 1e-7;
    std::size_t max_samples = 200000;
    int threads = 1;
};

struct Orbit {
    std::vector<OrbitSample> samples;
    std::vector<std::string> warnings;
    int depth = 0;
};

/// Raised when enumeration exceeds max_samples; carries everything found so far.
class TruncationError : public Error {
public:
    TruncationError(const std::string& what, Orbit partial) : Error(what), partial_orbit(std::move(partial)) {}
    Orbit partial_orbit;
};

namespace detail {

inline constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

struct OrbitNode {
    Eigen::MatrixXd matrix;
    double dist = 0.0;
    double rho = 0.0;
    std::size_t parent = kNoParent;
    int last = -1;
};

inline double relative_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
}

inline constexpr double kOrbitRecheckTolerance = 1e-6;

} // namespace detail

/// Breadth-first word enumeration of the orbit Gamma o up to max_word_length.
///
/// Generators are augmented with their inverses, and immediate backtracking
/// (g followed by g^-1) is skipped. Candidates are bucketed by d(gamma o, o)
/// on a dedup_tol grid; within neighbouring buckets two words u p, u q with
/// common prefix u are the same element when p^-1 q is the identity to
/// relative 1e-6. Comparing the long products directly does not work: deep
/// in the orbit, distinct elements a bounded distance apart agree to machine
/// precision entrywise, both as matrices and as points of the model. In a
/// torsion-free group no element other than the identity fixes o; one that
/// does is reported as a warning.
inline Orbit enumerate_orbit(const LatticeSpec& spec, const OrbitOptions& options)
{
    if (options.max_word_length < 1)
        throw DomainError("enumerate_orbit requires max_word_length >= 1");
    if (!(options.dedup_tol > 0.0))
        throw DomainError("enumerate_orbit requires dedup_tol > 0");
    validate(spec);
    const RestrictedRootSystem rs = lattice_space(spec);

    // Generators plus inverses, with inverse_of[i] the index of g_i^-1.
    std::vector<Eigen::MatrixXd> gens;
    std::vector<int> inverse_of;
    for (const auto& g : spec.generators) {
        const Eigen::MatrixXd inv = inverse(GroupElement{spec.model, g}).matrix;
        const bool involution = detail::relative_gap(g, inv) <= detail::kOrbitRecheckTolerance;
        const int index = static_cast<int>(gens.size());
        gens.push_back(g);
        if (involution) {
            inverse_of.push_back(index);
        } else {
            gens.push_back(inv);
            inverse_of.push_back(index + 1);
            inverse_of.push_back(index);
        }
    }

    auto make_node = [&](Eigen::MatrixXd m, std::size_t parent, int last) {
        detail::OrbitNode node;
        const SpacePoint point = act(GroupElement{spec.model, m}, basepoint(spec.model, spec.size));
        const CartanCoordinate coord = cartan_plus(point);
        node.dist = coord.distance;
        node.rho = std::max(0.0, rs.rho().dot(coord.x_plus.coords));
        node.matrix = std::move(m);
        node.parent = parent;
        node.last = last;
        return node;
    };

    Orbit orbit;
    std::vector<detail::OrbitNode> nodes;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;
    bool warned_torsion = false;

    auto bucket_of = [&](double d) { return static_cast<std::int64_t>(std::floor(d / options.dedup_tol)); };
    auto word_of = [&](std::size_t index) {
        std::vector<int> word;
        for (; nodes[index].parent != detail::kNoParent; index = nodes[index].parent)
            word.push_back(nodes[index].last);
        std::reverse(word.begin(), word.end());
        return word;
    };
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(spec.size, spec.size);
    auto same_element = [&](const std::vector<int>& a, const std::vector<int>& b) {
        std::size_t common = 0;
        while (common < a.size() && common < b.size() && a[common] == b[common])
            ++common;
        Eigen::MatrixXd m = identity;
        for (std::size_t i = a.size(); i-- > common;)
            m = m * gens[static_cast<std::size_t>(inverse_of[static_cast<std::size_t>(a[i])])];
        for (std::size_t i = common; i < b.size(); ++i)
            m = m * gens[static_cast<std::size_t>(b[i])];
        return detail::relative_gap(m, identity) <= detail::kOrbitRecheckTolerance;
    };
    auto find_duplicate = [&](const detail::OrbitNode& node) {
        const std::int64_t key = bucket_of(node.dist);
        std::vector<int> word;
        for (std::int64_t k = key - 1; k <= key + 1; ++k) {
            const auto it = buckets.find(k);
            if (it == buckets.end())
                continue;
            if (word.empty()) {
                word = word_of(node.parent);
                word.push_back(node.last);
            }
            for (const std::size_t index : it->second)
                if (same_element(word_of(index), word))
                    return true;
        }
        return false;
    };
    auto insert = [&](detail::OrbitNode node, int word_length) {
        buckets[bucket_of(node.dist)].push_back(nodes.size());
        orbit.samples.push_back(OrbitSample{word_length, node.dist, node.rho});
        nodes.push_back(std::move(node));
    };

    insert(make_node(identity, detail::kNoParent, -1), 0);
    std::vector<std::size_t> frontier{0};

    for (int level = 1; level <= options.max_word_length && !frontier.empty() && !gens.empty(); ++level) {
        // Expand the frontier (in parallel), then merge serially in a fixed order.
        std::vector<std::pair<std::size_t, int>> jobs;
        for (const std::size_t parent : frontier)
            for (int g = 0; g < static_cast<int>(gens.size()); ++g)
                if (nodes[parent].last < 0 || g != inverse_of[static_cast<std::size_t>(nodes[parent].last)])
                    jobs.emplace_back(parent, g);
        std::vector<detail::OrbitNode> candidates(jobs.size());
        auto expand = [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j) {
                const auto [parent, g] = jobs[j];
                candidates[j] = make_node(nodes[parent].matrix * gens[static_cast<std::size_t>(g)], parent, g);
            }
        };
        const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.threads)), 1,
                                                            std::max<std::size_t>(1, jobs.size() / 64));
        if (workers <= 1) {
            expand(0, jobs.size());
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (jobs.size() + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back(expand, std::min(jobs.size(), w * chunk), std::min(jobs.size(), (w + 1) * chunk));
            for (auto& thread : pool)
                thread.join();
        }

        std::vector<std::size_t> next;
        for (auto& candidate : candidates) {
            if (find_duplicate(candidate))
                continue;
            if (candidate.dist < 1e-9 && !warned_torsion) {
                orbit.warnings.push_back("a non-identity element fixes the basepoint (torsion?)");
                warned_torsion = true;
            }
            next.push_back(nodes.size());
            insert(std::move(candidate), level);
            if (orbit.samples.size() > options.max_samples) {
                orbit.depth = level;
                throw TruncationError("enumerate_orbit: sample cap of " + std::to_string(options.max_samples) + " exceeded",
                                      std::move(orbit));
            }
        }
        frontier = std::move(next);
        orbit.depth = level;
    }
    return orbit;
}

/// Partial sum of the Poincare series sum e^{-s d(gamma o, o)}.
inline double poincare_series(const std::vector<OrbitSample>& samples, double s)
{
    if (samples.empty())
        throw DomainError("poincare_series needs samples");
    double sum = 0.0;
    for (const auto& sample : samples)
        sum += std::exp(-s * sample.dist);
    return sum;
}

/// Partial sum of the modified series sum e^{-rho(gamma+) - s d(gamma o, o)};
/// +infinity on overflow.
inline double modified_series(const std::vector<OrbitSample>& samples, double s)
{
    if (samples.empty())
        throw DomainError("modified_series needs samples");
    double sum = 0.0;
    for (const auto& sample : samples)
        sum += std::exp(-sample.rho_radial - s * sample.dist);
    return std::isfinite(sum) ? sum : std::numeric_limits<double>::infinity();
}

struct ExponentDiagnostics {
    double complete_radius = 0.0;
    double shell_width = 0.0;
    int shells = 0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double counting_slope = 0.0;     // LS slope of log N(R) against R
    double residual_rms = 0.0;       // shell regression at s = delta
    double modified_residual_rms = 0.0;
    double series_abscissa = std::numeric_limits<double>::quiet_NaN();
    double modified_series_abscissa = std::numeric_limits<double>::quiet_NaN();
};

struct CriticalExponents {
    double delta = 0.0;
    double delta_tilde = 0.0;
    ExponentDiagnostics diagnostics;
};

namespace detail {

struct Shell {
    double centre = 0.0;
    std::vector<std::size_t> members;
};

struct LineFit {
    double slope = 0.0;
    double rms = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - my - fit.slope * (x[i] - mx);
        ss += r * r;
    }
    fit.rms = std::sqrt(ss / n);
    return fit;
}

inline double log_sum_exp(const std::vector<double>& values)
{
    const double top = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(top))
        return top;
    double sum = 0.0;
    for (const double v : values)
        sum += std::exp(v - top);
    return top + std::log(sum);
}

/// Root of a decreasing function by bracket expansion and bisection.
template <class F>
double decreasing_root(F&& f)
{
    double lo = -1.0;
    double hi = 1.0;
    for (int i = 0; i < 60 && f(lo) <= 0.0; ++i)
        lo = lo * 2.0 - 1.0;
    for (int i = 0; i < 60 && f(hi) >= 0.0; ++i)
        hi = hi * 2.0 + 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Growth-rate estimates of the orbit: delta for sum e^{-s d} and delta~ for
/// the modified series with weights e^{-rho(gamma+)}.
///
/// The orbit is trusted out to the completeness radius R_c, the smallest
/// distance among elements first reached at the deepest word level. Positive
/// distances up to R_c are cut into shells of width
/// max(largest gap between distances, R_c/20), and only shells lying wholly
/// inside R_c are used. For weights w the estimate is the s at which the
/// least-squares slope of log sum_{shell} w e^{-s d} against the shell centre
/// vanishes. Tilting the weights by e^{-c d} shifts that root by exactly -c,
/// which in rank one gives delta~ = delta - |rho| sample by sample.
inline CriticalExponents critical_exponents(const std::vector<OrbitSample>& samples)
{
    if (samples.empty())
        throw EstimationError("critical_exponents needs samples");
    int deepest = 0;
    for (const auto& s : samples)
        deepest = std::max(deepest, s.word_length);
    double complete = std::numeric_limits<double>::infinity();
    for (const auto& s : samples)
        if (s.word_length == deepest)
            complete = std::min(complete, s.dist);
    if (deepest == 0) {
        complete = 0.0;
        for (const auto& s : samples)
            complete = std::max(complete, s.dist);
    }

    constexpr double kPositive = 1e-9;
    std::vector<double> distances;
    for (const auto& s : samples)
        if (s.dist > kPositive && s.dist <= complete + kPositive)
            distances.push_back(s.dist);
    std::sort(distances.begin(), distances.end());
    if (distances.size() < 3)
        throw EstimationError("critical_exponents: fewer than 3 distinct distance shells");

    double largest_gap = 0.0;
    for (std::size_t i = 1; i < distances.size(); ++i)
        largest_gap = std::max(largest_gap, distances[i] - distances[i - 1]);
    const double width = std::max(largest_gap, complete / 20.0);
    const double first = distances.front();

    std::vector<detail::Shell> shells;
    for (int k = 0;; ++k) {
        const double centre = first + k * width;
        if (centre + 0.5 * width > complete + kPositive)
            break;
        shells.push_back({centre, {}});
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = samples[i].dist;
        if (!(d > kPositive))
            continue;
        const double position = std::floor((d - first) / width + 0.5);
        if (position < 0.0 || position >= static_cast<double>(shells.size()))
            continue;
        shells[static_cast<std::size_t>(position)].members.push_back(i);
    }
    std::erase_if(shells, [](const detail::Shell& shell) { return shell.members.empty(); });
    if (shells.size() < 3)
        throw EstimationError("critical_exponents: fewer than 3 distinct distance shells");

    std::vector<double> centres;
    for (const auto& shell : shells)
        centres.push_back(shell.centre);

    auto shell_fit = [&](double s, bool modified) {
        std::vector<double> logs;
        std::vector<double> terms;
        for (const auto& shell : shells) {
            terms.clear();
            for (const std::size_t i : shell.members)
                terms.push_back((modified ? -samples[i].rho_radial : 0.0) - s * samples[i].dist);
            logs.push_back(detail::log_sum_exp(terms));
        }
        return detail::least_squares(centres, logs);
    };

    CriticalExponents out;
    out.delta = detail::decreasing_root([&](double s) { return shell_fit(s, false).slope; });
    out.delta_tilde = detail::decreasing_root([&](double s) { return shell_fit(s, true).slope; });

    ExponentDiagnostics& diag = out.diagnostics;
    diag.complete_radius = complete;
    diag.shell_width = width;
    diag.shells = static_cast<int>(shells.size());
    diag.window_lo = shells.front().centre - 0.5 * width;
    diag.window_hi = shells.back().centre + 0.5 * width;
    diag.residual_rms = shell_fit(out.delta, false).rms;
    diag.modified_residual_rms = shell_fit(out.delta_tilde, true).rms;

    // Cumulative counting N(R) = #{0 < d <= R} at each shell's outer edge.
    {
        std::vector<double> radii;
        std::vector<double> logs;
        for (const auto& shell : shells) {
            const double edge = shell.centre + 0.5 * width;
            const auto count = std::upper_bound(distances.begin(), distances.end(), edge) - distances.begin();
            radii.push_back(edge);
            logs.push_back(std::log(static_cast<double>(count)));
        }
        diag.counting_slope = detail::least_squares(radii, logs).slope;
    }

    // Partial-sum diagnostic: s at which the outer half of the ball carries as
    // much of the series as the inner half.
    auto half_ratio = [&](double s, bool modified) {
        std::vector<double> inner;
        std::vector<double> outer;
        for (const auto& sample : samples) {
            if (!(sample.dist > kPositive) || sample.dist > complete + kPositive)
                continue;
            const double term = (modified ? -sample.rho_radial : 0.0) - s * sample.dist;
            (sample.dist <= 0.5 * complete ? inner : outer).push_back(term);
        }
        if (inner.empty() || outer.empty())
            return std::numeric_limits<double>::quiet_NaN();
        return detail::log_sum_exp(outer) - detail::log_sum_exp(inner);
    };
    if (std::isfinite(half_ratio(0.0, false))) {
        diag.series_abscissa = detail::decreasing_root([&](double s) { return half_ratio(s, false); });
        diag.modified_series_abscissa = detail::decreasing_root([&](double s) { return half_ratio(s, true); });
    }
    return out;
}

/// Lower bound alpha0 - max(delta~, 0)^2 on the bottom of the spectrum of L on Gamma\X.
inline double lambda0_lower_bound(const OperatorSpec& op, double delta_tilde)
{
    const double positive = std::max(delta_tilde, 0.0);
    return op.alpha0 - positive * positive;
}

/// Human-readable statement of which case of the spectral bound applies.
inline std::string spectral_bound_statement(const OperatorSpec& op, double delta_tilde)
{
    const double bound = lambda0_lower_bound(op, delta_tilde);
    if (delta_tilde > 0.0)
        return "delta~ > 0: bottom of spectrum >= alpha0 - delta~^2 = " + std::to_string(bound);
    return "delta~ <= 0: bottom of spectrum >= alpha0 = " + std::to_string(bound) +
           "; if in addition the injectivity radius of Gamma\\X is unbounded, the bottom equals alpha0"
           " (hypothesis not verified)";
}

struct InequalityCheck {
    bool holds = false;
    double lower_margin = 0.0; // delta - (rho_min + delta~)
    double upper_margin = 0.0; // (|rho| + delta~) - delta
};

/// rho_min + delta~ <= delta <= |rho| + delta~, with margins.
inline InequalityCheck exponent_inequality_check(const RestrictedRootSystem& rs, double delta, double delta_tilde,
                                                 double tolerance = 1e-9)
{
    InequalityCheck check;
    check.lower_margin = delta - (rho_min(rs) + delta_tilde);
    check.upper_margin = rs.rho_norm() + delta_tilde - delta;
    check.holds = check.lower_margin >= -tolerance && check.upper_margin >= -tolerance;
    return check;
}

} // namespace symkernel
