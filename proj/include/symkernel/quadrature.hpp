#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <type_traits>
#include <utility>
#include <vector>

namespace symkernel {

struct QuadOptions {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_intervals = 4000;
};

template <class T>
struct QuadResult {
    T value{};
    double abs_error = 0.0;
    int evaluations = 0;
    int intervals = 0;
    bool converged = false;
};

namespace detail {

// 21-point Kronrod abscissae/weights and the embedded 10-point Gauss weights (QUADPACK dqk21).
inline constexpr double kXgk21[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452, 0.930157491355708226001207180059508,
    0.865063366688984510732096688423493, 0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784, 0.294392862701460198131126603103866,
    0.148874338981631210884826001129720, 0.0};
inline constexpr double kWgk21[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390, 0.054755896574351996031381300244580,
    0.075039674810919952767043140916190, 0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707, 0.142775938577060080797094273138717,
    0.147739104901338491374841515972068, 0.149445554002916905664936468389821};
inline constexpr double kWg10[5] = {0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
                                    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
                                    0.295524224714752870173892994651338};

template <class T>
struct Panel {
    double a;
    double b;
    T value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F, class T>
Panel<T> gauss_kronrod21(F& f, double a, double b)
{
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const T fc = f(centre);
    T kronrod = kWgk21[10] * fc;
    T gauss{};
    double abs_sum = kWgk21[10] * std::abs(fc);
    T fv1[10];
    T fv2[10];
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk21[j];
        fv1[j] = f(centre - dx);
        fv2[j] = f(centre + dx);
        const T pair = fv1[j] + fv2[j];
        kronrod += kWgk21[j] * pair;
        abs_sum += kWgk21[j] * (std::abs(fv1[j]) + std::abs(fv2[j]));
        if (j % 2 == 1)
            gauss += kWg10[j / 2] * pair;
    }
    const T mean = 0.5 * kronrod;
    double asc = kWgk21[10] * std::abs(fc - mean);
    for (int j = 0; j < 10; ++j)
        asc += kWgk21[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));

    const double width = std::abs(half);
    asc *= width;
    abs_sum *= width;
    double error = std::abs((kronrod - gauss) * half);
    if (asc != 0.0 && error != 0.0)
        error = asc * std::min(1.0, std::pow(200.0 * error / asc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (abs_sum > std::numeric_limits<double>::min() / (50.0 * eps))
        error = std::max(50.0 * eps * abs_sum, error);
    return Panel<T>{a, b, kronrod * half, error};
}

} // namespace detail

/// Globally adaptive 21-point Gauss-Kronrod quadrature on [a, b]: the panel
/// with the largest error estimate is bisected until the summed estimate
/// meets max(abs_tol, rel_tol * |value|) or max_intervals panels exist.
/// Works for real and complex integrands.
template <class F>
auto integrate(F&& f, double a, double b, const QuadOptions& options = {})
    -> QuadResult<std::decay_t<std::invoke_result_t<F&, double>>>
{
    using T = std::decay_t<std::invoke_result_t<F&, double>>;
    QuadResult<T> result;
    if (a == b) {
        result.converged = true;
        return result;
    }
    std::priority_queue<detail::Panel<T>> panels;
    panels.push(detail::gauss_kronrod21<F, T>(f, a, b));
    result.evaluations = 21;
    T total = panels.top().value;
    double error = panels.top().error;

    auto tolerance = [&] { return std::max(options.abs_tol, options.rel_tol * std::abs(total)); };
    while (error > tolerance() && static_cast<int>(panels.size()) < options.max_intervals) {
        const detail::Panel<T> worst = panels.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > std::min(worst.a, worst.b) && mid < std::max(worst.a, worst.b)))
            break; // panel cannot be split further in floating point
        panels.pop();
        const auto left = detail::gauss_kronrod21<F, T>(f, worst.a, mid);
        const auto right = detail::gauss_kronrod21<F, T>(f, mid, worst.b);
        result.evaluations += 42;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }

    // Re-sum to shed the drift of the running updates.
    T sum{};
    double err_sum = 0.0;
    result.intervals = static_cast<int>(panels.size());
    while (!panels.empty()) {
        sum += panels.top().value;
        err_sum += panels.top().error;
        panels.pop();
    }
    result.value = sum;
    result.abs_error = err_sum;
    result.converged = err_sum <= std::max(options.abs_tol, options.rel_tol * std::abs(sum));
    return result;
}

} // namespace symkernel
