#pragma once

// Globally adaptive Gauss-Kronrod (G7/K15) quadrature for small vector-valued
// integrands. All components share the abscissae, so posterior moments of
// order 0, 1 and 2 cost one integrand sweep.

#include "psamp/core.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <queue>
#include <sstream>
#include <span>
#include <vector>

namespace psamp::quadrature {

template <std::size_t N>
using Values = std::array<double, N>;

template <std::size_t N>
struct Result {
    Values<N> value{};
    Values<N> error{};
    int intervals = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the nodes kXgk[1], kXgk[3], kXgk[5], kXgk[7].
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t N>
struct Segment {
    double a, b;
    Values<N> value, error;
    double priority;
    bool operator<(const Segment& o) const { return priority < o.priority; }
};

template <std::size_t N, class F>
Segment<N> gk15(F& f, double a, double b)
{
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    Values<N> kron{}, gauss{};
    auto accumulate = [&](const Values<N>& fx, double wk, double wg) {
        for (std::size_t k = 0; k < N; ++k) {
            kron[k] += wk * fx[k];
            gauss[k] += wg * fx[k];
        }
    };
    accumulate(f(mid), kWgk[7], kWg[3]);
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double wg = (j % 2 == 1) ? kWg[j / 2] : 0.0;
        accumulate(f(mid - dx), kWgk[j], wg);
        accumulate(f(mid + dx), kWgk[j], wg);
    }
    Segment<N> s{a, b, {}, {}, 0.0};
    for (std::size_t k = 0; k < N; ++k) {
        s.value[k] = kron[k] * half;
        s.error[k] = std::abs((kron[k] - gauss[k]) * half);
    }
    return s;
}

} // namespace detail

/// Integrates `f` (returning Values<N>) over the union of consecutive
/// intervals given by `breakpoints`. `tolerance(estimate)` returns the
/// absolute tolerance per component for the current total estimate.
/// Throws NumericalError when `max_intervals` is exhausted.
template <std::size_t N, class F, class Tol>
Result<N> integrate(F&& f, std::span<const double> breakpoints, Tol&& tolerance,
                    int max_intervals = 4000)
{
    if (breakpoints.size() < 2) throw ParameterError("quadrature: need at least two breakpoints");
    std::priority_queue<detail::Segment<N>> heap;
    Values<N> total{}, total_err{};

    auto push = [&](detail::Segment<N> s) {
        double p = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            total[k] += s.value[k];
            total_err[k] += s.error[k];
            p = std::max(p, s.error[k]);
        }
        s.priority = p;
        heap.push(s);
    };

    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (breakpoints[i + 1] > breakpoints[i]) push(detail::gk15<N>(f, breakpoints[i], breakpoints[i + 1]));
    }
    if (heap.empty()) return {};

    auto converged = [&] {
        const Values<N> tol = tolerance(total);
        for (std::size_t k = 0; k < N; ++k) {
            if (!(total_err[k] <= tol[k])) return false;
        }
        return true;
    };

    while (!converged()) {
        if (static_cast<int>(heap.size()) >= max_intervals) {
            std::ostringstream msg;
            msg << "quadrature did not converge after " << heap.size() << " intervals; estimate=[";
            for (std::size_t k = 0; k < N; ++k) msg << (k ? ", " : "") << total[k];
            msg << "] error=[";
            for (std::size_t k = 0; k < N; ++k) msg << (k ? ", " : "") << total_err[k];
            msg << "]";
            throw NumericalError(msg.str());
        }
        auto worst = heap.top();
        heap.pop();
        for (std::size_t k = 0; k < N; ++k) {
            total[k] -= worst.value[k];
            total_err[k] -= worst.error[k];
        }
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            throw NumericalError("quadrature: interval cannot be bisected further");
        }
        push(detail::gk15<N>(f, worst.a, mid));
        push(detail::gk15<N>(f, mid, worst.b));
    }

    Result<N> r;
    r.value = total;
    for (std::size_t k = 0; k < N; ++k) r.error[k] = std::max(0.0, total_err[k]);
    r.intervals = static_cast<int>(heap.size());
    return r;
}

} // namespace psamp::quadrature
