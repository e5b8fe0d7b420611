/*
   Copyright 2026 The plcox Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "plcox/core.hpp"

namespace plcox::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

/// Globally adaptive 21-point Gauss-Kronrod on a finite interval: the interval
/// with the largest error estimate is bisected until the summed estimate is
/// below max(abs_tol, rel_tol * |value|). Throws QuadratureNotConverged when
/// max_intervals is exhausted first.
template <class F>
Result integrate(F&& f, double a, double b, double rel_tol, double abs_tol, int max_intervals,
                 const char* what = "integral") {
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    struct Piece {
        double a, b, value, error;
        bool operator<(const Piece& o) const { return error < o.error; }
    };
    auto eval = [&](double lo, double hi) {
        double err = 0.0;
        const double v = GK::integrate(f, lo, hi, 0, 0.0, &err);
        // Boost reports the non-adaptive error for the rule mapped to [-1, 1].
        return Piece{lo, hi, v, err * 0.5 * (hi - lo)};
    };
    if (a == b) return {};
    std::priority_queue<Piece> heap;
    Piece first = eval(a, b);
    double total = first.value, error = first.error;
    heap.push(first);
    int intervals = 1;
    auto target = [&] { return std::max(abs_tol, rel_tol * std::abs(total)); };
    while (error > target()) {
        if (intervals >= max_intervals) {
            throw QuadratureNotConverged(
                fmt::format("{}: no convergence after {} intervals (error bound {:.3g}, "
                            "value {:.6g})",
                            what, intervals, error, total),
                error);
        }
        Piece worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval cannot be split further in double precision.
            throw QuadratureNotConverged(
                fmt::format("{}: interval collapsed at {:.17g}", what, worst.a), error);
        }
        Piece left = eval(worst.a, mid), right = eval(mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
    }
    // Re-sum from the pieces to shed accumulated cancellation.
    double sum = 0.0, err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {sum, err, intervals};
}

template <class F>
Result integrate(F&& f, double a, double b, const QuadratureSpec& spec,
                 const char* what = "integral") {
    return integrate(std::forward<F>(f), a, b, spec.rel_tol, spec.abs_tol, spec.max_subdivisions,
                     what);
}

/// Integral over several consecutive breakpoints, e.g. to isolate kinks.
template <class F>
Result integrate_pieces(F&& f, const std::vector<double>& points, double rel_tol, double abs_tol,
                        int max_intervals, const char* what = "integral") {
    Result out;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        if (!(points[i + 1] > points[i])) continue;
        auto r = integrate(f, points[i], points[i + 1], rel_tol, abs_tol, max_intervals, what);
        out.value += r.value;
        out.error += r.error;
        out.intervals += r.intervals;
    }
    return out;
}

/// Integral over [a, inf) through the map x = a + scale * t / (1 - t).
template <class F>
Result integrate_to_infinity(F&& f, double a, double scale, double rel_tol, double abs_tol,
                             int max_intervals, const char* what = "integral") {
    auto g = [&](double t) {
        if (t >= 1.0) return 0.0;
        const double one_minus = 1.0 - t;
        const double x = a + scale * t / one_minus;
        const double jac = scale / (one_minus * one_minus);
        const double v = f(x) * jac;
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(g, 0.0, 1.0, rel_tol, abs_tol, max_intervals, what);
}

}  // namespace plcox::quad
