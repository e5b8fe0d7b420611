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

#include "plcox/analytic.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <fmt/format.h>

#include "plcox/quadrature.hpp"

namespace plcox {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTiny = 1e-300;

// Kernel table: unit-width segments in log(xi) over [kXiMin, kXiMax].
constexpr double kXiMin = 1e-8;
constexpr double kXiMax = 1e4;
constexpr int kDegree = 16;

}  // namespace

const char* to_string(AFVariant v) {
    return v == AFVariant::PaperVerbatim ? "PaperVerbatim" : "DirectionAware";
}

AFVariant af_variant_from_string(std::string_view name) {
    std::string n;
    for (char c : name) {
        if (c != '-' && c != '_' && c != ' ')
            n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (n == "paperverbatim" || n == "paper") return AFVariant::PaperVerbatim;
    if (n == "directionaware" || n == "da") return AFVariant::DirectionAware;
    throw Error(fmt::format("unknown area-fraction variant '{}'", name));
}

// ---------------------------------------------------------------------------

namespace detail {

namespace {

double log_xi_min() { return std::log(kXiMin); }
int segment_count() { return static_cast<int>(std::ceil(std::log(kXiMax) - log_xi_min())); }

}  // namespace

RoadKernel::RoadKernel(double alpha) : alpha_(alpha) {
    if (!(alpha > 2.0)) throw Error("RoadKernel: alpha must exceed 2");
    q0_ = (kPi / alpha) / std::sin(kPi / alpha);
    tail_c_ = 0.5 * std::sqrt(kPi) * std::tgamma(0.5 * (alpha - 1.0)) / std::tgamma(0.5 * alpha);

    // Chebyshev interpolation of log q on each segment at the first-kind nodes.
    constexpr int n = kDegree + 1;
    const int segments = segment_count();
    coeffs_.assign(static_cast<std::size_t>(segments * n), 0.0);
    std::vector<double> values(n);
    for (int seg = 0; seg < segments; ++seg) {
        const double mid = log_xi_min() + seg + 0.5;
        for (int j = 0; j < n; ++j) {
            const double x = std::cos(kPi * (j + 0.5) / n);
            values[j] = std::log(q_direct(std::exp(mid + 0.5 * x)));
        }
        for (int k = 0; k < n; ++k) {
            double c = 0.0;
            for (int j = 0; j < n; ++j) c += values[j] * std::cos(kPi * k * (j + 0.5) / n);
            coeffs_[static_cast<std::size_t>(seg * n + k)] = (k == 0 ? 1.0 : 2.0) * c / n;
        }
    }
    q_min_ = q_direct(kXiMin);
    q_max_ = q_direct(std::exp(log_xi_min() + segments));
}

std::shared_ptr<const RoadKernel> RoadKernel::for_alpha(double alpha) {
    static std::mutex mutex;
    static std::map<double, std::shared_ptr<const RoadKernel>> kernels;
    std::lock_guard lock(mutex);
    auto& slot = kernels[alpha];
    if (!slot) slot = std::make_shared<const RoadKernel>(alpha);
    return slot;
}

double RoadKernel::q_direct(double xi) const {
    const double half_alpha = 0.5 * alpha_;
    const double xi2 = xi * xi;
    auto f = [&](double z) { return 1.0 / (1.0 + std::pow(xi2 + z * z, half_alpha)); };
    return quad::integrate_to_infinity(f, 0.0, std::max(1.0, xi), 1e-13, kTiny, 4000,
                                       "road kernel")
        .value;
}

double RoadKernel::q(double xi) const {
    xi = std::abs(xi);
    if (xi <= kXiMin) {
        // q is flat to O(xi^(alpha-1)) near zero.
        return q0_ + (q_min_ - q0_) * (xi / kXiMin);
    }
    const double u = std::log(xi) - log_xi_min();
    const int segments = segment_count();
    if (u >= segments) {
        return q_max_ * std::pow(xi / std::exp(log_xi_min() + segments), 1.0 - alpha_);
    }
    const int seg = std::min(static_cast<int>(u), segments - 1);
    const double x = 2.0 * (u - seg) - 1.0;
    const double* c = &coeffs_[static_cast<std::size_t>(seg * (kDegree + 1))];
    // Clenshaw recurrence.
    double b1 = 0.0, b2 = 0.0;
    for (int k = kDegree; k >= 1; --k) {
        const double b0 = 2.0 * x * b1 - b2 + c[k];
        b2 = b1;
        b1 = b0;
    }
    return std::exp(x * b1 - b2 + c[0]);
}

}  // namespace detail

// ---------------------------------------------------------------------------

LaplaceEvaluator::LaplaceEvaluator(const NetworkParams& params, QuadratureSpec quad,
                                   bool use_cache)
    : params_(validate(params)),
      quad_(quad),
      kernel_(detail::RoadKernel::for_alpha(params.alpha)),
      use_cache_(use_cache) {
    quad_.check();
}

double LaplaceEvaluator::kernel_q(double xi) const {
    return use_cache_ ? kernel_->q(xi) : kernel_->q_direct(xi);
}

double LaplaceEvaluator::road_kernel(double x, double s) const {
    const double a = s * params_.power;
    if (!(a > 0.0)) return 0.0;
    const double scale = std::pow(a, 1.0 / params_.alpha);
    return 2.0 * scale * kernel_q(std::abs(x) / scale);
}

namespace {

quad::Result line_profile_impl(const LaplaceEvaluator& ev, double r, double s) {
    const double nu = ev.params().nu;
    r = std::abs(r);
    // Chord weight 2 sqrt(nu^2 - u^2) with u = nu sin(phi), du = nu cos(phi) dphi.
    auto f = [&](double phi) {
        const double c = std::cos(phi);
        return 2.0 * nu * nu * c * c * ev.road_kernel(r + nu * std::sin(phi), s);
    };
    std::vector<double> points{-kPi / 2};
    if (r < nu) points.push_back(std::asin(-r / nu));  // kink of G at x = 0
    points.push_back(kPi / 2);
    const auto& q = ev.quadrature();
    try {
        return quad::integrate_pieces(f, points, q.rel_tol * 0.1, kTiny, q.max_subdivisions,
                                      "line profile");
    } catch (const QuadratureNotConverged& e) {
        throw QuadratureNotConverged(fmt::format("{} [r={:.17g}, s={:.17g}]", e.what(), r, s),
                                     e.error_bound());
    }
}

}  // namespace

double LaplaceEvaluator::line_profile(double r, double s) const {
    if (!(s > 0.0)) return 0.0;
    return line_profile_impl(*this, r, s).value;
}

LaplaceBreakdown LaplaceEvaluator::evaluate(double s) const {
    if (!(s >= 0.0)) throw Error(fmt::format("laplace: argument must be >= 0, got {}", s));
    if (s == 0.0) return {};

    const auto& p = params_;
    const double k = p.mu / (kPi * p.nu * p.nu);
    const double a = s * p.power;

    const auto f0 = line_profile_impl(*this, 0.0, s);
    LaplaceBreakdown out;
    out.log_typical_line = -k * f0.value;
    double err = k * f0.error;

    auto h = [&](double r) { return -std::expm1(-k * line_profile(r, s)); };
    const double tol = quad_.rel_tol * 0.1;
    const int cap = quad_.max_subdivisions;

    double total = 0.0, total_err = 0.0;
    const bool fixed = quad_.truncation == Truncation::FixedRadius;
    const double first_end = fixed ? std::min(p.nu, quad_.fixed_radius) : p.nu;
    {
        // F has a square-root profile as r -> nu (the kernel peak meets the
        // disk edge); r = nu sin(theta) smooths it.
        const double theta_end = std::asin(first_end / p.nu);
        auto ht = [&](double theta) { return p.nu * std::cos(theta) * h(p.nu * std::sin(theta)); };
        auto r = quad::integrate(ht, 0.0, theta_end, tol, kTiny, cap, "laplace offset integral");
        total += r.value;
        total_err += r.error;
    }
    // Far roads see the device kernel as a point source:
    //   1 - exp(-k F(r)) ~ 2 mu C a r^(1 - alpha).
    const double pref = 2.0 * p.mu * kernel_->tail_constant() * a;
    const double em2 = p.alpha - 2.0;
    double lo = first_end;
    for (int doubling = 0;; ++doubling) {
        if (fixed && lo >= quad_.fixed_radius) break;
        double hi = 2.0 * lo;
        if (fixed) hi = std::min(hi, quad_.fixed_radius);
        if (doubling > 200 || !std::isfinite(hi)) {
            throw QuadratureNotConverged("laplace: offset truncation did not converge",
                                         total_err);
        }
        auto piece = quad::integrate(h, lo, hi, tol, kTiny, cap, "laplace offset integral");
        total += piece.value;
        total_err += piece.error;
        if (!fixed && lo >= 4.0 * p.nu) {
            const double asym = pref * (std::pow(lo, -em2) - std::pow(hi, -em2)) / em2;
            const double tail = pref * std::pow(hi, -em2) / em2;
            const double rel_dev = std::abs(piece.value - asym) / asym;
            if (rel_dev * tail <= 0.1 * tol * (total + tail)) {
                total += tail;
                total_err += rel_dev * tail;
                break;
            }
        }
        lo = hi;
    }
    out.log_other_lines = -2.0 * p.lambda_l * total;
    err += 2.0 * p.lambda_l * total_err;
    out.value = std::exp(out.log_other_lines + out.log_typical_line);
    out.error_bound = out.value * err;
    return out;
}

double laplace(double s, const LaplaceEvaluator& evaluator) { return evaluator(s); }

double coverage_probability(double tau, const LaplaceEvaluator& ev) {
    if (!(tau >= 0.0)) throw Error("coverage_probability: tau must be >= 0");
    const auto& p = ev.params();
    const double nu2 = p.nu * p.nu;
    auto f = [&](double rho) {
        return 2.0 * rho / nu2 * ev(tau * std::pow(rho, p.alpha) / p.power);
    };
    const auto& q = ev.quadrature();
    return quad::integrate(f, 0.0, p.nu, q.rel_tol, q.abs_tol, q.max_subdivisions,
                           "coverage probability")
        .value;
}

double area_spectral_efficiency(const NetworkParams& params, const QuadratureSpec& quad,
                                const std::function<double(double)>& laplace_fn) {
    const auto p = validate(params);
    quad.check();
    const double nu = p.nu;
    // E[ln(1 + X/Y)] = int_0^inf z^-1 (1 - E e^{-zX}) E e^{-zY} dz, with
    // 1 - E_{H,U} e^{-z p H |U|^-a} = int_0^nu 2 z p r / (nu^2 (r^a + z p)) dr.
    auto link_term = [&](double z) {
        const double b = z * p.power;
        auto g = [&](double r) { return r / (std::pow(r, p.alpha) + b); };
        const double knee = std::min(std::pow(b, 1.0 / p.alpha), nu);
        auto r = quad::integrate_pieces(g, {0.0, knee, nu}, quad.rel_tol * 1e-2, kTiny,
                                        quad.max_subdivisions, "ase link term");
        return 2.0 * p.power / (nu * nu) * r.value;
    };
    // Integrate in y = log z; integrand z * J(z) * L(z).
    auto f = [&](double y) {
        const double z = std::exp(y);
        return z * link_term(z) * laplace_fn(z);
    };
    const double y0 = std::log(std::pow(nu, p.alpha) / p.power);
    constexpr double width = 2.0;
    double total = quad::integrate(f, y0 - width, y0 + width, quad.rel_tol, kTiny,
                                   quad.max_subdivisions, "ase")
                       .value;
    // Toward z -> 0 the integrand decays like z^(2/alpha), i.e. geometrically
    // in y; the remainder past the last piece is summed as a geometric series.
    for (int dir : {1, -1}) {
        double edge = y0 + dir * width;
        double previous = 0.0;
        for (int i = 0;; ++i) {
            if (i > 400) throw QuadratureNotConverged("ase: truncation did not converge", total);
            const double next = edge + dir * width;
            const double piece = quad::integrate(f, std::min(edge, next), std::max(edge, next),
                                                 quad.rel_tol, kTiny, quad.max_subdivisions,
                                                 "ase")
                                     .value;
            total += piece;
            edge = next;
            if (dir > 0) {
                if (piece <= 1e-3 * quad.rel_tol * total ||
                    laplace_fn(std::exp(edge)) < quad.abs_tol)
                    break;
            } else if (i > 0) {
                const double ratio = piece / previous;
                const double expected = std::exp(-2.0 * width / p.alpha);
                if (std::abs(ratio / expected - 1.0) < 1e-2) {
                    const double tail = piece * ratio / (1.0 - ratio);
                    if (std::abs(ratio / expected - 1.0) * tail <= 0.1 * quad.rel_tol * total) {
                        total += tail;
                        break;
                    }
                }
                if (piece <= 1e-3 * quad.rel_tol * total) break;
            }
            previous = piece;
        }
    }
    return p.lambda_l * p.mu * total / std::numbers::ln2;
}

double area_spectral_efficiency(const LaplaceEvaluator& ev) {
    return area_spectral_efficiency(ev.params(), ev.quadrature(),
                                    [&ev](double z) { return ev(z); });
}

// ---------------------------------------------------------------------------

namespace {

// int_0^nu f(sqrt(nu^2 - u^2)) du with u = nu sin(phi).
template <class F>
double chord_integral(const NetworkParams& p, const QuadratureSpec& q, F&& f) {
    const double nu = p.nu;
    auto g = [&](double phi) {
        const double c = nu * std::cos(phi);
        return c * f(c);
    };
    return quad::integrate(g, 0.0, kPi / 2, q.rel_tol * 1e-2, kTiny, q.max_subdivisions,
                           "chord integral")
        .value;
}

void require_speed(const NetworkParams& p) {
    if (!(p.speed > 0.0)) throw ZeroSpeed("latency requires a positive vehicle speed");
}

}  // namespace

double af_snapshot(const NetworkParams& params, const QuadratureSpec& quad) {
    const auto p = validate(params);
    const double x =
        2.0 * p.lambda_l * chord_integral(p, quad, [&](double c) { return -std::expm1(-2.0 * p.mu * c); });
    return -std::expm1(-x);
}

double af_cumulative(double t, const NetworkParams& params, const QuadratureSpec& quad,
                     AFVariant variant) {
    if (!(t >= 0.0)) throw Error("af_cumulative: t must be >= 0");
    const auto p = validate(params);
    const double vt = p.speed * t;
    double integral = 0.0;
    if (variant == AFVariant::PaperVerbatim) {
        integral = chord_integral(p, quad, [&](double c) { return -std::expm1(-2.0 * p.mu * (vt + c)); });
    } else {
        integral = chord_integral(p, quad, [&](double c) { return -std::expm1(-p.mu * (vt + 2.0 * c)); });
    }
    return -std::expm1(-2.0 * p.lambda_l * integral);
}

double af_limit(const NetworkParams& params) {
    const auto p = validate(params);
    return -std::expm1(-2.0 * p.lambda_l * p.nu);
}

double latency_ccdf(double w, const NetworkParams& params, const QuadratureSpec& quad,
                    LatencyVariant variant) {
    if (!(w >= 0.0)) throw Error("latency_ccdf: w must be >= 0");
    const auto p = validate(params);
    require_speed(p);
    const double vw = p.speed * w;
    switch (variant) {
    case LatencyVariant::PaperVerbatim:
        return std::exp(-2.0 * p.lambda_l *
                        chord_integral(p, quad, [&](double c) { return -std::expm1(-2.0 * p.mu * (c + vw)); }));
    case LatencyVariant::DirectionAware:
        return std::exp(-2.0 * p.lambda_l *
                        chord_integral(p, quad, [&](double c) { return -std::expm1(-p.mu * (2.0 * c + vw)); }));
    case LatencyVariant::DirectionAwareConditioned: {
        // P(W > w) - P(never covered) = e^{-2 lambda nu} (exp(2 lambda E(w)) - 1),
        // E(w) = int_0^nu exp(-mu (2c + v w)) du; divide by P(eventually covered).
        const double e = chord_integral(p, quad, [&](double c) { return std::exp(-p.mu * (2.0 * c + vw)); });
        const double two_lnu = 2.0 * p.lambda_l * p.nu;
        return std::exp(-two_lnu) * std::expm1(2.0 * p.lambda_l * e) / -std::expm1(-two_lnu);
    }
    }
    return 0.0;
}

double latency_ccdf_limit(const NetworkParams& params, LatencyVariant variant) {
    const auto p = validate(params);
    if (variant == LatencyVariant::DirectionAwareConditioned) return 0.0;
    return std::exp(-2.0 * p.lambda_l * p.nu);
}

LatencyMean mean_latency(const NetworkParams& params, const QuadratureSpec& quad,
                         LatencyVariant variant) {
    const auto p = validate(params);
    require_speed(p);
    const double limit = latency_ccdf_limit(p, variant);
    if (limit > quad.abs_tol) {
        return DivergenceReport{
            limit, fmt::format("{} latency CCDF tends to {:.6g} > 0; the mean is infinite",
                               to_string(variant), limit)};
    }
    auto f = [&](double w) { return latency_ccdf(w, p, quad, variant); };
    return quad::integrate_to_infinity(f, 0.0, 1.0 / (p.mu * p.speed), quad.rel_tol, quad.abs_tol,
                                       quad.max_subdivisions, "mean latency")
        .value;
}

}  // namespace plcox
