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

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "plcox/core.hpp"

namespace plcox {

/// Sweep term in the cumulative-coverage area fraction.
///   PaperVerbatim:  every vehicle within v t + c of the foot point covers,
///                   rate 2 mu (v t + c).
///   DirectionAware: only vehicles heading toward the foot point cover,
///                   rate mu (v t + 2 c).
enum class AFVariant { PaperVerbatim, DirectionAware };

const char* to_string(AFVariant v);
AFVariant af_variant_from_string(std::string_view name);

namespace detail {

/// q(xi) = int_0^inf dz / (1 + (xi^2 + z^2)^(alpha/2)), the interference
/// kernel integrated along a road at normalized distance xi. Built once per
/// path-loss exponent and shared by every evaluator with that exponent.
class RoadKernel {
public:
    explicit RoadKernel(double alpha);

    static std::shared_ptr<const RoadKernel> for_alpha(double alpha);

    double alpha() const { return alpha_; }
    /// Table lookup: piecewise Chebyshev fit of log q against log xi.
    double q(double xi) const;
    /// Direct adaptive quadrature, bypassing the table.
    double q_direct(double xi) const;
    double q_at_zero() const { return q0_; }
    /// q(xi) ~ tail_constant() * xi^(1 - alpha) as xi -> inf.
    double tail_constant() const { return tail_c_; }

private:
    double alpha_;
    double q0_;
    double tail_c_;
    double q_min_;  // q at the lower table edge
    double q_max_;  // q at the upper table edge
    std::vector<double> coeffs_;  // kDegree + 1 per unit-width segment
};

}  // namespace detail

struct LaplaceBreakdown {
    double value = 1.0;             // L_I(s)
    double log_other_lines = 0.0;   // log L_{I1}(s), roads not through the origin
    double log_typical_line = 0.0;  // log L_{I2}(s), the road through the origin
    double error_bound = 0.0;       // absolute bound on value
};

/// Laplace transform of the interference seen by the typical vehicle.
///
/// With g(d) = s p d^-a / (1 + s p d^-a) the per-device kernel,
///   log L_{I2}(s) = -(mu / (pi nu^2)) F(0),
///   log L_{I1}(s) = -lambda_l int_R [1 - exp(-(mu / (pi nu^2)) F(r))] dr,
/// where F(r) integrates g over the device disk and along a road at offset r.
/// Shift invariance along the road reduces F to
///   F(r) = int_{disk} G(r + u) du dv,   G(x) = int_R g(sqrt(x^2 + y^2)) dy,
/// and G(x) = 2 (s p)^(1/a) q(|x| (s p)^(-1/a)) for the universal q above.
class LaplaceEvaluator {
public:
    explicit LaplaceEvaluator(const NetworkParams& params, QuadratureSpec quad = {},
                              bool use_cache = true);

    LaplaceBreakdown evaluate(double s) const;
    double operator()(double s) const { return evaluate(s).value; }

    double road_kernel(double x, double s) const;
    double line_profile(double r, double s) const;

    const NetworkParams& params() const { return params_; }
    const QuadratureSpec& quadrature() const { return quad_; }
    bool cached() const { return use_cache_; }

private:
    double kernel_q(double xi) const;

    NetworkParams params_;
    QuadratureSpec quad_;
    std::shared_ptr<const detail::RoadKernel> kernel_;
    bool use_cache_;
};

double laplace(double s, const LaplaceEvaluator& evaluator);

/// p_c(tau) = int_0^nu (2 rho / nu^2) L_I(tau rho^alpha / p) d rho.
double coverage_probability(double tau, const LaplaceEvaluator& evaluator);

/// Area spectral efficiency in bits/s/Hz per km^2.
double area_spectral_efficiency(const LaplaceEvaluator& evaluator);
/// Same, with the Laplace transform supplied by the caller.
double area_spectral_efficiency(const NetworkParams& params, const QuadratureSpec& quad,
                                const std::function<double(double)>& laplace_fn);

double af_snapshot(const NetworkParams& params, const QuadratureSpec& quad = {});
double af_cumulative(double t, const NetworkParams& params, const QuadratureSpec& quad,
                     AFVariant variant);
/// 1 - exp(-2 lambda_l nu): the fraction of the plane within nu of some road.
double af_limit(const NetworkParams& params);

double latency_ccdf(double w, const NetworkParams& params, const QuadratureSpec& quad,
                    LatencyVariant variant);
/// Limit of latency_ccdf as w -> inf.
double latency_ccdf_limit(const NetworkParams& params, LatencyVariant variant);

struct DivergenceReport {
    double tail_limit = 0.0;
    std::string message;
};

using LatencyMean = std::variant<double, DivergenceReport>;

/// Integral of the chosen CCDF over [0, inf). Variants whose CCDF tends to a
/// positive limit have no finite mean and yield a DivergenceReport.
LatencyMean mean_latency(const NetworkParams& params, const QuadratureSpec& quad = {},
                         LatencyVariant variant = LatencyVariant::DirectionAwareConditioned);

}  // namespace plcox
