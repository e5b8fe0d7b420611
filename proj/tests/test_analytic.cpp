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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "plcox/analytic.hpp"

using namespace plcox;
namespace bq = boost::math::quadrature;

namespace {

constexpr double kPi = std::numbers::pi;

NetworkParams fig3_params() {
    NetworkParams p;
    p.power = 0.01;
    p.alpha = 3.0;
    p.lambda_l = 5.0;
    p.mu = 5.0;
    p.nu = 0.1;
    return p;
}

NetworkParams rural(double nu = 0.1, double alpha = 3.0) {
    NetworkParams p;
    p.lambda_l = 3.0;
    p.mu = 3.0;
    p.nu = nu;
    p.alpha = alpha;
    p.speed = 0.03;
    return p;
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

// Independent evaluation of the two log factors straight from their defining
// integrals, without the shared road kernel or the chord reduction.
struct BruteLaplace {
    NetworkParams p;
    double s;

    double g_road(double x) const {
        // int_R s p / (d^alpha + s p) dy with d = sqrt(x^2 + y^2).
        const double sp = s * p.power;
        auto f = [&](double y) { return sp / (std::pow(x * x + y * y, p.alpha / 2) + sp); };
        bq::exp_sinh<double> es;
        return 2.0 * es.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
    }

    // Integral of the road kernel over the device disk for a road at offset r.
    double disk(double r) const {
        auto f = [&](double theta) {
            const double c = std::cos(theta);
            return 2.0 * p.nu * p.nu * c * c * g_road(r + p.nu * std::sin(theta));
        };
        return bq::gauss_kronrod<double, 61>::integrate(f, -kPi / 2, kPi / 2, 8, 1e-11);
    }

    double density() const { return p.mu / (kPi * p.nu * p.nu); }

    double log_typical() const { return -density() * disk(0.0); }

    double log_other() const {
        auto f = [&](double r) { return -std::expm1(-density() * disk(r)); };
        const double near = bq::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 8, 1e-11);
        bq::exp_sinh<double> es;
        const double far = es.integrate(f, 1.0, std::numeric_limits<double>::infinity(), 1e-10);
        return -2.0 * p.lambda_l * (near + far);
    }
};

// int_0^nu f(sqrt(nu^2 - u^2)) du with a fixed 200-point Gauss rule in phi.
template <class F>
double fixed_chord(double nu, F&& f) {
    auto g = [&](double phi) {
        const double c = nu * std::cos(phi);
        return c * f(c);
    };
    double total = 0.0;
    const int pieces = 10;
    for (int k = 0; k < pieces; ++k) {
        const double a = kPi / 2 * k / pieces, b = kPi / 2 * (k + 1) / pieces;
        total += bq::gauss<double, 20>::integrate(g, a, b);
    }
    return total;
}

}  // namespace

TEST_CASE("road kernel: closed forms at zero and at infinity") {
    for (double alpha : {2.5, 3.0, 4.0, 5.5}) {
        const auto k = detail::RoadKernel::for_alpha(alpha);
        const double q0 = (kPi / alpha) / std::sin(kPi / alpha);
        CHECK(close_rel(k->q_at_zero(), q0, 1e-10));
        const double c = std::sqrt(kPi) * boost::math::tgamma((alpha - 1) / 2) /
                         (2.0 * boost::math::tgamma(alpha / 2));
        CHECK(close_rel(k->tail_constant(), c, 1e-10));
        const double xi = 1e3;
        CHECK(close_rel(k->q(xi), c * std::pow(xi, 1 - alpha), 1e-5));
    }
}

TEST_CASE("road kernel: table matches an independent integration") {
    for (double alpha : {3.0, 4.0}) {
        const auto k = detail::RoadKernel::for_alpha(alpha);
        CHECK(detail::RoadKernel::for_alpha(alpha) == k);
        for (double xi : {1e-4, 0.01, 0.3, 1.0, 2.7, 10.0, 150.0}) {
            auto f = [&](double z) { return 1.0 / (1.0 + std::pow(xi * xi + z * z, alpha / 2)); };
            bq::exp_sinh<double> es;
            const double ref = es.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
            CHECK(close_rel(k->q(xi), ref, 1e-8));
            CHECK(close_rel(k->q_direct(xi), ref, 1e-9));
        }
    }
}

TEST_CASE("laplace: value at zero and monotone decay") {
    const LaplaceEvaluator ev(fig3_params());
    CHECK(std::abs(ev(0.0) - 1.0) <= 1e-12);
    double prev = 1.0;
    for (double s : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e4}) {
        const double v = ev(s);
        CHECK(v > 0.0);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(ev(1e8) < 1e-6);
}

TEST_CASE("laplace: factors are each in (0, 1] and their logs add") {
    const LaplaceEvaluator ev(fig3_params());
    for (double s : {0.01, 0.3, 3.0}) {
        const auto b = ev.evaluate(s);
        CHECK(b.log_other_lines < 0.0);
        CHECK(b.log_typical_line < 0.0);
        CHECK(close_rel(std::log(b.value), b.log_other_lines + b.log_typical_line, 1e-12));
        CHECK(b.error_bound >= 0.0);
    }
}

TEST_CASE("laplace: agrees with brute-force integration of the defining integrals") {
    const auto p = fig3_params();
    const LaplaceEvaluator ev(p, QuadratureSpec{.rel_tol = 1e-8});
    for (double s : {0.1, 1.0}) {
        const BruteLaplace brute{p, s};
        const auto b = ev.evaluate(s);
        CHECK(close_rel(b.log_typical_line, brute.log_typical(), 1e-6));
        CHECK(close_rel(b.log_other_lines, brute.log_other(), 1e-6));
    }
}

TEST_CASE("laplace: cache is transparent") {
    const auto p = fig3_params();
    const QuadratureSpec q;
    const LaplaceEvaluator cached(p, q, true), direct(p, q, false);
    for (double s : {0.002, 0.05, 0.5, 1.0}) CHECK(close_rel(cached(s), direct(s), q.rel_tol));
}

TEST_CASE("laplace: halving rel_tol stays inside the reported bound") {
    const auto p = fig3_params();
    const LaplaceEvaluator coarse(p, QuadratureSpec{.rel_tol = 1e-5});
    const LaplaceEvaluator fine(p, QuadratureSpec{.rel_tol = 5e-6});
    for (double s : {0.01, 0.2, 1.0}) {
        const auto a = coarse.evaluate(s);
        CHECK(std::abs(a.value - fine(s)) <= a.error_bound);
    }
}

TEST_CASE("laplace: subdivision cap raises QuadratureNotConverged") {
    QuadratureSpec q;
    q.max_subdivisions = 1;
    q.rel_tol = 1e-12;
    const LaplaceEvaluator ev(fig3_params(), q, false);
    CHECK_THROWS_AS(ev(1.0), QuadratureNotConverged);
}

TEST_CASE("laplace: concurrent evaluation matches serial") {
    const LaplaceEvaluator ev(fig3_params());
    std::vector<double> s_grid;
    for (int i = 0; i < 16; ++i) s_grid.push_back(0.002 * std::pow(1.5, i));
    std::vector<double> serial, threaded(s_grid.size());
    for (double s : s_grid) serial.push_back(ev(s));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < 4; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < s_grid.size(); i += 4) threaded[i] = ev(s_grid[i]);
        });
    }
    for (auto& th : pool) th.join();
    CHECK(serial == threaded);
}

TEST_CASE("coverage: identity and trends") {
    for (double alpha : {3.0, 4.0}) {
        const LaplaceEvaluator small(rural(0.1, alpha)), large(rural(0.2, alpha));
        CHECK(std::abs(coverage_probability(0.0, small) - 1.0) <= 1e-9);
        double prev = 1.0;
        for (double tau_db : {-10.0, 0.0, 5.0, 10.0, 20.0}) {
            const double tau = std::pow(10.0, tau_db / 10);
            const double pc = coverage_probability(tau, small);
            CHECK(pc < prev);
            CHECK(pc > coverage_probability(tau, large));
            prev = pc;
        }
    }
    const LaplaceEvaluator a3(rural(0.1, 3.0)), a4(rural(0.1, 4.0));
    for (double tau_db : {0.0, 10.0, 20.0}) {
        const double tau = std::pow(10.0, tau_db / 10);
        CHECK(coverage_probability(tau, a4) >= coverage_probability(tau, a3));
    }
}

TEST_CASE("ASE with a stubbed transform matches the exponential-integral form") {
    // With L(z) = exp(-k z) the z integral is exp(m) E1(m), m = k rho^alpha / p.
    auto p = rural(0.1, 3.0);
    const double k = 2.0;
    auto stub = [k](double z) { return std::exp(-k * z); };
    const double ase = area_spectral_efficiency(p, QuadratureSpec{}, stub);
    auto f = [&](double rho) {
        const double m = k * std::pow(rho, p.alpha) / p.power;
        if (m < 1e-300) return 0.0;  // rho log(rho) -> 0
        return 2.0 * rho / (p.nu * p.nu) * std::exp(m) * boost::math::expint(1, m);
    };
    bq::tanh_sinh<double> ts;
    const double ref = p.lambda_l * p.mu / std::log(2.0) * ts.integrate(f, 0.0, p.nu, 1e-12);
    CHECK(close_rel(ase, ref, 1e-5));

    auto doubled = p;
    doubled.lambda_l *= 2;
    CHECK(close_rel(area_spectral_efficiency(doubled, QuadratureSpec{}, stub), 2.0 * ase, 1e-9));
}

TEST_CASE("ASE decreases with the disk radius") {
    for (double alpha : {3.0, 4.0}) {
        double prev = HUGE_VAL;
        for (double nu : {0.05, 0.1, 0.15, 0.2, 0.25}) {
            const double v = area_spectral_efficiency(LaplaceEvaluator(rural(nu, alpha)));
            CHECK(v > 0.0);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("area fractions: snapshot against a fixed-order rule") {
    NetworkParams p;
    p.lambda_l = 4.0;
    p.mu = 5.0;
    p.nu = 0.1;
    const double inner = fixed_chord(p.nu, [&](double c) { return 1.0 - std::exp(-2.0 * p.mu * c); });
    const double ref = 1.0 - std::exp(-2.0 * p.lambda_l * inner);
    CHECK(std::abs(af_snapshot(p) - ref) <= 1e-12);
    CHECK(ref == doctest::Approx(0.35).epsilon(0.02));

    auto dense = p;
    dense.mu = 1e6;
    CHECK(af_snapshot(dense) == doctest::Approx(af_limit(p)).epsilon(1e-9));
}

TEST_CASE("area fractions: limit anchor and scale invariance") {
    NetworkParams urban;
    urban.lambda_l = 9.0;
    urban.nu = 0.1;
    CHECK(std::abs(af_limit(urban) - (1.0 - std::exp(-1.8))) <= 1e-15);
    CHECK(std::abs(af_limit(urban) - 0.8347) <= 1e-4);

    auto p = rural();
    const double kappa = 2.0;
    auto q = p;
    q.lambda_l /= kappa;
    q.mu /= kappa;
    q.nu *= kappa;
    q.speed *= kappa;
    CHECK(std::abs(af_snapshot(p) - af_snapshot(q)) <= 1e-12);
    CHECK(std::abs(af_limit(p) - af_limit(q)) <= 1e-15);
    for (double t : {1.0, 10.0})
        CHECK(std::abs(af_cumulative(t, p, {}, AFVariant::DirectionAware) -
                       af_cumulative(t, q, {}, AFVariant::DirectionAware)) <= 1e-12);
}

TEST_CASE("cumulative area fraction: identities, bounds and variant order") {
    const auto p = rural();
    const double snap = af_snapshot(p), limit = af_limit(p);
    for (auto v : {AFVariant::PaperVerbatim, AFVariant::DirectionAware}) {
        CHECK(std::abs(af_cumulative(0.0, p, {}, v) - snap) <= 1e-10);
        const double far = 100.0 / p.mu / p.speed;
        CHECK(std::abs(af_cumulative(far, p, {}, v) - limit) <= 1e-6);
        double prev = snap;
        for (double t : {1.0, 5.0, 20.0, 60.0}) {
            const double a = af_cumulative(t, p, {}, v);
            CHECK(a >= prev);
            CHECK(a <= limit);
            prev = a;
        }
    }
    for (double t : {1.0, 5.0, 20.0})
        CHECK(af_cumulative(t, p, {}, AFVariant::DirectionAware) <
              af_cumulative(t, p, {}, AFVariant::PaperVerbatim));
    CHECK_THROWS(af_cumulative(-1.0, p, {}, AFVariant::DirectionAware));
}

TEST_CASE("latency CCDF: identities, limits and ordering") {
    const auto p = rural();
    const QuadratureSpec q;
    CHECK(std::abs(latency_ccdf(0.0, p, q, LatencyVariant::PaperVerbatim) - (1.0 - af_snapshot(p))) <=
          1e-10);
    const double never = std::exp(-2.0 * p.lambda_l * p.nu);
    const double far = 1e4 / (p.mu * p.speed);
    CHECK(latency_ccdf(far, p, q, LatencyVariant::PaperVerbatim) == doctest::Approx(never).epsilon(1e-9));
    CHECK(latency_ccdf(far, p, q, LatencyVariant::DirectionAware) == doctest::Approx(never).epsilon(1e-9));
    CHECK(latency_ccdf(far, p, q, LatencyVariant::DirectionAwareConditioned) < 1e-12);
    CHECK(latency_ccdf_limit(p, LatencyVariant::DirectionAware) == never);

    double prev = 1.0;
    for (double w : {0.0, 1.0, 5.0, 20.0, 60.0}) {
        CHECK(latency_ccdf(w, p, q, LatencyVariant::PaperVerbatim) <=
              latency_ccdf(w, p, q, LatencyVariant::DirectionAware));
        const double c = latency_ccdf(w, p, q, LatencyVariant::DirectionAwareConditioned);
        CHECK(c <= prev);
        CHECK(c >= 0.0);
        prev = c;
        // The conditioned CCDF is the unconditioned one with the never-covered mass removed.
        const double da = latency_ccdf(w, p, q, LatencyVariant::DirectionAware);
        CHECK(c == doctest::Approx((da - never) / (1.0 - never)).epsilon(1e-9));
    }

    auto stopped = p;
    stopped.speed = 0.0;
    CHECK_THROWS_AS(latency_ccdf(1.0, stopped, q, LatencyVariant::DirectionAware), ZeroSpeed);
    CHECK_THROWS_AS(mean_latency(stopped), ZeroSpeed);
}

TEST_CASE("mean latency: divergence reports and the series oracle") {
    const auto p = rural();
    const double never = std::exp(-2.0 * p.lambda_l * p.nu);
    for (auto v : {LatencyVariant::PaperVerbatim, LatencyVariant::DirectionAware}) {
        const auto m = mean_latency(p, {}, v);
        REQUIRE(std::holds_alternative<DivergenceReport>(m));
        CHECK(std::abs(std::get<DivergenceReport>(m).tail_limit - never) <= 1e-10);
        CHECK_FALSE(std::get<DivergenceReport>(m).message.empty());
    }

    // exp(2 lambda E0 e^{-mu v w}) - 1 expands into exponentials in w, so
    // E[W | covered] = e^{-2 lambda nu} / (1 - e^{-2 lambda nu})
    //                  * sum_k (2 lambda E0)^k / (k k! mu v).
    const double e0 = fixed_chord(p.nu, [&](double c) { return std::exp(-2.0 * p.mu * c); });
    const double x = 2.0 * p.lambda_l * e0;
    double series = 0.0, term = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= x / k;
        series += term / k;
    }
    const double ref = never / (1.0 - never) * series / (p.mu * p.speed);
    const auto m = mean_latency(p);
    REQUIRE(std::holds_alternative<double>(m));
    CHECK(close_rel(std::get<double>(m), ref, 1e-6));

    auto dense = p;
    dense.mu = 300.0;
    CHECK(std::get<double>(mean_latency(dense)) < 1e-3 * ref);
}
