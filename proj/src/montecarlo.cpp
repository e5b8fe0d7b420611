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

#include "plcox/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "plcox/parallel.hpp"

namespace plcox {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// d^-alpha from d^2, with the common exponents spelled out.
struct PathLoss {
    double alpha;
    double operator()(double d2) const {
        if (alpha == 3.0) return 1.0 / (d2 * std::sqrt(d2));
        if (alpha == 4.0) return 1.0 / (d2 * d2);
        return std::pow(d2, -0.5 * alpha);
    }
};

}  // namespace

SirSample interference_at_origin(const Snapshot& snap, const NetworkParams& params,
                                 RandomStream& stream) {
    if (!snap.devices) throw MissingDevices("interference_at_origin: devices not placed");
    if (!snap.typical_vehicle) throw Error("interference_at_origin: snapshot is not Palm");
    const PathLoss loss{params.alpha};
    const auto& devices = *snap.devices;
    const std::size_t self = *snap.typical_vehicle;
    SirSample out;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const double h = stream.exponential(1.0);
        const Point d = devices[i];
        const double term = params.power * h * loss(d.x * d.x + d.y * d.y);
        if (i == self) {
            out.signal = term;
        } else if (snap.typical_line && snap.vehicles[i].line_index == *snap.typical_line) {
            out.i_typical_line += term;
        } else {
            out.i_other_lines += term;
        }
    }
    out.interference = out.i_other_lines + out.i_typical_line;
    out.sir = out.signal / out.interference;
    return out;
}

// ---------------------------------------------------------------------------
// Streamed interference field.
//
// Estimators never materialize a Snapshot: the far field holds tens of
// thousands of vehicles per realization. Each road's vehicles come from the
// same stream and gap construction as sample_vehicles_on_line, with device
// offset and fading drawn right after each vehicle, so the realization in
// window R is an exact prefix of the one in window 2R.

namespace {

struct FieldSums {
    double signal = 0.0;
    double i1 = 0.0;  // other roads
    double i2 = 0.0;  // typical road
};

struct FieldDraw {
    FieldSums inner;
    double i1_outer = 0.0;
    double i2_outer = 0.0;

    FieldSums total() const { return {inner.signal, inner.i1 + i1_outer, inner.i2 + i2_outer}; }
};

void accumulate_road(const Line& line, const NetworkParams& p, const PathLoss& loss,
                     double r_in, double r_out, double& in, double& out) {
    if (!(p.mu > 0.0)) return;
    const double r2 = line.offset * line.offset;
    const double c_out2 = r_out * r_out - r2;
    if (c_out2 <= 0.0) return;
    const double c_out = std::sqrt(c_out2);
    const double c_in2 = r_in * r_in - r2;
    const Point f = line.foot(), a = line.along();
    const RandomStream root(line.stream_key);
    for (int side : {1, -1}) {
        RandomStream s = root.split(side > 0 ? 1 : 2);
        double x = 0.0;
        for (;;) {
            x += s.exponential(p.mu);
            if (x > c_out) break;
            (void)s.coin();  // direction: irrelevant here, drawn to keep the layout
            // Uniform point of the unit disk by rejection from the square.
            double ux, uy;
            do {
                ux = 2.0 * s.uniform() - 1.0;
                uy = 2.0 * s.uniform() - 1.0;
            } while (ux * ux + uy * uy > 1.0);
            const double h = s.exponential(1.0);
            const double px = f.x + side * x * a.x + p.nu * ux;
            const double py = f.y + side * x * a.y + p.nu * uy;
            const double term = p.power * h * loss(px * px + py * py);
            if (x * x <= c_in2) {
                in += term;
            } else {
                out += term;
            }
        }
    }
}

FieldDraw draw_field(const NetworkParams& p, std::uint64_t seed, std::int64_t index, double r_in,
                     double r_out) {
    const RandomStream base(seed, static_cast<std::uint64_t>(index));
    const PathLoss loss{p.alpha};
    FieldDraw d;

    RandomStream own = base.split(12);
    const double rho = p.nu * std::sqrt(own.uniform_open());
    d.inner.signal = p.power * own.exponential(1.0) * loss(rho * rho);

    RandomStream typical = base.split(11);
    const double angle = std::numbers::pi * typical.uniform_open();
    accumulate_road({0.0, angle, typical()}, p, loss, r_in, r_out, d.inner.i2, d.i2_outer);

    RandomStream line_stream = base.split(10);
    for (const Line& line : sample_lines(p.lambda_l, r_out, line_stream)) {
        if (std::abs(line.offset) <= r_in) {
            accumulate_road(line, p, loss, r_in, r_out, d.inner.i1, d.i1_outer);
        } else {
            double unused = 0.0;
            accumulate_road(line, p, loss, r_in, r_out, unused, d.i1_outer);
        }
    }
    return d;
}

double default_radius(const NetworkParams& p) {
    return std::max({20.0 * p.nu, 5.0 / p.lambda_l, 5.0 / p.mu});
}

// Per-realization statistic: writes m values for one set of field sums.
using Stat = std::function<void(const FieldSums&, double*)>;

struct Pool {
    std::vector<FieldSums> draws;
    WindowReport window;
};

// Picks the window by paired doubling and draws the realization pool at it.
Pool draw_pool(const NetworkParams& p, const McOptions& opt, std::size_t m, const Stat& stat) {
    if (opt.n < 1) throw Error("monte carlo: n must be at least 1");
    const auto n = static_cast<std::size_t>(opt.n);
    Pool pool;
    double radius = opt.window.initial_radius > 0.0 ? opt.window.initial_radius : default_radius(p);
    std::vector<FieldSums> pilot_inner;

    if (opt.window.adaptive) {
        const auto np = static_cast<std::size_t>(std::clamp<std::int64_t>(opt.window.pilot, 2, opt.n));
        for (int k = 0;; ++k) {
            if (k > opt.window.max_doublings) {
                throw WindowNotConverged(fmt::format(
                    "window did not stabilize after {} doublings (R = {} km)",
                    opt.window.max_doublings, radius));
            }
            std::vector<FieldSums> inner(np);
            std::vector<double> a(np * m), b(np * m);
            parallel_for(np, opt.threads, [&](std::size_t i) {
                const FieldDraw d = draw_field(p, opt.seed, static_cast<std::int64_t>(i), radius,
                                               2.0 * radius);
                inner[i] = d.inner;
                stat(d.inner, &a[i * m]);
                stat(d.total(), &b[i * m]);
            });
            double worst = 0.0;
            bool stable = true;
            std::vector<double> col(np), diff(np);
            for (std::size_t g = 0; g < m; ++g) {
                for (std::size_t i = 0; i < np; ++i) {
                    col[i] = a[i * m + g];
                    diff[i] = b[i * m + g] - a[i * m + g];
                }
                const Estimate shift = estimate_from_samples(diff);
                const double crit = std::abs(shift.value) + 2.0 * shift.std_error;
                if (crit == 0.0) continue;
                const double se_full = estimate_from_samples(col).std_error *
                                       std::sqrt(static_cast<double>(np) / static_cast<double>(n));
                const double ratio = se_full > 0.0 ? crit / se_full : kInf;
                worst = std::max(worst, ratio);
                if (!(ratio < opt.window.stability)) stable = false;
            }
            if (stable) {
                pool.window = {radius, k, worst};
                pilot_inner = std::move(inner);
                break;
            }
            radius *= 2.0;
        }
    } else {
        pool.window = {radius, 0, 0.0};
    }

    // The pilot's inner sums are exactly the window-R draws, so reuse them.
    pool.draws.resize(n);
    const std::size_t reuse = std::min(pilot_inner.size(), n);
    std::copy_n(pilot_inner.begin(), reuse, pool.draws.begin());
    parallel_for(n - reuse, opt.threads, [&](std::size_t j) {
        const std::size_t i = reuse + j;
        pool.draws[i] =
            draw_field(p, opt.seed, static_cast<std::int64_t>(i), radius, radius).inner;
    });
    return pool;
}

std::vector<Estimate> column_estimates(const std::vector<FieldSums>& draws, std::size_t m,
                                       const Stat& stat) {
    std::vector<double> values(draws.size() * m);
    for (std::size_t i = 0; i < draws.size(); ++i) stat(draws[i], &values[i * m]);
    std::vector<Estimate> out;
    std::vector<double> col(draws.size());
    for (std::size_t g = 0; g < m; ++g) {
        for (std::size_t i = 0; i < draws.size(); ++i) col[i] = values[i * m + g];
        out.push_back(estimate_from_samples(col));
    }
    return out;
}

void check_grid(const std::vector<double>& grid, const char* what) {
    for (double g : grid) {
        if (!(g >= 0.0) || !std::isfinite(g))
            throw Error(fmt::format("{}: grid values must be finite and nonnegative", what));
    }
}

}  // namespace

LaplaceMc estimate_laplace(const NetworkParams& params, const std::vector<double>& s_grid,
                           const McOptions& options) {
    validate(params);
    check_grid(s_grid, "estimate_laplace");
    const std::size_t m = s_grid.size();
    const Stat total = [&](const FieldSums& f, double* out) {
        for (std::size_t g = 0; g < m; ++g) out[g] = std::exp(-s_grid[g] * (f.i1 + f.i2));
    };
    Pool pool = draw_pool(params, options, m, total);

    LaplaceMc res;
    res.grid = s_grid;
    res.window = pool.window;
    res.estimates = column_estimates(pool.draws, m, total);
    res.other_lines = column_estimates(pool.draws, m, [&](const FieldSums& f, double* out) {
        for (std::size_t g = 0; g < m; ++g) out[g] = std::exp(-s_grid[g] * f.i1);
    });
    res.typical_line = column_estimates(pool.draws, m, [&](const FieldSums& f, double* out) {
        for (std::size_t g = 0; g < m; ++g) out[g] = std::exp(-s_grid[g] * f.i2);
    });
    res.covariance = column_estimates(pool.draws, m, [&](const FieldSums& f, double* out) {
        for (std::size_t g = 0; g < m; ++g) {
            out[g] = (std::exp(-s_grid[g] * f.i1) - res.other_lines[g].value) *
                     (std::exp(-s_grid[g] * f.i2) - res.typical_line[g].value);
        }
    });
    return res;
}

GridEstimates estimate_coverage(const NetworkParams& params, const std::vector<double>& tau_grid,
                                const McOptions& options) {
    validate(params);
    check_grid(tau_grid, "estimate_coverage");
    const std::size_t m = tau_grid.size();
    const Stat covered = [&](const FieldSums& f, double* out) {
        const double interference = f.i1 + f.i2;
        for (std::size_t g = 0; g < m; ++g)
            out[g] = f.signal >= tau_grid[g] * interference ? 1.0 : 0.0;
    };
    Pool pool = draw_pool(params, options, m, covered);
    return {tau_grid, column_estimates(pool.draws, m, covered), pool.window};
}

GridEstimates estimate_ase(const NetworkParams& params, const McOptions& options) {
    validate(params);
    const double scale = params.lambda_l * params.mu;
    const Stat rate = [&](const FieldSums& f, double* out) {
        out[0] = scale * std::log2(1.0 + f.signal / (f.i1 + f.i2));
    };
    Pool pool = draw_pool(params, options, 1, rate);
    return {{}, column_estimates(pool.draws, 1, rate), pool.window};
}

// ---------------------------------------------------------------------------
// Area fractions. Only roads within nu of the origin can ever cover it, and
// on a road at offset r only the chord |x| <= c = sqrt(nu^2 - r^2) does.

namespace {

double chord(const NetworkParams& p, const Line& line) {
    return std::sqrt(std::max(0.0, p.nu * p.nu - line.offset * line.offset));
}

bool covers_now(const NetworkParams& p, const Snapshot& snap) {
    for (const auto& v : snap.vehicles) {
        if (std::abs(v.abscissa) <= chord(p, snap.lines[v.line_index])) return true;
    }
    return false;
}

// Truncated normal by rejection; the mean is positive so acceptance is >= 1/2.
double positive_normal(RandomStream& s, double mean, double sd) {
    for (;;) {
        const double x = s.normal(mean, sd);
        if (x >= 0.0) return x;
    }
}

// Earliest time the origin enters a disk, over one realization.
double cover_time(const NetworkParams& p, double sigma, double t_max, std::uint64_t seed,
                  std::int64_t index) {
    RandomStream stream(seed, static_cast<std::uint64_t>(index));
    // A vehicle starting beyond nu + (v + 8 sigma) t_max would need a speed
    // more than eight standard deviations above the mean to matter.
    const double reach = p.nu + (p.speed + 8.0 * sigma) * t_max;
    Snapshot snap = sample_snapshot(p, p.nu, reach, stream);
    if (sigma > 0.0) {
        RandomStream speeds = stream.split(13);
        for (auto& v : snap.vehicles) v.speed = positive_normal(speeds, p.speed, sigma);
    }
    double t = kInf;
    for (const auto& v : snap.vehicles) {
        const double c = chord(p, snap.lines[v.line_index]);
        const double gap = std::abs(v.abscissa) - c;
        if (gap <= 0.0) return 0.0;
        const bool approaching = v.direction == (v.abscissa > 0.0 ? -1 : 1);
        if (approaching && v.speed > 0.0) t = std::min(t, gap / v.speed);
    }
    return t;
}

GridEstimates cumulative_af(const NetworkParams& params, double sigma,
                            const std::vector<double>& t_grid, const McOptions& options) {
    validate(params);
    check_grid(t_grid, "cumulative area fraction");
    if (!(sigma >= 0.0)) throw Error("randomized_speed_af: sigma must be nonnegative");
    if (options.n < 1) throw Error("monte carlo: n must be at least 1");
    const double t_max = t_grid.empty() ? 0.0 : *std::max_element(t_grid.begin(), t_grid.end());
    const auto n = static_cast<std::size_t>(options.n);
    std::vector<double> times(n);
    parallel_for(n, options.threads, [&](std::size_t i) {
        times[i] = cover_time(params, sigma, t_max, options.seed, static_cast<std::int64_t>(i));
    });
    GridEstimates res;
    res.grid = t_grid;
    res.window = {params.nu, 0, 0.0};
    std::vector<double> hit(n);
    for (double t : t_grid) {
        for (std::size_t i = 0; i < n; ++i) hit[i] = times[i] <= t ? 1.0 : 0.0;
        res.estimates.push_back(estimate_from_samples(hit));
    }
    return res;
}

}  // namespace

Estimate estimate_af_snapshot(const NetworkParams& params, const McOptions& options,
                              double time) {
    validate(params);
    if (!(time >= 0.0)) throw Error("estimate_af_snapshot: time must be nonnegative");
    if (options.n < 1) throw Error("monte carlo: n must be at least 1");
    const auto n = static_cast<std::size_t>(options.n);
    std::vector<double> hit(n);
    parallel_for(n, options.threads, [&](std::size_t i) {
        RandomStream stream(options.seed, i);
        Snapshot snap = sample_snapshot(params, params.nu, params.nu + params.speed * time, stream);
        snap = advance(std::move(snap), time);
        hit[i] = covers_now(params, snap) ? 1.0 : 0.0;
    });
    return estimate_from_samples(hit);
}

GridEstimates estimate_af_cumulative(const NetworkParams& params,
                                     const std::vector<double>& t_grid,
                                     const McOptions& options) {
    return cumulative_af(params, 0.0, t_grid, options);
}

GridEstimates randomized_speed_af(const NetworkParams& params, double sigma,
                                  const std::vector<double>& t_grid, const McOptions& options) {
    return cumulative_af(params, sigma, t_grid, options);
}

// ---------------------------------------------------------------------------
// Latency

namespace {

// Poisson(mean) conditioned on being at least 1.
long positive_poisson(RandomStream& s, double mean) {
    if (mean > 1.0) {
        for (;;) {
            const long k = s.poisson(mean);
            if (k > 0) return k;
        }
    }
    // Inversion; P(K = k) = e^-m m^k / (k! (1 - e^-m)).
    const double u = s.uniform_open() * -std::expm1(-mean);
    double pk = mean * std::exp(-mean);
    double cdf = pk;
    long k = 1;
    while (cdf < u && pk > 0.0) {
        ++k;
        pk *= mean / static_cast<double>(k);
        cdf += pk;
    }
    return k;
}

}  // namespace

LatencySample sample_latency(const NetworkParams& p, RandomStream& s) {
    const long roads = positive_poisson(s, 2.0 * p.lambda_l * p.nu);
    double wait = kInf;
    for (long j = 0; j < roads; ++j) {
        const double r = s.uniform(-p.nu, p.nu);
        const double c = std::sqrt(std::max(0.0, p.nu * p.nu - r * r));
        if (s.uniform() < -std::expm1(-2.0 * p.mu * c)) return {0.0, true};
        // Nearest approaching vehicle on each side: thinned rate mu / 2.
        const double gap = std::min(s.exponential(0.5 * p.mu), s.exponential(0.5 * p.mu));
        if (p.speed > 0.0) wait = std::min(wait, gap / p.speed);
    }
    if (!std::isfinite(wait))
        throw ZeroSpeed("sample_latency: speed is zero and no road covers the origin");
    return {wait, false};
}

LatencyMc estimate_latency(const NetworkParams& params, const std::vector<double>& w_grid,
                           const McOptions& options) {
    validate(params);
    check_grid(w_grid, "estimate_latency");
    if (!(params.speed > 0.0)) throw ZeroSpeed("estimate_latency: speed must be positive");
    if (options.n < 1) throw Error("monte carlo: n must be at least 1");
    const auto n = static_cast<std::size_t>(options.n);
    LatencyMc res;
    res.w_grid = w_grid;
    res.waits.resize(n);
    parallel_for(n, options.threads, [&](std::size_t i) {
        RandomStream stream(options.seed, i);
        res.waits[i] = sample_latency(params, stream).wait;
    });
    res.mean = estimate_from_samples(res.waits);
    std::vector<double> ind(n);
    for (std::size_t i = 0; i < n; ++i) ind[i] = res.waits[i] == 0.0 ? 1.0 : 0.0;
    res.p_zero = estimate_from_samples(ind);
    for (double w : w_grid) {
        for (std::size_t i = 0; i < n; ++i) ind[i] = res.waits[i] > w ? 1.0 : 0.0;
        res.ccdf.push_back(estimate_from_samples(ind));
    }
    return res;
}

Estimate unconditioned_ccdf(const Estimate& conditioned, const NetworkParams& params) {
    const double e = std::exp(-2.0 * params.lambda_l * params.nu);
    Estimate out = conditioned;
    out.value = e + (1.0 - e) * conditioned.value;
    out.std_error = (1.0 - e) * conditioned.std_error;
    return out;
}

// ---------------------------------------------------------------------------

void write_mc_csv_header(std::ostream& os) {
    os << "schema,quantity,grid_value,estimate,std_error,n,seed,params_hash\n";
}

void write_mc_csv_rows(std::ostream& os, std::string_view quantity,
                       const std::vector<double>& grid, const std::vector<Estimate>& estimates,
                       std::uint64_t seed, const NetworkParams& params) {
    const std::string hash = params_hash(params);
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto& e = estimates[i];
        if (i < grid.size()) {
            fmt::print(os, "{},{},{},{},{},{},{},{}\n", kMcCsvSchema, quantity, grid[i], e.value,
                       e.std_error, e.n_samples, seed, hash);
        } else {
            fmt::print(os, "{},{},,{},{},{},{},{}\n", kMcCsvSchema, quantity, e.value,
                       e.std_error, e.n_samples, seed, hash);
        }
    }
}

}  // namespace plcox
