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

#include "plcox/optimize.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "plcox/analytic.hpp"
#include "plcox/parallel.hpp"

namespace plcox {

void UtilityWeights::check() const {
    if (!(w1 >= 0.0 && w2 >= 0.0 && w3 >= 0.0)) throw Error("utility weights must be nonnegative");
    if (!(w1 + w2 > 0.0)) throw Error("utility weights: w1 + w2 must be positive");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error("utility weights: tau must be >= 0");
}

void GridSpec::check() const {
    if (!(nu_lo > 0.0 && nu_lo < nu_hi)) throw Error("grid: need 0 < nu_lo < nu_hi");
    if (!(mu_lo > 0.0 && mu_lo < mu_hi)) throw Error("grid: need 0 < mu_lo < mu_hi");
    if (n_nu < 2 || n_mu < 2) throw Error("grid: need at least two points per axis");
}

double GridSpec::nu(int i) const { return i == n_nu - 1 ? nu_hi : nu_lo + i * nu_step(); }
double GridSpec::mu(int j) const { return j == n_mu - 1 ? mu_hi : mu_lo + j * mu_step(); }

Cell evaluate_cell(double nu, double mu, const NetworkParams& base, const UtilityWeights& weights,
                   const QuadratureSpec& quad, bool need_latency) {
    NetworkParams p = base;
    p.nu = nu;
    p.mu = mu;
    validate(p);
    Cell c;
    c.nu = nu;
    c.mu = mu;
    c.p_c = coverage_probability(weights.tau, LaplaceEvaluator(p, quad));
    c.af_limit = af_limit(p);
    c.mean_latency = std::numeric_limits<double>::quiet_NaN();
    if (need_latency) c.mean_latency = std::get<double>(mean_latency(p, quad));
    c.utility = combine(c, weights);
    return c;
}

double combine(const Cell& cell, const UtilityWeights& w) {
    double u = w.w1 * cell.p_c + w.w2 * cell.af_limit;
    if (w.w3 > 0.0) u -= w.w3 * cell.mean_latency;
    return u;
}

double utility(double nu, double mu, const NetworkParams& base, const UtilityWeights& weights,
               const QuadratureSpec& quad) {
    weights.check();
    return evaluate_cell(nu, mu, base, weights, quad, weights.w3 > 0.0).utility;
}

namespace {

bool needs_latency(const UtilityWeights& w, std::optional<double> max_latency) {
    return w.w3 > 0.0 || (max_latency && std::isfinite(*max_latency));
}

void mark_feasible(Cell& c, std::optional<double> max_latency) {
    c.feasible = !max_latency || !std::isfinite(*max_latency) || c.mean_latency < *max_latency;
}

// Row-major scan with strict improvement: ties keep the smaller nu, then mu.
std::optional<std::size_t> argmax(const std::vector<Cell>& cells) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (!cells[k].feasible) continue;
        if (!best || cells[k].utility > cells[*best].utility) best = k;
    }
    return best;
}

}  // namespace

Optimum optimize_grid(const NetworkParams& base, const UtilityWeights& weights,
                      const GridSpec& grid, std::optional<double> max_latency,
                      const QuadratureSpec& quad, unsigned threads) {
    weights.check();
    grid.check();
    const bool latency = needs_latency(weights, max_latency);
    Optimum out;
    out.surface.grid = grid;
    out.surface.cells.resize(static_cast<std::size_t>(grid.n_nu * grid.n_mu));
    parallel_for(out.surface.cells.size(), threads, [&](std::size_t k) {
        const int i = static_cast<int>(k) / grid.n_mu, j = static_cast<int>(k) % grid.n_mu;
        Cell c = evaluate_cell(grid.nu(i), grid.mu(j), base, weights, quad, latency);
        mark_feasible(c, max_latency);
        out.surface.cells[k] = c;
    });
    const auto best = argmax(out.surface.cells);
    if (!best) {
        throw EmptyFeasibleSet(
            fmt::format("no grid cell has mean latency below {} s", max_latency.value_or(0.0)));
    }
    out.best = out.surface.cells[*best];
    out.i = static_cast<int>(*best) / grid.n_mu;
    out.j = static_cast<int>(*best) % grid.n_mu;

    // Half-spacing pass over the neighbouring coarse cells.
    const double dnu = grid.nu_step() / 2, dmu = grid.mu_step() / 2;
    std::vector<Cell> local;
    for (int a = -2; a <= 2; ++a) {
        for (int b = -2; b <= 2; ++b) {
            const double nu = out.best.nu + a * dnu, mu = out.best.mu + b * dmu;
            if (nu < grid.nu_lo - 1e-12 || nu > grid.nu_hi + 1e-12) continue;
            if (mu < grid.mu_lo - 1e-12 || mu > grid.mu_hi + 1e-12) continue;
            local.push_back({nu, mu});
        }
    }
    parallel_for(local.size(), threads, [&](std::size_t k) {
        Cell c = evaluate_cell(local[k].nu, local[k].mu, base, weights, quad, latency);
        mark_feasible(c, max_latency);
        local[k] = c;
    });
    out.refined = local[*argmax(local)];
    return out;
}

std::vector<std::vector<bool>> feasible_domain(const NetworkParams& base, const GridSpec& grid,
                                               double max_latency, const QuadratureSpec& quad,
                                               unsigned threads) {
    grid.check();
    std::vector<std::vector<bool>> mask(static_cast<std::size_t>(grid.n_nu),
                                        std::vector<bool>(static_cast<std::size_t>(grid.n_mu)));
    if (!(max_latency > 0.0)) return mask;
    if (std::isinf(max_latency)) {
        for (auto& row : mask) row.assign(row.size(), true);
        return mask;
    }
    std::vector<double> lat(static_cast<std::size_t>(grid.n_nu * grid.n_mu));
    parallel_for(lat.size(), threads, [&](std::size_t k) {
        NetworkParams p = base;
        p.nu = grid.nu(static_cast<int>(k) / grid.n_mu);
        p.mu = grid.mu(static_cast<int>(k) % grid.n_mu);
        lat[k] = std::get<double>(mean_latency(validate(p), quad));
    });
    for (int i = 0; i < grid.n_nu; ++i)
        for (int j = 0; j < grid.n_mu; ++j)
            mask[i][j] = lat[static_cast<std::size_t>(i * grid.n_mu + j)] < max_latency;
    return mask;
}

bool is_unimodal(const std::vector<double>& v) {
    std::size_t k = 1;
    while (k < v.size() && v[k] >= v[k - 1]) ++k;
    while (k < v.size() && v[k] <= v[k - 1]) ++k;
    return k >= v.size();
}

std::vector<bool> unimodal_in_nu(const Surface& s) {
    std::vector<bool> out;
    for (int j = 0; j < s.grid.n_mu; ++j) {
        std::vector<double> column;
        for (int i = 0; i < s.grid.n_nu; ++i) column.push_back(s.at(i, j).utility);
        out.push_back(is_unimodal(column));
    }
    return out;
}

void write_surface_csv(std::ostream& os, const Surface& s) {
    os << "schema,nu,mu,p_c,af_limit,mean_latency,utility,feasible\n";
    for (const Cell& c : s.cells) {
        const std::string lat = std::isnan(c.mean_latency) ? "" : fmt::format("{}", c.mean_latency);
        fmt::print(os, "{},{},{},{},{},{},{},{}\n", kSurfaceCsvSchema, c.nu, c.mu, c.p_c,
                   c.af_limit, lat, c.utility, c.feasible ? 1 : 0);
    }
}

}  // namespace plcox
