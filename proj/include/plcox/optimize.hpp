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

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "plcox/core.hpp"

namespace plcox {

class EmptyFeasibleSet : public Error {
public:
    using Error::Error;
};

/// J = w1 p_c(tau) + w2 AF(limit) - w3 E[W | covered].
struct UtilityWeights {
    double w1 = 0.7;
    double w2 = 0.3;
    double w3 = 0.0;
    double tau = 1.0;

    void check() const;
};

struct GridSpec {
    double nu_lo = 0.1, nu_hi = 1.5;  // km
    int n_nu = 15;
    double mu_lo = 0.25, mu_hi = 0.75;  // per km
    int n_mu = 11;

    void check() const;
    double nu(int i) const;
    double mu(int j) const;
    double nu_step() const { return (nu_hi - nu_lo) / (n_nu - 1); }
    double mu_step() const { return (mu_hi - mu_lo) / (n_mu - 1); }
};

/// Every term of the utility at one (nu, mu). mean_latency is NaN when it
/// was not needed (w3 = 0 and no latency constraint).
struct Cell {
    double nu = 0.0;
    double mu = 0.0;
    double p_c = 0.0;
    double af_limit = 0.0;
    double mean_latency = 0.0;
    double utility = 0.0;
    bool feasible = true;
};

/// Evaluates the utility terms at (nu, mu), other fields from base.
Cell evaluate_cell(double nu, double mu, const NetworkParams& base, const UtilityWeights& weights,
                   const QuadratureSpec& quad, bool need_latency);

/// Combines already evaluated terms; linear in the weights.
double combine(const Cell& cell, const UtilityWeights& weights);

double utility(double nu, double mu, const NetworkParams& base, const UtilityWeights& weights,
               const QuadratureSpec& quad = {});

struct Surface {
    GridSpec grid;
    std::vector<Cell> cells;  // cells[i * n_mu + j] holds (nu_i, mu_j)

    const Cell& at(int i, int j) const { return cells[static_cast<std::size_t>(i * grid.n_mu + j)]; }
};

struct Optimum {
    Cell best;            // argmax over the feasible grid cells
    int i = 0, j = 0;     // its grid indices
    Cell refined;         // argmax after the local 2x refinement
    Surface surface;
};

/// Exhaustive search; cells with mean latency >= C are infeasible. Ties go to
/// the smaller nu, then the smaller mu. A second pass at half the spacing over
/// the neighbouring cells sharpens the optimum.
Optimum optimize_grid(const NetworkParams& base, const UtilityWeights& weights,
                      const GridSpec& grid, std::optional<double> max_latency = std::nullopt,
                      const QuadratureSpec& quad = {}, unsigned threads = 0);

/// mask[i][j] = mean_latency(nu_i, mu_j) < C.
std::vector<std::vector<bool>> feasible_domain(const NetworkParams& base, const GridSpec& grid,
                                               double max_latency,
                                               const QuadratureSpec& quad = {},
                                               unsigned threads = 0);

/// True when the values rise (weakly) and then fall (weakly).
bool is_unimodal(const std::vector<double>& values);

/// Unimodality of the utility along nu, one flag per mu column.
std::vector<bool> unimodal_in_nu(const Surface& surface);

inline constexpr int kSurfaceCsvSchema = 1;

/// schema,nu,mu,p_c,af_limit,mean_latency,utility,feasible
void write_surface_csv(std::ostream& os, const Surface& surface);

}  // namespace plcox
