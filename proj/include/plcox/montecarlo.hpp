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

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "plcox/core.hpp"
#include "plcox/geometry.hpp"
#include "plcox/random.hpp"

namespace plcox {

class MissingDevices : public Error {
public:
    using Error::Error;
};

struct SirSample {
    double signal = 0.0;
    double interference = 0.0;        // i_other_lines + i_typical_line
    double i_other_lines = 0.0;       // I1
    double i_typical_line = 0.0;      // I2, excluding the typical vehicle itself
    double sir = 0.0;
};

/// SIR at the typical vehicle of a Palm snapshot with devices placed. Fading
/// is unit-mean exponential, one draw per device in vehicle order.
SirSample interference_at_origin(const Snapshot& snapshot, const NetworkParams& params,
                                 RandomStream& stream);

/// Truncation window for the interference estimators: every road within R of
/// the origin, and on each road every vehicle within R of the origin.
struct WindowPolicy {
    double initial_radius = 0.0;  // km; 0 picks max(20 nu, 5 / lambda_l, 5 / mu)
    bool adaptive = true;         // double R until the estimate is stable
    int max_doublings = 6;
    /// R is accepted once doubling it moves every grid estimate by less than
    /// this many standard errors (shift plus two of its own standard errors).
    double stability = 0.5;
    std::int64_t pilot = 1000;    // realizations used for the stability check
};

struct McOptions {
    std::uint64_t seed = 1;
    std::int64_t n = 10000;
    unsigned threads = 0;
    WindowPolicy window;
};

struct WindowReport {
    double radius = 0.0;
    int doublings = 0;
    double shift_in_se = 0.0;  // largest |shift| / SE seen at the accepted radius
};

struct GridEstimates {
    std::vector<double> grid;
    std::vector<Estimate> estimates;
    WindowReport window;
};

struct LaplaceMc : GridEstimates {
    std::vector<Estimate> other_lines;   // E exp(-s I1)
    std::vector<Estimate> typical_line;  // E exp(-s I2)
    /// Sample covariance of exp(-s I1) and exp(-s I2), with its standard error.
    std::vector<Estimate> covariance;
};

/// Mean of exp(-s I) over Palm realizations, one pool reused for all s.
LaplaceMc estimate_laplace(const NetworkParams& params, const std::vector<double>& s_grid,
                           const McOptions& options);

/// Fraction of Palm realizations with SIR >= tau, one pool for all tau.
GridEstimates estimate_coverage(const NetworkParams& params, const std::vector<double>& tau_grid,
                                const McOptions& options);

/// lambda_l mu E log2(1 + SIR).
GridEstimates estimate_ase(const NetworkParams& params, const McOptions& options);

/// Probability that the origin lies within nu of some vehicle at time t. The
/// window R = nu, L = nu + v t is exact: nothing outside it can cover.
Estimate estimate_af_snapshot(const NetworkParams& params, const McOptions& options,
                              double time = 0.0);

/// Probability that the origin has been covered by time t, counting only
/// vehicles that move toward it. Exact window, shared pool over the t grid.
GridEstimates estimate_af_cumulative(const NetworkParams& params,
                                     const std::vector<double>& t_grid,
                                     const McOptions& options);

/// As estimate_af_cumulative with per-vehicle speeds drawn once from
/// N(v, sigma^2) truncated at 0. With sigma = 0 no speed is drawn and the
/// result equals estimate_af_cumulative bit for bit.
GridEstimates randomized_speed_af(const NetworkParams& params, double sigma,
                                  const std::vector<double>& t_grid, const McOptions& options);

struct LatencySample {
    double wait = 0.0;  // seconds
    bool covered_at_zero = false;
};

/// Exact draw of the waiting time given eventual coverage: no truncation.
LatencySample sample_latency(const NetworkParams& params, RandomStream& stream);

struct LatencyMc {
    Estimate mean;
    Estimate p_zero;
    std::vector<double> w_grid;
    std::vector<Estimate> ccdf;  // P(W > w | eventually covered)
    std::vector<double> waits;   // raw samples in realization order
};

LatencyMc estimate_latency(const NetworkParams& params, const std::vector<double>& w_grid,
                           const McOptions& options);

/// Maps a conditioned CCDF estimate to the unconditioned one,
/// e + (1 - e) P(W > w | covered) with e = exp(-2 lambda_l nu).
Estimate unconditioned_ccdf(const Estimate& conditioned, const NetworkParams& params);

// ---------------------------------------------------------------------------
// CSV: schema,quantity,grid_value,estimate,std_error,n,seed,params_hash

inline constexpr int kMcCsvSchema = 1;

void write_mc_csv_header(std::ostream& os);
void write_mc_csv_rows(std::ostream& os, std::string_view quantity,
                       const std::vector<double>& grid, const std::vector<Estimate>& estimates,
                       std::uint64_t seed, const NetworkParams& params);

}  // namespace plcox
