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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "plcox/analytic.hpp"
#include "plcox/optimize.hpp"

using namespace plcox;

namespace {

NetworkParams base() {
    NetworkParams p;
    p.lambda_l = 3.0;
    p.alpha = 3.0;
    p.power = 1.0;
    p.speed = 30.0 / 3600.0;
    return p;
}

// A coarse version of the default grid keeps each search to a few seconds.
GridSpec small_grid() {
    GridSpec g;
    g.n_nu = 8;
    g.n_mu = 3;
    return g;
}

}  // namespace

TEST_CASE("weights and grid validation") {
    CHECK_NOTHROW(UtilityWeights{}.check());
    CHECK_THROWS(UtilityWeights{0.0, 0.0, 0.0, 1.0}.check());
    CHECK_THROWS(UtilityWeights{-0.1, 1.0, 0.0, 1.0}.check());
    CHECK_THROWS(UtilityWeights{1.0, 0.0, -1.0, 1.0}.check());
    GridSpec g;
    CHECK_NOTHROW(g.check());
    CHECK(g.nu(0) == 0.1);
    CHECK(g.nu(14) == 1.5);
    CHECK(g.mu(10) == 0.75);
    g.n_nu = 1;
    CHECK_THROWS(g.check());
    g = GridSpec{};
    g.mu_lo = 0.9;
    CHECK_THROWS(g.check());
}

TEST_CASE("utility reduces to its single terms") {
    auto p = base();
    p.nu = 0.3;
    p.mu = 0.5;
    const double pc = coverage_probability(1.0, LaplaceEvaluator(p));
    CHECK(utility(0.3, 0.5, base(), {1.0, 0.0, 0.0, 1.0}) == pc);
    CHECK(utility(0.3, 0.5, base(), {0.0, 1.0, 0.0, 1.0}) == af_limit(p));

    double prev = 0.0;
    for (double nu : {0.1, 0.4, 0.8, 1.5}) {
        const double u = utility(nu, 0.5, base(), {0.0, 1.0, 0.0, 1.0});
        CHECK(u > prev);
        prev = u;
    }

    const double lat = std::get<double>(mean_latency(p));
    CHECK(utility(0.3, 0.5, base(), {0.5, 0.5, 0.01, 1.0}) ==
          doctest::Approx(0.5 * pc + 0.5 * af_limit(p) - 0.01 * lat).epsilon(1e-12));
}

TEST_CASE("utility is linear in the weights") {
    const UtilityWeights a{0.3, 0.1, 0.002, 1.0}, b{0.4, 0.2, 0.001, 1.0};
    const UtilityWeights sum{a.w1 + b.w1, a.w2 + b.w2, a.w3 + b.w3, 1.0};
    const Cell c = evaluate_cell(0.4, 0.4, base(), sum, {}, true);
    CHECK(std::abs(combine(c, sum) - (combine(c, a) + combine(c, b))) <= 1e-12);
}

TEST_CASE("coverage weight zero puts the optimum at the largest nu, smallest mu") {
    const auto g = small_grid();
    const auto opt = optimize_grid(base(), {0.0, 1.0, 0.0, 1.0}, g);
    CHECK(opt.i == g.n_nu - 1);
    CHECK(opt.j == 0);
    CHECK(opt.best.nu == g.nu_hi);
}

TEST_CASE("constraints") {
    const auto g = small_grid();
    const UtilityWeights w;
    const auto free = optimize_grid(base(), w, g);
    const auto inf = optimize_grid(base(), w, g, std::numeric_limits<double>::infinity());
    CHECK(inf.i == free.i);
    CHECK(inf.j == free.j);
    CHECK(inf.best.utility == free.best.utility);
    CHECK_THROWS_AS(optimize_grid(base(), w, g, 0.0), EmptyFeasibleSet);

    // A budget between the extremes of the latency surface.
    const auto probe = optimize_grid(base(), w, g, 1e9);
    std::vector<double> lat;
    for (const auto& c : probe.surface.cells) lat.push_back(c.mean_latency);
    std::sort(lat.begin(), lat.end());
    const double budget = lat[lat.size() / 2];
    const auto tight = optimize_grid(base(), w, g, budget);
    CHECK(tight.best.utility <= free.best.utility);
    CHECK(tight.best.mean_latency < budget);
    for (const auto& c : tight.surface.cells) CHECK(c.feasible == (c.mean_latency < budget));

    const auto mask = feasible_domain(base(), g, budget);
    for (int i = 0; i < g.n_nu; ++i) {
        for (int j = 0; j < g.n_mu; ++j) {
            CHECK(mask[i][j] == tight.surface.at(i, j).feasible);
            // Latency falls in both nu and mu, so feasibility is inherited upward.
            if (mask[i][j] && i + 1 < g.n_nu) CHECK(mask[i + 1][j]);
            if (mask[i][j] && j + 1 < g.n_mu) CHECK(mask[i][j + 1]);
        }
    }
}

TEST_CASE("feasible_domain extremes") {
    const auto g = small_grid();
    for (const auto& row : feasible_domain(base(), g, 0.0))
        CHECK(std::none_of(row.begin(), row.end(), [](bool b) { return b; }));
    for (const auto& row : feasible_domain(base(), g, std::numeric_limits<double>::infinity()))
        CHECK(std::all_of(row.begin(), row.end(), [](bool b) { return b; }));
}

TEST_CASE("local refinement stays within one coarse cell") {
    const auto g = small_grid();
    const auto opt = optimize_grid(base(), UtilityWeights{}, g);
    CHECK(opt.refined.utility >= opt.best.utility);
    CHECK(std::abs(opt.refined.nu - opt.best.nu) < g.nu_step());
    CHECK(std::abs(opt.refined.mu - opt.best.mu) < g.mu_step());
    CHECK(std::all_of(opt.surface.cells.begin(), opt.surface.cells.end(),
                      [](const Cell& c) { return std::isnan(c.mean_latency); }));
}

TEST_CASE("surface is independent of the thread count") {
    const auto g = small_grid();
    const auto a = optimize_grid(base(), UtilityWeights{}, g, std::nullopt, {}, 1);
    const auto b = optimize_grid(base(), UtilityWeights{}, g, std::nullopt, {}, 3);
    for (std::size_t k = 0; k < a.surface.cells.size(); ++k)
        CHECK(a.surface.cells[k].utility == b.surface.cells[k].utility);
}

TEST_CASE("is_unimodal") {
    CHECK(is_unimodal({}));
    CHECK(is_unimodal({1.0}));
    CHECK(is_unimodal({1.0, 2.0, 3.0}));
    CHECK(is_unimodal({3.0, 2.0, 1.0}));
    CHECK(is_unimodal({1.0, 3.0, 3.0, 2.0}));
    CHECK_FALSE(is_unimodal({1.0, 3.0, 2.0, 4.0}));
    CHECK_FALSE(is_unimodal({2.0, 1.0, 2.0}));
}

TEST_CASE("surface CSV") {
    Surface s;
    s.grid.n_nu = 2;
    s.grid.n_mu = 1;
    s.cells = {{0.1, 0.25, 0.9, 0.4, std::numeric_limits<double>::quiet_NaN(), 0.75, true},
               {1.5, 0.25, 0.5, 0.9, 12.5, 0.62, false}};
    std::ostringstream os;
    write_surface_csv(os, s);
    CHECK(os.str() == "schema,nu,mu,p_c,af_limit,mean_latency,utility,feasible\n"
                      "1,0.1,0.25,0.9,0.4,,0.75,1\n"
                      "1,1.5,0.25,0.5,0.9,12.5,0.62,0\n");
}
