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

// Command-line front end: one subcommand per quantity.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plcox/experiment.hpp"

namespace {

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> preset;
    std::optional<std::string> seed;
    std::optional<std::string> n;
    std::optional<std::string> threads;
    std::optional<std::string> out;
    std::optional<std::string> variant;
    std::optional<std::string> rel_tol;
    std::optional<std::string> mode;
    std::optional<std::string> target;
    std::optional<std::string> sigma;
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "INI config file");
    sub->add_option("--preset", f.preset, "figure preset (fig1 ... fig10)");
    sub->add_option("--seed", f.seed, "64-bit seed for Monte Carlo and geometry");
    sub->add_option("--n", f.n, "Monte Carlo realizations");
    sub->add_option("--threads", f.threads, "worker threads, 0 for all cores");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--variant", f.variant, "formula variant (paper-verbatim, direction-aware, ...)");
    sub->add_option("--rel-tol", f.rel_tol, "quadrature relative tolerance");
    sub->add_option("--mode", f.mode, "analytic, montecarlo or both");
    sub->add_option("--set", f.sets, "override any setting, section.key=value")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson-line Cox vehicular data harvesting: analytics and Monte Carlo"};
    app.require_subcommand(1);
    Flags flags;
    const std::vector<std::pair<plcox::Quantity, std::string>> commands = {
        {plcox::Quantity::Laplace, "interference Laplace transform"},
        {plcox::Quantity::Coverage, "SIR coverage probability"},
        {plcox::Quantity::Ase, "area spectral efficiency"},
        {plcox::Quantity::AfSnapshot, "area fraction of the coverage disks"},
        {plcox::Quantity::AfCumulative, "area fraction of the swept disks over time"},
        {plcox::Quantity::Latency, "waiting time until coverage"},
        {plcox::Quantity::Optimize, "utility grid search over (nu, mu)"},
        {plcox::Quantity::GeometryDump, "sample one realization to CSV"},
        {plcox::Quantity::Validate, "analytic vs Monte Carlo z-scores"},
    };
    std::optional<plcox::Quantity> chosen;
    for (const auto& [q, help] : commands) {
        CLI::App* sub = app.add_subcommand(plcox::to_string(q), help);
        add_common(sub, flags);
        if (q == plcox::Quantity::Validate)
            sub->add_option("--target", flags.target, "quantity to validate");
        if (q == plcox::Quantity::AfCumulative || q == plcox::Quantity::Validate)
            sub->add_option("--sigma", flags.sigma, "speed spread for randomized speeds (km/h)");
        sub->callback([&chosen, q = q] { chosen = q; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    plcox::Settings cli;
    auto put = [&cli](const char* key, const std::optional<std::string>& v) {
        if (v) cli[key] = *v;
    };
    for (const auto& s : flags.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "error: --set expects section.key=value, got '" << s << "'\n";
            return 2;
        }
        cli[s.substr(0, eq)] = s.substr(eq + 1);
    }
    put("run.seed", flags.seed);
    put("run.n", flags.n);
    put("run.threads", flags.threads);
    put("run.out", flags.out);
    put("run.variant", flags.variant);
    put("run.mode", flags.mode);
    put("run.target", flags.target);
    put("run.sigma", flags.sigma);
    put("quadrature.rel_tol", flags.rel_tol);
    return plcox::execute(*chosen, flags.preset, flags.config, cli, std::cout, std::cerr);
}
