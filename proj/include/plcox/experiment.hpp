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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plcox/analytic.hpp"
#include "plcox/core.hpp"
#include "plcox/geometry.hpp"
#include "plcox/montecarlo.hpp"
#include "plcox/optimize.hpp"

namespace plcox {

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Mode { Analytic, MonteCarlo, Both };

enum class Quantity {
    Laplace,
    Coverage,
    Ase,
    AfSnapshot,
    AfCumulative,
    Latency,
    Optimize,
    GeometryDump,
    Validate,
};

const char* to_string(Mode m);
const char* to_string(Quantity q);
Mode mode_from_string(std::string_view name);
Quantity quantity_from_string(std::string_view name);

/// Flat "section.key" -> value text. Layers are merged with later ones
/// winning: defaults < preset < config file < command line.
using Settings = std::map<std::string, std::string>;

std::vector<std::string> preset_names();
Settings preset_settings(std::string_view name);

/// Reads an INI file ([section] then key = value lines).
Settings read_config_file(const std::string& path);

/// Overlays `over` on `base`.
Settings merge(Settings base, const Settings& over);

struct GeometryOptions {
    LineModel model = LineModel::Isotropic;
    double radius = 1.0;       // km
    double half_length = 0.0;  // km, 0 means radius + speed * time
    bool palm = true;
    bool devices = true;
    double time = 0.0;  // seconds
};

struct ExperimentConfig {
    Quantity quantity = Quantity::Laplace;
    Quantity target = Quantity::Laplace;  // what validate compares
    Mode mode = Mode::Analytic;
    std::string preset;

    NetworkParams params;
    /// Parameter sweeps: field -> value texts, expanded as a Cartesian product.
    std::map<std::string, std::vector<std::string>> sweep;
    std::vector<double> grid;  // s, tau (linear), t or w, by quantity

    std::optional<std::uint64_t> seed;
    std::int64_t n = 10000;
    unsigned threads = 0;
    QuadratureSpec quad;
    WindowPolicy window;
    std::optional<std::string> variant;
    double sigma = 0.0;  // km/s, randomized-speed spread

    UtilityWeights weights;
    GridSpec opt_grid;
    std::optional<double> max_latency;  // seconds

    GeometryOptions geometry;
    std::string out_dir = "out";

    Settings resolved;  // every setting after layering, for the manifest
};

/// Builds a config from layered settings for the given subcommand. Unknown
/// keys, malformed values and invalid parameters raise ConfigError or
/// ValidationError.
ExperimentConfig resolve(const Settings& settings, Quantity subcommand);

/// Executes the config and writes CSV files plus manifest.json into out_dir.
/// Returns the process exit code: 0 success, 1 validate disagreement.
int run(const ExperimentConfig& config, std::ostream& log);

/// Full pipeline used by the command-line tool: layering, resolution, run,
/// and mapping of failures to exit codes (2 config, 1 numerical).
int execute(Quantity subcommand, const std::optional<std::string>& preset,
            const std::optional<std::string>& config_path, const Settings& cli_layer,
            std::ostream& log, std::ostream& err);

}  // namespace plcox
