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

#include "plcox/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include "json.hpp"

#ifndef PLCOX_BUILD_DESCRIBE
#define PLCOX_BUILD_DESCRIBE "unknown"
#endif

namespace plcox {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string lower(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c != '_' && c != ' ') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    std::erase_if(out, [](const std::string& x) { return x.empty(); });
    return out;
}

}  // namespace

const char* to_string(Mode m) {
    switch (m) {
    case Mode::Analytic: return "analytic";
    case Mode::MonteCarlo: return "montecarlo";
    case Mode::Both: return "both";
    }
    return "unknown";
}

const char* to_string(Quantity q) {
    switch (q) {
    case Quantity::Laplace: return "laplace";
    case Quantity::Coverage: return "coverage";
    case Quantity::Ase: return "ase";
    case Quantity::AfSnapshot: return "af-snapshot";
    case Quantity::AfCumulative: return "af-cumulative";
    case Quantity::Latency: return "latency";
    case Quantity::Optimize: return "optimize";
    case Quantity::GeometryDump: return "geometry-dump";
    case Quantity::Validate: return "validate";
    }
    return "unknown";
}

Mode mode_from_string(std::string_view name) {
    const auto n = lower(name);
    if (n == "analytic") return Mode::Analytic;
    if (n == "montecarlo" || n == "mc") return Mode::MonteCarlo;
    if (n == "both") return Mode::Both;
    throw ConfigError(fmt::format("run.mode: unknown mode '{}'", name));
}

Quantity quantity_from_string(std::string_view name) {
    for (Quantity q : {Quantity::Laplace, Quantity::Coverage, Quantity::Ase, Quantity::AfSnapshot,
                       Quantity::AfCumulative, Quantity::Latency, Quantity::Optimize,
                       Quantity::GeometryDump, Quantity::Validate}) {
        if (name == to_string(q)) return q;
    }
    throw ConfigError(fmt::format("unknown quantity '{}'", name));
}

// ---------------------------------------------------------------------------
// Presets. Values not given by the figure setups are marked "assumed".

std::vector<std::string> preset_names() {
    return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"};
}

Settings preset_settings(std::string_view name) {
    // Road maps of the architecture; lambda_l, mu and nu as captioned.
    const Settings map_base = {
        {"run.quantity", "geometry-dump"}, {"run.seed", "1"},
        {"params.lambda_l", "3"},          {"params.mu", "3"},
        {"params.nu", "100 m"},            {"geometry.radius", "2 km"},
    };
    if (name == "fig1") return map_base;
    if (name == "fig2") return merge(map_base, {{"geometry.model", "manhattan"}});
    if (name == "fig3") {
        return {
            {"run.quantity", "laplace"}, {"run.mode", "both"},   {"run.seed", "1"},
            {"run.n", "10000"},          {"params.power", "0.01"}, {"params.alpha", "3"},
            {"params.lambda_l", "5"},    {"params.mu", "5"},       {"params.nu", "0.1"},
            {"grid.from", "0.002"},      {"grid.to", "1"},         {"grid.points", "10"},
            {"grid.spacing", "log"},
        };
    }
    if (name == "fig4") {
        // mu as captioned; lambda_l = 3, alpha = 3 and p = 1 assumed.
        return {
            {"run.quantity", "ase"},  {"params.lambda_l", "3"}, {"params.mu", "3"},
            {"params.alpha", "3"},    {"params.power", "1"},
            {"sweep.nu", "50 m, 100 m, 150 m, 200 m, 250 m"},
        };
    }
    if (name == "fig5") {
        // alpha = 2 from the caption is outside the model and is left out.
        return {
            {"run.quantity", "coverage"}, {"params.lambda_l", "3"}, {"params.mu", "3"},
            {"params.power", "1"},        {"sweep.nu", "0.1, 0.2"}, {"sweep.alpha", "3, 4"},
            {"grid.from", "-10"},         {"grid.to", "20"},        {"grid.points", "13"},
            {"grid.unit", "db"},
        };
    }
    if (name == "fig6") {
        return merge(map_base, {{"params.lambda_l", "4"},
                                {"params.mu", "5"},
                                {"params.speed", "100 km/h"},
                                {"geometry.time", "1000"},
                                {"geometry.palm", "false"},
                                {"geometry.radius", "1 km"}});
    }
    if (name == "fig7") {
        // Speeds as in the discussion; lambda_l = 4, mu = 5, nu = 0.1 assumed.
        return {
            {"run.quantity", "af-cumulative"}, {"params.lambda_l", "4"}, {"params.mu", "5"},
            {"params.nu", "0.1"},              {"run.variant", "direction-aware"},
            {"sweep.speed", "36 km/h, 72 km/h, 108 km/h"},
            {"grid.from", "0"},                {"grid.to", "60"},        {"grid.points", "13"},
        };
    }
    if (name == "fig8") {
        // Urban, suburban and rural road densities.
        return {
            {"run.quantity", "af-snapshot"}, {"params.mu", "3"},
            {"sweep.lambda_l", "3, 6, 9"},
            {"sweep.nu", "0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0"},
        };
    }
    if (name == "fig9") {
        return merge(map_base, {{"params.speed", "120 km/h"},
                                {"geometry.time", "200"},
                                {"geometry.palm", "false"}});
    }
    if (name == "fig10") {
        // lambda_l = 3, alpha = 3, tau = 1, p = 1 and v = 30 km/h assumed.
        return {
            {"run.quantity", "optimize"}, {"params.lambda_l", "3"},   {"params.alpha", "3"},
            {"params.power", "1"},        {"params.speed", "30 km/h"}, {"optimize.w1", "0.7"},
            {"optimize.w2", "0.3"},       {"optimize.tau", "1"},       {"optimize.nu_lo", "0.1"},
            {"optimize.nu_hi", "1.5"},    {"optimize.n_nu", "15"},     {"optimize.mu_lo", "0.25"},
            {"optimize.mu_hi", "0.75"},   {"optimize.n_mu", "11"},
        };
    }
    throw ConfigError(fmt::format("unknown preset '{}' (known: {})", name,
                                  fmt::join(preset_names(), ", ")));
}

Settings read_config_file(const std::string& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config {}: {}", path, e.what()));
    }
    Settings out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw ConfigError(fmt::format("config {}: key '{}' is outside any section", path,
                                          section));
        }
        for (const auto& [key, value] : body) out[section + "." + key] = trim(value.data());
    }
    return out;
}

Settings merge(Settings base, const Settings& over) {
    for (const auto& [k, v] : over) base[k] = v;
    return base;
}

// ---------------------------------------------------------------------------
// Resolution

namespace {

const std::set<std::string> kParamKeys = {"lambda_l", "mu",    "nu",           "speed",
                                          "power",    "alpha", "device_density"};

const std::set<std::string> kKnownKeys = {
    "run.quantity",        "run.mode",          "run.seed",          "run.n",
    "run.threads",         "run.out",           "run.variant",       "run.target",
    "run.sigma",           "grid.values",       "grid.from",         "grid.to",
    "grid.points",         "grid.spacing",      "grid.unit",         "quadrature.rel_tol",
    "quadrature.abs_tol",  "quadrature.truncation", "quadrature.fixed_radius",
    "quadrature.max_subdivisions", "window.initial_radius", "window.adaptive",
    "window.max_doublings", "window.stability", "window.pilot",     "optimize.w1",
    "optimize.w2",         "optimize.w3",       "optimize.tau",      "optimize.nu_lo",
    "optimize.nu_hi",      "optimize.n_nu",     "optimize.mu_lo",    "optimize.mu_hi",
    "optimize.n_mu",       "optimize.max_latency", "geometry.model", "geometry.radius",
    "geometry.half_length", "geometry.palm",    "geometry.devices",  "geometry.time",
};

bool known_key(const std::string& key) {
    if (kKnownKeys.count(key)) return true;
    for (const char* section : {"params.", "sweep."}) {
        const std::string_view s(section);
        if (key.rfind(s, 0) == 0 && kParamKeys.count(key.substr(s.size()))) return true;
    }
    return false;
}

// Wraps value parsing so every failure names its key.
template <class F>
auto field(const std::string& key, const std::string& text, F&& parse) {
    try {
        return parse(text);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
}

double number(const std::string& key, const std::string& text) {
    return field(key, text, [](const std::string& t) { return parse_plain_number(t); });
}

std::int64_t integer(const std::string& key, const std::string& text) {
    return field(key, text, [&](const std::string& t) {
        std::size_t used = 0;
        const long long v = std::stoll(t, &used);
        if (used != t.size()) throw ConfigError("expected an integer");
        return static_cast<std::int64_t>(v);
    });
}

std::uint64_t unsigned_integer(const std::string& key, const std::string& text) {
    return field(key, text, [&](const std::string& t) {
        std::size_t used = 0;
        if (!t.empty() && t[0] == '-') throw ConfigError("expected a nonnegative integer");
        const unsigned long long v = std::stoull(t, &used);
        if (used != t.size()) throw ConfigError("expected a nonnegative integer");
        return static_cast<std::uint64_t>(v);
    });
}

bool boolean(const std::string& key, const std::string& text) {
    const auto t = lower(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

std::vector<double> default_grid(Quantity q) {
    switch (q) {
    case Quantity::Laplace: return {0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    case Quantity::Coverage: return {0.1, 0.316227766016838, 1.0, 3.16227766016838, 10.0, 31.6227766016838, 100.0};
    case Quantity::AfCumulative:
    case Quantity::Latency: return {0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0};
    default: return {};
    }
}

std::vector<double> resolve_grid(const Settings& s, Quantity q) {
    auto get = [&](const char* k) -> std::optional<std::string> {
        auto it = s.find(k);
        if (it == s.end()) return std::nullopt;
        return it->second;
    };
    std::vector<double> grid;
    if (auto v = get("grid.values")) {
        for (const auto& item : split_list(*v)) grid.push_back(number("grid.values", item));
        if (get("grid.from") || get("grid.to") || get("grid.points"))
            throw ConfigError("grid: give either grid.values or grid.from/to/points, not both");
    } else if (get("grid.from") || get("grid.to") || get("grid.points")) {
        if (!get("grid.from") || !get("grid.to") || !get("grid.points"))
            throw ConfigError("grid: grid.from, grid.to and grid.points go together");
        const double from = number("grid.from", *get("grid.from"));
        const double to = number("grid.to", *get("grid.to"));
        const auto points = integer("grid.points", *get("grid.points"));
        if (points < 1) throw ConfigError("grid.points: must be at least 1");
        const std::string spacing = lower(get("grid.spacing").value_or("linear"));
        if (spacing != "linear" && spacing != "log")
            throw ConfigError("grid.spacing: expected linear or log");
        if (spacing == "log" && !(from > 0.0 && to > 0.0))
            throw ConfigError("grid: log spacing needs positive end points");
        for (std::int64_t i = 0; i < points; ++i) {
            const double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
            grid.push_back(spacing == "log" ? std::exp(std::log(from) + f * (std::log(to) - std::log(from)))
                                            : from + f * (to - from));
        }
        grid.front() = from;
        if (points > 1) grid.back() = to;
    } else {
        if (get("grid.spacing")) throw ConfigError("grid.spacing: needs grid.from/to/points");
        grid = default_grid(q);
        return grid;
    }
    const std::string unit = lower(get("grid.unit").value_or("linear"));
    if (unit == "db") {
        for (double& g : grid) g = std::pow(10.0, g / 10.0);
    } else if (unit != "linear") {
        throw ConfigError("grid.unit: expected linear or db");
    }
    for (double g : grid) {
        if (!(g >= 0.0) || !std::isfinite(g))
            throw ConfigError("grid: values must be finite and nonnegative");
    }
    return grid;
}

}  // namespace

ExperimentConfig resolve(const Settings& s, Quantity subcommand) {
    for (const auto& [key, value] : s) {
        if (!known_key(key)) throw ConfigError(fmt::format("unknown setting '{}'", key));
    }
    auto get = [&](const std::string& k) -> std::optional<std::string> {
        auto it = s.find(k);
        if (it == s.end()) return std::nullopt;
        return it->second;
    };

    ExperimentConfig c;
    c.resolved = s;
    c.quantity = subcommand;
    if (subcommand == Quantity::Validate) {
        std::optional<Quantity> target;
        if (auto t = get("run.target")) target = quantity_from_string(*t);
        else if (auto q = get("run.quantity")) target = quantity_from_string(*q);
        c.target = target.value_or(Quantity::Laplace);
        switch (c.target) {
        case Quantity::Optimize:
        case Quantity::GeometryDump:
        case Quantity::Validate:
            throw ConfigError(fmt::format("run.target: cannot validate '{}'", to_string(c.target)));
        default: break;
        }
        c.mode = Mode::Both;
    } else {
        c.target = subcommand;
        if (auto m = get("run.mode")) c.mode = mode_from_string(*m);
    }

    std::map<std::string, std::string> fields;
    for (const auto& [key, value] : s) {
        if (key.rfind("params.", 0) == 0) fields[key.substr(7)] = value;
        if (key.rfind("sweep.", 0) == 0) {
            auto values = split_list(value);
            if (values.empty()) throw ConfigError(fmt::format("{}: empty sweep", key));
            c.sweep[key.substr(6)] = values;
        }
    }
    try {
        c.params = convert_units(fields);
    } catch (const UnitParseError& e) {
        throw ConfigError(fmt::format("params: {}", e.what()));
    }
    // Every sweep value must parse and validate on its own.
    for (const auto& [field_name, values] : c.sweep) {
        for (const auto& v : values) {
            try {
                convert_units({{field_name, v}}, c.params);
            } catch (const UnitParseError& e) {
                throw ConfigError(fmt::format("sweep.{}: {}", field_name, e.what()));
            }
        }
    }

    if (auto v = get("run.seed")) c.seed = unsigned_integer("run.seed", *v);
    if (auto v = get("run.n")) c.n = integer("run.n", *v);
    if (c.n < 1) throw ConfigError("run.n: must be at least 1");
    if (auto v = get("run.threads")) {
        const auto t = integer("run.threads", *v);
        if (t < 0) throw ConfigError("run.threads: must be nonnegative");
        c.threads = static_cast<unsigned>(t);
    }
    if (auto v = get("run.out")) c.out_dir = *v;
    if (auto v = get("run.variant")) c.variant = *v;
    if (auto v = get("run.sigma")) {
        c.sigma = field("run.sigma", *v, [](const std::string& t) { return parse_speed_kmps(t); });
        if (!(c.sigma >= 0.0)) throw ConfigError("run.sigma: must be nonnegative");
    }
    if (c.variant) {
        if (c.target == Quantity::AfCumulative) {
            field("run.variant", *c.variant, [](const std::string& t) { return af_variant_from_string(t); });
        } else if (c.target == Quantity::Latency) {
            field("run.variant", *c.variant, [](const std::string& t) { return latency_variant_from_string(t); });
        } else {
            throw ConfigError(fmt::format("run.variant: '{}' has no variants", to_string(c.target)));
        }
    }

    if (auto v = get("quadrature.rel_tol")) c.quad.rel_tol = number("quadrature.rel_tol", *v);
    if (auto v = get("quadrature.abs_tol")) c.quad.abs_tol = number("quadrature.abs_tol", *v);
    if (auto v = get("quadrature.truncation")) {
        const auto t = lower(*v);
        if (t == "adaptive" || t == "adaptivedoubling") c.quad.truncation = Truncation::AdaptiveDoubling;
        else if (t == "fixed" || t == "fixedradius") c.quad.truncation = Truncation::FixedRadius;
        else throw ConfigError("quadrature.truncation: expected adaptive or fixed");
    }
    if (auto v = get("quadrature.fixed_radius"))
        c.quad.fixed_radius = field("quadrature.fixed_radius", *v, [](const std::string& t) { return parse_length_km(t); });
    if (auto v = get("quadrature.max_subdivisions"))
        c.quad.max_subdivisions = static_cast<int>(integer("quadrature.max_subdivisions", *v));
    field("quadrature", std::string(), [&](const std::string&) {
        c.quad.check();
        return 0;
    });

    if (auto v = get("window.initial_radius"))
        c.window.initial_radius = field("window.initial_radius", *v, [](const std::string& t) { return parse_length_km(t); });
    if (auto v = get("window.adaptive")) c.window.adaptive = boolean("window.adaptive", *v);
    if (auto v = get("window.max_doublings"))
        c.window.max_doublings = static_cast<int>(integer("window.max_doublings", *v));
    if (auto v = get("window.stability")) c.window.stability = number("window.stability", *v);
    if (auto v = get("window.pilot")) c.window.pilot = integer("window.pilot", *v);
    if (c.window.max_doublings < 0 || !(c.window.stability > 0.0) || c.window.pilot < 2)
        throw ConfigError("window: need max_doublings >= 0, stability > 0 and pilot >= 2");

    if (auto v = get("optimize.w1")) c.weights.w1 = number("optimize.w1", *v);
    if (auto v = get("optimize.w2")) c.weights.w2 = number("optimize.w2", *v);
    if (auto v = get("optimize.w3")) c.weights.w3 = number("optimize.w3", *v);
    if (auto v = get("optimize.tau")) c.weights.tau = number("optimize.tau", *v);
    if (auto v = get("optimize.nu_lo"))
        c.opt_grid.nu_lo = field("optimize.nu_lo", *v, [](const std::string& t) { return parse_length_km(t); });
    if (auto v = get("optimize.nu_hi"))
        c.opt_grid.nu_hi = field("optimize.nu_hi", *v, [](const std::string& t) { return parse_length_km(t); });
    if (auto v = get("optimize.n_nu")) c.opt_grid.n_nu = static_cast<int>(integer("optimize.n_nu", *v));
    if (auto v = get("optimize.mu_lo"))
        c.opt_grid.mu_lo = field("optimize.mu_lo", *v, [](const std::string& t) { return parse_linear_density_per_km(t); });
    if (auto v = get("optimize.mu_hi"))
        c.opt_grid.mu_hi = field("optimize.mu_hi", *v, [](const std::string& t) { return parse_linear_density_per_km(t); });
    if (auto v = get("optimize.n_mu")) c.opt_grid.n_mu = static_cast<int>(integer("optimize.n_mu", *v));
    if (auto v = get("optimize.max_latency")) c.max_latency = number("optimize.max_latency", *v);
    if (c.quantity == Quantity::Optimize) {
        field("optimize", std::string(), [&](const std::string&) {
            c.weights.check();
            c.opt_grid.check();
            return 0;
        });
    }

    if (auto v = get("geometry.model")) {
        const auto m = lower(*v);
        if (m == "isotropic") c.geometry.model = LineModel::Isotropic;
        else if (m == "manhattan") c.geometry.model = LineModel::Manhattan;
        else throw ConfigError("geometry.model: expected isotropic or manhattan");
    }
    if (auto v = get("geometry.radius"))
        c.geometry.radius = field("geometry.radius", *v, [](const std::string& t) { return parse_length_km(t); });
    if (auto v = get("geometry.half_length"))
        c.geometry.half_length = field("geometry.half_length", *v, [](const std::string& t) { return parse_length_km(t); });
    if (auto v = get("geometry.palm")) c.geometry.palm = boolean("geometry.palm", *v);
    if (auto v = get("geometry.devices")) c.geometry.devices = boolean("geometry.devices", *v);
    if (auto v = get("geometry.time")) c.geometry.time = number("geometry.time", *v);
    if (!(c.geometry.radius > 0.0) || !(c.geometry.half_length >= 0.0) || !(c.geometry.time >= 0.0))
        throw ConfigError("geometry: radius must be positive, half_length and time nonnegative");

    c.grid = resolve_grid(s, c.target);

    const bool stochastic = c.mode != Mode::Analytic || c.quantity == Quantity::GeometryDump;
    if (stochastic && !c.seed) throw ConfigError("run.seed: required for Monte Carlo and geometry runs");
    if ((c.quantity == Quantity::Optimize || c.quantity == Quantity::GeometryDump) && !c.sweep.empty())
        throw ConfigError(fmt::format("sweep: not supported by '{}'", to_string(c.quantity)));
    if (c.quantity == Quantity::Optimize && c.mode != Mode::Analytic)
        throw ConfigError("run.mode: optimize is analytic only");
    return c;
}

// ---------------------------------------------------------------------------
// Running

namespace {

constexpr int kAnalyticCsvSchema = 1;
constexpr int kComparisonCsvSchema = 1;
constexpr int kParamsCsvSchema = 1;

std::vector<NetworkParams> expand_sweep(const ExperimentConfig& c) {
    std::vector<NetworkParams> out{c.params};
    for (const auto& [field_name, values] : c.sweep) {
        std::vector<NetworkParams> next;
        for (const auto& base : out)
            for (const auto& v : values) next.push_back(convert_units({{field_name, v}}, base));
        out = std::move(next);
    }
    return out;
}

// Opens a fresh output file; outputs are never overwritten.
std::ofstream open_output(const fs::path& path) {
    if (fs::exists(path))
        throw ConfigError(fmt::format("refusing to overwrite existing output {}", path.string()));
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError(fmt::format("cannot open {} for writing", path.string()));
    return os;
}

struct AnalyticRow {
    std::string quantity;
    std::string variant;
    std::optional<double> grid_value;
    std::optional<double> value;  // empty when the quantity does not exist (divergent mean)
    std::optional<double> error_bound;
};

struct McRow {
    std::string quantity;
    std::optional<double> grid_value;
    Estimate estimate;
};

struct Comparison {
    std::string quantity;
    std::string variant;
    std::optional<double> grid_value;
    double analytic;
    Estimate mc;
};

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

// Error bound reported for analytic values that do not carry their own: the
// requested tolerance, which adaptive subdivision meets or raises on failure.
double nominal_bound(const QuadratureSpec& q, double value) {
    return q.rel_tol * std::abs(value) + q.abs_tol;
}

struct PointResult {
    std::vector<AnalyticRow> analytic;
    std::vector<McRow> mc;
    std::vector<Comparison> compare;
    std::vector<json> windows;
};

McOptions mc_options(const ExperimentConfig& c) {
    McOptions o;
    o.seed = c.seed.value_or(0);
    o.n = c.n;
    o.threads = c.threads;
    o.window = c.window;
    return o;
}

json window_json(const char* quantity, const WindowReport& w) {
    return json{{"quantity", quantity},
                {"radius_km", w.radius},
                {"doublings", w.doublings},
                {"shift_in_se", w.shift_in_se}};
}

PointResult run_point(const ExperimentConfig& c, const NetworkParams& p) {
    const Quantity q = c.target;
    const bool analytic = c.mode != Mode::MonteCarlo;
    const bool mc = c.mode != Mode::Analytic;
    const bool compare = c.quantity == Quantity::Validate;
    const McOptions o = mc_options(c);
    PointResult r;

    switch (q) {
    case Quantity::Laplace: {
        std::vector<double> values;
        if (analytic) {
            LaplaceEvaluator ev(p, c.quad);
            for (double s : c.grid) {
                const auto b = ev.evaluate(s);
                values.push_back(b.value);
                r.analytic.push_back({"laplace", "", s, b.value, b.error_bound});
            }
        }
        if (mc) {
            const auto m = estimate_laplace(p, c.grid, o);
            r.windows.push_back(window_json("laplace", m.window));
            for (std::size_t i = 0; i < c.grid.size(); ++i) {
                r.mc.push_back({"laplace", c.grid[i], m.estimates[i]});
                r.mc.push_back({"laplace_other_lines", c.grid[i], m.other_lines[i]});
                r.mc.push_back({"laplace_typical_line", c.grid[i], m.typical_line[i]});
                r.mc.push_back({"laplace_factor_covariance", c.grid[i], m.covariance[i]});
                if (compare) r.compare.push_back({"laplace", "", c.grid[i], values[i], m.estimates[i]});
            }
        }
        break;
    }
    case Quantity::Coverage: {
        std::vector<double> values;
        if (analytic) {
            LaplaceEvaluator ev(p, c.quad);
            for (double tau : c.grid) {
                const double v = coverage_probability(tau, ev);
                values.push_back(v);
                r.analytic.push_back({"coverage", "", tau, v, nominal_bound(c.quad, v)});
            }
        }
        if (mc) {
            const auto m = estimate_coverage(p, c.grid, o);
            r.windows.push_back(window_json("coverage", m.window));
            for (std::size_t i = 0; i < c.grid.size(); ++i) {
                r.mc.push_back({"coverage", c.grid[i], m.estimates[i]});
                if (compare) r.compare.push_back({"coverage", "", c.grid[i], values[i], m.estimates[i]});
            }
        }
        break;
    }
    case Quantity::Ase: {
        double value = 0.0;
        if (analytic) {
            value = area_spectral_efficiency(LaplaceEvaluator(p, c.quad));
            r.analytic.push_back({"ase", "", std::nullopt, value, nominal_bound(c.quad, value)});
        }
        if (mc) {
            const auto m = estimate_ase(p, o);
            r.windows.push_back(window_json("ase", m.window));
            r.mc.push_back({"ase", std::nullopt, m.estimates[0]});
            if (compare) r.compare.push_back({"ase", "", std::nullopt, value, m.estimates[0]});
        }
        break;
    }
    case Quantity::AfSnapshot: {
        double value = 0.0;
        if (analytic) {
            value = af_snapshot(p, c.quad);
            r.analytic.push_back({"af_snapshot", "", std::nullopt, value, nominal_bound(c.quad, value)});
            r.analytic.push_back({"af_limit", "", std::nullopt, af_limit(p), 0.0});
        }
        if (mc) {
            const auto e = estimate_af_snapshot(p, o);
            r.mc.push_back({"af_snapshot", std::nullopt, e});
            if (compare) r.compare.push_back({"af_snapshot", "", std::nullopt, value, e});
        }
        break;
    }
    case Quantity::AfCumulative: {
        const AFVariant variant =
            c.variant ? af_variant_from_string(*c.variant) : AFVariant::DirectionAware;
        std::vector<double> values;
        if (analytic) {
            for (double t : c.grid) {
                const double v = af_cumulative(t, p, c.quad, variant);
                values.push_back(v);
                r.analytic.push_back({"af_cumulative", to_string(variant), t, v, nominal_bound(c.quad, v)});
            }
            r.analytic.push_back({"af_limit", "", std::nullopt, af_limit(p), 0.0});
        }
        if (mc) {
            const auto m = c.sigma > 0.0 ? randomized_speed_af(p, c.sigma, c.grid, o)
                                         : estimate_af_cumulative(p, c.grid, o);
            const char* name = c.sigma > 0.0 ? "af_cumulative_random_speed" : "af_cumulative";
            for (std::size_t i = 0; i < c.grid.size(); ++i) {
                r.mc.push_back({name, c.grid[i], m.estimates[i]});
                if (compare)
                    r.compare.push_back({"af_cumulative", to_string(variant), c.grid[i], values[i], m.estimates[i]});
            }
        }
        break;
    }
    case Quantity::Latency: {
        const LatencyVariant variant = c.variant ? latency_variant_from_string(*c.variant)
                                                 : LatencyVariant::DirectionAwareConditioned;
        const bool conditioned = variant == LatencyVariant::DirectionAwareConditioned;
        std::vector<double> values;
        std::optional<double> mean;
        if (analytic) {
            for (double w : c.grid) {
                const double v = latency_ccdf(w, p, c.quad, variant);
                values.push_back(v);
                r.analytic.push_back({"latency_ccdf", to_string(variant), w, v, nominal_bound(c.quad, v)});
            }
            r.analytic.push_back({"latency_ccdf_limit", to_string(variant), std::nullopt,
                                  latency_ccdf_limit(p, variant), 0.0});
            const auto m = mean_latency(p, c.quad, variant);
            if (const double* v = std::get_if<double>(&m)) {
                mean = *v;
                r.analytic.push_back({"mean_latency", to_string(variant), std::nullopt, *v, nominal_bound(c.quad, *v)});
            } else {
                r.analytic.push_back({"mean_latency", to_string(variant), std::nullopt, std::nullopt, std::nullopt});
            }
        }
        if (mc) {
            const auto m = estimate_latency(p, c.grid, o);
            r.mc.push_back({"latency_mean", std::nullopt, m.mean});
            r.mc.push_back({"latency_p_zero", std::nullopt, m.p_zero});
            for (std::size_t i = 0; i < c.grid.size(); ++i) {
                r.mc.push_back({"latency_ccdf_conditioned", c.grid[i], m.ccdf[i]});
                if (compare) {
                    const Estimate e = conditioned ? m.ccdf[i] : unconditioned_ccdf(m.ccdf[i], p);
                    r.compare.push_back({"latency_ccdf", to_string(variant), c.grid[i], values[i], e});
                }
            }
            if (compare && mean) r.compare.push_back({"mean_latency", to_string(variant), std::nullopt, *mean, m.mean});
        }
        break;
    }
    default: throw Error("run_point: not a per-parameter quantity");
    }
    return r;
}

json resolved_json(const ExperimentConfig& c) {
    const auto& p = c.params;
    json j;
    j["params"] = {{"lambda_l_per_km", p.lambda_l}, {"mu_per_km", p.mu},   {"nu_km", p.nu},
                   {"speed_km_per_s", p.speed},     {"power", p.power},     {"alpha", p.alpha}};
    if (p.device_density) j["params"]["device_density_per_km2"] = *p.device_density;
    j["sweep"] = json(c.sweep);
    j["grid"] = c.grid;
    j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
    j["n"] = c.n;
    j["threads"] = c.threads;
    j["quadrature"] = {{"rel_tol", c.quad.rel_tol},
                       {"abs_tol", c.quad.abs_tol},
                       {"truncation", c.quad.truncation == Truncation::FixedRadius ? "fixed" : "adaptive"},
                       {"fixed_radius_km", c.quad.fixed_radius},
                       {"max_subdivisions", c.quad.max_subdivisions}};
    j["window"] = {{"initial_radius_km", c.window.initial_radius},
                   {"adaptive", c.window.adaptive},
                   {"max_doublings", c.window.max_doublings},
                   {"stability", c.window.stability},
                   {"pilot", c.window.pilot}};
    j["variant"] = c.variant ? json(*c.variant) : json(nullptr);
    j["sigma_km_per_s"] = c.sigma;
    if (c.quantity == Quantity::Optimize) {
        j["weights"] = {{"w1", c.weights.w1}, {"w2", c.weights.w2}, {"w3", c.weights.w3}, {"tau", c.weights.tau}};
        j["optimize_grid"] = {{"nu_lo", c.opt_grid.nu_lo}, {"nu_hi", c.opt_grid.nu_hi}, {"n_nu", c.opt_grid.n_nu},
                              {"mu_lo", c.opt_grid.mu_lo}, {"mu_hi", c.opt_grid.mu_hi}, {"n_mu", c.opt_grid.n_mu}};
        j["max_latency_s"] = c.max_latency ? json(*c.max_latency) : json(nullptr);
    }
    if (c.quantity == Quantity::GeometryDump) {
        j["geometry"] = {{"model", c.geometry.model == LineModel::Manhattan ? "manhattan" : "isotropic"},
                         {"radius_km", c.geometry.radius}, {"half_length_km", c.geometry.half_length},
                         {"palm", c.geometry.palm}, {"devices", c.geometry.devices}, {"time_s", c.geometry.time}};
    }
    return j;
}

}  // namespace

int run(const ExperimentConfig& c, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path out(c.out_dir);
    fs::create_directories(out);
    json manifest;
    manifest["schema"] = 1;
    manifest["command"] = to_string(c.quantity);
    if (c.quantity == Quantity::Validate) manifest["target"] = to_string(c.target);
    manifest["mode"] = to_string(c.mode);
    manifest["preset"] = c.preset;
    manifest["build"] = PLCOX_BUILD_DESCRIBE;
    manifest["settings"] = json(c.resolved);
    manifest["resolved"] = resolved_json(c);
    manifest["tolerances"] = {{"rel_tol", c.quad.rel_tol}, {"abs_tol", c.quad.abs_tol}};
    json files = json::array();
    json warnings = json::array();
    int exit_code = 0;

    auto warn = [&](const std::string& msg) {
        fmt::print(log, "warning: {}\n", msg);
        warnings.push_back(msg);
    };

    if (auto w = empty_disk_warning(c.params)) warn(*w);

    if (c.quantity == Quantity::GeometryDump) {
        RandomStream stream(*c.seed);
        const double half = c.geometry.half_length > 0.0
                                ? c.geometry.half_length
                                : c.geometry.radius + c.params.speed * c.geometry.time;
        Snapshot snap = c.geometry.palm
                            ? palm_snapshot(c.params, c.geometry.radius, half, stream, c.geometry.model)
                            : sample_snapshot(c.params, c.geometry.radius, half, stream, c.geometry.model);
        snap = advance(std::move(snap), c.geometry.time);
        if (c.geometry.devices) {
            RandomStream device_stream = stream.split(20);
            snap = place_devices(std::move(snap), c.params.nu, device_stream);
        }
        auto os = open_output(out / "snapshot.csv");
        write_snapshot_csv(os, snap);
        files.push_back("snapshot.csv");
        fmt::print(log, "{} roads, {} vehicles -> {}\n", snap.lines.size(), snap.vehicles.size(),
                   (out / "snapshot.csv").string());
    } else if (c.quantity == Quantity::Optimize) {
        const auto best = optimize_grid(c.params, c.weights, c.opt_grid, c.max_latency, c.quad, c.threads);
        {
            auto os = open_output(out / "surface.csv");
            write_surface_csv(os, best.surface);
            files.push_back("surface.csv");
        }
        {
            auto os = open_output(out / "optimum.csv");
            os << "schema,kind,nu,mu,p_c,af_limit,mean_latency,utility\n";
            for (const auto& [kind, cell] : {std::pair{"grid", best.best}, std::pair{"refined", best.refined}}) {
                const std::string lat = std::isnan(cell.mean_latency) ? "" : fmt::format("{}", cell.mean_latency);
                fmt::print(os, "1,{},{},{},{},{},{},{}\n", kind, cell.nu, cell.mu, cell.p_c,
                           cell.af_limit, lat, cell.utility);
            }
            files.push_back("optimum.csv");
        }
        const auto unimodal = unimodal_in_nu(best.surface);
        manifest["unimodal_in_nu"] = unimodal;
        fmt::print(log, "optimum nu = {} km, mu = {} /km, utility = {:.6f}; refined nu = {}, mu = {}, utility = {:.6f}\n",
                   best.best.nu, best.best.mu, best.best.utility, best.refined.nu, best.refined.mu,
                   best.refined.utility);
        if (!std::all_of(unimodal.begin(), unimodal.end(), [](bool b) { return b; }))
            warn("utility is not unimodal in nu for every mu column");
    } else {
        const auto points = expand_sweep(c);
        std::optional<std::ofstream> a_os, m_os, c_os;
        if (c.mode != Mode::MonteCarlo && c.quantity != Quantity::Validate) {
            a_os.emplace(open_output(out / "analytic.csv"));
            *a_os << "schema,quantity,variant,grid_value,value,est_error_bound,params_hash\n";
            files.push_back("analytic.csv");
        }
        if (c.mode != Mode::Analytic) {
            m_os.emplace(open_output(out / "montecarlo.csv"));
            write_mc_csv_header(*m_os);
            files.push_back("montecarlo.csv");
        }
        if (c.quantity == Quantity::Validate) {
            a_os.emplace(open_output(out / "analytic.csv"));
            *a_os << "schema,quantity,variant,grid_value,value,est_error_bound,params_hash\n";
            files.push_back("analytic.csv");
            c_os.emplace(open_output(out / "comparison.csv"));
            *c_os << "schema,quantity,variant,grid_value,analytic,mc,std_error,z,params_hash\n";
            files.push_back("comparison.csv");
        }
        auto p_os = open_output(out / "params.csv");
        p_os << "schema,params_hash,lambda_l,mu,nu,speed_kmph,power,alpha\n";
        files.push_back("params.csv");

        json windows = json::array();
        double max_abs_z = 0.0;
        for (const auto& p : points) {
            const std::string hash = params_hash(p);
            fmt::print(p_os, "{},{},{},{},{},{},{},{}\n", kParamsCsvSchema, hash, p.lambda_l, p.mu,
                       p.nu, kmps_to_kmph(p.speed), p.power, p.alpha);
            const PointResult r = run_point(c, p);
            for (const auto& row : r.analytic) {
                fmt::print(*a_os, "{},{},{},{},{},{},{}\n", kAnalyticCsvSchema, row.quantity,
                           row.variant, opt(row.grid_value), opt(row.value), opt(row.error_bound), hash);
                if (!row.value)
                    warn(fmt::format("{} ({}) diverges for params {}", row.quantity, row.variant, hash));
            }
            for (const auto& row : r.mc) {
                write_mc_csv_rows(*m_os, row.quantity,
                                  row.grid_value ? std::vector<double>{*row.grid_value} : std::vector<double>{},
                                  {row.estimate}, *c.seed, p);
            }
            for (const auto& row : r.compare) {
                const double z = row.mc.z_score(row.analytic);
                max_abs_z = std::max(max_abs_z, std::abs(z));
                fmt::print(*c_os, "{},{},{},{},{},{},{},{},{}\n", kComparisonCsvSchema, row.quantity,
                           row.variant, opt(row.grid_value), row.analytic, row.mc.value,
                           row.mc.std_error, z, hash);
                const std::string where = row.grid_value ? fmt::format(" at {}", *row.grid_value) : "";
                if (std::abs(z) > 3.0) {
                    warn(fmt::format("{}{}: |z| = {:.2f} > 3, analytic and Monte Carlo disagree",
                                     row.quantity, where, std::abs(z)));
                    exit_code = 1;
                } else if (std::abs(z) > 2.0) {
                    warn(fmt::format("{}{}: |z| = {:.2f} > 2", row.quantity, where, std::abs(z)));
                }
            }
            for (auto w : r.windows) {
                w["params_hash"] = hash;
                windows.push_back(w);
            }
        }
        if (!windows.empty()) manifest["windows"] = windows;
        if (c.quantity == Quantity::Validate) {
            manifest["max_abs_z"] = max_abs_z;
            fmt::print(log, "validate {}: max |z| = {:.3f} ({})\n", to_string(c.target), max_abs_z,
                       exit_code == 0 ? "agree" : "DISAGREE");
        }
        fmt::print(log, "{}: {} parameter point(s) -> {}\n", to_string(c.quantity), points.size(),
                   out.string());
    }

    manifest["files"] = files;
    manifest["warnings"] = warnings;
    manifest["exit_code"] = exit_code;
    manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto ms = open_output(out / "manifest.json");
    ms << manifest.dump(2) << "\n";
    return exit_code;
}

int execute(Quantity subcommand, const std::optional<std::string>& preset,
            const std::optional<std::string>& config_path, const Settings& cli_layer,
            std::ostream& log, std::ostream& err) {
    try {
        Settings s;
        if (preset) s = preset_settings(*preset);
        if (config_path) s = merge(std::move(s), read_config_file(*config_path));
        s = merge(std::move(s), cli_layer);
        ExperimentConfig c = resolve(s, subcommand);
        c.preset = preset.value_or("");
        return run(c, log);
    } catch (const ValidationError& e) {
        fmt::print(err, "error: invalid parameters\n");
        for (const auto& issue : e.issues())
            fmt::print(err, "  {}: {} ({})\n", issue.field, issue.message, to_string(issue.code));
        return 2;
    } catch (const ConfigError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    } catch (const UnitParseError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    } catch (const ZeroSpeed& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    } catch (const QuadratureNotConverged& e) {
        fmt::print(err, "numerical failure: {} (error bound {})\n", e.what(), e.error_bound());
        return 1;
    } catch (const WindowNotConverged& e) {
        fmt::print(err, "numerical failure: {}\n", e.what());
        return 1;
    } catch (const EmptyFeasibleSet& e) {
        fmt::print(err, "numerical failure: {}\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 1;
    }
}

}  // namespace plcox
