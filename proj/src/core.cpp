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

#include "plcox/core.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

namespace plcox {

const char* to_string(IssueCode code) {
    switch (code) {
    case IssueCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case IssueCode::NonPositiveDensity: return "NonPositiveDensity";
    case IssueCode::NegativeSpeed: return "NegativeSpeed";
    case IssueCode::NonFinite: return "NonFinite";
    }
    return "Unknown";
}

namespace {

std::string join_issues(const std::vector<FieldIssue>& issues) {
    std::string out = "invalid network parameters:";
    for (const auto& issue : issues) {
        out += fmt::format(" [{}: {} ({})]", issue.field, to_string(issue.code), issue.message);
    }
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<FieldIssue> issues)
    : Error(join_issues(issues)), issues_(std::move(issues)) {}

bool ValidationError::has(IssueCode code) const {
    return std::any_of(issues_.begin(), issues_.end(),
                       [code](const FieldIssue& i) { return i.code == code; });
}

NetworkParams validate(const NetworkParams& params) {
    std::vector<FieldIssue> issues;
    auto positive = [&](const char* name, double value) {
        if (!std::isfinite(value)) {
            issues.push_back({name, IssueCode::NonFinite, "must be finite"});
        } else if (value <= 0.0) {
            issues.push_back({name, IssueCode::NonPositiveDensity,
                              fmt::format("must be > 0, got {}", value)});
        }
    };
    positive("lambda_l", params.lambda_l);
    positive("mu", params.mu);
    positive("nu", params.nu);
    positive("power", params.power);
    if (params.device_density) positive("device_density", *params.device_density);

    if (!std::isfinite(params.speed)) {
        issues.push_back({"speed", IssueCode::NonFinite, "must be finite"});
    } else if (params.speed < 0.0) {
        issues.push_back({"speed", IssueCode::NegativeSpeed,
                          fmt::format("must be >= 0, got {}", params.speed)});
    }
    // The planar interference sums diverge for alpha <= 2.
    if (!std::isfinite(params.alpha)) {
        issues.push_back({"alpha", IssueCode::NonFinite, "must be finite"});
    } else if (params.alpha <= 2.0) {
        issues.push_back({"alpha", IssueCode::AlphaOutOfRange,
                          fmt::format("path-loss exponent must exceed 2, got {}", params.alpha)});
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return params;
}

std::optional<double> empty_disk_probability(const NetworkParams& params) {
    if (!params.device_density) return std::nullopt;
    return std::exp(-std::numbers::pi * *params.device_density * params.nu * params.nu);
}

std::optional<std::string> empty_disk_warning(const NetworkParams& params, double threshold) {
    auto p = empty_disk_probability(params);
    if (!p || *p <= threshold) return std::nullopt;
    return fmt::format(
        "empty coverage-disk probability {:.3g} exceeds {:.0e}; one device per disk is "
        "assumed regardless",
        *p, threshold);
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string normalize_unit(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

struct Quantity {
    double value;
    std::string unit;
};

Quantity split_quantity(std::string_view text) {
    auto s = trim(text);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{}) {
        throw UnitParseError(fmt::format("cannot parse a number from '{}'", text));
    }
    std::string_view rest(ptr, static_cast<std::size_t>(s.data() + s.size() - ptr));
    return {value, normalize_unit(rest)};
}

[[noreturn]] void bad_unit(std::string_view text, std::string_view kind) {
    throw UnitParseError(fmt::format("unrecognized {} unit in '{}'", kind, text));
}

}  // namespace

double parse_plain_number(std::string_view text) {
    auto q = split_quantity(text);
    if (!q.unit.empty()) bad_unit(text, "dimensionless");
    return q.value;
}

double parse_length_km(std::string_view text) {
    auto q = split_quantity(text);
    if (q.unit.empty() || q.unit == "km") return q.value;
    if (q.unit == "m") return q.value / 1000.0;
    bad_unit(text, "length");
}

double parse_speed_kmps(std::string_view text) {
    auto q = split_quantity(text);
    if (q.unit.empty() || q.unit == "km/h" || q.unit == "kmh" || q.unit == "kph")
        return kmph_to_kmps(q.value);
    if (q.unit == "km/s") return q.value;
    if (q.unit == "m/s") return q.value / 1000.0;
    bad_unit(text, "speed");
}

double parse_linear_density_per_km(std::string_view text) {
    auto q = split_quantity(text);
    if (q.unit.empty() || q.unit == "/km" || q.unit == "perkm") return q.value;
    if (q.unit == "/m" || q.unit == "perm") return q.value * 1000.0;
    bad_unit(text, "linear density");
}

double parse_areal_density_per_km2(std::string_view text) {
    auto q = split_quantity(text);
    if (q.unit.empty() || q.unit == "/km2" || q.unit == "/km^2") return q.value;
    if (q.unit == "/m2" || q.unit == "/m^2") return q.value * 1e6;
    bad_unit(text, "areal density");
}

std::string format_length(double km, std::string_view unit) {
    if (unit == "km") return fmt::format("{} km", km);
    if (unit == "m") return fmt::format("{} m", km * 1000.0);
    throw UnitParseError(fmt::format("unrecognized length unit '{}'", unit));
}

std::string format_speed(double km_per_s, std::string_view unit) {
    if (unit == "km/h") return fmt::format("{} km/h", kmps_to_kmph(km_per_s));
    if (unit == "km/s") return fmt::format("{} km/s", km_per_s);
    if (unit == "m/s") return fmt::format("{} m/s", km_per_s * 1000.0);
    throw UnitParseError(fmt::format("unrecognized speed unit '{}'", unit));
}

NetworkParams convert_units(const std::map<std::string, std::string>& fields, NetworkParams base) {
    for (const auto& [key, text] : fields) {
        if (key == "lambda_l") base.lambda_l = parse_linear_density_per_km(text);
        else if (key == "mu") base.mu = parse_linear_density_per_km(text);
        else if (key == "nu") base.nu = parse_length_km(text);
        else if (key == "speed") base.speed = parse_speed_kmps(text);
        else if (key == "power") base.power = parse_plain_number(text);
        else if (key == "alpha") base.alpha = parse_plain_number(text);
        else if (key == "device_density") base.device_density = parse_areal_density_per_km2(text);
        else throw UnitParseError(fmt::format("unknown parameter '{}'", key));
    }
    return validate(base);
}

// ---------------------------------------------------------------------------

double Estimate::z_score(double reference) const {
    const double diff = value - reference;
    if (std_error > 0.0) return diff / std_error;
    if (diff == 0.0) return 0.0;
    return diff > 0 ? HUGE_VAL : -HUGE_VAL;
}

double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

Estimate estimate_from_samples(const std::vector<double>& samples) {
    if (samples.empty()) throw Error("estimate_from_samples: empty sample");
    const auto n = samples.size();
    const double mean = pairwise_sum(samples.data(), n) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = samples[i] - mean;
        sq[i] = d * d;
    }
    double se = 0.0;
    if (n > 1) {
        const double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
        se = std::sqrt(var / static_cast<double>(n));
    }
    return {mean, se, static_cast<std::int64_t>(n)};
}

void QuadratureSpec::check() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw Error("QuadratureSpec: tolerances must be positive");
    if (max_subdivisions < 1) throw Error("QuadratureSpec: max_subdivisions must be >= 1");
    if (truncation == Truncation::FixedRadius && !(fixed_radius > 0.0))
        throw Error("QuadratureSpec: fixed_radius must be positive");
}

const char* to_string(LatencyVariant v) {
    switch (v) {
    case LatencyVariant::PaperVerbatim: return "PaperVerbatim";
    case LatencyVariant::DirectionAware: return "DirectionAware";
    case LatencyVariant::DirectionAwareConditioned: return "DirectionAwareConditioned";
    }
    return "Unknown";
}

LatencyVariant latency_variant_from_string(std::string_view name) {
    auto n = normalize_unit(name);
    std::erase_if(n, [](char c) { return c == '-' || c == '_'; });
    if (n == "paperverbatim" || n == "paper") return LatencyVariant::PaperVerbatim;
    if (n == "directionaware" || n == "da") return LatencyVariant::DirectionAware;
    if (n == "directionawareconditioned" || n == "conditioned")
        return LatencyVariant::DirectionAwareConditioned;
    throw Error(fmt::format("unknown latency variant '{}'", name));
}

std::string params_hash(const NetworkParams& p) {
    // FNV-1a over the raw bit patterns.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double x) {
        auto bits = std::bit_cast<std::uint64_t>(x);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    mix(p.lambda_l);
    mix(p.mu);
    mix(p.nu);
    mix(p.speed);
    mix(p.power);
    mix(p.alpha);
    mix(p.device_density.value_or(-1.0));
    return fmt::format("{:016x}", h);
}

}  // namespace plcox
