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

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace plcox {

// Canonical units throughout the library: kilometres and seconds.

struct NetworkParams {
    double lambda_l = 3.0;   // road density, lines per km
    double mu = 3.0;         // vehicles per km of road
    double nu = 0.1;         // coverage-disk radius, km
    double speed = 0.0;      // km/s
    double power = 1.0;      // linear transmit power
    double alpha = 3.0;      // path-loss exponent, must exceed 2
    std::optional<double> device_density;  // devices per km^2, advisory

    bool operator==(const NetworkParams&) const = default;
};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class IssueCode {
    AlphaOutOfRange,
    NonPositiveDensity,
    NegativeSpeed,
    NonFinite,
};

const char* to_string(IssueCode code);

struct FieldIssue {
    std::string field;
    IssueCode code;
    std::string message;
};

/// Raised by validate(); carries one entry per offending field.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<FieldIssue> issues);
    const std::vector<FieldIssue>& issues() const { return issues_; }
    bool has(IssueCode code) const;

private:
    std::vector<FieldIssue> issues_;
};

class UnitParseError : public Error {
public:
    using Error::Error;
};

class QuadratureNotConverged : public Error {
public:
    QuadratureNotConverged(std::string what, double error_bound)
        : Error(std::move(what)), error_bound_(error_bound) {}
    double error_bound() const { return error_bound_; }

private:
    double error_bound_;
};

class WindowNotConverged : public Error {
public:
    using Error::Error;
};

class ZeroSpeed : public Error {
public:
    using Error::Error;
};

NetworkParams validate(const NetworkParams& params);

/// Probability that a coverage disk holds no device, exp(-pi lambda nu^2).
std::optional<double> empty_disk_probability(const NetworkParams& params);

/// Warning text when devices are too sparse for the one-device-per-disk model.
std::optional<std::string> empty_disk_warning(const NetworkParams& params,
                                              double threshold = 1e-3);

// ---------------------------------------------------------------------------
// Unit handling for config-level values such as "108 km/h" or "100 m".
// A bare number is taken in the field's config default unit: km for lengths,
// km/h for speed, per km for linear density and per km^2 for areal density.

double parse_length_km(std::string_view text);
double parse_speed_kmps(std::string_view text);
double parse_linear_density_per_km(std::string_view text);
double parse_areal_density_per_km2(std::string_view text);
double parse_plain_number(std::string_view text);

std::string format_length(double km, std::string_view unit);
std::string format_speed(double km_per_s, std::string_view unit);

constexpr double kSecondsPerHour = 3600.0;
constexpr double kmph_to_kmps(double kmph) { return kmph / kSecondsPerHour; }
constexpr double kmps_to_kmph(double kmps) { return kmps * kSecondsPerHour; }

/// Builds canonical params from config-style strings keyed by field name
/// (lambda_l, mu, nu, speed, power, alpha, device_density) and validates.
/// Unknown keys raise UnitParseError.
NetworkParams convert_units(const std::map<std::string, std::string>& fields,
                            NetworkParams base = {});

// ---------------------------------------------------------------------------

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 1;

    /// Symmetric normal-approximation interval, value +/- z * std_error.
    double lower(double z = 1.96) const { return value - z * std_error; }
    double upper(double z = 1.96) const { return value + z * std_error; }
    /// Distance from a reference value in units of standard error.
    double z_score(double reference) const;
};

/// Mean and standard error of a sample, with pairwise summation so the
/// result depends only on sample order.
Estimate estimate_from_samples(const std::vector<double>& samples);

double pairwise_sum(const double* data, std::size_t n);

enum class Truncation { FixedRadius, AdaptiveDoubling };

struct QuadratureSpec {
    double rel_tol = 1e-6;
    double abs_tol = 1e-10;
    Truncation truncation = Truncation::AdaptiveDoubling;
    double fixed_radius = 1e3;  // km, used with Truncation::FixedRadius
    int max_subdivisions = 2000;

    void check() const;
};

enum class LatencyVariant { PaperVerbatim, DirectionAware, DirectionAwareConditioned };

const char* to_string(LatencyVariant v);
LatencyVariant latency_variant_from_string(std::string_view name);

/// Short stable hex digest of the parameter set, used to tag CSV rows.
std::string params_hash(const NetworkParams& params);

}  // namespace plcox
