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

#include <cmath>
#include <string>

#include "plcox/core.hpp"

using namespace plcox;

namespace {

NetworkParams fig1() {
    NetworkParams p;
    p.lambda_l = 3.0;
    p.mu = 3.0;
    p.nu = 0.1;
    p.alpha = 3.0;
    return p;
}

IssueCode only_issue(const NetworkParams& p) {
    try {
        validate(p);
    } catch (const ValidationError& e) {
        REQUIRE(e.issues().size() == 1);
        return e.issues()[0].code;
    }
    FAIL("expected a ValidationError");
    return IssueCode::NonFinite;
}

}  // namespace

TEST_CASE("validate accepts the Fig. 1 road map parameters") {
    const auto p = fig1();
    CHECK(validate(p) == p);
}

TEST_CASE("validate names each offending field") {
    auto p = fig1();
    p.alpha = 2.0;
    CHECK(only_issue(p) == IssueCode::AlphaOutOfRange);

    p = fig1();
    p.mu = -1.0;
    CHECK(only_issue(p) == IssueCode::NonPositiveDensity);

    p = fig1();
    p.speed = -0.01;
    CHECK(only_issue(p) == IssueCode::NegativeSpeed);

    p = fig1();
    p.nu = std::nan("");
    CHECK(only_issue(p) == IssueCode::NonFinite);

    p = fig1();
    p.alpha = 1.5;
    p.lambda_l = 0.0;
    p.nu = 0.0;
    try {
        validate(p);
        FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.issues().size() == 3);
        CHECK(e.has(IssueCode::AlphaOutOfRange));
        CHECK(e.has(IssueCode::NonPositiveDensity));
    }
}

TEST_CASE("validate is idempotent") {
    const auto once = validate(fig1());
    CHECK(validate(once) == once);
}

TEST_CASE("unit conversion") {
    CHECK(parse_speed_kmps("108 km/h") == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(parse_speed_kmps("108") == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(parse_speed_kmps("30 m/s") == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(parse_length_km("100 m") == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(parse_length_km("0.1 km") == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(parse_length_km("0.25") == doctest::Approx(0.25));
    CHECK(parse_linear_density_per_km("5 /km") == doctest::Approx(5.0));
    CHECK(parse_areal_density_per_km2("200 /km^2") == doctest::Approx(200.0));
    CHECK_THROWS_AS(parse_length_km("3 furlongs"), UnitParseError);
    CHECK_THROWS_AS(parse_speed_kmps("fast"), UnitParseError);

    const auto p = convert_units({{"speed", "108 km/h"}, {"nu", "100 m"}}, fig1());
    CHECK(p.speed == doctest::Approx(0.03));
    CHECK(p.nu == doctest::Approx(0.1));

    try {
        convert_units({{"speed", "-5 km/h"}}, fig1());
        FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.has(IssueCode::NegativeSpeed));
    }
    CHECK_THROWS_AS(convert_units({{"speedd", "5"}}, fig1()), UnitParseError);
}

TEST_CASE("unit conversion round-trips") {
    for (double kmph : {0.0, 1.0, 36.0, 72.0, 108.0, 123.456789}) {
        const double back = parse_speed_kmps(format_speed(kmph_to_kmps(kmph), "km/h"));
        CHECK(std::abs(back * 3600.0 - kmph) <= 1e-12 * std::max(1.0, kmph));
    }
    for (double m : {1.0, 100.0, 250.0, 1234.5678}) {
        const double km = parse_length_km(std::to_string(m) + " m");
        const double back_m = parse_length_km(format_length(km, "m")) * 1000.0;
        CHECK(std::abs(back_m - m) <= 1e-12 * m);
    }
}

TEST_CASE("empty-disk warning uses exp(-pi lambda nu^2)") {
    auto p = fig1();
    CHECK_FALSE(empty_disk_probability(p));
    p.device_density = 1000.0;  // exp(-pi * 10) ~ 2e-14
    CHECK(*empty_disk_probability(p) == doctest::Approx(std::exp(-M_PI * 1000.0 * 0.01)));
    CHECK_FALSE(empty_disk_warning(p));
    p.device_density = 100.0;  // exp(-pi) ~ 0.043
    CHECK(empty_disk_warning(p));
}

TEST_CASE("Estimate from samples") {
    const auto e = estimate_from_samples({1.0, 2.0, 3.0, 4.0});
    CHECK(e.value == doctest::Approx(2.5));
    // Sample variance 5/3, so SE = sqrt(5/3) / 2.
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(e.n_samples == 4);
    CHECK(e.lower(2.0) == doctest::Approx(2.5 - 2.0 * e.std_error));
    CHECK(e.z_score(2.5) == doctest::Approx(0.0));

    const auto c = estimate_from_samples({7.0, 7.0, 7.0});
    CHECK(c.std_error == 0.0);
    CHECK(c.z_score(7.0) == 0.0);
    CHECK_THROWS(estimate_from_samples({}));
}

TEST_CASE("pairwise sum is exact on integers and close on fractions") {
    std::vector<double> v;
    long double ref = 0.0L;
    for (int i = 0; i < 10001; ++i) {
        v.push_back(0.1 * i);
        ref += 0.1L * i;
    }
    CHECK(std::abs(pairwise_sum(v.data(), v.size()) - static_cast<double>(ref)) < 1e-9);
}

TEST_CASE("QuadratureSpec checks its fields") {
    QuadratureSpec q;
    CHECK_NOTHROW(q.check());
    CHECK(q.rel_tol == 1e-6);
    CHECK(q.abs_tol == 1e-10);
    q.rel_tol = 0.0;
    CHECK_THROWS(q.check());
    q = {};
    q.max_subdivisions = 0;
    CHECK_THROWS(q.check());
}

TEST_CASE("latency variants parse by name") {
    for (auto v : {LatencyVariant::PaperVerbatim, LatencyVariant::DirectionAware,
                   LatencyVariant::DirectionAwareConditioned}) {
        CHECK(latency_variant_from_string(to_string(v)) == v);
    }
    CHECK(latency_variant_from_string("direction-aware-conditioned") ==
          LatencyVariant::DirectionAwareConditioned);
    CHECK_THROWS(latency_variant_from_string("optimistic"));
}

TEST_CASE("params hash is stable and sensitive") {
    const auto a = fig1();
    auto b = a;
    CHECK(params_hash(a) == params_hash(b));
    CHECK(params_hash(a).size() == 16);
    b.nu = 0.2;
    CHECK(params_hash(a) != params_hash(b));
}
