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

#include "plcox/geometry.hpp"

#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace plcox {

namespace {

constexpr double kPi = std::numbers::pi;

// Uniform on the open interval (0, pi).
double open_angle(RandomStream& stream) { return kPi * stream.uniform_open(); }

}  // namespace

namespace {

template <class AngleFn>
std::vector<Line> sample_lines_by_gaps(double lambda_l, double window_radius,
                                       const RandomStream& stream, AngleFn&& draw_angle) {
    std::vector<Line> lines;
    if (!(lambda_l > 0.0)) return lines;
    for (int side : {1, -1}) {
        RandomStream s = stream.split(side > 0 ? 1 : 2);
        double r = 0.0;
        for (;;) {
            r += s.exponential(lambda_l);
            if (r > window_radius) break;
            const double angle = draw_angle(s);
            lines.push_back({side * r, angle, s()});
        }
    }
    return lines;
}

}  // namespace

std::vector<Line> sample_lines(double lambda_l, double window_radius, RandomStream& stream) {
    if (!(window_radius > 0.0)) throw Error("sample_lines: window radius must be positive");
    return sample_lines_by_gaps(lambda_l, window_radius, stream, open_angle);
}

std::vector<Line> sample_manhattan_lines(double lambda_l, double window_radius,
                                         RandomStream& stream) {
    if (!(window_radius > 0.0))
        throw Error("sample_manhattan_lines: window radius must be positive");
    return sample_lines_by_gaps(lambda_l, window_radius, stream,
                                [](RandomStream& s) { return s.coin() ? kPi / 2 : 0.0; });
}

std::vector<Vehicle> sample_vehicles_on_line(std::size_t line_index, double mu,
                                             double half_length, double speed,
                                             RandomStream& stream) {
    if (!(half_length > 0.0))
        throw Error("sample_vehicles_on_line: half length must be positive");
    std::vector<Vehicle> out;
    if (!(mu > 0.0)) return out;
    for (int side : {1, -1}) {
        RandomStream s = stream.split(side > 0 ? 1 : 2);
        double x = 0.0;
        for (;;) {
            x += s.exponential(mu);
            if (x > half_length) break;
            out.push_back({line_index, side * x, s.coin() ? 1 : -1, speed});
        }
    }
    return out;
}

Snapshot sample_snapshot(const NetworkParams& params, double window_radius, double half_length,
                         RandomStream& stream, LineModel model) {
    Snapshot snap;
    snap.window_radius = window_radius;
    snap.half_length = half_length;
    RandomStream line_stream = stream.split(10);
    snap.lines = model == LineModel::Isotropic
                     ? sample_lines(params.lambda_l, window_radius, line_stream)
                     : sample_manhattan_lines(params.lambda_l, window_radius, line_stream);
    for (std::size_t i = 0; i < snap.lines.size(); ++i) {
        RandomStream vs_stream(snap.lines[i].stream_key);
        auto vs = sample_vehicles_on_line(i, params.mu, half_length, params.speed, vs_stream);
        snap.vehicles.insert(snap.vehicles.end(), vs.begin(), vs.end());
    }
    return snap;
}

Snapshot palm_snapshot(const NetworkParams& params, double window_radius, double half_length,
                       RandomStream& stream, LineModel model) {
    Snapshot snap = sample_snapshot(params, window_radius, half_length, stream, model);
    RandomStream typical_stream = stream.split(11);
    const double angle = model == LineModel::Isotropic
                             ? open_angle(typical_stream)
                             : (typical_stream.coin() ? kPi / 2 : 0.0);
    const std::size_t typical = snap.lines.size();
    snap.lines.push_back({0.0, angle, typical_stream()});
    RandomStream vs_stream(snap.lines.back().stream_key);
    auto vs = sample_vehicles_on_line(typical, params.mu, half_length, params.speed, vs_stream);
    snap.vehicles.insert(snap.vehicles.end(), vs.begin(), vs.end());
    snap.vehicles.push_back({typical, 0.0, typical_stream.coin() ? 1 : -1, params.speed});
    snap.palm = true;
    snap.typical_line = typical;
    snap.typical_line_angle = angle;
    snap.typical_vehicle = snap.vehicles.size() - 1;
    return snap;
}

Snapshot place_devices(Snapshot snapshot, double nu, RandomStream& stream) {
    if (!(nu > 0.0)) throw Error("place_devices: nu must be positive");
    std::vector<Point> devices;
    devices.reserve(snapshot.vehicles.size());
    for (std::size_t i = 0; i < snapshot.vehicles.size(); ++i) {
        const Point c = snapshot.position(i);
        const double rho = nu * std::sqrt(stream.uniform());
        const double phi = 2.0 * kPi * stream.uniform();
        devices.push_back({c.x + rho * std::cos(phi), c.y + rho * std::sin(phi)});
    }
    snapshot.devices = std::move(devices);
    return snapshot;
}

Snapshot advance(Snapshot snapshot, double dt) {
    if (!(dt >= 0.0)) throw Error("advance: dt must be nonnegative");
    if (dt == 0.0) return snapshot;
    for (auto& v : snapshot.vehicles) v.abscissa += v.direction * v.speed * dt;
    snapshot.devices.reset();
    snapshot.time += dt;
    return snapshot;
}

void write_snapshot_csv(std::ostream& os, const Snapshot& s) {
    os << "schema,section,index,a,b,c,x,y\n";
    for (std::size_t i = 0; i < s.lines.size(); ++i) {
        fmt::print(os, "1,line,{},{},{},,,\n", i, s.lines[i].offset, s.lines[i].angle);
    }
    for (std::size_t i = 0; i < s.vehicles.size(); ++i) {
        const auto& v = s.vehicles[i];
        const Point p = s.position(i);
        fmt::print(os, "1,vehicle,{},{},{},{},{},{}\n", i, v.line_index, v.abscissa, v.direction,
                   p.x, p.y);
    }
    if (s.devices) {
        for (std::size_t i = 0; i < s.devices->size(); ++i) {
            fmt::print(os, "1,device,{},,,,{},{}\n", i, (*s.devices)[i].x, (*s.devices)[i].y);
        }
    }
}

}  // namespace plcox
