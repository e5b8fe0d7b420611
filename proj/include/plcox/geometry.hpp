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
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "plcox/core.hpp"
#include "plcox/random.hpp"

namespace plcox {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double norm(Point p) { return std::hypot(p.x, p.y); }

/// Road {x : <x, n(angle)> = offset} with unit normal n(angle) = (cos, sin).
/// Isotropic samples have angle in (0, pi); Manhattan samples also use 0 for
/// vertical roads, so the stored range is [0, pi).
struct Line {
    double offset = 0.0;  // km, signed
    double angle = 0.0;   // radians
    std::uint64_t stream_key = 0;  // seeds this road's vehicle stream

    Point foot() const { return {offset * std::cos(angle), offset * std::sin(angle)}; }
    /// Unit vector along the road; abscissas are measured along it from foot().
    Point along() const { return {-std::sin(angle), std::cos(angle)}; }
    Point at(double abscissa) const {
        const Point f = foot(), d = along();
        return {f.x + abscissa * d.x, f.y + abscissa * d.y};
    }
};

struct Vehicle {
    std::size_t line_index = 0;
    double abscissa = 0.0;  // km from the line's foot point
    int direction = 1;      // +1 or -1 along Line::along()
    double speed = 0.0;     // km/s
};

struct Snapshot {
    std::vector<Line> lines;
    std::vector<Vehicle> vehicles;
    std::optional<std::vector<Point>> devices;  // devices[i] belongs to vehicles[i]
    bool palm = false;
    std::optional<double> typical_line_angle;
    std::optional<std::size_t> typical_line;     // index into lines
    std::optional<std::size_t> typical_vehicle;  // index into vehicles, sits at the origin
    double window_radius = 0.0;                  // R, km
    double half_length = 0.0;                    // L, km
    double time = 0.0;                           // seconds since sampling

    Point position(std::size_t vehicle) const {
        const auto& v = vehicles[vehicle];
        return lines[v.line_index].at(v.abscissa);
    }
};

// Samplers build each Poisson process outward from the origin by exponential
// gaps, one substream per side. A realization in a window is therefore an
// exact prefix of the realization in any larger window drawn from the same
// stream, which makes window-doubling comparisons paired.

/// Lines hitting the disk of radius R: Poisson(2 lambda_l R) of them, offsets
/// uniform on [-R, R], angles uniform on (0, pi).
std::vector<Line> sample_lines(double lambda_l, double window_radius, RandomStream& stream);

/// Same count law, but every road is horizontal (angle pi/2) or vertical
/// (angle 0) with equal probability.
std::vector<Line> sample_manhattan_lines(double lambda_l, double window_radius,
                                         RandomStream& stream);

/// Poisson(2 mu L) vehicles on [-L, L] of one line, fair-coin directions.
std::vector<Vehicle> sample_vehicles_on_line(std::size_t line_index, double mu,
                                             double half_length, double speed,
                                             RandomStream& stream);

enum class LineModel { Isotropic, Manhattan };

/// Ordinary (non-Palm) realization in the window.
Snapshot sample_snapshot(const NetworkParams& params, double window_radius, double half_length,
                         RandomStream& stream, LineModel model = LineModel::Isotropic);

/// Realization under the Palm law of the vehicle process: an ordinary
/// realization plus a typical line through the origin carrying its own
/// Poisson vehicles, plus the typical vehicle at the origin.
Snapshot palm_snapshot(const NetworkParams& params, double window_radius, double half_length,
                       RandomStream& stream, LineModel model = LineModel::Isotropic);

/// One device per vehicle, uniform in the radius-nu disk around it.
Snapshot place_devices(Snapshot snapshot, double nu, RandomStream& stream);

/// Moves every vehicle by direction * speed * dt along its road. Devices are
/// dropped since a fresh device is scheduled in every slot.
Snapshot advance(Snapshot snapshot, double dt);

/// CSV dump with a section column: line rows (offset, angle), vehicle rows
/// (line_index, abscissa, direction, x, y) and device rows (x, y).
void write_snapshot_csv(std::ostream& os, const Snapshot& snapshot);

}  // namespace plcox
