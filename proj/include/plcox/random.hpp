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
#include <limits>
#include <random>

#include <boost/random/exponential_distribution.hpp>

namespace plcox {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256** keyed by (seed, stream path). Any two distinct paths give
/// statistically independent streams, so a realization's randomness depends
/// only on its index and never on which worker runs it.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed) { reseed(seed, 0); }
    RandomStream(std::uint64_t seed, std::uint64_t index) { reseed(seed, index); }

    /// Child stream for a sub-purpose (e.g. realization i, substream k).
    RandomStream split(std::uint64_t index) const {
        std::uint64_t mix = s_[0] ^ rotl(s_[3], 17);
        return RandomStream(splitmix64(mix), index);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    /// Uniform on (0, 1).
    double uniform_open() { return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Ziggurat sampler; the hot path of every gap-based construction.
    double exponential(double rate) {
        return boost::random::exponential_distribution<double>(rate)(*this);
    }
    bool coin() { return ((*this)() >> 63) != 0; }

    long poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        std::poisson_distribution<long> dist(mean);
        return dist(*this);
    }

    double normal(double mean, double sd) {
        std::normal_distribution<double> dist(mean, sd);
        return dist(*this);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    void reseed(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t sm = seed ^ (index * 0xD1B54A32D192ED03ULL);
        sm = splitmix64(sm) ^ index;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t s_[4];
};

}  // namespace plcox
