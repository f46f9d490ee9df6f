// Copyright 2026 The dlcz Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DLCZ_RNG_H
#define DLCZ_RNG_H

#include <cmath>
#include <cstdint>
#include <limits>

namespace dlcz {

/// SplitMix64: a Weyl counter passed through a 64-bit finalizer.
///
/// Streams are derived from (master seed, stream index) by hashing, so any
/// trial or bootstrap resample can be regenerated in isolation and results do
/// not depend on how work is scheduled across threads.
class StreamRng {
   public:
    using result_type = uint64_t;

    explicit StreamRng(uint64_t state) : state_(state) {}

    /// Independent stream for `index` under `master_seed`.
    static StreamRng derive(uint64_t master_seed, uint64_t index) {
        return StreamRng(mix(master_seed ^ mix(index + 0x632be59bd9b4e019ULL)));
    }
    static StreamRng derive(uint64_t master_seed, uint64_t index, uint64_t sub_index) {
        return StreamRng(mix(mix(master_seed ^ mix(index + 0x632be59bd9b4e019ULL)) ^ (sub_index + 1)));
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Exponential variate with the given mean.
    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    static constexpr uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

   private:
    uint64_t state_;
};

}  // namespace dlcz

#endif
