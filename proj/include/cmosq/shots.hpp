// Copyright 2026 The cmosq Authors
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

// Shot-averaging kernels. Every shot owns counter-derived random streams
// keyed by (seed, point stream, shot), and shots are reduced in fixed-size
// chunks in index order, so the serial and OpenMP kernels return identical
// bits for any thread count.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmosq/physics.hpp"

namespace cmosq::shots {

inline constexpr int kChunkShots = 256;

struct PointJob {
  physics::TwoSpinState init;
  physics::PulseSchedule schedule;
  physics::NoiseModel noise;  // noise.rng_seed is the experiment seed
  std::uint64_t stream = 0;   // point key; equal keys give common random numbers
  int shots = 1;
};

struct PointStats {
  int shots = 0;
  int blocked = 0;
  double p_model = 0.0;  // mean readout probability over the shots

  double p_blocked() const { return shots ? double(blocked) / double(shots) : 0.0; }
};

/// Readout probability of one shot with its noise realization.
double shot_probability(const PointJob& job, const physics::SpinSystemParams& params, int shot);

std::vector<PointStats> run_points_serial(std::span<const PointJob> jobs, const physics::SpinSystemParams& params);

/// threads <= 0 uses the OpenMP default.
std::vector<PointStats> run_points_parallel(std::span<const PointJob> jobs, const physics::SpinSystemParams& params,
                                            int threads = 0);

}  // namespace cmosq::shots
