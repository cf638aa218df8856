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

#include "cmosq/shots.hpp"

#include <algorithm>
#include <exception>

#include <omp.h>

namespace cmosq::shots {

namespace {

struct Item {
  std::size_t point;
  int first;
  int last;
};

struct Partial {
  int blocked = 0;
  double psum = 0.0;
};

std::vector<Item> make_items(std::span<const PointJob> jobs) {
  std::vector<Item> items;
  for (std::size_t p = 0; p < jobs.size(); ++p) {
    for (int s = 0; s < jobs[p].shots; s += kChunkShots) items.push_back({p, s, std::min(s + kChunkShots, jobs[p].shots)});
  }
  return items;
}

std::uint64_t noise_seed(const PointJob& job, int shot) {
  return derive_seed(job.noise.rng_seed, job.stream, std::uint64_t(shot), 0);
}

std::uint64_t readout_seed(const PointJob& job, int shot) {
  return derive_seed(job.noise.rng_seed, job.stream, std::uint64_t(shot), 1);
}

Partial run_item(const PointJob& job, const physics::SpinSystemParams& params, const Item& it) {
  Partial out;
  if (job.noise.deterministic()) {
    // Every shot sees the same state; evolve once and sample readout only.
    ShotRng unused(0);
    const auto st = physics::evolve_shot(job.init, job.schedule, params, {}, 0.0, unused);
    const double p = physics::measure_psb(st, params.spam);
    for (int s = it.first; s < it.last; ++s) {
      ShotRng rng(readout_seed(job, s));
      out.blocked += physics::sample_shot(p, rng);
      out.psum += p;
    }
    return out;
  }
  for (int s = it.first; s < it.last; ++s) {
    const double p = shot_probability(job, params, s);
    ShotRng rng(readout_seed(job, s));
    out.blocked += physics::sample_shot(p, rng);
    out.psum += p;
  }
  return out;
}

std::vector<PointStats> reduce(std::span<const PointJob> jobs, const std::vector<Item>& items,
                               const std::vector<Partial>& partials) {
  std::vector<PointStats> stats(jobs.size());
  std::vector<double> psum(jobs.size(), 0.0);
  for (std::size_t i = 0; i < items.size(); ++i) {
    stats[items[i].point].blocked += partials[i].blocked;
    psum[items[i].point] += partials[i].psum;
  }
  for (std::size_t p = 0; p < jobs.size(); ++p) {
    stats[p].shots = jobs[p].shots;
    stats[p].p_model = jobs[p].shots ? psum[p] / jobs[p].shots : 0.0;
  }
  return stats;
}

}  // namespace

double shot_probability(const PointJob& job, const physics::SpinSystemParams& params, int shot) {
  ShotRng rng(noise_seed(job, shot));
  const auto noise = physics::sample_shot_noise(job.noise, rng);
  const auto st = physics::evolve_shot(job.init, job.schedule, params, noise, job.noise.s_white(), rng);
  return physics::measure_psb(st, params.spam);
}

std::vector<PointStats> run_points_serial(std::span<const PointJob> jobs, const physics::SpinSystemParams& params) {
  const auto items = make_items(jobs);
  std::vector<Partial> partials(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) partials[i] = run_item(jobs[items[i].point], params, items[i]);
  return reduce(jobs, items, partials);
}

std::vector<PointStats> run_points_parallel(std::span<const PointJob> jobs, const physics::SpinSystemParams& params,
                                            int threads) {
  const auto items = make_items(jobs);
  std::vector<Partial> partials(items.size());
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  const auto n = static_cast<long long>(items.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
  for (long long i = 0; i < n; ++i) {
    try {
      partials[std::size_t(i)] = run_item(jobs[items[std::size_t(i)].point], params, items[std::size_t(i)]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return reduce(jobs, items, partials);
}

}  // namespace cmosq::shots
