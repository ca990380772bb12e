// SPDX-License-Identifier: Apache-2.0
#pragma once

// Hand-rolled generators and small helpers shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "premov/dataio.hpp"
#include "premov/matrix.hpp"
#include "premov/random.hpp"

namespace testsupport {

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(premov::splitmix64(seed)) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return lo + (hi - lo) * premov::uniform01(rng); }
  double normal() { return premov::standard_normal(rng); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
  }
  std::vector<double> vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  premov::Matrix matrix(std::size_t r, std::size_t c) { return {r, c, vec(r * c)}; }
};

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("premov_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A small valid bundle: `channels` named C0.., trials of `trial_len` samples at `rate`.
inline premov::dataio::ParticipantBundle random_bundle(Gen& g, std::size_t channels, std::size_t samples,
                                                       double rate, std::size_t trials) {
  premov::dataio::ParticipantBundle b;
  b.participant_id = "T" + std::to_string(g.index(0, 99));
  b.recording.sample_rate_hz = rate;
  for (std::size_t c = 0; c < channels; ++c) b.recording.channel_names.push_back("C" + std::to_string(c));
  b.recording.data = premov::Matrix(channels, samples);
  for (auto& v : b.recording.data.storage()) v = 50.0 * g.normal();
  b.kinematics.sample_rate_hz = rate;
  b.kinematics.data = premov::Matrix(samples, 3);
  for (auto& v : b.kinematics.data.storage()) v = g.uniform(-100.0, 100.0);
  const double span = static_cast<double>(samples) / rate;
  const double slot = span / static_cast<double>(trials + 1);
  for (std::size_t k = 0; k < trials; ++k) {
    const double onset = slot * (static_cast<double>(k) + 0.5);
    b.events.push_back({static_cast<int>(k + 1), onset, onset + 0.5 * slot});
  }
  b.provenance = {"unit-test", g.index(0, 1) == 1};
  return b;
}

}  // namespace testsupport
