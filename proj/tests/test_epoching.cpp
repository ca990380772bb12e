// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "premov/epoching.hpp"
#include "premov/error.hpp"
#include "support.hpp"

using namespace premov;
using namespace premov::epoching;

namespace {

sigproc::EegRecording recording(const Matrix& data, std::vector<std::string> names = {}) {
  sigproc::EegRecording r;
  r.sample_rate_hz = 100.0;
  if (names.empty())
    for (std::size_t c = 0; c < data.rows(); ++c) names.push_back("E" + std::to_string(c));
  r.channel_names = std::move(names);
  r.data = data;
  return r;
}

sigproc::KinematicsTrack track(std::size_t samples) {
  sigproc::KinematicsTrack k;
  k.sample_rate_hz = 100.0;
  k.data = Matrix(samples, 3);
  for (std::size_t t = 0; t < samples; ++t)
    for (std::size_t a = 0; a < 3; ++a) k.data(t, a) = 1000.0 * static_cast<double>(a) + static_cast<double>(t);
  return k;
}

std::vector<TrialTensorPair> dummy_pairs(std::size_t n) {
  std::vector<TrialTensorPair> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i].trial_id = static_cast<int>(i + 1);
  return pairs;
}

}  // namespace

TEST_CASE("motor layout has the 21 labels in order") {
  const auto l = ChannelLayout::motor21();
  const std::vector<std::string> want{"F3", "Fz", "F4", "FC5", "FC1", "FC2", "FC6", "C3", "Cz", "C4", "CP5",
                                      "CP1", "CP2", "CP6", "P7", "P3", "Pz", "P4", "O1", "Oz", "O2"};
  CHECK(l.names == want);
}

TEST_CASE("channel selection reorders, is idempotent and names the missing label") {
  std::vector<std::string> names{"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FC2", "FC6",
                                 "T7",  "C3",  "Cz", "C4", "T8", "TP9", "CP5", "CP1", "CP2", "CP6", "TP10",
                                 "P7",  "P3",  "Pz", "P4", "P8", "PO9", "O1", "Oz", "O2", "PO10"};
  testsupport::Gen g(41);
  std::reverse(names.begin(), names.end());
  const auto rec = recording(g.matrix(32, 10), names);
  const auto sel = select_channels(rec, ChannelLayout::motor21());
  CHECK(sel.channels() == 21);
  CHECK(sel.channel_names.front() == "F3");
  const auto f3 = std::find(names.begin(), names.end(), "F3") - names.begin();
  CHECK(sel.data(0, 4) == rec.data(static_cast<std::size_t>(f3), 4));
  const auto again = select_channels(sel, ChannelLayout::motor21());
  CHECK(again.data == sel.data);
  CHECK(again.channel_names == sel.channel_names);

  auto missing = names;
  *std::find(missing.begin(), missing.end(), "Cz") = "Xx";
  try {
    select_channels(recording(g.matrix(32, 10), missing), ChannelLayout::motor21());
    FAIL("expected ChannelNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ChannelNotFound);
    CHECK(std::string(e.what()).find("Cz") != std::string::npos);
  }
}

TEST_CASE("hand-enumerated lag embedding") {
  const Matrix eeg(2, 4, std::vector<double>{.1, .2, .3, .4, 1, 2, 3, 4});
  const auto d = lag_embed(eeg, 2, 3, 2);
  REQUIRE(d.rows() == 2);
  CHECK(std::vector<double>(d.values.row(0).begin(), d.values.row(0).end()) == std::vector<double>{.3, .2, 3, 2});
  CHECK(std::vector<double>(d.values.row(1).begin(), d.values.row(1).end()) == std::vector<double>{.4, .3, 4, 3});

  const dataio::TrialEvent ev{1, 0.02, 0.03};
  const auto set = epoch_trials(recording(eeg), track(4), {ev}, 2);
  REQUIRE(set.pairs.size() == 1);
  CHECK(set.pairs[0].design.values == d.values);
  CHECK(set.pairs[0].target(0, 0) == 2.0);
  CHECK(set.pairs[0].target(1, 2) == 2003.0);
}

TEST_CASE("150 ms at 100 Hz: the first row spans the 15 samples ending at onset") {
  CHECK(lag_ms_to_samples(150, 100.0) == 15);
  CHECK(lag_ms_to_samples(350, 100.0) == 35);
  CHECK_THROWS_AS(lag_ms_to_samples(155, 100.0), Error);
  Matrix eeg(1, 100);
  for (std::size_t t = 0; t < 100; ++t) eeg(0, t) = static_cast<double>(t);
  const auto set = epoch_trials(recording(eeg), track(100), {{7, 0.40, 0.50}}, 15);
  const auto& row = set.pairs[0].design;
  CHECK(row.at(0, 0, 0) == 40.0);
  CHECK(row.at(0, 0, 14) == 26.0);
}

TEST_CASE("trials whose window precedes the recording are dropped") {
  testsupport::Gen g(42);
  const auto rec = recording(g.matrix(2, 200));
  const auto set = epoch_trials(rec, track(200), {{1, 0.03, 0.06}, {2, 0.5, 0.6}}, 15);
  CHECK(set.dropped == std::vector<int>{1});
  CHECK(set.pairs.size() == 1);
  try {
    epoch_trials(rec, track(200), {{1, 0.03, 0.06}}, 15);
    FAIL("expected EmptyEpochSet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyEpochSet);
  }
}

TEST_CASE("property: column n·L of successive rows rebuilds channel n") {
  testsupport::Gen g(43);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = g.index(1, 5), lag = g.index(1, 12), samples = g.index(lag + 5, 120);
    const auto eeg = g.matrix(n, samples);
    const std::size_t first = lag - 1 + g.index(0, 3), last = samples - 1 - g.index(0, 3);
    const auto d = lag_embed(eeg, first, last, lag);
    CHECK(d.width() == n * lag);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t r = 0; r < d.rows(); ++r) {
        CHECK(d.values(r, c * lag) == eeg(c, first + r));
        for (std::size_t l = 0; l < lag; ++l) CHECK(d.at(r, c, l) == eeg(c, first + r - l));
      }
  }
}

TEST_CASE("property: corrupting sample t touches rows t..t+L-1 only") {
  testsupport::Gen g(44);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = g.index(1, 4), lag = g.index(1, 10), samples = g.index(lag + 20, 150);
    auto eeg = g.matrix(n, samples);
    const std::size_t first = lag - 1, last = samples - 1;
    const auto before = lag_embed(eeg, first, last, lag);
    const std::size_t t = g.index(0, samples - 1), c = g.index(0, n - 1);
    eeg(c, t) += 1.0;
    const auto after = lag_embed(eeg, first, last, lag);
    for (std::size_t r = 0; r < before.rows(); ++r) {
      const std::size_t time = first + r;
      const bool touched = time >= t && time < t + lag;
      const auto x = before.values.row(r), y = after.values.row(r);
      CHECK(!std::equal(x.begin(), x.end(), y.begin()) == touched);
    }
  }
}

TEST_CASE("targets do not depend on the EEG") {
  testsupport::Gen g(45);
  auto eeg = g.matrix(3, 300);
  const std::vector<dataio::TrialEvent> events{{1, 0.5, 0.9}, {2, 1.2, 1.7}};
  const auto a = epoch_trials(recording(eeg), track(300), events, 20);
  for (auto& v : eeg.storage()) v = g.normal();
  const auto b = epoch_trials(recording(eeg), track(300), events, 20);
  for (std::size_t k = 0; k < 2; ++k) CHECK(a.pairs[k].target == b.pairs[k].target);
}

TEST_CASE("split sizes: standard preset, proportional fallback and errors") {
  CHECK(default_split(294) == SplitSizes{234, 30, 30});
  CHECK(default_split(300) == SplitSizes{234, 30, 30});
  CHECK(default_split(200) == SplitSizes{160, 20, 20});
  CHECK(default_split(3) == SplitSizes{1, 1, 1});
  CHECK_THROWS_AS(default_split(2), Error);
  try {
    split_trials(dummy_pairs(10), {8, 2, 1}, 0);
    FAIL("expected NotEnoughTrials");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotEnoughTrials);
  }
}

TEST_CASE("split is a seeded disjoint partition") {
  const auto split = split_trials(dummy_pairs(294), kStandardSplit, 5);
  CHECK(split.train.size() == 234);
  CHECK(split.val.size() == 30);
  CHECK(split.test.size() == 30);
  std::set<int> ids;
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    CHECK(std::is_sorted(part->begin(), part->end(),
                         [](const auto& a, const auto& b) { return a.trial_id < b.trial_id; }));
    for (const auto& p : *part) ids.insert(p.trial_id);
  }
  CHECK(ids.size() == 294);

  auto ids_of = [](const std::vector<TrialTensorPair>& v) {
    std::vector<int> out;
    for (const auto& p : v) out.push_back(p.trial_id);
    return out;
  };
  const auto again = split_trials(dummy_pairs(294), kStandardSplit, 5);
  CHECK(ids_of(again.test) == ids_of(split.test));
  const auto one = split_trials(dummy_pairs(294), kStandardSplit, 1);
  const auto two = split_trials(dummy_pairs(294), kStandardSplit, 2);
  CHECK(ids_of(one.test) != ids_of(two.test));

  testsupport::Gen g(46);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = g.index(3, 80);
    const auto sizes = default_split(n);
    const auto s = split_trials(dummy_pairs(n), sizes, g.index(0, 1000));
    std::set<int> seen;
    for (const auto* part : {&s.train, &s.val, &s.test})
      for (const auto& p : *part) CHECK(seen.insert(p.trial_id).second);
    CHECK(seen.size() == n);
  }
}
