// SPDX-License-Identifier: Apache-2.0
#pragma once

// On-disk participant bundle:
//
//   manifest.json           participant id, rates, channel names, sample counts, provenance
//   eeg.f32                 little-endian float32, row-major [channels × samples]
//   kinematics.csv          "t_s,x_mm,y_mm,z_mm"
//   events.csv              "trial_id,onset_s,rest_s"
//   preprocessing_log.json  optional; ordered list of applied steps

#include <filesystem>
#include <string>
#include <vector>

#include "premov/sigproc.hpp"

namespace premov::dataio {

struct TrialEvent {
  int trial_id = 0;
  double onset_s = 0.0;  // movement onset, seconds from recording start
  double rest_s = 0.0;   // hand back at rest
  bool operator==(const TrialEvent&) const = default;
};

struct Provenance {
  std::string source;
  bool ica_cleaned = false;
};

struct ParticipantBundle {
  std::string participant_id;
  sigproc::EegRecording recording;
  sigproc::KinematicsTrack kinematics;
  std::vector<TrialEvent> events;
  Provenance provenance;

  /// Throws CorruptBundle / InvalidEvents / RejectedNonFinite on a broken invariant.
  void validate() const;
};

/// Ordering, uniqueness and overlap checks on an event list.
void validate_events(const std::vector<TrialEvent>& events);

ParticipantBundle load_bundle(const std::filesystem::path& dir);
void write_bundle(const ParticipantBundle& bundle, const std::filesystem::path& dir);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace premov::dataio
