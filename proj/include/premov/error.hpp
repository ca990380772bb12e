// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace premov {

/// Failure categories raised across the toolkit. The CLI maps these onto
/// process exit codes (see exit_code_for).
enum class Errc {
  // sigproc
  InvalidCutoff,
  InvalidTaps,
  SignalTooShort,
  InvalidFactor,
  NeedsMultipleChannels,
  ZeroVariance,
  DegenerateRange,
  // dataio
  MissingComponent,
  CorruptBundle,
  InvalidEvents,
  RejectedNonFinite,
  IoError,
  // epoching
  ChannelNotFound,
  EmptyEpochSet,
  NotEnoughTrials,
  // gradkit / decoders
  ShapeError,
  NoGraph,
  NonFiniteGradient,
  SingularSystem,
  SequenceTooShort,
  CorruptModel,
  // harness
  DivergedTraining,
  UndefinedCorrelation,
  // cli
  ConfigError,
  StageAlreadyApplied,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// 2 for configuration problems, 3 for data problems, 4 for diverged training.
int exit_code_for(Errc code) noexcept;

}  // namespace premov
