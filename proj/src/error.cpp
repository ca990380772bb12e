// SPDX-License-Identifier: Apache-2.0
#include "premov/error.hpp"

namespace premov {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidCutoff: return "InvalidCutoff";
    case Errc::InvalidTaps: return "InvalidTaps";
    case Errc::SignalTooShort: return "SignalTooShort";
    case Errc::InvalidFactor: return "InvalidFactor";
    case Errc::NeedsMultipleChannels: return "NeedsMultipleChannels";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::DegenerateRange: return "DegenerateRange";
    case Errc::MissingComponent: return "MissingComponent";
    case Errc::CorruptBundle: return "CorruptBundle";
    case Errc::InvalidEvents: return "InvalidEvents";
    case Errc::RejectedNonFinite: return "RejectedNonFinite";
    case Errc::IoError: return "IoError";
    case Errc::ChannelNotFound: return "ChannelNotFound";
    case Errc::EmptyEpochSet: return "EmptyEpochSet";
    case Errc::NotEnoughTrials: return "NotEnoughTrials";
    case Errc::ShapeError: return "ShapeError";
    case Errc::NoGraph: return "NoGraph";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::SequenceTooShort: return "SequenceTooShort";
    case Errc::CorruptModel: return "CorruptModel";
    case Errc::DivergedTraining: return "DivergedTraining";
    case Errc::UndefinedCorrelation: return "UndefinedCorrelation";
    case Errc::ConfigError: return "ConfigError";
    case Errc::StageAlreadyApplied: return "StageAlreadyApplied";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::ConfigError:
    case Errc::InvalidCutoff:
    case Errc::InvalidTaps:
    case Errc::InvalidFactor:
    case Errc::SequenceTooShort:
      return 2;
    case Errc::DivergedTraining:
    case Errc::NonFiniteGradient:
      return 4;
    default:
      return 3;
  }
}

}  // namespace premov
