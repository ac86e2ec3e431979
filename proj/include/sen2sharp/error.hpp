#ifndef SEN2SHARP_ERROR_HPP
#define SEN2SHARP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace sen2sharp {

/// Failure categories raised by the library. Every thrown sen2sharp::Error
/// carries exactly one of these.
enum class Errc {
  MalformedHeader,
  SizeMismatch,
  NonFiniteSample,
  IoFailure,
  OutOfBounds,
  UnknownBand,
  DegenerateInput,
  InvalidGain,
  NotDivisible,
  PatchTooLarge,
  TooFewExamples,
  ShapeMismatch,
  DegenerateBatch,
  MissingCache,
  MalformedCheckpoint,
  VersionMismatch,
  FlagMismatch,
  EmptyDataset,
  ChannelMismatch,
  BadTiling,
  DegenerateBand,
  DegenerateCovariance,
  ZeroMeanBand,
  WindowTooLarge,
  InvalidConfig,
  InvalidArgument,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::NonFiniteSample: return "NonFiniteSample";
    case Errc::IoFailure: return "IoFailure";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::UnknownBand: return "UnknownBand";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::InvalidGain: return "InvalidGain";
    case Errc::NotDivisible: return "NotDivisible";
    case Errc::PatchTooLarge: return "PatchTooLarge";
    case Errc::TooFewExamples: return "TooFewExamples";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DegenerateBatch: return "DegenerateBatch";
    case Errc::MissingCache: return "MissingCache";
    case Errc::MalformedCheckpoint: return "MalformedCheckpoint";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::FlagMismatch: return "FlagMismatch";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::ChannelMismatch: return "ChannelMismatch";
    case Errc::BadTiling: return "BadTiling";
    case Errc::DegenerateBand: return "DegenerateBand";
    case Errc::DegenerateCovariance: return "DegenerateCovariance";
    case Errc::ZeroMeanBand: return "ZeroMeanBand";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_ERROR_HPP
