#pragma once

// Shared error type and small utilities used across the library.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace outpaint {

// Every recoverable failure in the library throws Error with one of these
// kinds, so callers (and the CLI) can react without parsing message strings.
enum class ErrorKind {
  InvalidRange,        // numeric argument outside its documented domain
  InvalidDimension,    // embedding width not divisible as required
  InvalidSize,         // non-positive or inconsistent geometric size
  ShapeMismatch,       // tensor/image arguments that must agree do not
  NonMonotonic,        // timestep sequence moves in the wrong direction
  DegenerateAnchor,    // requested expansion leaves no anchor pixels
  UnsatisfiableCrop,   // crop sampler cannot place even its fallback
  MissingParams,       // operation needs weights that were not supplied
  UntrainedModel,      // sampler invoked with uninitialized parameters
  NonFiniteActivation, // NaN/Inf encountered inside the denoiser
  VersionMismatch,     // checkpoint magic/version not recognized
  CorruptCheckpoint,   // checksum or structural failure while loading
  DecodeFailure,       // image file could not be parsed
  EmptyDataset,        // dataset folder contains no usable images
  EmptyAfterFilter,    // metric aggregation filtered out every sample
  ConfigError,         // config file/flag failed validation
  IoFailure,           // filesystem read/write failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::InvalidDimension: return "InvalidDimension";
    case ErrorKind::InvalidSize: return "InvalidSize";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonMonotonic: return "NonMonotonic";
    case ErrorKind::DegenerateAnchor: return "DegenerateAnchor";
    case ErrorKind::UnsatisfiableCrop: return "UnsatisfiableCrop";
    case ErrorKind::MissingParams: return "MissingParams";
    case ErrorKind::UntrainedModel: return "UntrainedModel";
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::DecodeFailure: return "DecodeFailure";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool cond, ErrorKind kind, const std::string& message) {
  if (!cond) fail(kind, message);
}

}  // namespace outpaint
