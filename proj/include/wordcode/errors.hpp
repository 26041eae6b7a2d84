#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wordcode {

/// Bad caller-supplied value: sizes, budgets, capacities, out-of-range ids.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Invalid UTF-8 input. `byte_offset` points at the offending byte.
struct DecodeError : std::runtime_error {
  std::size_t byte_offset;
  DecodeError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), byte_offset(offset) {}
};

/// A code stream that cannot be parsed back into words. `position` is the
/// index of the offending code; `dangling` holds an unterminated suffix when
/// the stream ended mid-word.
struct MalformedSequenceError : std::runtime_error {
  std::size_t position;
  std::string dangling;
  MalformedSequenceError(const std::string& what, std::size_t pos,
                         std::string suffix = {})
      : std::runtime_error(what), position(pos), dangling(std::move(suffix)) {}
};

/// Two components were combined whose dimensions do not agree.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// A computation produced a non-finite value.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training loss became non-finite. `epoch` is the epoch it happened in.
struct TrainingDivergedError : std::runtime_error {
  int epoch;
  TrainingDivergedError(const std::string& what, int at_epoch)
      : std::runtime_error(what), epoch(at_epoch) {}
};

/// An instance exceeds a solver's configured size cap.
struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Allocation or other resource exhaustion, with the configuration named.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wordcode
