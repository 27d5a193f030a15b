#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace s4h {

enum class ErrorCode {
  InvariantViolation,
  UnknownSchema,
  Truncated,
  TrailingBytes,
  MalformedUtf8,
  InvalidTopic,
  InvalidPattern,
  UnknownModality,
  DuplicateNodeName,
  UnknownNode,
  EncodingError,
  BindError,
  ConnectError,
  ProtocolError,
  NoObservations,
  InvalidConfig,
  NonMonotonicInput,
  EmptyWindow,
  InsufficientData,
  LogFormatError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// InvalidTopic / InvalidPattern carry the name of the offending segment
// ("prefix", "segment_count", "human_id", "sensor_type", "sensor_id", "field").
class TopicError : public Error {
 public:
  TopicError(ErrorCode code, std::string segment, const std::string& what);
  const std::string& segment() const noexcept { return segment_; }

 private:
  std::string segment_;
};

// Raised when a log file ends mid-record or is otherwise damaged after an
// intact prefix.
class LogDamageError : public Error {
 public:
  LogDamageError(ErrorCode code, std::size_t offset, std::size_t intact_records,
                 const std::string& what);
  std::size_t offset() const noexcept { return offset_; }
  std::size_t intact_records() const noexcept { return intact_records_; }

 private:
  std::size_t offset_;
  std::size_t intact_records_;
};

}  // namespace s4h
