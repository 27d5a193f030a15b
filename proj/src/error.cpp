#include "s4h/error.hpp"

namespace s4h {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::UnknownSchema: return "UnknownSchema";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::MalformedUtf8: return "MalformedUtf8";
    case ErrorCode::InvalidTopic: return "InvalidTopic";
    case ErrorCode::InvalidPattern: return "InvalidPattern";
    case ErrorCode::UnknownModality: return "UnknownModality";
    case ErrorCode::DuplicateNodeName: return "DuplicateNodeName";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::EncodingError: return "EncodingError";
    case ErrorCode::BindError: return "BindError";
    case ErrorCode::ConnectError: return "ConnectError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::NoObservations: return "NoObservations";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonMonotonicInput: return "NonMonotonicInput";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::LogFormatError: return "LogFormatError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

TopicError::TopicError(ErrorCode code, std::string segment, const std::string& what)
    : Error(code, what + " (segment: " + segment + ")"), segment_(std::move(segment)) {}

LogDamageError::LogDamageError(ErrorCode code, std::size_t offset, std::size_t intact_records,
                               const std::string& what)
    : Error(code, what + " at byte " + std::to_string(offset) + ", " +
                      std::to_string(intact_records) + " intact records"),
      offset_(offset),
      intact_records_(intact_records) {}

}  // namespace s4h
