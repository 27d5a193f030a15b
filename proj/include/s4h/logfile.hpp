#pragma once

// Append-only record/replay container. Layout (little-endian):
//   header:  magic "S4HBAG1\0" | created_ns i64 | u16 n | n x (key str16, value str16)
//   record:  total_len u32 | recv_bus_time_ns i64 | topic str16 | payload u32-len bytes
// total_len counts the bytes that follow it. See docs/log-format.md.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "s4h/byte_io.hpp"
#include "s4h/messages.hpp"

namespace s4h {

inline constexpr std::array<char, 8> kLogMagic = {'S', '4', 'H', 'B', 'A', 'G', '1', '\0'};

struct LogHeader {
  std::int64_t created_ns = 0;
  std::vector<std::pair<std::string, std::string>> metadata;

  bool operator==(const LogHeader&) const = default;
};

struct LogRecord {
  std::int64_t recv_bus_time_ns = 0;
  std::string topic;
  Bytes payload;

  bool operator==(const LogRecord&) const = default;
};

Bytes encode_log_header(const LogHeader& h);
Bytes encode_log_record(const LogRecord& r);

class LogWriter {
 public:
  // Throws Error{IoError}; nothing is created on failure.
  LogWriter(const std::filesystem::path& path, const LogHeader& header);
  void append(const LogRecord& r);
  void flush();
  void close();
  std::size_t header_bytes() const { return header_bytes_; }

 private:
  std::ofstream out_;
  std::size_t header_bytes_ = 0;
};

struct LogContents {
  LogHeader header;
  std::vector<LogRecord> records;
};

// Full sequential read. Throws LogFormatError for a bad magic, out-of-order
// timestamps or undecodable payloads, and LogDamageError{Truncated} (with
// the damage offset and intact-record count) when the file ends mid-record.
LogContents read_log(const std::filesystem::path& path);
LogContents parse_log(std::span<const std::uint8_t> bytes);

struct TopicSummary {
  std::string topic;
  SchemaId schema = SchemaId::PhysioRaw;
  std::size_t count = 0;
  std::int64_t first_ns = 0;
  std::int64_t last_ns = 0;

  bool operator==(const TopicSummary&) const = default;
};

struct LogSummary {
  LogHeader header;
  std::size_t records = 0;
  std::optional<std::int64_t> first_ns;  // unset for an empty log
  std::optional<std::int64_t> last_ns;
  std::vector<TopicSummary> topics;      // sorted by topic

  bool operator==(const LogSummary&) const = default;
};

LogSummary list_log(const std::filesystem::path& path);

}  // namespace s4h
