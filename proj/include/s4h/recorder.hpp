#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "s4h/bus.hpp"
#include "s4h/logfile.hpp"
#include "s4h/timesync.hpp"

namespace s4h {

// Appends every message matching any pattern to a log file, stamped with
// broker receipt time. Closing rewrites the header so it carries one
// `offset_ns:<topic>` entry per stream that had a device timestamp; until
// then the file on disk is a valid log with a bare header.
class RecordingSession {
 public:
  // Throws InvalidPattern, IoError (no file is left behind).
  RecordingSession(Bus& bus, const std::vector<std::string>& patterns,
                   const std::filesystem::path& path, std::string node_name = {});
  ~RecordingSession();
  RecordingSession(const RecordingSession&) = delete;
  RecordingSession& operator=(const RecordingSession&) = delete;

  // Idempotent.
  void stop();

  bool active() const;
  std::size_t records() const;
  std::optional<std::int64_t> first_ns() const;
  std::optional<std::int64_t> last_ns() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  void on_message(const Delivery& d);

  std::filesystem::path path_;
  std::vector<std::string> patterns_;
  std::int64_t created_ns_;
  std::unique_ptr<Node> node_;

  mutable std::mutex mu_;
  std::unique_ptr<LogWriter> writer_;
  std::size_t records_ = 0;
  std::optional<std::int64_t> first_, last_;
  std::map<std::string, OffsetEstimator> offsets_;
  Subscription sub_;
};

std::unique_ptr<RecordingSession> record(Bus& bus, const std::vector<std::string>& patterns,
                                         const std::filesystem::path& path,
                                         std::string node_name = {});

// Republishes every record on its original topic, sleeping on the bus clock
// so gaps are original / rate. Payloads are forwarded byte for byte.
// Returns the number of records published.
std::size_t replay(Bus& bus, const std::filesystem::path& path, double rate,
                   std::string node_name = "replay");

// Device timestamp carried by a payload, if its schema has one.
std::optional<std::int64_t> device_timestamp_of(const Message& m);

}  // namespace s4h
