#include "s4h/recorder.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <iterator>

#include "s4h/error.hpp"

namespace s4h {

namespace {

std::atomic<std::uint64_t> g_session_counter{0};

}  // namespace

std::optional<std::int64_t> device_timestamp_of(const Message& m) {
  return std::visit(
      [](const auto& msg) -> std::optional<std::int64_t> {
        if constexpr (requires { msg.device_timestamp_ns; }) {
          return msg.device_timestamp_ns;
        } else {
          return std::nullopt;
        }
      },
      m);
}

RecordingSession::RecordingSession(Bus& bus, const std::vector<std::string>& patterns,
                                   const std::filesystem::path& path, std::string node_name)
    : path_(path), patterns_(patterns), created_ns_(bus.clock().now_ns()) {
  std::vector<TopicPattern> parsed;
  for (const auto& p : patterns) parsed.emplace_back(p);

  std::string joined;
  for (const auto& p : patterns) joined += (joined.empty() ? "" : " ") + p;
  writer_ = std::make_unique<LogWriter>(path_, LogHeader{created_ns_, {{"patterns", joined}}});

  if (node_name.empty()) node_name = "recorder_" + std::to_string(g_session_counter.fetch_add(1));
  try {
    node_ = bus.create_node(node_name, ParameterMap{{"path", path_.string()}, {"patterns", joined}});
  } catch (...) {
    writer_.reset();
    std::error_code ec;
    std::filesystem::remove(path_, ec);
    throw;
  }
  sub_ = node_->subscribe(std::move(parsed), [this](const Delivery& d) { on_message(d); });
}

RecordingSession::~RecordingSession() {
  try {
    stop();
  } catch (const std::exception& e) {
    spdlog::error("recorder: {}", e.what());
  }
}

void RecordingSession::on_message(const Delivery& d) {
  std::lock_guard lock(mu_);
  if (!writer_) return;
  writer_->append(LogRecord{d.recv_time_ns, d.topic, *d.envelope});
  ++records_;
  if (!first_) first_ = d.recv_time_ns;
  last_ = d.recv_time_ns;
  if (auto dev = device_timestamp_of(d.decode())) {
    offsets_.try_emplace(d.topic).first->second.observe(*dev, d.recv_time_ns);
  }
}

void RecordingSession::stop() {
  sub_.reset();
  std::lock_guard lock(mu_);
  if (!writer_) return;
  const auto header_bytes = writer_->header_bytes();
  writer_->close();
  writer_.reset();
  node_.reset();

  LogHeader header{created_ns_, {{"patterns", ""}}};
  for (const auto& p : patterns_) {
    header.metadata[0].second += (header.metadata[0].second.empty() ? "" : " ") + p;
  }
  header.metadata.emplace_back("record_count", std::to_string(records_));
  for (const auto& [topic, est] : offsets_) {
    if (auto e = est.estimate()) header.metadata.emplace_back("offset_ns:" + topic, std::to_string(*e));
  }

  // Rewrite header + the records region into a sibling file, then swap.
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot reopen '" + path_.string() + "'");
  in.seekg(static_cast<std::streamoff>(header_bytes));
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  auto tmp = path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    const auto h = encode_log_header(header);
    out.write(reinterpret_cast<const char*>(h.data()), static_cast<std::streamsize>(h.size()));
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path_);
}

bool RecordingSession::active() const {
  std::lock_guard lock(mu_);
  return writer_ != nullptr;
}

std::size_t RecordingSession::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::optional<std::int64_t> RecordingSession::first_ns() const {
  std::lock_guard lock(mu_);
  return first_;
}

std::optional<std::int64_t> RecordingSession::last_ns() const {
  std::lock_guard lock(mu_);
  return last_;
}

std::unique_ptr<RecordingSession> record(Bus& bus, const std::vector<std::string>& patterns,
                                         const std::filesystem::path& path, std::string node_name) {
  return std::make_unique<RecordingSession>(bus, patterns, path, std::move(node_name));
}

std::size_t replay(Bus& bus, const std::filesystem::path& path, double rate, std::string node_name) {
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "replay rate must be > 0");
  const auto contents = read_log(path);
  auto node = bus.create_node(node_name, ParameterMap{{"log_path", path.string()}, {"rate", rate}});
  auto& clock = bus.clock();
  const auto start = clock.now_ns();
  std::size_t n = 0;
  for (const auto& r : contents.records) {
    const auto gap = r.recv_bus_time_ns - contents.records.front().recv_bus_time_ns;
    clock.sleep_until(start + std::llround(static_cast<double>(gap) / rate));
    node->publish_envelope(r.topic, r.payload);
    ++n;
  }
  return n;
}

}  // namespace s4h
