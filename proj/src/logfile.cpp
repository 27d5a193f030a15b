#include "s4h/logfile.hpp"

#include <cstring>
#include <iterator>

#include "s4h/error.hpp"

namespace s4h {

Bytes encode_log_header(const LogHeader& h) {
  Bytes out;
  ByteWriter w(out);
  w.put_raw(std::span(reinterpret_cast<const std::uint8_t*>(kLogMagic.data()), kLogMagic.size()));
  w.put(h.created_ns);
  if (h.metadata.size() > 65535) throw Error(ErrorCode::InvariantViolation, "too many metadata entries");
  w.put(static_cast<std::uint16_t>(h.metadata.size()));
  for (const auto& [k, v] : h.metadata) {
    w.put_string(k);
    w.put_string(v);
  }
  return out;
}

Bytes encode_log_record(const LogRecord& r) {
  Bytes body;
  ByteWriter bw(body);
  bw.put(r.recv_bus_time_ns);
  bw.put_string(r.topic);
  bw.put_blob(r.payload);
  Bytes out;
  ByteWriter w(out);
  w.put(static_cast<std::uint32_t>(body.size()));
  w.put_raw(body);
  return out;
}

LogWriter::LogWriter(const std::filesystem::path& path, const LogHeader& header) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  const auto bytes = encode_log_header(header);
  header_bytes_ = bytes.size();
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoError, "write failed on '" + path.string() + "'");
}

void LogWriter::append(const LogRecord& r) {
  const auto bytes = encode_log_record(r);
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw Error(ErrorCode::IoError, "record write failed");
}

void LogWriter::flush() { out_.flush(); }

void LogWriter::close() {
  if (out_.is_open()) {
    out_.flush();
    out_.close();
  }
}

LogContents parse_log(std::span<const std::uint8_t> bytes) {
  LogContents c;
  if (bytes.size() < kLogMagic.size() ||
      std::memcmp(bytes.data(), kLogMagic.data(), kLogMagic.size()) != 0) {
    throw Error(ErrorCode::LogFormatError, "bad magic");
  }
  ByteReader r(bytes);
  r.get_raw(kLogMagic.size());
  try {
    c.header.created_ns = r.get<std::int64_t>();
    const auto n = r.get<std::uint16_t>();
    for (std::uint16_t i = 0; i < n; ++i) {
      auto k = r.get_string();
      auto v = r.get_string();
      c.header.metadata.emplace_back(std::move(k), std::move(v));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Truncated) {
      throw LogDamageError(ErrorCode::Truncated, r.position(), 0, "header truncated");
    }
    throw Error(ErrorCode::LogFormatError, std::string("header: ") + e.what());
  }

  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  while (!r.at_end()) {
    const auto start = r.position();
    try {
      const auto total = r.get<std::uint32_t>();
      auto body = r.get_raw(total);
      ByteReader br(body);
      LogRecord rec;
      rec.recv_bus_time_ns = br.get<std::int64_t>();
      rec.topic = br.get_string();
      auto payload = br.get_blob();
      if (!br.at_end()) {
        throw LogDamageError(ErrorCode::LogFormatError, start, c.records.size(),
                             "record length does not match its fields");
      }
      rec.payload.assign(payload.begin(), payload.end());
      if (rec.recv_bus_time_ns < last) {
        throw LogDamageError(ErrorCode::LogFormatError, start, c.records.size(),
                             "record timestamps go backwards");
      }
      try {
        decode_envelope(rec.payload);
      } catch (const Error& e) {
        throw LogDamageError(ErrorCode::LogFormatError, start, c.records.size(),
                             std::string("payload: ") + e.what());
      }
      last = rec.recv_bus_time_ns;
      c.records.push_back(std::move(rec));
    } catch (const LogDamageError&) {
      throw;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Truncated) {
        throw LogDamageError(ErrorCode::Truncated, start, c.records.size(), "record truncated");
      }
      throw LogDamageError(ErrorCode::LogFormatError, start, c.records.size(), e.what());
    }
  }
  return c;
}

LogContents read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_log(bytes);
}

LogSummary list_log(const std::filesystem::path& path) {
  auto contents = read_log(path);
  LogSummary s;
  s.header = std::move(contents.header);
  s.records = contents.records.size();
  std::map<std::string, TopicSummary> by_topic;
  for (const auto& rec : contents.records) {
    if (!s.first_ns) s.first_ns = rec.recv_bus_time_ns;
    s.last_ns = rec.recv_bus_time_ns;
    auto [it, inserted] = by_topic.try_emplace(rec.topic);
    auto& t = it->second;
    if (inserted) {
      t.topic = rec.topic;
      t.first_ns = rec.recv_bus_time_ns;
    }
    t.schema = peek_schema(rec.payload);
    t.last_ns = rec.recv_bus_time_ns;
    ++t.count;
  }
  for (auto& [_, t] : by_topic) s.topics.push_back(std::move(t));
  return s;
}

}  // namespace s4h
