#include "s4h/bridge.hpp"

#include <spdlog/spdlog.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <map>
#include <thread>

#include "s4h/error.hpp"
#include "s4h/json_mapping.hpp"
#include "s4h/recorder.hpp"
#include "s4h/tcp.hpp"

namespace s4h {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using net::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxOutgoing = 10'000;

bool is_raw_topic(std::string_view topic) {
  try {
    return parse_topic(topic).field == "raw";
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

class BridgeSession;

struct Bridge::Impl : std::enable_shared_from_this<Bridge::Impl> {
  Bus& bus;
  std::unique_ptr<Node> node;
  net::io_context io;
  tcp::acceptor acceptor{io};
  std::thread thread;
  std::uint16_t bound_port = 0;

  mutable std::mutex mu;
  std::vector<std::weak_ptr<BridgeSession>> sessions;
  std::unique_ptr<RecordingSession> recording;
  std::uint64_t annotations = 0;
  std::atomic<std::uint64_t> decimated{0};

  explicit Impl(Bus& b) : bus(b) {}

  void do_accept();
  void broadcast(const json& j);
};

class BridgeSession : public std::enable_shared_from_this<BridgeSession> {
 public:
  BridgeSession(tcp::socket socket, std::shared_ptr<Bridge::Impl> bridge)
      : ws_(std::move(socket)), bridge_(std::move(bridge)) {}

  void run() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] {
      self->ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      self->ws_.async_accept([self](beast::error_code ec) {
        if (ec) return;
        self->do_read();
      });
    });
  }

  // Called on the session strand.
  void send(std::string text) {
    if (closed_) return;
    outgoing_.push_back(std::move(text));
    if (outgoing_.size() > kMaxOutgoing) outgoing_.erase(outgoing_.begin() + 1);
    if (outgoing_.size() == 1) do_write();
  }

  void post_send(std::string text) {
    net::post(ws_.get_executor(),
              [self = shared_from_this(), t = std::move(text)]() mutable { self->send(std::move(t)); });
  }

  void close_subscriptions() {
    for (auto& [_, s] : subs_) s.reset();
    subs_.clear();
    for (auto& [_, r] : raw_) {
      if (r.timer) r.timer->cancel();
    }
  }

  bool open() const { return !closed_; }

 private:
  struct RawState {
    std::chrono::steady_clock::time_point last_sent{};
    std::optional<Delivery> pending;
    std::unique_ptr<net::steady_timer> timer;
    bool armed = false;
  };

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->on_close();
        return;
      }
      auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handle(text);
      self->do_read();
    });
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(outgoing_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->on_close();
                        return;
                      }
                      self->outgoing_.pop_front();
                      if (!self->outgoing_.empty()) self->do_write();
                    });
  }

  void on_close() {
    if (closed_) return;
    closed_ = true;
    close_subscriptions();
    outgoing_.clear();
  }

  void reply_error(const json& req, const std::string& message) {
    json e{{"op", "error"}, {"message", message}};
    if (req.is_object()) {
      if (req.contains("op")) e["request"] = req["op"];
      if (req.contains("id")) e["id"] = req["id"];
    }
    send(e.dump());
  }

  void reply_status(const json& req, json body) {
    body["op"] = "status";
    body["request"] = req.at("op");
    if (req.contains("id")) body["id"] = req["id"];
    send(body.dump());
  }

  void handle(const std::string& text) {
    json req;
    try {
      req = json::parse(text);
    } catch (const json::parse_error& e) {
      reply_error(json(), std::string("malformed JSON: ") + e.what());
      return;
    }
    if (!req.is_object() || !req.contains("op") || !req["op"].is_string()) {
      reply_error(req, "request must be an object with a string 'op'");
      return;
    }
    try {
      dispatch(req);
    } catch (const Error& e) {
      reply_error(req, e.what());
    } catch (const json::exception& e) {
      reply_error(req, std::string("bad request: ") + e.what());
    }
  }

  void dispatch(const json& req) {
    const auto op = req["op"].get<std::string>();
    auto& b = *bridge_;
    if (op == "subscribe") {
      const auto pattern = req.at("pattern").get<std::string>();
      TopicPattern parsed(pattern);
      if (!subs_.count(pattern)) {
        std::weak_ptr<BridgeSession> weak = weak_from_this();
        subs_[pattern] = b.node->subscribe({parsed}, [weak](const Delivery& d) {
          if (auto self = weak.lock()) {
            net::post(self->ws_.get_executor(), [self, d] { self->on_delivery(d); });
          }
        });
      }
      reply_status(req, {{"pattern", pattern}, {"subscribed", true}});
    } else if (op == "unsubscribe") {
      const auto pattern = req.at("pattern").get<std::string>();
      TopicPattern parsed(pattern);
      subs_.erase(pattern);
      reply_status(req, {{"pattern", pattern}, {"subscribed", false}});
    } else if (op == "list") {
      json topics = json::array();
      for (const auto& t : b.node->list_topics()) {
        topics.push_back({{"topic", t.topic},
                          {"schema", schema_name(t.schema)},
                          {"publisher", t.publisher},
                          {"messages", t.messages},
                          {"dropped", t.dropped}});
      }
      reply_status(req, {{"topics", std::move(topics)}});
    } else if (op == "param_get") {
      const auto node = req.at("node").get<std::string>();
      const auto names = req.at("names").get<std::vector<std::string>>();
      json values = json::object();
      for (const auto& [k, v] : b.node->get_parameters(node, names)) {
        values[k] = v ? parameter_to_json(*v) : json(nullptr);
      }
      reply_status(req, {{"node", node}, {"values", std::move(values)}});
    } else if (op == "record_start") {
      const auto path = req.at("path").get<std::string>();
      const auto patterns = req.at("patterns").get<std::vector<std::string>>();
      {
        std::lock_guard lock(b.mu);
        if (b.recording && b.recording->active()) {
          throw Error(ErrorCode::InvalidConfig, "a recording is already active");
        }
        b.recording = record(b.bus, patterns, path);
      }
      reply_status(req, {{"recording", true}, {"path", path}});
      b.broadcast({{"op", "status"}, {"recording", true}, {"path", path}});
    } else if (op == "record_stop") {
      std::unique_ptr<RecordingSession> session;
      {
        std::lock_guard lock(b.mu);
        if (!b.recording) throw Error(ErrorCode::InvalidConfig, "no active recording");
        session = std::move(b.recording);
      }
      session->stop();
      const auto path = session->path().string();
      reply_status(req, {{"recording", false}, {"path", path}, {"records", session->records()}});
      b.broadcast({{"op", "status"}, {"recording", false}, {"path", path}});
    } else if (op == "annotate") {
      const auto label = req.at("label").get<std::string>();
      std::uint64_t n;
      {
        std::lock_guard lock(b.mu);
        n = ++b.annotations;
      }
      const auto now = b.bus.clock().now_ns();
      b.node->publish(kExperimentEventsTopic,
                      DeviceFeature{{}, now, label, static_cast<double>(n)});
      reply_status(req, {{"label", label}, {"bus_time_ns", now}});
    } else {
      throw Error(ErrorCode::ProtocolError, "unknown op '" + op + "'");
    }
  }

  // On the session strand.
  void on_delivery(const Delivery& d) {
    if (closed_) return;
    if (!is_raw_topic(d.topic)) {
      send(delivery_to_json(d).dump());
      return;
    }
    using namespace std::chrono;
    const auto min_gap = duration_cast<steady_clock::duration>(duration<double>(1.0 / kBridgeRawMaxRateHz));
    auto& st = raw_[d.topic];
    const auto now = steady_clock::now();
    if (!st.armed && now - st.last_sent >= min_gap) {
      st.last_sent = now;
      send(delivery_to_json(d).dump());
      return;
    }
    if (st.pending) bridge_->decimated.fetch_add(1);
    st.pending = d;
    if (st.armed) return;
    if (!st.timer) st.timer = std::make_unique<net::steady_timer>(ws_.get_executor());
    st.armed = true;
    st.timer->expires_at(st.last_sent + min_gap);
    st.timer->async_wait([self = shared_from_this(), topic = d.topic](beast::error_code ec) {
      auto& s = self->raw_[topic];
      s.armed = false;
      if (ec || self->closed_ || !s.pending) return;
      s.last_sent = std::chrono::steady_clock::now();
      self->send(delivery_to_json(*s.pending).dump());
      s.pending.reset();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::shared_ptr<Bridge::Impl> bridge_;
  std::deque<std::string> outgoing_;
  std::map<std::string, Subscription> subs_;
  std::map<std::string, RawState> raw_;
  bool closed_ = false;
};

void Bridge::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(io), [self = shared_from_this()](beast::error_code ec,
                                                                           tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted) return;
    } else {
      auto session = std::make_shared<BridgeSession>(std::move(socket), self);
      {
        std::lock_guard lock(self->mu);
        std::erase_if(self->sessions, [](const auto& w) { return w.expired(); });
        self->sessions.push_back(session);
      }
      session->run();
    }
    self->do_accept();
  });
}

void Bridge::Impl::broadcast(const json& j) {
  const auto text = j.dump();
  std::lock_guard lock(mu);
  for (const auto& w : sessions) {
    if (auto s = w.lock()) s->post_send(text);
  }
}

Bridge::Bridge(Bus& bus, std::string_view address, std::string node_name)
    : impl_(std::make_shared<Impl>(bus)) {
  const auto ep = parse_endpoint(address);
  try {
    tcp::resolver resolver(impl_->io);
    const tcp::endpoint endpoint = *resolver.resolve(ep.host, std::to_string(ep.port)).begin();
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen();
    impl_->bound_port = impl_->acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::BindError, std::string(address) + ": " + e.what());
  }
  impl_->node = bus.create_node(node_name, ParameterMap{{"address", std::string(address)}});
  impl_->do_accept();
  impl_->thread = std::thread([impl = impl_] { impl->io.run(); });
}

Bridge::~Bridge() {
  net::post(impl_->io, [impl = impl_] {
    beast::error_code ec;
    impl->acceptor.close(ec);
  });
  impl_->io.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  std::vector<std::shared_ptr<BridgeSession>> alive;
  {
    std::lock_guard lock(impl_->mu);
    for (auto& w : impl_->sessions) {
      if (auto s = w.lock()) alive.push_back(std::move(s));
    }
    if (impl_->recording) impl_->recording->stop();
    impl_->recording.reset();
  }
  for (auto& s : alive) s->close_subscriptions();
  impl_->node.reset();
}

std::uint16_t Bridge::port() const { return impl_->bound_port; }

std::size_t Bridge::client_count() const {
  std::lock_guard lock(impl_->mu);
  std::size_t n = 0;
  for (const auto& w : impl_->sessions) {
    if (auto s = w.lock(); s && s->open()) ++n;
  }
  return n;
}

std::uint64_t Bridge::decimated() const { return impl_->decimated.load(); }

bool Bridge::recording() const {
  std::lock_guard lock(impl_->mu);
  return impl_->recording && impl_->recording->active();
}

}  // namespace s4h
