#include "s4h/tcp.hpp"

#include <spdlog/spdlog.h>

#include <boost/asio.hpp>
#include <charconv>
#include <condition_variable>
#include <future>
#include <list>
#include <set>

#include "s4h/error.hpp"

namespace s4h {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

enum class ParamTag : std::uint8_t { NotSet = 0, Float = 1, Int = 2, String = 3, Bool = 4 };

void put_param_value(ByteWriter& w, const std::optional<ParameterValue>& v) {
  if (!v) {
    w.put(static_cast<std::uint8_t>(ParamTag::NotSet));
    return;
  }
  std::visit(
      [&w](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          w.put(static_cast<std::uint8_t>(ParamTag::Float));
          w.put_f64(x);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          w.put(static_cast<std::uint8_t>(ParamTag::Int));
          w.put(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          w.put(static_cast<std::uint8_t>(ParamTag::String));
          w.put_string(x);
        } else {
          w.put(static_cast<std::uint8_t>(ParamTag::Bool));
          w.put(static_cast<std::uint8_t>(x ? 1 : 0));
        }
      },
      *v);
}

std::optional<ParameterValue> get_param_value(ByteReader& r) {
  switch (static_cast<ParamTag>(r.get<std::uint8_t>())) {
    case ParamTag::NotSet: return std::nullopt;
    case ParamTag::Float: return ParameterValue{r.get_f64()};
    case ParamTag::Int: return ParameterValue{r.get<std::int64_t>()};
    case ParamTag::String: return ParameterValue{r.get_string()};
    case ParamTag::Bool: return ParameterValue{r.get<std::uint8_t>() != 0};
  }
  throw Error(ErrorCode::ProtocolError, "unknown parameter tag");
}

Bytes make_frame(FrameType type, const Bytes& body) {
  Bytes frame;
  frame.reserve(body.size() + 5);
  ByteWriter w(frame);
  w.put(static_cast<std::uint32_t>(body.size() + 1));
  w.put(static_cast<std::uint8_t>(type));
  w.put_raw(body);
  return frame;
}

Bytes hello_body(std::string_view name, const ParameterMap& params) {
  Bytes body;
  ByteWriter w(body);
  w.put_string(name);
  w.put(static_cast<std::uint16_t>(params.size()));
  for (const auto& [k, v] : params) {
    w.put_string(k);
    put_param_value(w, v);
  }
  return body;
}

Bytes msg_body(std::string_view topic, std::span<const std::uint8_t> envelope) {
  Bytes body;
  ByteWriter w(body);
  w.put_string(topic);
  w.put_raw(envelope);
  return body;
}

struct Frame {
  FrameType type;
  Bytes body;
};

// Blocking read of one frame. Throws boost::system::system_error on socket
// failure and Error{ProtocolError} on a bad length.
Frame read_frame(tcp::socket& sock) {
  std::uint32_t len = 0;
  asio::read(sock, asio::buffer(&len, sizeof(len)));
  if (len == 0 || len > kMaxFrameBytes) {
    throw Error(ErrorCode::ProtocolError, "bad frame length " + std::to_string(len));
  }
  std::uint8_t type = 0;
  asio::read(sock, asio::buffer(&type, 1));
  Frame f{static_cast<FrameType>(type), Bytes(len - 1)};
  if (!f.body.empty()) asio::read(sock, asio::buffer(f.body));
  return f;
}

void read_magic(tcp::socket& sock) {
  char magic[4];
  asio::read(sock, asio::buffer(magic, 4));
  if (std::string_view(magic, 4) != kTcpMagic) {
    throw Error(ErrorCode::ProtocolError, "bad stream magic");
  }
}

// Socket plus a write lock; frames from several threads never interleave.
class FrameWriter {
 public:
  explicit FrameWriter(tcp::socket& sock) : sock_(sock) {}
  bool write(FrameType type, const Bytes& body) {
    auto frame = make_frame(type, body);
    std::lock_guard lock(mu_);
    boost::system::error_code ec;
    asio::write(sock_, asio::buffer(frame), ec);
    return !ec;
  }
  bool write_raw(std::string_view raw) {
    std::lock_guard lock(mu_);
    boost::system::error_code ec;
    asio::write(sock_, asio::buffer(raw.data(), raw.size()), ec);
    return !ec;
  }

 private:
  tcp::socket& sock_;
  std::mutex mu_;
};

}  // namespace

Endpoint parse_endpoint(std::string_view address) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorCode::InvalidConfig, "address must be host:port, got '" +
                                              std::string(address) + "'");
  }
  Endpoint ep;
  ep.host = std::string(address.substr(0, colon));
  const auto port_text = address.substr(colon + 1);
  unsigned port = 0;
  auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || p != port_text.data() + port_text.size() || port > 65535) {
    throw Error(ErrorCode::InvalidConfig, "bad port in '" + std::string(address) + "'");
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

// ---------------------------------------------------------------------------
// Server

struct TcpServer::Impl {
  struct Connection {
    tcp::socket sock;
    FrameWriter writer{sock};
    std::string node;
    std::shared_ptr<detail::SubscriptionState> sub;
    std::thread thread;
    std::atomic<bool> done{false};
    explicit Connection(tcp::socket s) : sock(std::move(s)) {}
  };

  std::shared_ptr<Broker> broker;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread accept_thread;
  mutable std::mutex mu;
  std::list<std::unique_ptr<Connection>> connections;
  std::atomic<bool> stopping{false};
  std::uint16_t bound_port = 0;

  void accept_loop() {
    while (!stopping.load()) {
      boost::system::error_code ec;
      tcp::socket sock(io);
      acceptor.accept(sock, ec);
      if (stopping.load()) return;
      if (ec) continue;
      sock.set_option(tcp::no_delay(true), ec);
      std::lock_guard lock(mu);
      reap();
      auto conn = std::make_unique<Connection>(std::move(sock));
      auto* raw = conn.get();
      connections.push_back(std::move(conn));
      raw->thread = std::thread([this, raw] { serve(*raw); });
    }
  }

  // Joins finished connection threads. Caller holds mu.
  void reap() {
    for (auto it = connections.begin(); it != connections.end();) {
      if ((*it)->done.load()) {
        if ((*it)->thread.joinable()) (*it)->thread.join();
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }

  void serve(Connection& c) {
    try {
      read_magic(c.sock);
      c.writer.write_raw(kTcpMagic);
      while (true) {
        auto f = read_frame(c.sock);
        handle(c, f);
      }
    } catch (const Error& e) {
      if (!stopping.load()) {
        spdlog::warn("tcp: closing connection{}: {}", c.node.empty() ? "" : " of " + c.node,
                     e.what());
      }
    } catch (const boost::system::system_error&) {
      // peer closed
    }
    cleanup(c);
  }

  void cleanup(Connection& c) {
    if (c.sub) {
      broker->remove_subscription(c.sub);
      c.sub->deactivate();
    }
    if (!c.node.empty()) broker->unregister_node(c.node);
    boost::system::error_code ec;
    c.sock.shutdown(tcp::socket::shutdown_both, ec);
    c.sock.close(ec);
    c.done.store(true);
  }

  void handle(Connection& c, const Frame& f) {
    ByteReader r(f.body);
    if (f.type != FrameType::Hello && c.node.empty()) {
      throw Error(ErrorCode::ProtocolError, "frame before HELLO");
    }
    try {
      switch (f.type) {
        case FrameType::Hello: on_hello(c, r); break;
        case FrameType::Sub: {
          TopicPattern p(r.get_string());
          if (!c.sub) {
            c.sub = broker->add_subscription_state({p}, [&c](const Delivery& d) {
              c.writer.write(FrameType::Msg, msg_body(d.topic, d.bytes()));
            });
          } else {
            c.sub->add_pattern(p);
          }
          break;
        }
        case FrameType::Unsub: {
          TopicPattern p(r.get_string());
          if (c.sub) c.sub->remove_pattern(p);
          break;
        }
        case FrameType::Msg: {
          auto topic = r.get_string();
          auto env = r.get_raw(r.remaining());
          broker->dispatch(topic, std::make_shared<const Bytes>(env.begin(), env.end()), c.node);
          break;
        }
        case FrameType::ParamReq: on_param_req(c, r); break;
        case FrameType::ListReq: on_list_req(c, r); break;
        default:
          throw Error(ErrorCode::ProtocolError,
                      "unexpected frame type " + std::to_string(static_cast<int>(f.type)));
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ProtocolError) throw;
      throw Error(ErrorCode::ProtocolError, e.what());
    }
    if (f.type != FrameType::Msg && !r.at_end()) {
      throw Error(ErrorCode::ProtocolError, "trailing bytes in frame");
    }
  }

  void on_hello(Connection& c, ByteReader& r) {
    auto name = r.get_string();
    const auto n = r.get<std::uint16_t>();
    ParameterMap params;
    for (std::uint16_t i = 0; i < n; ++i) {
      auto key = r.get_string();
      auto v = get_param_value(r);
      if (!v) throw Error(ErrorCode::ProtocolError, "HELLO parameter without value");
      params[key] = *v;
    }
    if (c.node.empty()) {
      broker->register_node(name, std::move(params));
      c.node = name;
      return;
    }
    if (name != c.node) throw Error(ErrorCode::ProtocolError, "HELLO renames node");
    for (auto& [k, v] : params) {
      try {
        broker->update_status(c.node, k, v);
      } catch (const Error& e) {
        spdlog::warn("tcp: {}", e.what());
      }
    }
  }

  void on_param_req(Connection& c, ByteReader& r) {
    const auto corr = r.get<std::uint32_t>();
    const auto node = r.get_string();
    const auto n = r.get<std::uint16_t>();
    std::vector<std::string> names;
    for (std::uint16_t i = 0; i < n; ++i) names.push_back(r.get_string());
    Bytes body;
    ByteWriter w(body);
    w.put(corr);
    try {
      auto reply = broker->get_parameters(node, names);
      w.put(std::uint8_t{0});
      w.put(static_cast<std::uint16_t>(reply.size()));
      for (const auto& [k, v] : reply) {
        w.put_string(k);
        put_param_value(w, v);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownNode) throw;
      w.put(std::uint8_t{1});
      w.put(std::uint16_t{0});
    }
    c.writer.write(FrameType::ParamRep, body);
  }

  void on_list_req(Connection& c, ByteReader& r) {
    const auto corr = r.get<std::uint32_t>();
    const auto topics = broker->list_topics();
    Bytes body;
    ByteWriter w(body);
    w.put(corr);
    w.put(static_cast<std::uint32_t>(topics.size()));
    for (const auto& t : topics) {
      w.put_string(t.topic);
      w.put(static_cast<std::uint16_t>(t.schema));
      w.put_string(t.publisher);
      w.put(t.messages);
      w.put(t.dropped);
    }
    c.writer.write(FrameType::ListRep, body);
  }
};

TcpServer::TcpServer(std::shared_ptr<Broker> broker, std::string_view address)
    : impl_(std::make_unique<Impl>()) {
  impl_->broker = std::move(broker);
  const auto ep = parse_endpoint(address);
  try {
    tcp::resolver resolver(impl_->io);
    auto results = resolver.resolve(ep.host, std::to_string(ep.port));
    const tcp::endpoint endpoint = *results.begin();
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen();
    impl_->bound_port = impl_->acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::BindError, std::string(address) + ": " + e.what());
  }
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

TcpServer::~TcpServer() {
  impl_->stopping.store(true);
  boost::system::error_code ec;
  // Wake the blocking accept() with a throwaway connection.
  {
    tcp::socket poke(impl_->io);
    poke.connect(tcp::endpoint(impl_->acceptor.local_endpoint(ec).address().is_unspecified()
                                   ? asio::ip::address(asio::ip::address_v4::loopback())
                                   : impl_->acceptor.local_endpoint(ec).address(),
                               impl_->bound_port),
                 ec);
  }
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  impl_->acceptor.close(ec);
  std::lock_guard lock(impl_->mu);
  for (auto& c : impl_->connections) {
    c->sock.shutdown(tcp::socket::shutdown_both, ec);
  }
  for (auto& c : impl_->connections) {
    if (c->thread.joinable()) c->thread.join();
  }
}

std::uint16_t TcpServer::port() const { return impl_->bound_port; }

std::size_t TcpServer::connection_count() const {
  std::lock_guard lock(impl_->mu);
  std::size_t n = 0;
  for (const auto& c : impl_->connections) n += c->done.load() ? 0 : 1;
  return n;
}

// ---------------------------------------------------------------------------
// Client

namespace {

class RemoteNode final : public Node {
 public:
  RemoteNode(const Endpoint& ep, std::string name, ParameterMap params, Clock& clock)
      : name_(std::move(name)), clock_(clock), sock_(io_), writer_(sock_) {
    try {
      tcp::resolver resolver(io_);
      asio::connect(sock_, resolver.resolve(ep.host, std::to_string(ep.port)));
      sock_.set_option(tcp::no_delay(true));
    } catch (const boost::system::system_error& e) {
      throw Error(ErrorCode::ConnectError, ep.host + ":" + std::to_string(ep.port) + ": " +
                                               e.what());
    }
    writer_.write_raw(kTcpMagic);
    try {
      read_magic(sock_);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ConnectError, std::string("handshake failed: ") + e.what());
    }
    writer_.write(FrameType::Hello, hello_body(name_, params));
    reader_ = std::thread([this] { read_loop(); });
    // The broker closes the connection on a refused name; a successful
    // round-trip confirms registration.
    try {
      list_topics();
    } catch (const Error&) {
      shutdown();
      throw Error(ErrorCode::DuplicateNodeName, "broker refused node '" + name_ + "'");
    }
  }

  ~RemoteNode() override { shutdown(); }

  const std::string& name() const override { return name_; }
  Clock& clock() override { return clock_; }

  void publish(std::string_view topic, Message msg) override {
    validate_publish_topic(topic);
    auto& h = header_of(msg);
    {
      std::lock_guard lock(mu_);
      auto [it, _] = seq_.try_emplace(std::string(topic), 0);
      h.seq = it->second++;
    }
    h.stamp_ns = clock_.now_ns();
    h.source = name_;
    Bytes env;
    try {
      encode_envelope(msg, env);
    } catch (const Error& e) {
      throw Error(ErrorCode::EncodingError, e.what());
    }
    send_msg(topic, env);
  }

  void publish_envelope(std::string_view topic, std::span<const std::uint8_t> envelope) override {
    validate_publish_topic(topic);
    try {
      decode_envelope(envelope);
    } catch (const Error& e) {
      throw Error(ErrorCode::EncodingError, e.what());
    }
    send_msg(topic, envelope);
  }

  Subscription subscribe(std::vector<TopicPattern> patterns, DeliveryCallback cb) override {
    auto state = std::make_shared<detail::SubscriptionState>(patterns, std::move(cb));
    {
      std::lock_guard lock(mu_);
      subs_.push_back(state);
    }
    for (const auto& p : patterns) {
      Bytes body;
      ByteWriter(body).put_string(p.str());
      writer_.write(FrameType::Sub, body);
    }
    return Subscription(state, [this, patterns](const auto& s) {
      {
        std::lock_guard lock(mu_);
        std::erase(subs_, s);
      }
      for (const auto& p : patterns) {
        Bytes body;
        ByteWriter(body).put_string(p.str());
        writer_.write(FrameType::Unsub, body);
      }
    });
  }

  ParameterReply get_parameters(std::string_view node,
                                const std::vector<std::string>& names) override {
    Bytes body;
    ByteWriter w(body);
    const auto corr = next_corr_++;
    w.put(corr);
    w.put_string(node);
    w.put(static_cast<std::uint16_t>(names.size()));
    for (const auto& n : names) w.put_string(n);
    auto reply = request(corr, FrameType::ParamReq, body);
    ByteReader r(reply);
    r.get<std::uint32_t>();
    if (r.get<std::uint8_t>() != 0) {
      throw Error(ErrorCode::UnknownNode, "'" + std::string(node) + "'");
    }
    const auto n = r.get<std::uint16_t>();
    ParameterReply out;
    for (std::uint16_t i = 0; i < n; ++i) {
      auto k = r.get_string();
      out.emplace_back(std::move(k), get_param_value(r));
    }
    return out;
  }

  std::vector<TopicInfo> list_topics() override {
    Bytes body;
    const auto corr = next_corr_++;
    ByteWriter(body).put(corr);
    auto reply = request(corr, FrameType::ListReq, body);
    ByteReader r(reply);
    r.get<std::uint32_t>();
    const auto n = r.get<std::uint32_t>();
    std::vector<TopicInfo> out;
    for (std::uint32_t i = 0; i < n; ++i) {
      TopicInfo t;
      t.topic = r.get_string();
      t.schema = static_cast<SchemaId>(r.get<std::uint16_t>());
      t.publisher = r.get_string();
      t.messages = r.get<std::uint64_t>();
      t.dropped = r.get<std::uint64_t>();
      out.push_back(std::move(t));
    }
    return out;
  }

  void set_status(std::string_view key, ParameterValue value) override {
    writer_.write(FrameType::Hello, hello_body(name_, ParameterMap{{std::string(key), value}}));
  }

 private:
  void send_msg(std::string_view topic, std::span<const std::uint8_t> env) {
    if (!writer_.write(FrameType::Msg, msg_body(topic, env))) {
      throw Error(ErrorCode::ConnectError, "connection to broker lost");
    }
  }

  Bytes request(std::uint32_t corr, FrameType type, const Bytes& body) {
    std::future<Bytes> fut;
    {
      std::lock_guard lock(mu_);
      if (closed_) throw Error(ErrorCode::ConnectError, "connection closed");
      fut = pending_[corr].get_future();
    }
    writer_.write(type, body);
    if (fut.wait_for(std::chrono::seconds(5)) != std::future_status::ready) {
      std::lock_guard lock(mu_);
      pending_.erase(corr);
      throw Error(ErrorCode::ConnectError, "request timed out");
    }
    return fut.get();
  }

  void read_loop() {
    try {
      while (true) {
        auto f = read_frame(sock_);
        if (f.type == FrameType::Msg) {
          on_msg(f.body);
        } else if (f.type == FrameType::ParamRep || f.type == FrameType::ListRep) {
          ByteReader r(f.body);
          const auto corr = r.get<std::uint32_t>();
          std::lock_guard lock(mu_);
          if (auto it = pending_.find(corr); it != pending_.end()) {
            it->second.set_value(std::move(f.body));
            pending_.erase(it);
          }
        } else {
          throw Error(ErrorCode::ProtocolError, "unexpected frame from broker");
        }
      }
    } catch (const Error& e) {
      spdlog::warn("tcp client {}: {}", name_, e.what());
    } catch (const boost::system::system_error&) {
    }
    std::lock_guard lock(mu_);
    closed_ = true;
    for (auto& [_, p] : pending_) {
      p.set_exception(std::make_exception_ptr(Error(ErrorCode::ConnectError, "connection closed")));
    }
    pending_.clear();
  }

  void on_msg(const Bytes& body) {
    ByteReader r(body);
    Delivery d;
    d.topic = r.get_string();
    auto env = r.get_raw(r.remaining());
    d.envelope = std::make_shared<const Bytes>(env.begin(), env.end());
    d.schema = peek_schema(*d.envelope);
    d.recv_time_ns = clock_.now_ns();
    d.publisher = header_source(*d.envelope);
    std::vector<std::shared_ptr<detail::SubscriptionState>> targets;
    {
      std::lock_guard lock(mu_);
      for (const auto& s : subs_) {
        if (s->active() && s->matches(d.topic)) targets.push_back(s);
      }
    }
    for (const auto& s : targets) {
      s->enqueue(d);
      s->drain();
    }
  }

  static std::string header_source(const Bytes& env) {
    ByteReader r(env);
    r.get<std::uint16_t>();
    r.get<std::uint64_t>();
    r.get<std::int64_t>();
    return r.get_string();
  }

  void shutdown() {
    boost::system::error_code ec;
    sock_.shutdown(tcp::socket::shutdown_both, ec);
    if (reader_.joinable()) reader_.join();
    sock_.close(ec);
    std::vector<std::shared_ptr<detail::SubscriptionState>> subs;
    {
      std::lock_guard lock(mu_);
      subs.swap(subs_);
    }
    for (auto& s : subs) s->deactivate();
  }

  std::string name_;
  Clock& clock_;
  asio::io_context io_;
  tcp::socket sock_;
  FrameWriter writer_;
  std::thread reader_;
  std::mutex mu_;
  bool closed_ = false;
  std::map<std::string, std::uint64_t, std::less<>> seq_;
  std::vector<std::shared_ptr<detail::SubscriptionState>> subs_;
  std::map<std::uint32_t, std::promise<Bytes>> pending_;
  std::atomic<std::uint32_t> next_corr_{1};
};

}  // namespace

TcpBus::TcpBus(std::string_view address, Clock& clock)
    : endpoint_(parse_endpoint(address)), clock_(clock) {}

std::unique_ptr<Node> TcpBus::create_node(std::string_view name, ParameterMap parameters) {
  return std::make_unique<RemoteNode>(endpoint_, std::string(name), std::move(parameters), clock_);
}

std::unique_ptr<Node> connect_tcp(std::string_view address, std::string_view node_name,
                                  ParameterMap parameters, Clock& clock) {
  return TcpBus(address, clock).create_node(node_name, std::move(parameters));
}

}  // namespace s4h
