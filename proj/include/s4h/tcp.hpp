#pragma once

// Framed TCP transport for the bus. See docs/wire-format.md for the frame
// layout.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "s4h/bus.hpp"

namespace s4h {

enum class FrameType : std::uint8_t {
  Sub = 1,
  Unsub = 2,
  Msg = 3,
  ParamReq = 4,
  ParamRep = 5,
  ListReq = 6,
  ListRep = 7,
  Hello = 8,
};

inline constexpr std::string_view kTcpMagic = "S4H1";
inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

// "host:port"; throws Error{InvalidConfig}.
Endpoint parse_endpoint(std::string_view address);

// Accepts remote nodes and bridges them onto a local broker. Each client
// gets one thread. Destruction closes every connection.
class TcpServer {
 public:
  // Throws Error{BindError}.
  TcpServer(std::shared_ptr<Broker> broker, std::string_view address);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const;
  std::size_t connection_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline std::unique_ptr<TcpServer> serve_tcp(std::shared_ptr<Broker> broker,
                                            std::string_view address) {
  return std::make_unique<TcpServer>(std::move(broker), address);
}

// Bus whose nodes each hold their own connection to a remote broker.
class TcpBus final : public Bus {
 public:
  explicit TcpBus(std::string_view address, Clock& clock);

  // Throws ConnectError, or DuplicateNodeName if the broker refuses the name.
  std::unique_ptr<Node> create_node(std::string_view name, ParameterMap parameters) override;
  Clock& clock() override { return clock_; }

 private:
  Endpoint endpoint_;
  Clock& clock_;
};

std::unique_ptr<Node> connect_tcp(std::string_view address, std::string_view node_name,
                                  ParameterMap parameters, Clock& clock);

}  // namespace s4h
