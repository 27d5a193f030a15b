#pragma once

// WebSocket gateway: JSON text frames in both directions. Client ops are
// subscribe, unsubscribe, list, param_get, record_start, record_stop and
// annotate; server messages are msg, status and error. The protocol is
// documented in docs/bridge-protocol.md.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "s4h/bus.hpp"

namespace s4h {

// Raw-sample topics are forwarded at most this often per client
// subscription; newer blocks replace older pending ones.
inline constexpr double kBridgeRawMaxRateHz = 50.0;

class Bridge {
 public:
  // Throws Error{BindError}. Port 0 picks a free port.
  Bridge(Bus& bus, std::string_view address, std::string node_name = "ws_bridge");
  ~Bridge();
  Bridge(const Bridge&) = delete;
  Bridge& operator=(const Bridge&) = delete;

  std::uint16_t port() const;
  std::size_t client_count() const;
  // Raw-topic messages dropped by decimation, over all clients.
  std::uint64_t decimated() const;
  bool recording() const;

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

inline std::unique_ptr<Bridge> serve_ws(Bus& bus, std::string_view address,
                                        std::string node_name = "ws_bridge") {
  return std::make_unique<Bridge>(bus, address, std::move(node_name));
}

}  // namespace s4h
