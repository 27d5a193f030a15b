#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "s4h/clock.hpp"
#include "s4h/messages.hpp"
#include "s4h/topic.hpp"

namespace s4h {

using ParameterValue = std::variant<double, std::int64_t, std::string, bool>;
using ParameterMap = std::map<std::string, ParameterValue>;
// One reply entry per requested name; nullopt means NotSet.
using ParameterReply = std::vector<std::pair<std::string, std::optional<ParameterValue>>>;

std::string to_string(const ParameterValue& v);

struct TopicInfo {
  std::string topic;
  SchemaId schema = SchemaId::PhysioRaw;
  std::string publisher;       // most recent publisher
  std::uint64_t messages = 0;  // published since broker start
  std::uint64_t dropped = 0;   // evicted from full subscription queues

  bool operator==(const TopicInfo&) const = default;
};

// One message as seen by a subscriber.
struct Delivery {
  std::string topic;
  SchemaId schema = SchemaId::PhysioRaw;
  std::shared_ptr<const Bytes> envelope;
  std::int64_t recv_time_ns = 0;  // bus time at broker receipt
  std::string publisher;

  std::span<const std::uint8_t> bytes() const { return *envelope; }
  Message decode() const { return decode_envelope(*envelope); }
};

using DeliveryCallback = std::function<void(const Delivery&)>;

inline constexpr std::size_t kSubscriptionSoftLimit = 10'000;

namespace detail {

// Per-subscription queue. Whoever enqueues also drains, unless another
// thread is already draining; callbacks of one subscription therefore run
// serially and in enqueue order.
class SubscriptionState {
 public:
  SubscriptionState(std::vector<TopicPattern> patterns, DeliveryCallback cb)
      : patterns_(std::move(patterns)), cb_(std::move(cb)) {}

  bool matches(std::string_view topic) const;
  // Returns the delivery evicted by the soft limit, if any.
  std::optional<Delivery> enqueue(Delivery d);
  void drain();
  // Stops delivery; waits for an in-flight callback unless called from it.
  void deactivate();
  bool active() const { return active_.load(); }

  void add_pattern(const TopicPattern& p);
  void remove_pattern(const TopicPattern& p);

 private:
  mutable std::mutex pattern_mu_;
  std::vector<TopicPattern> patterns_;
  DeliveryCallback cb_;
  std::mutex queue_mu_;
  std::deque<Delivery> queue_;
  std::atomic<bool> draining_{false};
  std::atomic<bool> active_{true};
  std::atomic<std::thread::id> drainer_{};
};

}  // namespace detail

// RAII handle; destroying it (or calling reset) stops delivery.
class Subscription {
 public:
  Subscription() = default;
  Subscription(std::shared_ptr<detail::SubscriptionState> state,
               std::function<void(const std::shared_ptr<detail::SubscriptionState>&)> remover)
      : state_(std::move(state)), remover_(std::move(remover)) {}
  Subscription(Subscription&&) noexcept = default;
  Subscription& operator=(Subscription&& o) noexcept;
  Subscription(const Subscription&) = delete;
  Subscription& operator=(const Subscription&) = delete;
  ~Subscription() { reset(); }

  void reset();
  explicit operator bool() const { return state_ != nullptr; }

 private:
  std::shared_ptr<detail::SubscriptionState> state_;
  std::function<void(const std::shared_ptr<detail::SubscriptionState>&)> remover_;
};

// A named participant on the bus. Local and TCP-remote nodes share this
// interface. A node is used from one context at a time.
class Node {
 public:
  virtual ~Node() = default;

  virtual const std::string& name() const = 0;
  virtual Clock& clock() = 0;

  // Fills header.seq (per topic, from 0), header.stamp_ns and header.source,
  // then encodes and publishes. Throws InvalidTopic / InvariantViolation.
  virtual void publish(std::string_view topic, Message msg) = 0;
  // Forwards already-encoded envelope bytes unchanged (used by replay).
  virtual void publish_envelope(std::string_view topic, std::span<const std::uint8_t> envelope) = 0;

  virtual Subscription subscribe(std::vector<TopicPattern> patterns, DeliveryCallback cb) = 0;
  Subscription subscribe(std::string_view pattern, DeliveryCallback cb) {
    return subscribe(std::vector<TopicPattern>{TopicPattern(pattern)}, std::move(cb));
  }

  // Throws UnknownNode.
  virtual ParameterReply get_parameters(std::string_view node,
                                        const std::vector<std::string>& names) = 0;
  virtual std::vector<TopicInfo> list_topics() = 0;

  // Read-only runtime snapshot exposed next to the static parameters
  // (counters such as skipped_ticks). Static parameters cannot be changed.
  virtual void set_status(std::string_view name, ParameterValue value) = 0;
};

// Factory for nodes: either the in-process broker or a TCP connection to one.
class Bus {
 public:
  virtual ~Bus() = default;
  // Throws DuplicateNodeName.
  virtual std::unique_ptr<Node> create_node(std::string_view name, ParameterMap parameters) = 0;
  virtual Clock& clock() = 0;
};

class Broker final : public Bus, public std::enable_shared_from_this<Broker> {
 public:
  static std::shared_ptr<Broker> create(Clock& clock);

  std::unique_ptr<Node> create_node(std::string_view name, ParameterMap parameters) override;
  Clock& clock() override { return clock_; }

  // Lexicographic by topic.
  std::vector<TopicInfo> list_topics() const;
  ParameterReply get_parameters(std::string_view node, const std::vector<std::string>& names) const;

  // Lower-level entry points shared by local nodes and the TCP server.
  void register_node(const std::string& name, ParameterMap parameters);
  void unregister_node(const std::string& name);
  void update_status(const std::string& node, const std::string& key, ParameterValue value);
  // Validates the topic and envelope, stamps receipt time, delivers.
  void dispatch(std::string_view topic, std::shared_ptr<const Bytes> envelope,
                const std::string& publisher);
  Subscription add_subscription(std::vector<TopicPattern> patterns, DeliveryCallback cb);
  std::shared_ptr<detail::SubscriptionState> add_subscription_state(
      std::vector<TopicPattern> patterns, DeliveryCallback cb);
  void remove_subscription(const std::shared_ptr<detail::SubscriptionState>& s);

 private:
  explicit Broker(Clock& clock) : clock_(clock) {}

  struct NodeRecord {
    ParameterMap parameters;
    ParameterMap status;
  };

  Clock& clock_;
  mutable std::mutex mu_;
  std::map<std::string, NodeRecord, std::less<>> nodes_;
  std::vector<std::shared_ptr<detail::SubscriptionState>> subs_;
  std::map<std::string, TopicInfo, std::less<>> topics_;
  std::int64_t last_recv_ns_ = 0;
};

}  // namespace s4h
