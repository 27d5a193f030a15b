#include "s4h/bus.hpp"

#include <spdlog/fmt/fmt.h>

#include <algorithm>

#include "s4h/error.hpp"

namespace s4h {

std::string to_string(const ParameterValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else {
          return fmt::format("{}", x);
        }
      },
      v);
}

namespace detail {

bool SubscriptionState::matches(std::string_view topic) const {
  std::lock_guard lock(pattern_mu_);
  return matches_any(patterns_, topic);
}

void SubscriptionState::add_pattern(const TopicPattern& p) {
  std::lock_guard lock(pattern_mu_);
  patterns_.push_back(p);
}

void SubscriptionState::remove_pattern(const TopicPattern& p) {
  std::lock_guard lock(pattern_mu_);
  auto it = std::find(patterns_.begin(), patterns_.end(), p);
  if (it != patterns_.end()) patterns_.erase(it);
}

std::optional<Delivery> SubscriptionState::enqueue(Delivery d) {
  std::lock_guard lock(queue_mu_);
  queue_.push_back(std::move(d));
  if (queue_.size() > kSubscriptionSoftLimit) {
    auto oldest = std::move(queue_.front());
    queue_.pop_front();
    return oldest;
  }
  return std::nullopt;
}

void SubscriptionState::drain() {
  while (true) {
    bool expected = false;
    if (!draining_.compare_exchange_strong(expected, true)) return;
    drainer_.store(std::this_thread::get_id());
    while (true) {
      Delivery d;
      {
        std::lock_guard lock(queue_mu_);
        if (queue_.empty()) break;
        d = std::move(queue_.front());
        queue_.pop_front();
      }
      if (active_.load()) cb_(d);
    }
    drainer_.store(std::thread::id{});
    draining_.store(false);
    std::lock_guard lock(queue_mu_);
    if (queue_.empty()) return;
  }
}

void SubscriptionState::deactivate() {
  active_.store(false);
  {
    std::lock_guard lock(queue_mu_);
    queue_.clear();
  }
  if (drainer_.load() == std::this_thread::get_id()) return;
  while (draining_.load()) std::this_thread::yield();
}

}  // namespace detail

Subscription& Subscription::operator=(Subscription&& o) noexcept {
  if (this != &o) {
    reset();
    state_ = std::move(o.state_);
    remover_ = std::move(o.remover_);
  }
  return *this;
}

void Subscription::reset() {
  if (!state_) return;
  if (remover_) remover_(state_);
  state_->deactivate();
  state_.reset();
  remover_ = nullptr;
}

namespace {

class LocalNode final : public Node {
 public:
  LocalNode(std::shared_ptr<Broker> broker, std::string name)
      : broker_(std::move(broker)), name_(std::move(name)) {}
  ~LocalNode() override { broker_->unregister_node(name_); }

  const std::string& name() const override { return name_; }
  Clock& clock() override { return broker_->clock(); }

  void publish(std::string_view topic, Message msg) override {
    validate_publish_topic(topic);
    auto& h = header_of(msg);
    {
      std::lock_guard lock(mu_);
      auto [it, _] = seq_.try_emplace(std::string(topic), 0);
      h.seq = it->second++;
    }
    h.stamp_ns = broker_->clock().now_ns();
    h.source = name_;
    auto bytes = std::make_shared<Bytes>();
    try {
      encode_envelope(msg, *bytes);
    } catch (const Error& e) {
      throw Error(ErrorCode::EncodingError, e.what());
    }
    broker_->dispatch(topic, std::move(bytes), name_);
  }

  void publish_envelope(std::string_view topic, std::span<const std::uint8_t> envelope) override {
    broker_->dispatch(topic, std::make_shared<const Bytes>(envelope.begin(), envelope.end()), name_);
  }

  Subscription subscribe(std::vector<TopicPattern> patterns, DeliveryCallback cb) override {
    return broker_->add_subscription(std::move(patterns), std::move(cb));
  }

  ParameterReply get_parameters(std::string_view node,
                                const std::vector<std::string>& names) override {
    return broker_->get_parameters(node, names);
  }

  std::vector<TopicInfo> list_topics() override { return broker_->list_topics(); }

  void set_status(std::string_view key, ParameterValue value) override {
    broker_->update_status(name_, std::string(key), std::move(value));
  }

 private:
  std::shared_ptr<Broker> broker_;
  std::string name_;
  std::mutex mu_;
  std::map<std::string, std::uint64_t, std::less<>> seq_;
};

}  // namespace

std::shared_ptr<Broker> Broker::create(Clock& clock) {
  return std::shared_ptr<Broker>(new Broker(clock));
}

std::unique_ptr<Node> Broker::create_node(std::string_view name, ParameterMap parameters) {
  register_node(std::string(name), std::move(parameters));
  return std::make_unique<LocalNode>(shared_from_this(), std::string(name));
}

void Broker::register_node(const std::string& name, ParameterMap parameters) {
  if (name.empty()) throw Error(ErrorCode::InvalidConfig, "empty node name");
  std::lock_guard lock(mu_);
  if (nodes_.count(name) != 0) {
    throw Error(ErrorCode::DuplicateNodeName, "'" + name + "'");
  }
  nodes_.emplace(name, NodeRecord{std::move(parameters), {}});
}

void Broker::unregister_node(const std::string& name) {
  std::lock_guard lock(mu_);
  nodes_.erase(name);
}

void Broker::update_status(const std::string& node, const std::string& key, ParameterValue value) {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(node);
  if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, "'" + node + "'");
  if (it->second.parameters.count(key) != 0) {
    throw Error(ErrorCode::InvariantViolation, "parameter '" + key + "' is static");
  }
  it->second.status[key] = std::move(value);
}

ParameterReply Broker::get_parameters(std::string_view node,
                                      const std::vector<std::string>& names) const {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(node);
  if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, "'" + std::string(node) + "'");
  ParameterReply reply;
  reply.reserve(names.size());
  for (const auto& n : names) {
    std::optional<ParameterValue> v;
    if (auto p = it->second.parameters.find(n); p != it->second.parameters.end()) {
      v = p->second;
    } else if (auto s = it->second.status.find(n); s != it->second.status.end()) {
      v = s->second;
    }
    reply.emplace_back(n, std::move(v));
  }
  return reply;
}

std::vector<TopicInfo> Broker::list_topics() const {
  std::lock_guard lock(mu_);
  std::vector<TopicInfo> out;
  out.reserve(topics_.size());
  for (const auto& [_, info] : topics_) out.push_back(info);
  return out;  // std::map keeps lexicographic order
}

void Broker::dispatch(std::string_view topic, std::shared_ptr<const Bytes> envelope,
                      const std::string& publisher) {
  validate_publish_topic(topic);
  SchemaId schema;
  try {
    schema = schema_of(decode_envelope(*envelope));
  } catch (const Error& e) {
    throw Error(ErrorCode::EncodingError, e.what());
  }

  std::vector<std::shared_ptr<detail::SubscriptionState>> targets;
  {
    std::lock_guard lock(mu_);
    // Receipt times are nondecreasing in delivery order even if the wall
    // clock steps backwards.
    last_recv_ns_ = std::max(last_recv_ns_, clock_.now_ns());
    Delivery d{std::string(topic), schema, envelope, last_recv_ns_, publisher};

    auto [it, _] = topics_.try_emplace(std::string(topic));
    auto& info = it->second;
    info.topic = std::string(topic);
    info.schema = schema;
    info.publisher = publisher;
    ++info.messages;

    for (const auto& s : subs_) {
      if (!s->active() || !s->matches(topic)) continue;
      if (auto evicted = s->enqueue(d)) {
        if (auto t = topics_.find(evicted->topic); t != topics_.end()) ++t->second.dropped;
      }
      targets.push_back(s);
    }
  }
  for (const auto& s : targets) s->drain();
}

std::shared_ptr<detail::SubscriptionState> Broker::add_subscription_state(
    std::vector<TopicPattern> patterns, DeliveryCallback cb) {
  auto state = std::make_shared<detail::SubscriptionState>(std::move(patterns), std::move(cb));
  std::lock_guard lock(mu_);
  subs_.push_back(state);
  return state;
}

Subscription Broker::add_subscription(std::vector<TopicPattern> patterns, DeliveryCallback cb) {
  auto state = add_subscription_state(std::move(patterns), std::move(cb));
  std::weak_ptr<Broker> weak = shared_from_this();
  return Subscription(state, [weak](const std::shared_ptr<detail::SubscriptionState>& s) {
    if (auto b = weak.lock()) b->remove_subscription(s);
  });
}

void Broker::remove_subscription(const std::shared_ptr<detail::SubscriptionState>& s) {
  std::lock_guard lock(mu_);
  std::erase(subs_, s);
}

}  // namespace s4h
