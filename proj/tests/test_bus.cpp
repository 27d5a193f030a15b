#include <doctest.h>

#include <barrier>
#include <latch>
#include <set>
#include <thread>

#include "s4h/bus.hpp"
#include "s4h/error.hpp"
#include "s4h/executor.hpp"
#include "support/gen.hpp"
#include "support/util.hpp"

using namespace s4h;
using namespace std::chrono_literals;

namespace {

const std::string kRaw = "/humans/physiological/p1/ecg/h10/raw";
const std::string kFeat = "/humans/physiological/p1/ecg/h10/features";

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("node registration and parameters") {
  SimulatedClock clock;
  auto broker = Broker::create(clock);
  auto n = broker->create_node("ecg_driver_p1", {{"sampling_frequency_hz", 250.0}});
  CHECK(error_of([&] { broker->create_node("ecg_driver_p1", {}); }) == ErrorCode::DuplicateNodeName);
  auto empty = broker->create_node("empty", {});
  CHECK(empty->get_parameters("empty", {"x"}) ==
        ParameterReply{{"x", std::nullopt}});

  const auto reply = n->get_parameters("ecg_driver_p1", {"sampling_frequency_hz", "nope"});
  REQUIRE(reply.size() == 2);
  CHECK(reply[0].first == "sampling_frequency_hz");
  CHECK(std::get<double>(*reply[0].second) == 250.0);
  CHECK(reply[1] == std::pair<std::string, std::optional<ParameterValue>>{"nope", std::nullopt});
  CHECK(error_of([&] { n->get_parameters("ghost", {"a"}); }) == ErrorCode::UnknownNode);

  n.reset();
  CHECK_NOTHROW(broker->create_node("ecg_driver_p1", {}));
}

TEST_CASE("status snapshot sits next to static parameters") {
  SimulatedClock clock;
  auto broker = Broker::create(clock);
  auto n = broker->create_node("fusion_p1", {{"hr_threshold_bpm", 90.0}});
  n->set_status("skipped_ticks", std::int64_t{3});
  n->set_status("skipped_ticks", std::int64_t{4});
  auto r = n->get_parameters("fusion_p1", {"skipped_ticks", "hr_threshold_bpm"});
  CHECK(std::get<std::int64_t>(*r[0].second) == 4);
  CHECK(error_of([&] { n->set_status("hr_threshold_bpm", 1.0); }) == ErrorCode::InvariantViolation);
  r = n->get_parameters("fusion_p1", {"hr_threshold_bpm"});
  CHECK(std::get<double>(*r[0].second) == 90.0);
}

TEST_CASE("publish assigns per-topic sequence numbers") {
  SimulatedClock clock;
  auto broker = Broker::create(clock);
  auto pub = broker->create_node("pub", {});
  auto sub = broker->create_node("sub", {});
  std::vector<std::pair<std::string, std::uint64_t>> got;
  auto s = sub->subscribe(kRaw, [&](const Delivery& d) {
    got.emplace_back(d.topic, header_of(d.decode()).seq);
    CHECK(d.publisher == "pub");
    CHECK(d.schema == SchemaId::PhysioRaw);
  });
  for (int i = 0; i < 3; ++i) pub->publish(kRaw, PhysioRaw{});
  pub->publish(kFeat, EcgFeatures{});
  REQUIRE(got.size() == 3);
  CHECK(got[0].second == 0);
  CHECK(got[1].second == 1);
  CHECK(got[2].second == 2);

  std::vector<std::uint64_t> feat_seqs;
  auto s2 = sub->subscribe(kFeat, [&](const Delivery& d) { feat_seqs.push_back(header_of(d.decode()).seq); });
  pub->publish(kFeat, EcgFeatures{});
  CHECK(feat_seqs == std::vector<std::uint64_t>{1});
}

TEST_CASE("header stamp and source are filled by publish") {
  SimulatedClock clock(5'000);
  auto broker = Broker::create(clock);
  auto pub = broker->create_node("pub", {});
  std::optional<Delivery> last;
  auto s = pub->subscribe("/**", [&](const Delivery& d) { last = d; });
  BeatTruth t;
  t.header = {99, 1, "spoof"};
  pub->publish(kRaw.substr(0, kRaw.size() - 3) + "truth", t);
  REQUIRE(last);
  const auto h = header_of(last->decode());
  CHECK(h.seq == 0);
  CHECK(h.stamp_ns == 5'000);
  CHECK(h.source == "pub");
  CHECK(last->recv_time_ns == 5'000);
}

TEST_CASE("every matching subscription gets each message once") {
  SimulatedClock clock;
  auto broker = Broker::create(clock);
  auto pub = broker->create_node("pub", {});
  int a = 0, b = 0, c = 0, multi = 0;
  auto sa = pub->subscribe(kRaw, [&](const Delivery&) { ++a; });
  auto sb = pub->subscribe(kRaw, [&](const Delivery&) { ++b; });
  auto sc = pub->subscribe(kFeat, [&](const Delivery&) { ++c; });
  auto sm = pub->subscribe({TopicPattern(kRaw), TopicPattern("/humans/**"), TopicPattern("/**")},
                           [&](const Delivery&) { ++multi; });
  pub->publish(kRaw, PhysioRaw{});
  CHECK(a == 1);
  CHECK(b == 1);
  CHECK(c == 0);
  CHECK(multi == 1);
  sa.reset();
  pub->publish(kRaw, PhysioRaw{});
  CHECK(a == 1);
  CHECK(b == 2);
}

TEST_CASE("invalid publishes") {
  SimulatedClock clock;
  auto broker = Broker::create(clock);
  auto pub = broker->create_node("pub", {});
  CHECK(error_of([&] { pub->publish("/foo/bar", PhysioRaw{}); }) == ErrorCode::InvalidTopic);
  PhysioRaw bad{{}, 0, {{"x", {std::nan("")}}}};
  CHECK(error_of([&] { pub->publish(kRaw, bad); }) == ErrorCode::EncodingError);
  CHECK(error_of([&] { pub->subscribe("humans/**", [](const Delivery&) {}); }) ==
        ErrorCode::InvalidPattern);
  const Bytes garbage = {0xFF, 0xFF};
  CHECK_THROWS_AS(pub->publish_envelope(kRaw, garbage), Error);
  CHECK(broker->list_topics().empty());
}

TEST_CASE("list_topics is sorted and counts messages") {
  SimulatedClock clock;
  auto broker = Broker::create(clock);
  CHECK(broker->list_topics().empty());
  auto pub = broker->create_node("pub", {});
  pub->publish(kRaw, PhysioRaw{});
  CHECK(broker->list_topics().size() == 1);
  pub->publish(kFeat, EcgFeatures{});
  pub->publish(kFeat, EcgFeatures{});
  const auto topics = pub->list_topics();
  REQUIRE(topics.size() == 2);
  CHECK(topics[0] == TopicInfo{kFeat, SchemaId::EcgFeatures, "pub", 2, 0});
  CHECK(topics[1] == TopicInfo{kRaw, SchemaId::PhysioRaw, "pub", 1, 0});
}

TEST_CASE("pattern soundness over generated topics and patterns") {
  SimulatedClock clock;
  auto broker = Broker::create(clock);
  auto pub = broker->create_node("pub", {});
  test::Gen g(5);

  std::vector<std::string> topics;
  for (const char* h : {"p1", "p2"}) {
    for (const char* t : {"ecg", "ppg"}) {
      for (const char* s : {"a", "b"}) {
        for (const char* f : {"raw", "features"}) topics.push_back(physio_topic(h, t, s, f));
      }
    }
  }
  topics.push_back(expression_topic("p1"));
  topics.push_back(affective_state_topic("p1"));
  topics.push_back(std::string(kExperimentEventsTopic));

  // Every proper prefix of every topic as a /** pattern, plus exact topics.
  std::set<std::string> pattern_texts{"/**"};
  for (const auto& t : topics) {
    pattern_texts.insert(t);
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (t[i] == '/') pattern_texts.insert(t.substr(0, i) + "/**");
    }
  }

  struct Sub {
    std::string text;
    std::vector<std::string> got;
    Subscription s;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  for (const auto& p : pattern_texts) {
    auto sub = std::make_unique<Sub>();
    sub->text = p;
    auto* raw = sub.get();
    sub->s = pub->subscribe(p, [raw](const Delivery& d) { raw->got.push_back(d.topic); });
    subs.push_back(std::move(sub));
  }
  for (const auto& t : topics) pub->publish(t, BeatTruth{});

  for (const auto& s : subs) {
    CAPTURE(s->text);
    std::vector<std::string> expected;
    for (const auto& t : topics) {
      bool match;
      if (s->text.size() >= 3 && s->text.ends_with("/**")) {
        const auto prefix = s->text.substr(0, s->text.size() - 2);  // keeps the '/'
        match = t.size() > prefix.size() && t.compare(0, prefix.size(), prefix) == 0;
      } else {
        match = t == s->text;
      }
      if (match) expected.push_back(t);
    }
    CHECK(s->got == expected);
  }
}

TEST_CASE("per-publisher FIFO under concurrent publishers") {
  SystemClock clock;
  auto broker = Broker::create(clock);
  constexpr int kPublishers = 4, kEach = 2000;
  std::mutex mu;
  std::map<std::string, std::vector<std::uint64_t>> seen;
  std::vector<std::int64_t> recv_times;
  auto sub = broker->create_node("sub", {});
  auto s = sub->subscribe("/**", [&](const Delivery& d) {
    std::lock_guard lock(mu);
    seen[d.publisher + d.topic].push_back(header_of(d.decode()).seq);
    recv_times.push_back(d.recv_time_ns);
  });
  std::vector<std::thread> threads;
  for (int p = 0; p < kPublishers; ++p) {
    threads.emplace_back([&, p] {
      auto n = broker->create_node("pub" + std::to_string(p), {});
      for (int i = 0; i < kEach; ++i) n->publish(i % 2 ? kRaw : kFeat, BeatTruth{});
    });
  }
  for (auto& t : threads) t.join();
  REQUIRE(seen.size() == kPublishers * 2);
  for (const auto& [k, seqs] : seen) {
    REQUIRE(seqs.size() == kEach / 2);
    for (std::size_t i = 0; i < seqs.size(); ++i) REQUIRE(seqs[i] == i);
  }
  CHECK(std::is_sorted(recv_times.begin(), recv_times.end()));
}

TEST_CASE("callbacks of one subscription are serial; publishing from a callback is safe") {
  SystemClock clock;
  auto broker = Broker::create(clock);
  auto n = broker->create_node("n", {});
  std::atomic<int> inside{0}, max_inside{0}, count{0};
  auto s = n->subscribe(kRaw, [&](const Delivery&) {
    const int now = ++inside;
    int m = max_inside.load();
    while (now > m && !max_inside.compare_exchange_weak(m, now)) {
    }
    std::this_thread::sleep_for(50us);
    --inside;
    ++count;
  });
  std::atomic<int> echoes{0};
  auto echo = n->subscribe(kFeat, [&](const Delivery& d) {
    if (header_of(d.decode()).seq < 5) n->publish(kFeat, EcgFeatures{});
    ++echoes;
  });
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t) {
    ts.emplace_back([&, t] {
      auto p = broker->create_node("p" + std::to_string(t), {});
      for (int i = 0; i < 200; ++i) p->publish(kRaw, BeatTruth{});
    });
  }
  for (auto& t : ts) t.join();
  n->publish(kFeat, EcgFeatures{});
  CHECK(test::wait_for([&] { return count == 800; }));
  CHECK(max_inside == 1);
  CHECK(echoes == 6);
}

TEST_CASE("soft limit drops the oldest and counts drops") {
  SystemClock clock;
  auto broker = Broker::create(clock);
  auto n = broker->create_node("n", {});
  std::latch entered(1);
  std::latch release(1);
  std::vector<std::uint64_t> seqs;
  auto s = n->subscribe(kRaw, [&](const Delivery& d) {
    const auto seq = header_of(d.decode()).seq;
    if (seq == 0) {
      entered.count_down();
      release.wait();
    }
    seqs.push_back(seq);
  });
  std::thread blocker([&] { n->publish(kRaw, BeatTruth{}); });
  entered.wait();
  auto p = broker->create_node("p", {});
  constexpr std::size_t kExtra = 25;
  // seq 0 of node p is queued first, then evicted along with the next ones
  for (std::size_t i = 0; i < kSubscriptionSoftLimit + kExtra; ++i) p->publish(kRaw, BeatTruth{});
  const auto topics = broker->list_topics();
  REQUIRE(topics.size() == 1);
  CHECK(topics[0].dropped == kExtra);
  release.count_down();
  blocker.join();
  CHECK(test::wait_for([&] { return seqs.size() == kSubscriptionSoftLimit + 1; }));
  REQUIRE(seqs.size() == kSubscriptionSoftLimit + 1);
  CHECK(seqs[0] == 0);
  CHECK(seqs[1] == kExtra);
  CHECK(seqs.back() == kSubscriptionSoftLimit + kExtra - 1);
}

TEST_CASE("unsubscribe inside a callback stops later deliveries") {
  SimulatedClock clock;
  auto broker = Broker::create(clock);
  auto n = broker->create_node("n", {});
  int count = 0;
  Subscription s;
  s = n->subscribe(kRaw, [&](const Delivery&) {
    ++count;
    s.reset();
  });
  n->publish(kRaw, BeatTruth{});
  n->publish(kRaw, BeatTruth{});
  CHECK(count == 1);
}

TEST_CASE("executor fires timers in time order") {
  SimulatedClock clock(0);
  Executor exec(clock);
  std::vector<std::pair<char, std::int64_t>> log;
  exec.add_periodic(100, [&] { log.emplace_back('p', clock.now_ns()); });
  exec.add_oneshot(250, [&] { log.emplace_back('o', clock.now_ns()); });
  auto cancelled = exec.add_oneshot(150, [&] { log.emplace_back('x', clock.now_ns()); });
  exec.cancel(cancelled);
  exec.run_until(300);
  CHECK(clock.now_ns() == 300);
  const std::vector<std::pair<char, std::int64_t>> expected = {
      {'p', 100}, {'p', 200}, {'o', 250}, {'p', 300}};
  CHECK(log == expected);
  CHECK(exec.timer_count() == 1);
}

TEST_CASE("executor on the system clock keeps real time") {
  SystemClock clock;
  Executor exec(clock);
  std::atomic<int> n{0};
  exec.add_periodic(10 * kNsPerMs, [&] { ++n; });
  const auto start = std::chrono::steady_clock::now();
  exec.run_for(105 * kNsPerMs);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(n == 10);
  CHECK(elapsed >= 100ms);
}
