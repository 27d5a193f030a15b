#include <doctest.h>
#include <cmath>

#include "s4h/error.hpp"
#include "s4h/fusion.hpp"

using namespace s4h;

namespace {

AffectiveLabel expected(Expression e, bool high) {
  switch (e) {
    case Expression::Happy:
    case Expression::Neutral:
    case Expression::Surprise:
      return high ? AffectiveLabel::AlertActive : AffectiveLabel::CalmRelaxed;
    case Expression::Sad:
    case Expression::Angry:
    case Expression::Fear:
    case Expression::Disgust:
      return high ? AffectiveLabel::StressedAnxious : AffectiveLabel::AlertActive;
  }
  return AffectiveLabel::CalmRelaxed;
}

}  // namespace

TEST_CASE("decision table examples") {
  FusionConfig c;
  CHECK(classify(Expression::Happy, 65, c) == AffectiveLabel::CalmRelaxed);
  CHECK(classify(Expression::Neutral, 100, c) == AffectiveLabel::AlertActive);
  CHECK(classify(Expression::Fear, 130, c) == AffectiveLabel::StressedAnxious);
  CHECK(classify(Expression::Happy, 90.0, c) == AffectiveLabel::AlertActive);
}

TEST_CASE("exhaustive table with boundary heart rates") {
  for (double threshold : {90.0, 75.5, 120.0}) {
    FusionConfig c;
    c.hr_threshold_bpm = threshold;
    const double below[] = {1.0, threshold - 1.0, std::nextafter(threshold, 0.0)};
    const double above[] = {threshold, std::nextafter(threshold, 1e9), threshold + 50};
    for (auto e : kAllExpressions) {
      for (double hr : below) CHECK(classify(e, hr, c) == expected(e, false));
      for (double hr : above) CHECK(classify(e, hr, c) == expected(e, true));
    }
  }
}

TEST_CASE("raising HR never lowers the state") {
  FusionConfig c;
  for (auto e : kAllExpressions) {
    int prev = -1;
    for (double hr = 30; hr <= 200; hr += 0.5) {
      const int now = static_cast<int>(classify(e, hr, c));
      CHECK(now >= prev);
      prev = now;
    }
  }
}

TEST_CASE("fuse_hr") {
  const std::int64_t now = 100 * kNsPerSec;
  const TimedValue fresh72{72, now - kNsPerSec};
  const TimedValue fresh76{76, now};
  const TimedValue stale{80, now - 6 * kNsPerSec};
  CHECK(*fuse_hr(fresh72, fresh76, now, 5.0) == 74.0);
  CHECK(*fuse_hr(fresh72, stale, now, 5.0) == 72.0);
  CHECK(!fuse_hr(stale, stale, now, 5.0));
  CHECK(!fuse_hr(std::nullopt, std::nullopt, now, 5.0));
  CHECK(*fuse_hr(std::nullopt, fresh76, now, 5.0) == 76.0);
  const TimedValue edge{70, now - 5 * kNsPerSec};
  CHECK(*fuse_hr(edge, std::nullopt, now, 5.0) == 70.0);
  for (double a : {60.0, 72.5, 130.0}) {
    for (double b : {61.0, 99.0}) {
      CHECK(fuse_hr(TimedValue{a, now}, TimedValue{b, now}, now, 5) ==
            fuse_hr(TimedValue{b, now}, TimedValue{a, now}, now, 5));
    }
    CHECK(*fuse_hr(TimedValue{a, now}, TimedValue{a, now}, now, 5) == a);
  }
}

TEST_CASE("config validation") {
  FusionConfig c;
  c.hr_threshold_bpm = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.staleness_s = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.human_id = "P 1";
  CHECK_THROWS_AS(c.validate(), Error);
}

namespace {

struct Rig {
  SimulatedClock clock;
  std::shared_ptr<Broker> broker = Broker::create(clock);
  Executor exec{clock};
  std::unique_ptr<Node> feeder = broker->create_node("feeder", {});
  std::vector<AffectiveState> states;
  Subscription sub = feeder->subscribe(affective_state_topic("p1"), [this](const Delivery& d) {
    states.push_back(std::get<AffectiveState>(d.decode()));
  });

  void hr(double ecg, double ppg) {
    EcgFeatures e;
    e.heart_rate_bpm = ecg;
    feeder->publish("/humans/physiological/p1/ecg/h10/features", e);
    PpgFeatures p;
    p.heart_rate_bpm = ppg;
    feeder->publish("/humans/physiological/p1/ppg/vs/features", p);
  }
  void expr(Expression x) {
    feeder->publish(expression_topic("p1"), ExpressionEvent{{}, "p1", x, 0.9});
  }
};

}  // namespace

TEST_CASE("fusion node publishes the classified state") {
  Rig r;
  auto f = run_fusion_node(*r.broker, r.exec, FusionConfig{});
  r.hr(70, 74);
  r.expr(Expression::Happy);
  r.exec.run_for(kNsPerSec);
  REQUIRE(r.states.size() == 1);
  CHECK(r.states[0].state == AffectiveLabel::CalmRelaxed);
  CHECK(r.states[0].heart_rate_bpm == 72.0);
  CHECK(r.states[0].expression == Expression::Happy);
  CHECK(r.states[0].human_id == "p1");
  CHECK(f->output_topic() == "/humans/affective_state/p1");
}

TEST_CASE("silent expression stream means no output and counted skips") {
  Rig r;
  auto f = run_fusion_node(*r.broker, r.exec, FusionConfig{});
  for (int i = 0; i < 5; ++i) {
    r.hr(72, 72);
    r.exec.run_for(kNsPerSec);
  }
  CHECK(r.states.empty());
  CHECK(f->skipped_ticks() == 5);
  const auto p = r.feeder->get_parameters("fusion_p1", {"skipped_ticks"});
  CHECK(std::get<std::int64_t>(*p[0].second) == 5);
}

TEST_CASE("stale inputs stop output") {
  Rig r;
  auto f = run_fusion_node(*r.broker, r.exec, FusionConfig{});
  r.hr(72, 72);
  r.expr(Expression::Happy);
  r.exec.run_for(10 * kNsPerSec);
  CHECK(r.states.size() == 5);
  CHECK(f->skipped_ticks() == 5);
}

TEST_CASE("scripted switch happy to angry at 120 bpm") {
  Rig r;
  auto f = run_fusion_node(*r.broker, r.exec, FusionConfig{});
  ExpressionScriptConfig sc;
  sc.timeline = {{0.0, Expression::Happy}, {10.0, Expression::Angry}};
  ExpressionScript script(*r.broker, r.exec, sc);
  const auto start = r.clock.now_ns();
  auto feed = r.exec.add_periodic(kNsPerSec / 2, [&] { r.hr(120, 120); });
  r.exec.run_for(20 * kNsPerSec);
  r.exec.cancel(feed);
  REQUIRE(!r.states.empty());
  // first tick at or after the switch
  std::size_t first_after = 0;
  while (first_after < r.states.size() && r.states[first_after].header.stamp_ns < start + 10 * kNsPerSec) {
    CHECK(r.states[first_after].state == AffectiveLabel::AlertActive);
    ++first_after;
  }
  REQUIRE(first_after + 2 <= r.states.size());
  const bool switched = r.states[first_after].state == AffectiveLabel::StressedAnxious ||
                        r.states[first_after + 1].state == AffectiveLabel::StressedAnxious;
  CHECK(switched);
  CHECK(r.states.back().state == AffectiveLabel::StressedAnxious);
}

TEST_CASE("expression script publishes the active cue") {
  Rig r;
  std::vector<ExpressionEvent> ev;
  auto s = r.feeder->subscribe(expression_topic("p1"), [&](const Delivery& d) {
    ev.push_back(std::get<ExpressionEvent>(d.decode()));
  });
  ExpressionScriptConfig sc;
  sc.timeline = {{1.0, Expression::Sad}, {2.0, Expression::Disgust}};
  sc.rate_hz = 4;
  sc.confidence = 0.6;
  ExpressionScript script(*r.broker, r.exec, sc);
  r.exec.run_for(3 * kNsPerSec);
  REQUIRE(ev.size() == 9);  // ticks at 1.0 .. 3.0 s
  CHECK(ev.front().expression == Expression::Sad);
  CHECK(ev.back().expression == Expression::Disgust);
  CHECK(ev.back().confidence == 0.6);
}
