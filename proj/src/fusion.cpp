#include "s4h/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "s4h/error.hpp"

namespace s4h {

void FusionConfig::validate() const {
  if (!(hr_threshold_bpm > 0.0)) throw Error(ErrorCode::InvalidConfig, "hr_threshold_bpm must be > 0");
  if (!(staleness_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "staleness_s must be > 0");
  if (!(publish_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "publish_hz must be > 0");
  if (!is_valid_token(human_id)) throw Error(ErrorCode::InvalidConfig, "bad human_id '" + human_id + "'");
}

bool is_positive_expression(Expression e) {
  return e == Expression::Happy || e == Expression::Neutral || e == Expression::Surprise;
}

AffectiveLabel classify(Expression expression, double hr_bpm, const FusionConfig& config) {
  const bool high = hr_bpm >= config.hr_threshold_bpm;
  if (is_positive_expression(expression)) {
    return high ? AffectiveLabel::AlertActive : AffectiveLabel::CalmRelaxed;
  }
  return high ? AffectiveLabel::StressedAnxious : AffectiveLabel::AlertActive;
}

std::optional<double> fuse_hr(const std::optional<TimedValue>& ecg_hr,
                              const std::optional<TimedValue>& ppg_hr, std::int64_t now_ns,
                              double staleness_s) {
  const auto max_age = static_cast<std::int64_t>(std::llround(staleness_s * 1e9));
  double sum = 0.0;
  int n = 0;
  for (const auto* v : {&ecg_hr, &ppg_hr}) {
    if (*v && now_ns - (*v)->received_ns <= max_age) {
      sum += (*v)->value;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

FusionNode::FusionNode(Bus& bus, Executor& exec, FusionConfig config)
    : exec_(exec), config_(std::move(config)) {
  config_.validate();
  const auto& h = config_.human_id;
  if (config_.ecg_features_topic.empty()) config_.ecg_features_topic = "/humans/physiological/" + h + "/ecg/**";
  if (config_.ppg_features_topic.empty()) config_.ppg_features_topic = "/humans/physiological/" + h + "/ppg/**";
  if (config_.expression_topic.empty()) config_.expression_topic = expression_topic(h);
  output_topic_ = affective_state_topic(h);
  auto name = config_.node_name.empty() ? "fusion_" + h : config_.node_name;
  node_ = bus.create_node(name, ParameterMap{{"hr_threshold_bpm", config_.hr_threshold_bpm},
                                             {"staleness_s", config_.staleness_s},
                                             {"publish_hz", config_.publish_hz},
                                             {"human_id", h}});

  auto hr_cb = [this](std::optional<TimedValue> FusionNode::*slot, SchemaId want) {
    return [this, slot, want](const Delivery& d) {
      if (d.schema != want) return;
      auto m = d.decode();
      const double hr = want == SchemaId::EcgFeatures ? std::get<EcgFeatures>(m).heart_rate_bpm
                                                      : std::get<PpgFeatures>(m).heart_rate_bpm;
      std::lock_guard lock(mu_);
      this->*slot = TimedValue{hr, d.recv_time_ns};
    };
  };
  ecg_sub_ = node_->subscribe(config_.ecg_features_topic, hr_cb(&FusionNode::ecg_hr_, SchemaId::EcgFeatures));
  ppg_sub_ = node_->subscribe(config_.ppg_features_topic, hr_cb(&FusionNode::ppg_hr_, SchemaId::PpgFeatures));
  expr_sub_ = node_->subscribe(config_.expression_topic, [this](const Delivery& d) {
    if (d.schema != SchemaId::ExpressionEvent) return;
    auto e = std::get<ExpressionEvent>(d.decode());
    if (e.human_id != config_.human_id) return;
    std::lock_guard lock(mu_);
    expression_ = std::move(e);
    expression_received_ns_ = d.recv_time_ns;
  });
  timer_ = exec_.add_periodic(std::llround(1e9 / config_.publish_hz), [this] { tick(); });
}

FusionNode::~FusionNode() {
  exec_.cancel(timer_);
  ecg_sub_.reset();
  ppg_sub_.reset();
  expr_sub_.reset();
}

void FusionNode::tick() {
  const auto now = exec_.clock().now_ns();
  std::optional<AffectiveState> out;
  std::uint64_t skipped = 0;
  {
    std::lock_guard lock(mu_);
    const auto hr = fuse_hr(ecg_hr_, ppg_hr_, now, config_.staleness_s);
    const bool expr_fresh =
        expression_ && now - expression_received_ns_ <= std::llround(config_.staleness_s * 1e9);
    if (hr && expr_fresh) {
      AffectiveState s;
      s.human_id = config_.human_id;
      s.state = classify(expression_->expression, *hr, config_);
      s.heart_rate_bpm = *hr;
      s.expression = expression_->expression;
      out = std::move(s);
      ++published_;
    } else {
      skipped = ++skipped_;
    }
  }
  if (out) {
    node_->publish(output_topic_, std::move(*out));
  } else {
    node_->set_status("skipped_ticks", static_cast<std::int64_t>(skipped));
  }
}

std::uint64_t FusionNode::skipped_ticks() const {
  std::lock_guard lock(mu_);
  return skipped_;
}

std::uint64_t FusionNode::published() const {
  std::lock_guard lock(mu_);
  return published_;
}

std::unique_ptr<FusionNode> run_fusion_node(Bus& bus, Executor& exec, FusionConfig config) {
  return std::make_unique<FusionNode>(bus, exec, std::move(config));
}

ExpressionScript::ExpressionScript(Bus& bus, Executor& exec, ExpressionScriptConfig config)
    : exec_(exec), config_(std::move(config)) {
  if (!(config_.rate_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "rate_hz must be > 0");
  if (!(config_.confidence >= 0.0 && config_.confidence <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "confidence must be in [0,1]");
  }
  std::stable_sort(config_.timeline.begin(), config_.timeline.end(),
                   [](const auto& a, const auto& b) { return a.t_s < b.t_s; });
  topic_ = expression_topic(config_.human_id);
  auto name = config_.node_name.empty() ? "expression_script_" + config_.human_id : config_.node_name;
  node_ = bus.create_node(name, ParameterMap{{"rate_hz", config_.rate_hz},
                                             {"human_id", config_.human_id}});
  start_ns_ = exec_.clock().now_ns();
  timer_ = exec_.add_periodic(std::llround(1e9 / config_.rate_hz), [this] { tick(); });
}

ExpressionScript::~ExpressionScript() { exec_.cancel(timer_); }

void ExpressionScript::tick() {
  const double elapsed = static_cast<double>(exec_.clock().now_ns() - start_ns_) / 1e9;
  const ExpressionCue* active = nullptr;
  for (const auto& cue : config_.timeline) {
    if (cue.t_s <= elapsed) active = &cue;
  }
  if (!active) return;
  node_->publish(topic_, ExpressionEvent{{}, config_.human_id, active->expression, config_.confidence});
}

}  // namespace s4h
