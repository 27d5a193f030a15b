#pragma once

// Affective-state estimation from facial expression plus the averaged
// ECG/PPG heart rate. The tree branches on expression group first, then on
// a single heart-rate threshold.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "s4h/bus.hpp"
#include "s4h/executor.hpp"
#include "s4h/messages.hpp"

namespace s4h {

struct FusionConfig {
  double hr_threshold_bpm = 90.0;
  double staleness_s = 5.0;
  double publish_hz = 1.0;
  std::string human_id = "p1";
  // Patterns; deliveries are filtered by schema, so a prefix pattern over a
  // whole sensor subtree is fine.
  std::string ecg_features_topic;  // default /humans/physiological/<human_id>/ecg/**
  std::string ppg_features_topic;  // default /humans/physiological/<human_id>/ppg/**
  std::string expression_topic;    // default /humans/expressions/<human_id>
  std::string node_name;

  // Throws Error{InvalidConfig}.
  void validate() const;
};

// happy, neutral, surprise
bool is_positive_expression(Expression e);

// Total over every expression and heart rate; hr >= threshold counts as high.
AffectiveLabel classify(Expression expression, double hr_bpm, const FusionConfig& config);

struct TimedValue {
  double value = 0.0;
  std::int64_t received_ns = 0;
};

// Mean of the inputs no older than staleness_s at now_ns; nullopt if none.
std::optional<double> fuse_hr(const std::optional<TimedValue>& ecg_hr,
                              const std::optional<TimedValue>& ppg_hr, std::int64_t now_ns,
                              double staleness_s);

class FusionNode {
 public:
  FusionNode(Bus& bus, Executor& exec, FusionConfig config);
  ~FusionNode();
  FusionNode(const FusionNode&) = delete;
  FusionNode& operator=(const FusionNode&) = delete;

  void tick();

  const std::string& output_topic() const { return output_topic_; }
  std::uint64_t skipped_ticks() const;
  std::uint64_t published() const;

 private:
  std::unique_ptr<Node> node_;
  Executor& exec_;
  FusionConfig config_;
  std::string output_topic_;

  mutable std::mutex mu_;
  std::optional<TimedValue> ecg_hr_, ppg_hr_;
  std::optional<ExpressionEvent> expression_;
  std::int64_t expression_received_ns_ = 0;
  std::uint64_t skipped_ = 0;
  std::uint64_t published_ = 0;

  Subscription ecg_sub_, ppg_sub_, expr_sub_;
  Executor::TimerId timer_ = 0;
};

std::unique_ptr<FusionNode> run_fusion_node(Bus& bus, Executor& exec, FusionConfig config);

// Publishes the scripted expression active at the current elapsed time, at
// rate_hz, on /humans/expressions/<human_id>. Stands in for a camera-based
// expression recognizer.
struct ExpressionCue {
  double t_s = 0.0;
  Expression expression = Expression::Neutral;
};

struct ExpressionScriptConfig {
  std::string human_id = "p1";
  std::vector<ExpressionCue> timeline;
  double rate_hz = 2.0;
  double confidence = 0.9;
  std::string node_name;
};

class ExpressionScript {
 public:
  ExpressionScript(Bus& bus, Executor& exec, ExpressionScriptConfig config);
  ~ExpressionScript();
  ExpressionScript(const ExpressionScript&) = delete;
  ExpressionScript& operator=(const ExpressionScript&) = delete;

  void tick();
  const std::string& topic() const { return topic_; }

 private:
  std::unique_ptr<Node> node_;
  Executor& exec_;
  ExpressionScriptConfig config_;
  std::string topic_;
  std::int64_t start_ns_;
  Executor::TimerId timer_ = 0;
};

}  // namespace s4h
