// s4h: broker, launcher and inspection tool.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <mutex>
#include <thread>

#include "s4h/bridge.hpp"
#include "s4h/bus.hpp"
#include "s4h/clock.hpp"
#include "s4h/error.hpp"
#include "s4h/executor.hpp"
#include "s4h/json_mapping.hpp"
#include "s4h/launch.hpp"
#include "s4h/logfile.hpp"
#include "s4h/modality.hpp"
#include "s4h/recorder.hpp"
#include "s4h/tcp.hpp"

namespace {

using namespace s4h;

constexpr const char* kDefaultBus = "127.0.0.1:7411";

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

// Sleeps in short slices until interrupted or the deadline (if any) passes.
void wait_until_done(std::optional<double> duration_s) {
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    if (duration_s && std::chrono::steady_clock::now() - start >=
                          std::chrono::duration<double>(*duration_s)) {
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

std::string unique_name(std::string_view base) {
  return std::string(base) + "_" + std::to_string(::getpid());
}

class EchoPrinter {
 public:
  void print(const Delivery& d) {
    const auto line = delivery_to_json(d).dump();
    std::lock_guard lock(mu_);
    std::cout << line << '\n' << std::flush;
    ++count_;
  }
  std::size_t count() const {
    std::lock_guard lock(mu_);
    return count_;
  }

 private:
  mutable std::mutex mu_;
  std::size_t count_ = 0;
};

struct BusHandle {
  SystemClock clock;
  std::shared_ptr<Broker> broker;
  std::unique_ptr<TcpBus> remote;
  std::unique_ptr<TcpServer> server;

  Bus& bus() { return remote ? static_cast<Bus&>(*remote) : *broker; }
};

void open_local(BusHandle& h, const std::string& listen) {
  h.broker = Broker::create(h.clock);
  if (!listen.empty()) {
    h.server = serve_tcp(h.broker, listen);
    spdlog::info("broker listening on port {}", h.server->port());
  }
}

void open_remote(BusHandle& h, const std::string& address) {
  h.remote = std::make_unique<TcpBus>(address, h.clock);
}

int cmd_bus(const std::string& listen) {
  BusHandle h;
  open_local(h, listen);
  wait_until_done(std::nullopt);
  return 0;
}

struct LaunchOptions {
  std::string config;
  std::string bus;
  std::string listen;
  std::string ws;
  std::optional<double> duration;
  std::vector<std::string> echo;
  bool simulated = false;
};

int cmd_launch(const LaunchOptions& o) {
  // Parsed in full before anything starts.
  const auto config = load_launch_config(o.config);

  if (o.simulated) {
    if (!o.duration) throw Error(ErrorCode::InvalidConfig, "--simulated needs --duration");
    if (!o.bus.empty() || !o.listen.empty() || !o.ws.empty()) {
      throw Error(ErrorCode::InvalidConfig, "--simulated runs an in-process bus only");
    }
    SimulatedClock clock;
    auto broker = Broker::create(clock);
    Executor exec(clock);
    EchoPrinter printer;
    Subscription echo_sub;
    std::unique_ptr<Node> echo_node;
    if (!o.echo.empty()) {
      echo_node = broker->create_node("echo", {});
      std::vector<TopicPattern> pats;
      for (const auto& p : o.echo) pats.emplace_back(p);
      echo_sub = echo_node->subscribe(pats, [&](const Delivery& d) { printer.print(d); });
    }
    Launch launch(*broker, exec, config);
    spdlog::info("launched {} nodes (simulated clock)", launch.size());
    exec.run_for(static_cast<std::int64_t>(*o.duration * 1e9));
    return 0;
  }

  BusHandle h;
  if (!o.bus.empty()) {
    if (!o.listen.empty()) throw Error(ErrorCode::InvalidConfig, "--listen conflicts with --bus");
    open_remote(h, o.bus);
  } else {
    open_local(h, o.listen);
  }
  std::unique_ptr<Bridge> bridge;
  if (!o.ws.empty()) {
    bridge = serve_ws(h.bus(), o.ws);
    spdlog::info("bridge listening on port {}", bridge->port());
  }
  EchoPrinter printer;
  std::unique_ptr<Node> echo_node;
  Subscription echo_sub;
  if (!o.echo.empty()) {
    echo_node = h.bus().create_node(unique_name("echo"), {});
    std::vector<TopicPattern> pats;
    for (const auto& p : o.echo) pats.emplace_back(p);
    echo_sub = echo_node->subscribe(pats, [&](const Delivery& d) { printer.print(d); });
  }

  Executor exec(h.clock);
  Launch launch(h.bus(), exec, config);
  spdlog::info("launched {} nodes", launch.size());
  std::stop_source stop;
  std::jthread spinner([&](std::stop_token) { exec.spin(stop.get_token()); });
  wait_until_done(o.duration);
  stop.request_stop();
  spinner.join();
  return 0;
}

int cmd_list(const std::string& address) {
  SystemClock clock;
  auto node = connect_tcp(address, unique_name("s4h_list"), {}, clock);
  for (const auto& t : node->list_topics()) {
    std::cout << t.topic << "  " << schema_name(t.schema) << "  publisher=" << t.publisher
              << "  messages=" << t.messages << "  dropped=" << t.dropped << '\n';
  }
  return 0;
}

int cmd_echo(const std::string& address, const std::vector<std::string>& patterns,
             std::optional<std::size_t> count, std::optional<double> duration) {
  std::vector<TopicPattern> pats;
  for (const auto& p : patterns) pats.emplace_back(p);
  SystemClock clock;
  auto node = connect_tcp(address, unique_name("s4h_echo"), {}, clock);
  EchoPrinter printer;
  auto sub = node->subscribe(pats, [&](const Delivery& d) {
    if (!count || printer.count() < *count) printer.print(d);
    if (count && printer.count() >= *count) g_interrupted = true;
  });
  wait_until_done(duration);
  return 0;
}

int cmd_param_get(const std::string& address, const std::string& node_name,
                  const std::vector<std::string>& names) {
  SystemClock clock;
  auto node = connect_tcp(address, unique_name("s4h_param"), {}, clock);
  for (const auto& [k, v] : node->get_parameters(node_name, names)) {
    std::cout << k << " = " << (v ? to_string(*v) : std::string("<not set>")) << '\n';
  }
  return 0;
}

int cmd_describe(const std::string& sensor_type) {
  const auto& info = modality_info(sensor_type);
  std::cout << info.sensor_type << ": " << info.measurement << '\n';
  for (const auto& ind : info.indicators) std::cout << "  " << ind << '\n';
  return 0;
}

int cmd_record(const std::string& address, const std::string& out,
               const std::vector<std::string>& patterns, std::optional<double> duration) {
  SystemClock clock;
  TcpBus bus(address, clock);
  auto session = record(bus, patterns, out, unique_name("s4h_record"));
  wait_until_done(duration);
  session->stop();
  std::cerr << "recorded " << session->records() << " messages to " << out << '\n';
  return 0;
}

int cmd_replay(const std::string& address, const std::string& path, double rate) {
  if (!(rate > 0)) throw Error(ErrorCode::InvalidConfig, "--rate must be > 0");
  SystemClock clock;
  TcpBus bus(address, clock);
  const auto n = replay(bus, path, rate, unique_name("s4h_replay"));
  std::cerr << "replayed " << n << " messages\n";
  return 0;
}

int cmd_inspect(const std::string& path) {
  const auto s = list_log(path);
  std::cout << "created_ns " << s.header.created_ns << '\n';
  for (const auto& [k, v] : s.header.metadata) std::cout << "meta " << k << " = " << v << '\n';
  std::cout << "records " << s.records << '\n';
  for (const auto& t : s.topics) {
    std::cout << t.topic << "  " << schema_name(t.schema) << "  count=" << t.count
              << "  first_ns=" << t.first_ns << "  last_ns=" << t.last_ns << '\n';
  }
  return 0;
}

int cmd_bridge(const std::string& ws, const std::string& bus_address, const std::string& listen) {
  BusHandle h;
  if (!bus_address.empty()) {
    open_remote(h, bus_address);
  } else {
    open_local(h, listen);
  }
  auto bridge = serve_ws(h.bus(), ws);
  spdlog::info("bridge listening on port {}", bridge->port());
  wait_until_done(std::nullopt);
  return 0;
}

bool is_usage_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidPattern:
    case ErrorCode::InvalidTopic:
    case ErrorCode::UnknownModality:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("s4h"));
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  CLI::App app{"Physiological sensing middleware: broker, launcher and tools"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  std::string bus_addr = kDefaultBus;

  auto* bus_cmd = app.add_subcommand("bus", "Run a broker until interrupted");
  std::string listen = kDefaultBus;
  bus_cmd->add_option("--listen", listen, "host:port")->capture_default_str();

  LaunchOptions lo;
  auto* launch_cmd = app.add_subcommand("launch", "Start the nodes of a launch config");
  launch_cmd->add_option("config", lo.config, "Launch config (JSON)")->required();
  launch_cmd->add_option("--bus", lo.bus, "Connect to a remote broker instead of running one");
  launch_cmd->add_option("--listen", lo.listen, "Expose the in-process broker over TCP");
  launch_cmd->add_option("--ws", lo.ws, "Also run the WebSocket bridge on host:port");
  launch_cmd->add_option("--duration", lo.duration, "Stop after this many seconds");
  launch_cmd->add_option("--echo", lo.echo, "Print messages matching these patterns as JSON lines");
  launch_cmd->add_flag("--simulated", lo.simulated,
                       "Run on a simulated clock as fast as possible (needs --duration)");

  auto* list_cmd = app.add_subcommand("list", "List topics known to a broker");
  list_cmd->add_option("--bus", bus_addr)->capture_default_str();

  std::vector<std::string> echo_patterns;
  std::optional<std::size_t> echo_count;
  std::optional<double> echo_duration;
  auto* echo_cmd = app.add_subcommand("echo", "Print messages as JSON lines");
  echo_cmd->add_option("pattern", echo_patterns, "Topics or prefix/** patterns")->required();
  echo_cmd->add_option("--bus", bus_addr)->capture_default_str();
  echo_cmd->add_option("-n,--count", echo_count, "Exit after this many messages");
  echo_cmd->add_option("--duration", echo_duration, "Exit after this many seconds");

  auto* param_cmd = app.add_subcommand("param", "Query node parameters");
  param_cmd->require_subcommand(1);
  auto* param_get = param_cmd->add_subcommand("get", "Print parameter values");
  std::string param_node;
  std::vector<std::string> param_names;
  param_get->add_option("node", param_node)->required();
  param_get->add_option("name", param_names)->required();
  param_get->add_option("--bus", bus_addr)->capture_default_str();

  auto* describe_cmd = app.add_subcommand("describe", "Show the indicators of a sensor type");
  std::string sensor_type;
  describe_cmd->add_option("sensor_type", sensor_type)->required();

  auto* record_cmd = app.add_subcommand("record", "Record matching topics to a log file");
  std::string record_out;
  std::vector<std::string> record_patterns;
  std::optional<double> record_duration;
  record_cmd->add_option("--out", record_out, "Log file path")->required();
  record_cmd->add_option("pattern", record_patterns)->required();
  record_cmd->add_option("--bus", bus_addr)->capture_default_str();
  record_cmd->add_option("--duration", record_duration, "Stop after this many seconds");

  auto* replay_cmd = app.add_subcommand("replay", "Republish a log file");
  std::string replay_path;
  double replay_rate = 1.0;
  replay_cmd->add_option("path", replay_path)->required();
  replay_cmd->add_option("--rate", replay_rate)->capture_default_str();
  replay_cmd->add_option("--bus", bus_addr)->capture_default_str();

  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a log file");
  std::string inspect_path;
  inspect_cmd->add_option("path", inspect_path)->required();

  auto* bridge_cmd = app.add_subcommand("bridge", "Run the WebSocket bridge");
  std::string ws_addr;
  std::string bridge_bus;
  std::string bridge_listen;
  bridge_cmd->add_option("--ws", ws_addr, "host:port")->required();
  bridge_cmd->add_option("--bus", bridge_bus, "Remote broker; default runs one in-process");
  bridge_cmd->add_option("--listen", bridge_listen, "Expose the in-process broker over TCP");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*bus_cmd) return cmd_bus(listen);
    if (*launch_cmd) return cmd_launch(lo);
    if (*list_cmd) return cmd_list(bus_addr);
    if (*echo_cmd) return cmd_echo(bus_addr, echo_patterns, echo_count, echo_duration);
    if (*param_get) return cmd_param_get(bus_addr, param_node, param_names);
    if (*describe_cmd) return cmd_describe(sensor_type);
    if (*record_cmd) return cmd_record(bus_addr, record_out, record_patterns, record_duration);
    if (*replay_cmd) return cmd_replay(bus_addr, replay_path, replay_rate);
    if (*inspect_cmd) return cmd_inspect(inspect_path);
    if (*bridge_cmd) return cmd_bridge(ws_addr, bridge_bus, bridge_listen);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_usage_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
