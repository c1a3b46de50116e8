#pragma once

// Deterministic discrete-event harness: scenario files, a logical clock that
// drives nodes, channel and controller, metrics and random topologies.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdnaaa/controller.hpp"
#include "sdnaaa/model.hpp"
#include "sdnaaa/node.hpp"
#include "sdnaaa/southbound.hpp"

namespace sdnaaa {

enum class Mode { kProactive, kReactive };

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view text);

struct Event {
  enum class Type { kInject, kNodeDown, kNodeUp, kSnapshot };
  LogicalTime time = 0;
  Type type = Type::kInject;
  std::string node;
  std::string nai;
  std::string password;
};

struct Scenario {
  std::uint64_t seed = 1;
  Topology topology;
  std::map<std::string, std::map<std::string, std::string>> users;  // node -> user -> password
  std::map<std::string, ConfigDocument> startup;                    // node -> startup config
  std::vector<Policy> policies;
  Mode mode = Mode::kProactive;
  std::vector<Event> events;
  LogicalTime stop_time = 0;
  bool parallel_adjacency = false;
};

/// Throws Error with PARSE_ERROR, UNKNOWN_NODE, UNSORTED_EVENTS,
/// UNKNOWN_HOME_NODE or VALIDATION_FAILED.
Scenario load_scenario(std::string_view text);
Json scenario_to_json(const Scenario& scenario);

struct Metrics {
  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  std::uint64_t rejected = 0;
  std::uint64_t errored = 0;
  std::uint64_t pending = 0;
  std::map<std::string, std::size_t> hop_counts;  // msg_id -> hops, for answered requests
  std::uint64_t frames_sent = 0;
  std::map<std::string, std::uint64_t> notifications;  // by kind
  std::uint64_t reroutes = 0;
  std::uint64_t dropped_notifications = 0;
  std::map<std::string, std::uint64_t> errors_by_code;

  Json to_json() const;
};

struct MessageOutcome {
  std::string msg_id;
  std::string origin;
  LogicalTime injected_at = 0;
  std::optional<LogicalTime> completed_at;
  MessageStatus status;
  std::vector<std::string> trace;
};

/// One simulated network. Events at equal times run in insertion order.
class Simulation final : public NodeNetwork {
 public:
  explicit Simulation(const Scenario& scenario);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Scheduler / NodeNetwork
  LogicalTime now() const override { return now_; }
  void schedule(LogicalTime delay, std::function<void()> fn) override;
  void transmit(const std::string& from, const std::string& to, std::string wire) override;
  AaaNode* find_by_address(std::string_view address) override;
  void notify(const std::string& node_id, Notification note) override;
  void complete(const std::string& node_id, const AaaMessage& message) override;

  void schedule_at(LogicalTime time, std::function<void()> fn);
  /// Provisioning at t=0 (proactive mode) and the scenario's events.
  void start();
  /// Processes everything due at or before `time`, then sets the clock to it.
  void run_until(LogicalTime time);
  /// Runs until no event is queued, or until `limit`.
  void run_until_idle(LogicalTime limit);

  std::string inject(const std::string& node, std::string_view nai, const std::string& password);
  void node_down(const std::string& node);
  void node_up(const std::string& node);
  void record_snapshot();

  AaaNode& node(std::string_view id);
  Controller& controller() { return *controller_; }
  SouthboundHub& hub() { return hub_; }
  Transcript& transcript() { return transcript_; }
  const std::map<std::string, MessageOutcome>& outcomes() const { return outcomes_; }
  /// Channels whose status is established, as ordered node pairs.
  std::set<std::pair<std::string, std::string>> established_channels() const;

  Metrics metrics() const;

 private:
  void tick_nodes();

  Scenario scenario_;
  LogicalTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::map<std::pair<LogicalTime, std::uint64_t>, std::function<void()>> queue_;

  Transcript transcript_;
  SouthboundHub hub_;
  std::map<std::string, std::unique_ptr<AaaNode>, std::less<>> nodes_;
  std::map<std::string, AaaNode*, std::less<>> by_address_;
  std::unique_ptr<Controller> controller_;

  std::map<std::string, MessageOutcome> outcomes_;
  std::uint64_t next_msg_ = 1;
  Metrics metrics_;
};

struct RunResult {
  Metrics metrics;
  std::string transcript;
  std::map<std::string, MessageOutcome> outcomes;
};

/// Pure function of the scenario: runs the event loop to stop_time.
RunResult run(const Scenario& scenario);

/// Connected random graph: one server per realm, at least one client, the
/// rest agents. Throws Error("BAD_ARGUMENT") or Error("GIVE_UP").
Topology gen_random_topology(std::uint64_t seed, int n_nodes, double edge_prob);

struct RandomScenarioOptions {
  std::uint64_t seed = 1;
  int n_nodes = 8;
  double edge_prob = 0.5;
  int requests = 10;
  LogicalTime start = 100;
  LogicalTime spacing = 10;
  Mode mode = Mode::kProactive;
  Security security = Security::kPsk;
};

/// Random topology plus one policy per realm and requests injected round-robin
/// from the clients. Server k serves realm<k>.org with user<k>/pw.
Scenario random_scenario(const RandomScenarioOptions& options);

}  // namespace sdnaaa
