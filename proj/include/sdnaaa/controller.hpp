#pragma once

// Control plane: topology, northbound policies, next-hop computation,
// adjacency establishment with rollback, route installation and the
// reactions to node notifications.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sdnaaa/model.hpp"
#include "sdnaaa/model_json.hpp"
#include "sdnaaa/southbound.hpp"

namespace sdnaaa {

enum class NodeRole { kClient, kServer, kAgent };
enum class NodeState { kUp, kDown };

std::string_view to_string(NodeRole role);
std::optional<NodeRole> role_from_string(std::string_view text);

struct TopologyNode {
  std::string id;
  std::string address;
  NodeRole role = NodeRole::kAgent;
  std::set<Realm> served_realms;
  NodeState state = NodeState::kUp;
};

class Topology {
 public:
  /// Throws Error("DUPLICATE_NODE").
  void add_node(TopologyNode node);
  /// Throws Error("UNKNOWN_NODE") or Error("BAD_LINK").
  void add_link(const std::string& a, const std::string& b);
  /// Derives home_of from the servers' served realms. Throws Error("DUPLICATE_HOME").
  void assign_homes();

  bool has_node(std::string_view id) const { return nodes_.find(id) != nodes_.end(); }
  const TopologyNode& node(std::string_view id) const;
  TopologyNode& node(std::string_view id);
  const std::map<std::string, TopologyNode, std::less<>>& nodes() const { return nodes_; }
  const std::set<std::pair<std::string, std::string>>& links() const { return links_; }
  bool linked(const std::string& a, const std::string& b) const;
  /// Sorted by id.
  std::vector<std::string> neighbors(const std::string& id) const;
  const std::map<Realm, std::string>& home_of() const { return home_of_; }

 private:
  std::map<std::string, TopologyNode, std::less<>> nodes_;
  std::set<std::pair<std::string, std::string>> links_;  // (smaller id, larger id)
  std::map<std::string, std::vector<std::string>> adjacency_;
  std::map<Realm, std::string> home_of_;
};

/// Hop distances to `target` over UP nodes not in `excluded`.
std::map<std::string, int> distances_to(const Topology& topology, const std::string& target,
                                        const std::set<std::string>& excluded = {});

/// Next hop of every node that can reach `target`; ties go to the smallest id.
/// The target itself is absent from the map.
std::map<std::string, std::string> compute_next_hops(const Topology& topology, const std::string& target,
                                                     const std::set<std::string>& excluded = {});

enum class Security { kPsk, kTls };

std::string_view to_string(Security security);

struct Policy {
  std::string policy_id;
  RealmPattern pattern;
  std::string home_node;
  Security security = Security::kPsk;
  std::optional<LogicalTime> ttl;
};

/// One `route <pattern> via <node> security <psk|tls> [ttl <ms>]` per line,
/// `#` starts a comment. Throws Error("PARSE_ERROR") or Error("UNKNOWN_HOME_NODE").
std::vector<Policy> parse_policies(std::string_view text, const Topology& topology);
Policy parse_policy_line(std::string_view line, const Topology& topology, std::string policy_id);
std::string policy_text(const Policy& policy);
Json to_json(const Policy& policy);

enum class AdjacencyStatus { kNone, kHalf, kEstablished };

std::string_view to_string(AdjacencyStatus status);

struct AdjacencyRecord {
  std::string node_a;  // smaller id
  std::string node_b;
  AdjacencyStatus status = AdjacencyStatus::kNone;
  std::string configured_side;  // set while HALF
  Security security = Security::kPsk;
  std::string fingerprint;  // "sha256:<hex>" for PSK
};

/// What the controller believes is installed at one config path on a node.
struct LedgerItem {
  std::string policy_id;
  std::string action;    // routes only
  std::string next_hop;  // routes and peers
};

struct FrameRecord {
  LogicalTime time = 0;
  std::string node;
  std::vector<std::string> changes;  // "merge peers/aj", "delete routing/realm.org"
  std::string outcome;               // "ok" or an error code
};

struct ProvisionReport {
  std::string policy_id;
  std::vector<FrameRecord> frames;
  int adjacencies_established = 0;
  int routes_installed = 0;
  int reroutes = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

struct ControllerOptions {
  std::string controller_id = "controller";
  std::uint64_t seed = 1;
  bool parallel_adjacency = false;
  bool reactive = false;
};

/// PSK fingerprint as stored by the controller.
std::string secret_fingerprint(const SecretBytes& secret);

class Controller {
 public:
  using AdjacencyCallback = std::function<void(bool established)>;
  using RouteCallback = std::function<void(const FrameRecord&)>;
  using ReportCallback = std::function<void(const ProvisionReport&)>;

  Controller(Scheduler& scheduler, SouthboundHub& hub, Topology topology, ControllerOptions options);
  Controller(const Controller&) = delete;
  Controller& operator=(const Controller&) = delete;

  const Topology& topology() const { return topology_; }
  const ControllerOptions& options() const { return options_; }

  /// Parses and stores policies; returns the parsed list.
  std::vector<Policy> load_policy(std::string_view text);
  void add_policy(Policy policy);
  const std::vector<Policy>& policies() const { return policies_; }
  /// Best-specificity policy covering `realm`.
  const Policy* policy_for(const Realm& realm) const;

  // Queued operations: each runs once every earlier operation has finished.
  void establish_adjacency(const std::string& node_a, const std::string& node_b, Security security,
                           AdjacencyCallback done = {});
  void install_route(const std::string& node, RealmEntry entry, std::optional<LogicalTime> ttl,
                     RouteCallback done = {});
  void provision_realm(const Policy& policy, ReportCallback done = {});
  void provision_all();
  void withdraw_policy(const std::string& policy_id, ReportCallback done = {});
  void on_notification(const Notification& note);

  bool idle() const { return !busy_ && jobs_.empty(); }

  const AdjacencyRecord* adjacency(const std::string& a, const std::string& b) const;
  std::vector<AdjacencyRecord> adjacencies() const;
  const std::map<std::string, std::map<std::string, LedgerItem>>& ledger() const { return ledger_; }
  const std::set<std::string>& suspected() const { return suspected_; }
  const std::vector<ProvisionReport>& reports() const { return reports_; }
  /// Outcomes that produce no frames: unroutable realms, missing paths, rollbacks.
  const std::vector<Json>& events() const { return events_; }
  std::uint64_t frames_sent() const { return frames_sent_; }
  std::uint64_t reroutes() const { return reroutes_; }

  /// Desired state: {"policies","adjacencies","ledger"}.
  Json snapshot() const;

 private:
  using Done = std::function<void()>;
  using Job = std::function<void(Done)>;
  using ReplyCallback = std::function<void(const Frame&, const FrameRecord&)>;

  void enqueue(Job job);
  void pump();

  void send_changes(const std::string& node, std::vector<ConfigChange> changes, const std::string& policy_id,
                    ReplyCallback on_reply);
  void establish(const std::string& a, const std::string& b, Security security, std::vector<ConfigChange> extra_a,
                 std::vector<ConfigChange> extra_b, const std::string& policy_id, AdjacencyCallback done);
  void rollback(const std::string& node, std::vector<ConfigPath> installed, const std::string& policy_id,
                Done done);
  void provision_realm_now(const Policy& policy, Done done);
  void provision_node_now(const Policy& policy, const std::string& node, bool force, Done done);
  void route_step(const Policy& policy, const std::string& node, const std::string& next_hop,
                  std::vector<ConfigChange> mirror_extra, bool force, Done done);
  void local_route_step(const Policy& policy, bool force, Done done);

  ConfigChange local_route_change(const Policy& policy) const;
  bool ledger_has(const std::string& node, const std::string& path) const;
  const LedgerItem* ledger_item(const std::string& node, const std::string& path) const;
  AdjacencyRecord& adjacency_slot(const std::string& a, const std::string& b);
  SecretBytes random_secret(std::size_t size);
  void record_event(std::string kind, Json fields);

  Scheduler& scheduler_;
  SouthboundHub& hub_;
  Topology topology_;
  ControllerOptions options_;
  std::mt19937_64 rng_;

  std::vector<Policy> policies_;
  std::map<std::pair<std::string, std::string>, AdjacencyRecord> adjacencies_;
  std::map<std::string, std::map<std::string, LedgerItem>> ledger_;
  std::set<std::string> suspected_;
  std::vector<ProvisionReport> reports_;
  std::optional<ProvisionReport> report_;  // open while a job runs
  std::vector<Json> events_;

  std::deque<Job> jobs_;
  bool busy_ = false;
  std::uint64_t frames_sent_ = 0;
  std::uint64_t reroutes_ = 0;
};

}  // namespace sdnaaa
