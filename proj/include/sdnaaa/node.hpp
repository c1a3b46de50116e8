#pragma once

// Data-plane AAA node: applies southbound configuration, brings up security
// channels lazily, and routes AAA requests by realm.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sdnaaa/model.hpp"
#include "sdnaaa/southbound.hpp"

namespace sdnaaa {

inline constexpr std::size_t kHopLimit = 16;
inline constexpr std::size_t kPendingQueueLimit = 64;
inline constexpr LogicalTime kPendingTimeout = 5000;
inline constexpr LogicalTime kDefaultRedirectTtl = 30000;
/// Handshakes that find no mirrored entry are retried this many times, one
/// time unit apart, before the channel is declared failed.
inline constexpr int kHandshakeAttempts = 8;

class AaaNode;

/// Services a node needs from the network it is attached to.
class NodeNetwork : public Scheduler {
 public:
  /// Sends an AAA record to another node; arrives one time unit later.
  virtual void transmit(const std::string& from, const std::string& to, std::string wire) = 0;
  virtual AaaNode* find_by_address(std::string_view address) = 0;
  virtual void notify(const std::string& node_id, Notification note) = 0;
  /// Terminal outcome of a request: a response at its originator or an error.
  virtual void complete(const std::string& node_id, const AaaMessage& message) = 0;
};

enum class ChannelStatus { kIdle, kConnecting, kEstablished, kFailed };

std::string_view to_string(ChannelStatus status);

struct ChannelVerdict {
  bool ok = false;
  /// NO_MIRROR_ENTRY, TRANSPORT_MISMATCH, CREDENTIAL_MISMATCH, PEER_DOWN or UNKNOWN_PEER.
  std::string reason;
};

/// Whether `self` and the node behind `entry` can bring up a channel.
ChannelVerdict check_channel(const AaaNode& self, const PeerEntry& entry, const AaaNode* counterpart);

struct RedirectQuery {
  Realm realm;
};

using Outbound = std::variant<AaaMessage, RedirectQuery>;

struct Channel {
  ChannelStatus status = ChannelStatus::kIdle;
  LogicalTime established_at = 0;
  std::string failure;
  int attempts = 0;
  std::vector<Outbound> queue;
};

/// Applies rules whose direction matches, in list order. Throws
/// Error("ADD_EXISTS") or Error("REPLACE_MISSING").
AaaMessage apply_attribute_rules(AaaMessage msg, std::span<const AttributeRule> rules, RuleDirection direction);

struct NodeCounters {
  std::uint64_t forwarded = 0;
  std::uint64_t handshakes = 0;
  std::uint64_t redirect_queries = 0;
  std::uint64_t acquire_sent = 0;
  std::uint64_t forward_failures = 0;
  std::uint64_t errors = 0;
};

class AaaNode final : public ManagedNode {
 public:
  AaaNode(std::string id, std::string address, NodeNetwork& network);

  const std::string& id() const override { return id_; }
  const std::string& address() const { return address_; }
  bool is_up() const override { return up_; }

  /// Stops the node; returns messages it was holding, which are lost.
  std::vector<AaaMessage> crash();
  void restart() { up_ = true; }

  void serve_realm(Realm realm) { served_realms_.insert(std::move(realm)); }
  const std::set<Realm>& served_realms() const { return served_realms_; }
  void add_user(std::string user, std::string password) { users_[std::move(user)] = std::move(password); }

  const ConfigDocument& running() const { return running_; }
  /// Installs a startup configuration. Throws Error("VALIDATION_FAILED").
  void load_startup_config(ConfigDocument doc);

  Frame handle_request(const Frame& request, LogicalTime now) override;
  /// Validate-then-swap; on success re-arms timers and reconsiders held messages.
  ApplyResult apply_changes(std::span<const ConfigChange> changes, LogicalTime now);

  /// Immediate handshake against the current state of the counterpart.
  ChannelVerdict establish_channel(const std::string& peer_id);
  const std::map<std::string, Channel>& channels() const { return channels_; }

  /// Starts a request at this node (the AAA client role).
  void originate(AaaMessage msg);
  /// Handles a wire record from another node.
  void receive(const std::string& from, std::string_view wire);

  /// Expires entries and times out held messages. Returns expiry notifications.
  std::vector<Notification> tick(LogicalTime now);
  std::optional<LogicalTime> next_deadline() const;

  const NodeCounters& counters() const { return counters_; }
  std::size_t held_messages() const;
  std::size_t pending_queue_size(const Realm& realm) const;

 private:
  struct Held {
    AaaMessage msg;
    LogicalTime since = 0;
  };
  struct ParkedQueue {
    std::string failed_peer;
    std::deque<Held> messages;
  };

  void accept_request(AaaMessage msg);
  void dispatch(AaaMessage msg);
  void hold_pending(AaaMessage msg);
  void park(AaaMessage msg, const std::string& failed_peer);
  void forward(AaaMessage msg, const std::string& peer_id);
  void send_outbound(Outbound item, const std::string& peer_id);
  void transmit_outbound(const Outbound& item, const std::string& to_node);
  void run_handshake(const std::string& peer_id);
  void channel_failed(const std::string& peer_id, const std::string& reason, std::vector<Outbound> items);
  void report_forward_failure(const std::string& peer_id, const Realm& realm);
  void authenticate_local(AaaMessage msg);
  void redirect(AaaMessage msg, const std::string& agent_peer_id);
  void answer_redirect_query(const std::string& from, const Realm& realm);
  void accept_redirect_hint(const Realm& realm, const std::optional<std::string>& next, LogicalTime ttl);
  void on_response(AaaMessage msg);
  void send_to_node(const std::string& node_id, const AaaMessage& msg);
  void fail(AaaMessage msg, const std::string& code);
  void reconsider_held();
  void reset_channels_after_change(const ConfigDocument& before);
  std::vector<AttributeRule> resolve_rules(const RealmEntry& entry) const;
  const PeerEntry* peer_by_host(std::string_view host) const;

  std::string id_;
  std::string address_;
  NodeNetwork& network_;
  bool up_ = true;

  ConfigDocument running_;
  std::map<std::string, Channel> channels_;
  std::set<Realm> served_realms_;
  std::map<std::string, std::string> users_;

  std::map<Realm, std::deque<Held>> pending_;
  std::map<Realm, ParkedQueue> parked_;
  std::map<Realm, std::deque<Held>> redirect_waiting_;
  std::map<Realm, RealmEntry> redirect_cache_;
  std::set<std::pair<std::string, Realm>> reported_failures_;
  NodeCounters counters_;
};

}  // namespace sdnaaa
