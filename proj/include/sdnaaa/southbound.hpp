#pragma once

// Controller <-> node management channel: edit-config / get-config with
// per-frame atomicity, ok/error replies, notifications, and a transcript of
// every frame that crossed the channel.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sdnaaa/model.hpp"
#include "sdnaaa/model_json.hpp"

namespace sdnaaa {

/// Event-loop facade used by the channel, nodes and controller.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual LogicalTime now() const = 0;
  /// Runs `fn` at now() + delay. Equal times run in scheduling order.
  virtual void schedule(LogicalTime delay, std::function<void()> fn) = 0;
};

/// Newline-delimited JSON log of {time, actor, direction, ...} records.
class Transcript {
 public:
  void record(LogicalTime time, std::string_view actor, std::string_view direction, Json fields = Json::object());

  const std::vector<std::string>& lines() const { return lines_; }
  std::string text() const;
  void set_enabled(bool enabled) { enabled_ = enabled; }

 private:
  std::vector<std::string> lines_;
  bool enabled_ = true;
};

// ---------------------------------------------------------------------------
// Frames

enum class Container { kPeers, kRouting, kTls, kAttributes };

struct ConfigPath {
  Container container = Container::kPeers;
  std::string key;

  /// "peers/<id>", "routing/<pattern>", "tls/<name>", "attributes/<id>".
  /// Throws Error("BAD_PATH").
  static ConfigPath parse(std::string_view text);
  std::string text() const;
  bool operator==(const ConfigPath&) const = default;
};

using EntityValue = std::variant<PeerEntry, RealmEntry, TlsProfile, AttributeRule>;

enum class ChangeOp { kMerge, kDelete };

struct ConfigChange {
  ChangeOp op = ChangeOp::kMerge;
  ConfigPath path;
  std::optional<EntityValue> value;
  /// Relative lifetime; the node stamps expiration = apply time + ttl.
  std::optional<LogicalTime> ttl;

  static ConfigChange merge(EntityValue value, std::optional<LogicalTime> ttl = std::nullopt);
  static ConfigChange remove(ConfigPath path);
  bool operator==(const ConfigChange&) const = default;
};

/// Path a MERGE of `value` would address.
ConfigPath path_of(const EntityValue& value);

enum class FrameType { kEditConfig, kGetConfig, kConfig, kOk, kError, kNotification };

std::string_view to_string(FrameType type);

struct FrameError {
  std::string code;
  std::vector<Violation> detail;
  bool operator==(const FrameError&) const = default;
};

struct Frame {
  std::uint64_t txn = 0;
  FrameType type = FrameType::kOk;
  std::vector<ConfigChange> changes;   // kEditConfig
  std::optional<ConfigDocument> doc;   // kConfig
  std::optional<FrameError> error;     // kError
  std::optional<Notification> note;    // kNotification

  static Frame edit_config(std::vector<ConfigChange> changes);
  static Frame get_config();
  static Frame ok(std::uint64_t txn);
  static Frame config(std::uint64_t txn, ConfigDocument doc);
  static Frame failure(std::uint64_t txn, std::string code, std::vector<Violation> detail = {});
  static Frame notification(Notification note);

  bool operator==(const Frame&) const = default;
};

Json to_json(const ConfigChange& change);
ConfigChange change_from_json(const Json& j);
Json to_json(const Frame& frame);
Frame frame_from_json(const Json& j);
std::string encode_frame(const Frame& frame);
/// Throws Error("PARSE_ERROR") / Error("SCHEMA_ERROR").
Frame decode_frame(std::string_view text);

/// Copy of `frame` with all key material replaced by "<redacted>".
Frame redact_frame(Frame frame);

/// 4-byte big-endian length prefix followed by the payload.
std::string length_prefixed(std::string_view payload);

/// Incremental splitter for a length-prefixed byte stream.
class LengthPrefixedReader {
 public:
  void feed(std::string_view bytes) { buffer_.append(bytes); }
  std::optional<std::string> next();

 private:
  std::string buffer_;
};

/// Incremental splitter for newline-delimited frames.
class LineReader {
 public:
  void feed(std::string_view bytes) { buffer_.append(bytes); }
  std::optional<std::string> next();

 private:
  std::string buffer_;
};

// ---------------------------------------------------------------------------
// Atomic application

struct ApplyResult {
  bool ok() const { return violations.empty(); }
  ConfigDocument document;  // valid only when ok()
  std::vector<Violation> violations;
  /// BAD_PATH when any change addressed a missing or mismatched path.
  std::string error_code;
};

/// Applies `changes` to a copy of `running` and validates the result. The
/// input is never modified; on failure `document` is left empty.
ApplyResult apply_changes_to_copy(const ConfigDocument& running, std::span<const ConfigChange> changes,
                                  LogicalTime now);

// ---------------------------------------------------------------------------
// Sessions

/// Server side of the channel, implemented by AAA nodes.
class ManagedNode {
 public:
  virtual ~ManagedNode() = default;
  virtual const std::string& id() const = 0;
  virtual bool is_up() const = 0;
  /// Handles EDIT_CONFIG / GET_CONFIG and returns the reply frame.
  virtual Frame handle_request(const Frame& request, LogicalTime now) = 0;
};

struct TranscriptEntry {
  LogicalTime time = 0;
  std::string direction;  // "down" = controller to node, "up" = node to controller
  std::string frame;
};

struct Session {
  std::uint64_t session_id = 0;
  std::string controller_id;
  std::string node_id;
  std::uint64_t next_txn = 1;
  std::vector<TranscriptEntry> transcript;
};

/// Routes frames between one controller and many nodes. Request/reply frames
/// take one logical time unit per direction; notifications are dropped and
/// counted when the node has no open session.
class SouthboundHub {
 public:
  using ReplyHandler = std::function<void(const Frame&)>;
  using NotificationHandler = std::function<void(const Notification&)>;

  SouthboundHub(Scheduler& scheduler, Transcript& transcript);

  void register_node(ManagedNode& node, std::string authorized_controller);

  /// Throws Error with UNKNOWN_NODE, NODE_DOWN, SESSION_EXISTS or UNAUTHORIZED.
  Session& open_session(std::string_view controller_id, std::string_view node_id);
  void close_session(std::string_view node_id);
  Session* session_for(std::string_view node_id);

  /// Immediate request/reply, used for direct management access.
  Frame edit_config(Session& session, std::vector<ConfigChange> changes);
  Frame get_config(Session& session);

  /// Asynchronous request; `on_reply` runs when the reply reaches the controller.
  std::uint64_t send(Session& session, Frame request, ReplyHandler on_reply);

  /// Node -> controller; delivered one time unit later.
  void notify(std::string_view node_id, Notification note);
  void on_notification(NotificationHandler handler) { notification_handler_ = std::move(handler); }

  std::uint64_t dropped_notifications() const { return dropped_; }
  std::uint64_t requests_sent() const { return requests_sent_; }
  std::size_t in_flight() const { return pending_replies_.size(); }

 private:
  struct NodeSlot {
    ManagedNode* node = nullptr;
    std::string authorized_controller;
    std::unique_ptr<Session> session;
  };

  NodeSlot& slot(std::string_view node_id);
  Frame stamp_request(Session& session, Frame request);
  Frame exchange(Session& session, const Frame& request, LogicalTime at);
  void log(Session& session, LogicalTime time, std::string_view direction, const Frame& frame);

  Scheduler& scheduler_;
  Transcript& transcript_;
  std::map<std::string, NodeSlot, std::less<>> nodes_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, ReplyHandler> pending_replies_;
  NotificationHandler notification_handler_;
  std::uint64_t next_session_id_ = 1;
  std::uint64_t dropped_ = 0;
  std::uint64_t requests_sent_ = 0;
};

}  // namespace sdnaaa
