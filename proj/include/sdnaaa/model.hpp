#pragma once

// Data model for AAA node configuration: realms and NAIs, the peer, routing,
// tls and attributes containers, AAA messages and node notifications.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sdnaaa/error.hpp"

namespace sdnaaa {

/// Logical simulation time in milliseconds.
using LogicalTime = std::int64_t;
/// Absolute expiry instant; nullopt means the entry never expires.
using Expiration = std::optional<LogicalTime>;

inline constexpr std::string_view kRedactedToken = "<redacted>";

class Realm {
 public:
  Realm() = default;

  /// Lowercases and splits `text` into labels. Throws Error("BAD_REALM").
  static Realm parse(std::string_view text);
  static bool is_valid_label(std::string_view label);

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::string text() const;

  /// True iff this realm ends with `suffix` and is strictly longer.
  bool is_proper_subdomain_of(const Realm& suffix) const;

  auto operator<=>(const Realm&) const = default;

 private:
  explicit Realm(std::vector<std::string> labels) : labels_(std::move(labels)) {}
  std::vector<std::string> labels_;
};

struct Nai {
  std::string user;
  Realm realm;

  std::string text() const { return user + "@" + realm.text(); }
  bool operator==(const Nai&) const = default;
};

/// Splits at the last '@'. Throws Error with NO_AT_SIGN, EMPTY_USER,
/// BAD_USER or BAD_REALM.
Nai parse_nai(std::string_view text);

enum class PatternKind { kExact, kWildcard, kDefault };

/// EXACT "realm.org", WILDCARD "*.org" or DEFAULT "*".
class RealmPattern {
 public:
  RealmPattern() = default;

  static RealmPattern exact(Realm realm) { return {PatternKind::kExact, std::move(realm)}; }
  static RealmPattern wildcard(Realm suffix) { return {PatternKind::kWildcard, std::move(suffix)}; }
  static RealmPattern any() { return {PatternKind::kDefault, Realm{}}; }
  /// Throws Error("BAD_PATTERN").
  static RealmPattern parse(std::string_view text);

  PatternKind kind() const { return kind_; }
  const Realm& suffix() const { return suffix_; }
  std::string text() const;
  /// 2n+1 for EXACT, 2n for WILDCARD over n suffix labels, 0 for DEFAULT.
  int specificity() const;

  auto operator<=>(const RealmPattern&) const = default;

 private:
  RealmPattern(PatternKind kind, Realm suffix) : kind_(kind), suffix_(std::move(suffix)) {}

  PatternKind kind_ = PatternKind::kDefault;
  Realm suffix_;
};

std::optional<int> match_realm(const RealmPattern& pattern, const Realm& realm);

enum class Transport { kRadiusUdp, kRadiusTls, kDiameterTcp, kDiameterTls };

bool transport_uses_tls(Transport transport);

/// Opaque key material. Either holds bytes or is the redacted placeholder.
/// Storage is wiped on destruction and reassignment.
class SecretBytes {
 public:
  SecretBytes() = default;
  explicit SecretBytes(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  SecretBytes(const SecretBytes&) = default;
  SecretBytes(SecretBytes&& other) noexcept;
  SecretBytes& operator=(const SecretBytes& other);
  SecretBytes& operator=(SecretBytes&& other) noexcept;
  ~SecretBytes();

  static SecretBytes redacted_placeholder();
  /// Throws Error("SCHEMA_ERROR") on malformed hex.
  static SecretBytes from_text(std::string_view hex_or_token);

  bool redacted() const { return redacted_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }
  /// Lowercase hex, or "<redacted>".
  std::string text() const;
  void wipe();

  bool operator==(const SecretBytes& other) const {
    return redacted_ == other.redacted_ && bytes_ == other.bytes_;
  }

 private:
  std::vector<std::uint8_t> bytes_;
  bool redacted_ = false;
};

struct SharedSecret {
  SecretBytes secret;
  bool operator==(const SharedSecret&) const = default;
};

struct TlsRef {
  std::string profile;
  bool operator==(const TlsRef&) const = default;
};

using Credential = std::variant<SharedSecret, TlsRef>;

struct TlsProfile {
  std::string name;
  std::string local_identity;
  SecretBytes local_key;
  std::set<std::string> trusted_identities;

  bool operator==(const TlsProfile&) const = default;
};

struct PeerEntry {
  std::string peer_id;
  std::string identity;
  std::string host;
  int port = 0;
  Transport transport = Transport::kRadiusUdp;
  Credential credential;
  Expiration expiration;

  bool operator==(const PeerEntry&) const = default;
};

enum class Action { kLocal, kRelay, kProxy, kRedirect };
enum class RuleDirection { kIncoming, kOutgoing };
enum class RuleOp { kAdd, kRemove, kReplace };

struct AttributeRule {
  std::string rule_id;
  RuleDirection direction = RuleDirection::kOutgoing;
  RuleOp op = RuleOp::kAdd;
  std::string attribute;
  std::optional<std::string> value;

  bool operator==(const AttributeRule&) const = default;
};

struct RealmEntry {
  RealmPattern pattern;
  std::optional<std::string> next_hop;
  Action action = Action::kRelay;
  std::vector<std::string> rule_refs;
  Expiration expiration;

  bool operator==(const RealmEntry&) const = default;
};

struct ConfigDocument {
  std::vector<PeerEntry> peers;
  std::vector<RealmEntry> routing;
  std::vector<TlsProfile> tls;
  std::vector<AttributeRule> attributes;

  const PeerEntry* find_peer(std::string_view peer_id) const;
  const RealmEntry* find_route(const RealmPattern& pattern) const;
  const TlsProfile* find_tls(std::string_view name) const;
  const AttributeRule* find_rule(std::string_view rule_id) const;

  bool operator==(const ConfigDocument&) const = default;
};

struct Violation {
  std::string code;
  std::string path;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

/// Checks every per-entry and cross-reference invariant; reports all of them.
std::vector<Violation> validate_document(const ConfigDocument& doc);

/// Sorts each container by its key so equal documents compare equal.
ConfigDocument canonicalize(ConfigDocument doc);

/// Canonical JSON: keys "peers","routing","tls","attributes", lists sorted.
std::string encode_document(const ConfigDocument& doc);
/// Throws Error("PARSE_ERROR") or Error("SCHEMA_ERROR").
ConfigDocument decode_document(std::string_view text);

/// Replaces every shared secret and TLS private key with "<redacted>".
ConfigDocument redact(ConfigDocument doc);

/// Maximal-specificity non-expired match, or nullptr for an unknown realm.
const RealmEntry* select_route(std::span<const RealmEntry> table, const Realm& realm,
                               LogicalTime now);

inline bool is_expired(const Expiration& expiration, LogicalTime now) {
  return expiration && *expiration <= now;
}

// ---------------------------------------------------------------------------
// AAA messages

enum class MessageKind { kRequest, kResponse };

struct MessageStatus {
  enum class Kind { kPending, kAccept, kReject, kError };
  Kind kind = Kind::kPending;
  std::string error_code;

  static MessageStatus pending() { return {}; }
  static MessageStatus accept() { return {Kind::kAccept, {}}; }
  static MessageStatus reject() { return {Kind::kReject, {}}; }
  static MessageStatus error(std::string code) { return {Kind::kError, std::move(code)}; }

  std::string text() const;
  bool operator==(const MessageStatus&) const = default;
};

struct AaaMessage {
  std::string msg_id;
  MessageKind kind = MessageKind::kRequest;
  Nai nai;
  Realm dest_realm;
  std::map<std::string, std::string> attributes;
  std::vector<std::string> hop_trace;
  MessageStatus status;

  bool operator==(const AaaMessage&) const = default;
};

AaaMessage make_request(std::string msg_id, Nai nai, std::map<std::string, std::string> attributes);

// ---------------------------------------------------------------------------
// Notifications (node -> controller)

struct AcquireRoute {
  std::string node_id;
  Realm realm;
  bool operator==(const AcquireRoute&) const = default;
};

struct PeerExpired {
  std::string node_id;
  std::string peer_id;
  bool operator==(const PeerExpired&) const = default;
};

struct RouteExpired {
  std::string node_id;
  RealmPattern pattern;
  bool operator==(const RouteExpired&) const = default;
};

struct ForwardFailure {
  std::string node_id;
  std::string peer_id;
  Realm realm;
  bool operator==(const ForwardFailure&) const = default;
};

using Notification = std::variant<AcquireRoute, PeerExpired, RouteExpired, ForwardFailure>;

std::string_view notification_kind(const Notification& note);
const std::string& notification_node(const Notification& note);

// Enum <-> wire token helpers shared by the codecs.
std::string_view to_string(Transport value);
std::string_view to_string(Action value);
std::string_view to_string(RuleDirection value);
std::string_view to_string(RuleOp value);
std::optional<Transport> transport_from_string(std::string_view text);
std::optional<Action> action_from_string(std::string_view text);
std::optional<RuleDirection> direction_from_string(std::string_view text);
std::optional<RuleOp> rule_op_from_string(std::string_view text);

/// Non-empty, printable, no whitespace.
bool is_valid_token(std::string_view token);

}  // namespace sdnaaa
