#include "sdnaaa/model.hpp"

#include <openssl/crypto.h>

#include <algorithm>
#include <array>
#include <cctype>

#include "sdnaaa/model_json.hpp"

namespace sdnaaa {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

constexpr std::size_t kMaxRealmLabels = 32;
constexpr std::size_t kMaxLabelLength = 63;
constexpr std::size_t kMinSecretBytes = 16;
constexpr std::size_t kMaxSecretBytes = 64;

}  // namespace

bool is_valid_token(std::string_view token) {
  if (token.empty()) return false;
  return std::all_of(token.begin(), token.end(), [](unsigned char c) { return c > 0x20 && c != 0x7f; });
}

// ---------------------------------------------------------------------------
// Realm

bool Realm::is_valid_label(std::string_view label) {
  if (label.empty() || label.size() > kMaxLabelLength) return false;
  return std::all_of(label.begin(), label.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

Realm Realm::parse(std::string_view text) {
  const std::string lowered = lowercase(text);
  if (lowered.empty()) throw Error("BAD_REALM", "empty realm");
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = lowered.find('.', start);
    std::string label = lowered.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!is_valid_label(label)) throw Error("BAD_REALM", "invalid label '" + label + "' in '" + std::string(text) + "'");
    labels.push_back(std::move(label));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (labels.size() > kMaxRealmLabels) throw Error("BAD_REALM", "more than 32 labels");
  return Realm(std::move(labels));
}

std::string Realm::text() const {
  std::string out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i) out += '.';
    out += labels_[i];
  }
  return out;
}

bool Realm::is_proper_subdomain_of(const Realm& suffix) const {
  if (labels_.size() <= suffix.labels_.size()) return false;
  return std::equal(suffix.labels_.rbegin(), suffix.labels_.rend(), labels_.rbegin());
}

Nai parse_nai(std::string_view text) {
  const auto at = text.rfind('@');
  if (at == std::string_view::npos) throw Error("NO_AT_SIGN", std::string(text));
  const std::string_view user = text.substr(0, at);
  if (user.empty()) throw Error("EMPTY_USER", std::string(text));
  if (user.find('@') != std::string_view::npos || !is_valid_token(user)) {
    throw Error("BAD_USER", std::string(user));
  }
  return Nai{std::string(user), Realm::parse(text.substr(at + 1))};
}

// ---------------------------------------------------------------------------
// RealmPattern

RealmPattern RealmPattern::parse(std::string_view text) {
  if (text == "*") return any();
  try {
    if (text.starts_with("*.")) return wildcard(Realm::parse(text.substr(2)));
    if (text.find('*') != std::string_view::npos) throw Error("BAD_PATTERN", std::string(text));
    return exact(Realm::parse(text));
  } catch (const Error& e) {
    throw Error("BAD_PATTERN", e.what());
  }
}

std::string RealmPattern::text() const {
  switch (kind_) {
    case PatternKind::kExact:
      return suffix_.text();
    case PatternKind::kWildcard:
      return "*." + suffix_.text();
    case PatternKind::kDefault:
      break;
  }
  return "*";
}

int RealmPattern::specificity() const {
  const int n = static_cast<int>(suffix_.size());
  switch (kind_) {
    case PatternKind::kExact:
      return 2 * n + 1;
    case PatternKind::kWildcard:
      return 2 * n;
    case PatternKind::kDefault:
      break;
  }
  return 0;
}

std::optional<int> match_realm(const RealmPattern& pattern, const Realm& realm) {
  bool matched = false;
  switch (pattern.kind()) {
    case PatternKind::kExact:
      matched = pattern.suffix() == realm;
      break;
    case PatternKind::kWildcard:
      matched = realm.is_proper_subdomain_of(pattern.suffix());
      break;
    case PatternKind::kDefault:
      matched = true;
      break;
  }
  if (!matched) return std::nullopt;
  return pattern.specificity();
}

bool transport_uses_tls(Transport transport) {
  return transport == Transport::kRadiusTls || transport == Transport::kDiameterTls;
}

// ---------------------------------------------------------------------------
// SecretBytes

SecretBytes::SecretBytes(SecretBytes&& other) noexcept
    : bytes_(std::move(other.bytes_)), redacted_(other.redacted_) {
  other.bytes_.clear();
}

SecretBytes& SecretBytes::operator=(const SecretBytes& other) {
  if (this != &other) {
    wipe();
    bytes_ = other.bytes_;
    redacted_ = other.redacted_;
  }
  return *this;
}

SecretBytes& SecretBytes::operator=(SecretBytes&& other) noexcept {
  if (this != &other) {
    wipe();
    bytes_ = std::move(other.bytes_);
    redacted_ = other.redacted_;
    other.bytes_.clear();
  }
  return *this;
}

SecretBytes::~SecretBytes() { wipe(); }

void SecretBytes::wipe() {
  if (!bytes_.empty()) OPENSSL_cleanse(bytes_.data(), bytes_.size());
  bytes_.clear();
}

SecretBytes SecretBytes::redacted_placeholder() {
  SecretBytes s;
  s.redacted_ = true;
  return s;
}

SecretBytes SecretBytes::from_text(std::string_view text) {
  if (text == kRedactedToken) return redacted_placeholder();
  if (text.size() % 2 != 0) throw Error("SCHEMA_ERROR", "secret hex has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::vector<std::uint8_t> bytes;
  bytes.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    const int hi = nibble(text[i]);
    const int lo = nibble(text[i + 1]);
    if (hi < 0 || lo < 0) throw Error("SCHEMA_ERROR", "secret is not hex");
    bytes.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return SecretBytes(std::move(bytes));
}

std::string SecretBytes::text() const {
  if (redacted_) return std::string(kRedactedToken);
  static constexpr std::array<char, 16> kDigits = {'0', '1', '2', '3', '4', '5', '6', '7',
                                                   '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};
  std::string out;
  out.reserve(bytes_.size() * 2);
  for (std::uint8_t b : bytes_) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

// ---------------------------------------------------------------------------
// ConfigDocument

const PeerEntry* ConfigDocument::find_peer(std::string_view peer_id) const {
  auto it = std::find_if(peers.begin(), peers.end(), [&](const PeerEntry& p) { return p.peer_id == peer_id; });
  return it == peers.end() ? nullptr : &*it;
}

const RealmEntry* ConfigDocument::find_route(const RealmPattern& pattern) const {
  auto it = std::find_if(routing.begin(), routing.end(), [&](const RealmEntry& r) { return r.pattern == pattern; });
  return it == routing.end() ? nullptr : &*it;
}

const TlsProfile* ConfigDocument::find_tls(std::string_view name) const {
  auto it = std::find_if(tls.begin(), tls.end(), [&](const TlsProfile& t) { return t.name == name; });
  return it == tls.end() ? nullptr : &*it;
}

const AttributeRule* ConfigDocument::find_rule(std::string_view rule_id) const {
  auto it = std::find_if(attributes.begin(), attributes.end(),
                         [&](const AttributeRule& r) { return r.rule_id == rule_id; });
  return it == attributes.end() ? nullptr : &*it;
}

namespace {

void check_peers(const ConfigDocument& doc, std::vector<Violation>& out) {
  std::set<std::string> seen;
  for (const PeerEntry& peer : doc.peers) {
    const std::string path = "peers/" + peer.peer_id;
    if (!is_valid_token(peer.peer_id)) out.push_back({"BAD_TOKEN", path, "peer-id"});
    if (!seen.insert(peer.peer_id).second) out.push_back({"DUPLICATE_PEER_ID", path, peer.peer_id});
    if (!is_valid_token(peer.identity)) out.push_back({"BAD_TOKEN", path, "identity"});
    if (!is_valid_token(peer.host)) out.push_back({"BAD_TOKEN", path, "host"});
    if (peer.port < 1 || peer.port > 65535) out.push_back({"BAD_PORT", path, std::to_string(peer.port)});

    const bool wants_tls = transport_uses_tls(peer.transport);
    if (const auto* shared = std::get_if<SharedSecret>(&peer.credential)) {
      if (wants_tls) {
        out.push_back({"TRANSPORT_CREDENTIAL_MISMATCH", path,
                       std::string(to_string(peer.transport)) + " requires a tls profile"});
      }
      const std::size_t n = shared->secret.size();
      if (!shared->secret.redacted() && (n < kMinSecretBytes || n > kMaxSecretBytes)) {
        out.push_back({"BAD_SECRET_LENGTH", path, std::to_string(n) + " bytes"});
      }
    } else {
      const auto& ref = std::get<TlsRef>(peer.credential);
      if (!wants_tls) {
        out.push_back({"TRANSPORT_CREDENTIAL_MISMATCH", path,
                       std::string(to_string(peer.transport)) + " requires a shared secret"});
      }
      const TlsProfile* profile = doc.find_tls(ref.profile);
      if (profile == nullptr) {
        out.push_back({"DANGLING_TLS_PROFILE", path, ref.profile});
      } else if (!profile->trusted_identities.contains(peer.identity)) {
        out.push_back({"IDENTITY_NOT_TRUSTED", path, peer.identity + " not trusted by " + ref.profile});
      }
    }
  }
}

void check_tls(const ConfigDocument& doc, std::vector<Violation>& out) {
  std::set<std::string> seen;
  for (const TlsProfile& profile : doc.tls) {
    const std::string path = "tls/" + profile.name;
    if (!is_valid_token(profile.name)) out.push_back({"BAD_TOKEN", path, "name"});
    if (!seen.insert(profile.name).second) out.push_back({"DUPLICATE_TLS_PROFILE", path, profile.name});
    if (!is_valid_token(profile.local_identity)) out.push_back({"BAD_TOKEN", path, "local-identity"});
    if (!profile.local_key.redacted() && profile.local_key.size() == 0) {
      out.push_back({"MISSING_LOCAL_KEY", path, ""});
    }
    if (profile.trusted_identities.empty()) out.push_back({"EMPTY_TRUSTED_SET", path, ""});
    for (const auto& id : profile.trusted_identities) {
      if (!is_valid_token(id)) out.push_back({"BAD_TOKEN", path, "trusted-identities"});
    }
  }
}

void check_attributes(const ConfigDocument& doc, std::vector<Violation>& out) {
  std::set<std::string> seen;
  for (const AttributeRule& rule : doc.attributes) {
    const std::string path = "attributes/" + rule.rule_id;
    if (!is_valid_token(rule.rule_id)) out.push_back({"BAD_TOKEN", path, "rule-id"});
    if (!seen.insert(rule.rule_id).second) out.push_back({"DUPLICATE_RULE_ID", path, rule.rule_id});
    if (!is_valid_token(rule.attribute)) out.push_back({"BAD_TOKEN", path, "attribute"});
    if (rule.op == RuleOp::kRemove && rule.value) out.push_back({"UNEXPECTED_RULE_VALUE", path, ""});
    if (rule.op != RuleOp::kRemove && !rule.value) out.push_back({"MISSING_RULE_VALUE", path, ""});
  }
}

void check_routing(const ConfigDocument& doc, std::vector<Violation>& out) {
  std::set<std::string> seen;
  for (const RealmEntry& entry : doc.routing) {
    const std::string text = entry.pattern.text();
    const std::string path = "routing/" + text;
    if (entry.pattern.kind() != PatternKind::kDefault && entry.pattern.suffix().empty()) {
      out.push_back({"BAD_PATTERN", path, "empty realm"});
    }
    if (!seen.insert(text).second) out.push_back({"DUPLICATE_PATTERN", path, text});

    if (entry.action == Action::kLocal) {
      if (entry.next_hop) out.push_back({"UNEXPECTED_NEXT_HOP", path, *entry.next_hop});
    } else if (!entry.next_hop) {
      out.push_back({"MISSING_NEXT_HOP", path, std::string(to_string(entry.action))});
    } else if (doc.find_peer(*entry.next_hop) == nullptr) {
      out.push_back({"DANGLING_NEXT_HOP", path, *entry.next_hop});
    }

    if (!entry.rule_refs.empty() && entry.action != Action::kProxy) {
      out.push_back({"RULES_WITHOUT_PROXY", path, std::string(to_string(entry.action))});
    }
    for (const auto& ref : entry.rule_refs) {
      if (doc.find_rule(ref) == nullptr) out.push_back({"DANGLING_RULE_REF", path, ref});
    }
  }
}

}  // namespace

std::vector<Violation> validate_document(const ConfigDocument& doc) {
  std::vector<Violation> out;
  check_peers(doc, out);
  check_tls(doc, out);
  check_attributes(doc, out);
  check_routing(doc, out);
  return out;
}

ConfigDocument canonicalize(ConfigDocument doc) {
  std::stable_sort(doc.peers.begin(), doc.peers.end(),
                   [](const PeerEntry& a, const PeerEntry& b) { return a.peer_id < b.peer_id; });
  std::stable_sort(doc.routing.begin(), doc.routing.end(), [](const RealmEntry& a, const RealmEntry& b) {
    return a.pattern.text() < b.pattern.text();
  });
  std::stable_sort(doc.tls.begin(), doc.tls.end(),
                   [](const TlsProfile& a, const TlsProfile& b) { return a.name < b.name; });
  std::stable_sort(doc.attributes.begin(), doc.attributes.end(),
                   [](const AttributeRule& a, const AttributeRule& b) { return a.rule_id < b.rule_id; });
  return doc;
}

std::string encode_document(const ConfigDocument& doc) { return to_json(canonicalize(doc)).dump(); }

ConfigDocument decode_document(std::string_view text) { return document_from_json(parse_json(text)); }

ConfigDocument redact(ConfigDocument doc) {
  for (PeerEntry& peer : doc.peers) {
    if (auto* shared = std::get_if<SharedSecret>(&peer.credential)) {
      shared->secret = SecretBytes::redacted_placeholder();
    }
  }
  for (TlsProfile& profile : doc.tls) profile.local_key = SecretBytes::redacted_placeholder();
  return doc;
}

const RealmEntry* select_route(std::span<const RealmEntry> table, const Realm& realm, LogicalTime now) {
  const RealmEntry* best = nullptr;
  int best_score = -1;
  for (const RealmEntry& entry : table) {
    if (is_expired(entry.expiration, now)) continue;
    const auto score = match_realm(entry.pattern, realm);
    if (score && *score > best_score) {
      best = &entry;
      best_score = *score;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Messages and notifications

std::string MessageStatus::text() const {
  switch (kind) {
    case Kind::kPending:
      return "pending";
    case Kind::kAccept:
      return "accept";
    case Kind::kReject:
      return "reject";
    case Kind::kError:
      break;
  }
  return "error(" + error_code + ")";
}

AaaMessage make_request(std::string msg_id, Nai nai, std::map<std::string, std::string> attributes) {
  AaaMessage msg;
  msg.msg_id = std::move(msg_id);
  msg.kind = MessageKind::kRequest;
  msg.dest_realm = nai.realm;
  msg.nai = std::move(nai);
  msg.attributes = std::move(attributes);
  return msg;
}

std::string_view notification_kind(const Notification& note) {
  struct Visitor {
    std::string_view operator()(const AcquireRoute&) const { return "acquire-route"; }
    std::string_view operator()(const PeerExpired&) const { return "peer-expired"; }
    std::string_view operator()(const RouteExpired&) const { return "route-expired"; }
    std::string_view operator()(const ForwardFailure&) const { return "forward-failure"; }
  };
  return std::visit(Visitor{}, note);
}

const std::string& notification_node(const Notification& note) {
  return std::visit([](const auto& n) -> const std::string& { return n.node_id; }, note);
}

// ---------------------------------------------------------------------------
// Enum tokens

std::string_view to_string(Transport value) {
  switch (value) {
    case Transport::kRadiusUdp:
      return "radius-udp";
    case Transport::kRadiusTls:
      return "radius-tls";
    case Transport::kDiameterTcp:
      return "diameter-tcp";
    case Transport::kDiameterTls:
      return "diameter-tls";
  }
  return "?";
}

std::string_view to_string(Action value) {
  switch (value) {
    case Action::kLocal:
      return "local";
    case Action::kRelay:
      return "relay";
    case Action::kProxy:
      return "proxy";
    case Action::kRedirect:
      return "redirect";
  }
  return "?";
}

std::string_view to_string(RuleDirection value) {
  return value == RuleDirection::kIncoming ? "incoming" : "outgoing";
}

std::string_view to_string(RuleOp value) {
  switch (value) {
    case RuleOp::kAdd:
      return "add";
    case RuleOp::kRemove:
      return "remove";
    case RuleOp::kReplace:
      return "replace";
  }
  return "?";
}

std::optional<Transport> transport_from_string(std::string_view text) {
  for (auto t : {Transport::kRadiusUdp, Transport::kRadiusTls, Transport::kDiameterTcp, Transport::kDiameterTls}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::optional<Action> action_from_string(std::string_view text) {
  for (auto a : {Action::kLocal, Action::kRelay, Action::kProxy, Action::kRedirect}) {
    if (to_string(a) == text) return a;
  }
  return std::nullopt;
}

std::optional<RuleDirection> direction_from_string(std::string_view text) {
  if (text == "incoming") return RuleDirection::kIncoming;
  if (text == "outgoing") return RuleDirection::kOutgoing;
  return std::nullopt;
}

std::optional<RuleOp> rule_op_from_string(std::string_view text) {
  for (auto op : {RuleOp::kAdd, RuleOp::kRemove, RuleOp::kReplace}) {
    if (to_string(op) == text) return op;
  }
  return std::nullopt;
}

}  // namespace sdnaaa
