#include "sdnaaa/model_json.hpp"

#include <initializer_list>

namespace sdnaaa {

namespace {

[[noreturn]] void schema_error(std::string_view what, std::string_view detail) {
  throw Error("SCHEMA_ERROR", std::string(what) + ": " + std::string(detail));
}

/// Strict view over a JSON object: unknown keys and type mismatches throw.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string_view what, std::initializer_list<std::string_view> allowed)
      : j_(j), what_(what) {
    if (!j.is_object()) schema_error(what, "expected object");
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (auto k : allowed) known = known || k == key;
      if (!known) schema_error(what, "unknown key '" + key + "'");
    }
  }

  const Json* find(std::string_view key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& required(std::string_view key) const {
    const Json* v = find(key);
    if (v == nullptr) schema_error(what_, "missing key '" + std::string(key) + "'");
    return *v;
  }

  std::string string(std::string_view key) const {
    const Json& v = required(key);
    if (!v.is_string()) schema_error(what_, "'" + std::string(key) + "' must be a string");
    return v.get<std::string>();
  }

  std::optional<std::string> optional_string(std::string_view key) const {
    const Json* v = find(key);
    if (v == nullptr || v->is_null()) return std::nullopt;
    if (!v->is_string()) schema_error(what_, "'" + std::string(key) + "' must be a string or null");
    return v->get<std::string>();
  }

  std::int64_t integer(std::string_view key) const {
    const Json& v = required(key);
    if (!v.is_number_integer()) schema_error(what_, "'" + std::string(key) + "' must be an integer");
    return v.get<std::int64_t>();
  }

  Expiration expiration(std::string_view key) const {
    const Json* v = find(key);
    if (v == nullptr || v->is_null()) return std::nullopt;
    if (!v->is_number_integer()) schema_error(what_, "'" + std::string(key) + "' must be an integer or null");
    return v->get<std::int64_t>();
  }

  const Json& array(std::string_view key, bool required_key = true) const {
    static const Json kEmpty = Json::array();
    const Json* v = find(key);
    if (v == nullptr) {
      if (required_key) schema_error(what_, "missing key '" + std::string(key) + "'");
      return kEmpty;
    }
    if (!v->is_array()) schema_error(what_, "'" + std::string(key) + "' must be an array");
    return *v;
  }

  std::vector<std::string> strings(std::string_view key, bool required_key = true) const {
    std::vector<std::string> out;
    for (const Json& item : array(key, required_key)) {
      if (!item.is_string()) schema_error(what_, "'" + std::string(key) + "' must hold strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  std::string_view what() const { return what_; }

 private:
  const Json& j_;
  std::string what_;
};

Json optional_value(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }
Json optional_value(const Expiration& v) { return v ? Json(*v) : Json(nullptr); }

template <typename T, typename Parse>
T parse_or_schema_error(std::string_view what, Parse&& parse) {
  try {
    return parse();
  } catch (const Error& e) {
    if (e.code() == "SCHEMA_ERROR") throw;
    schema_error(what, e.what());
  }
}

}  // namespace

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("PARSE_ERROR", e.what());
  }
}

// ---------------------------------------------------------------------------
// Encoders

Json to_json(const PeerEntry& peer) {
  Json credential = Json::object();
  if (const auto* shared = std::get_if<SharedSecret>(&peer.credential)) {
    credential["shared-secret"] = shared->secret.text();
  } else {
    credential["tls-profile"] = std::get<TlsRef>(peer.credential).profile;
  }
  Json j = Json::object();
  j["peer-id"] = peer.peer_id;
  j["identity"] = peer.identity;
  j["host"] = peer.host;
  j["port"] = peer.port;
  j["transport"] = to_string(peer.transport);
  j["credential"] = std::move(credential);
  j["expiration"] = optional_value(peer.expiration);
  return j;
}

Json to_json(const RealmEntry& entry) {
  Json j = Json::object();
  j["realm"] = entry.pattern.text();
  j["next-hop"] = optional_value(entry.next_hop);
  j["action"] = to_string(entry.action);
  j["rules"] = entry.rule_refs;
  j["expiration"] = optional_value(entry.expiration);
  return j;
}

Json to_json(const TlsProfile& profile) {
  Json j = Json::object();
  j["name"] = profile.name;
  j["local-identity"] = profile.local_identity;
  j["local-key"] = profile.local_key.text();
  j["trusted-identities"] = Json(std::vector<std::string>(profile.trusted_identities.begin(),
                                                          profile.trusted_identities.end()));
  return j;
}

Json to_json(const AttributeRule& rule) {
  Json j = Json::object();
  j["rule-id"] = rule.rule_id;
  j["direction"] = to_string(rule.direction);
  j["op"] = to_string(rule.op);
  j["attribute"] = rule.attribute;
  j["value"] = optional_value(rule.value);
  return j;
}

Json to_json(const ConfigDocument& doc) {
  Json j = Json::object();
  auto list = [](const auto& items) {
    Json arr = Json::array();
    for (const auto& item : items) arr.push_back(to_json(item));
    return arr;
  };
  j["peers"] = list(doc.peers);
  j["routing"] = list(doc.routing);
  j["tls"] = list(doc.tls);
  j["attributes"] = list(doc.attributes);
  return j;
}

Json to_json(const Violation& violation) {
  Json j = Json::object();
  j["code"] = violation.code;
  j["path"] = violation.path;
  j["detail"] = violation.detail;
  return j;
}

Json to_json(const Notification& note) {
  Json j = Json::object();
  j["kind"] = notification_kind(note);
  j["node"] = notification_node(note);
  std::visit(
      [&j](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, AcquireRoute>) {
          j["realm"] = n.realm.text();
        } else if constexpr (std::is_same_v<T, PeerExpired>) {
          j["peer"] = n.peer_id;
        } else if constexpr (std::is_same_v<T, RouteExpired>) {
          j["pattern"] = n.pattern.text();
        } else {
          j["peer"] = n.peer_id;
          j["realm"] = n.realm.text();
        }
      },
      note);
  return j;
}

Json to_json(const AaaMessage& message) {
  Json j = Json::object();
  j["kind"] = message.kind == MessageKind::kRequest ? "request" : "response";
  j["msg_id"] = message.msg_id;
  j["nai"] = message.nai.text();
  Json attrs = Json::object();
  for (const auto& [key, value] : message.attributes) attrs[key] = value;
  j["attributes"] = std::move(attrs);
  j["trace"] = message.hop_trace;
  if (message.kind == MessageKind::kResponse || message.status.kind != MessageStatus::Kind::kPending) {
    switch (message.status.kind) {
      case MessageStatus::Kind::kPending:
        j["status"] = "pending";
        break;
      case MessageStatus::Kind::kAccept:
        j["status"] = "accept";
        break;
      case MessageStatus::Kind::kReject:
        j["status"] = "reject";
        break;
      case MessageStatus::Kind::kError:
        j["status"] = "error";
        j["code"] = message.status.error_code;
        break;
    }
  }
  return j;
}

// ---------------------------------------------------------------------------
// Decoders

PeerEntry peer_from_json(const Json& j) {
  ObjectReader r(j, "peer-entry",
                 {"peer-id", "identity", "host", "port", "transport", "credential", "expiration"});
  PeerEntry peer;
  peer.peer_id = r.string("peer-id");
  peer.identity = r.string("identity");
  peer.host = r.string("host");
  const std::int64_t port = r.integer("port");
  if (port < 0 || port > 0x7fffffff) schema_error("peer-entry", "port out of range");
  peer.port = static_cast<int>(port);
  const auto transport = transport_from_string(r.string("transport"));
  if (!transport) schema_error("peer-entry", "unknown transport");
  peer.transport = *transport;

  ObjectReader cred(r.required("credential"), "credential", {"shared-secret", "tls-profile"});
  const bool has_secret = cred.find("shared-secret") != nullptr;
  const bool has_profile = cred.find("tls-profile") != nullptr;
  if (has_secret == has_profile) schema_error("credential", "exactly one of shared-secret or tls-profile");
  if (has_secret) {
    peer.credential = SharedSecret{SecretBytes::from_text(cred.string("shared-secret"))};
  } else {
    peer.credential = TlsRef{cred.string("tls-profile")};
  }
  peer.expiration = r.expiration("expiration");
  return peer;
}

RealmEntry realm_entry_from_json(const Json& j) {
  ObjectReader r(j, "realms-entry", {"realm", "next-hop", "action", "rules", "expiration"});
  RealmEntry entry;
  const std::string pattern = r.string("realm");
  entry.pattern = parse_or_schema_error<RealmPattern>("realms-entry", [&] { return RealmPattern::parse(pattern); });
  entry.next_hop = r.optional_string("next-hop");
  const auto action = action_from_string(r.string("action"));
  if (!action) schema_error("realms-entry", "unknown action");
  entry.action = *action;
  entry.rule_refs = r.strings("rules", false);
  entry.expiration = r.expiration("expiration");
  return entry;
}

TlsProfile tls_profile_from_json(const Json& j) {
  ObjectReader r(j, "tls-profile", {"name", "local-identity", "local-key", "trusted-identities"});
  TlsProfile profile;
  profile.name = r.string("name");
  profile.local_identity = r.string("local-identity");
  profile.local_key = SecretBytes::from_text(r.string("local-key"));
  for (auto& id : r.strings("trusted-identities")) profile.trusted_identities.insert(std::move(id));
  return profile;
}

AttributeRule attribute_rule_from_json(const Json& j) {
  ObjectReader r(j, "attribute-rule", {"rule-id", "direction", "op", "attribute", "value"});
  AttributeRule rule;
  rule.rule_id = r.string("rule-id");
  const auto direction = direction_from_string(r.string("direction"));
  if (!direction) schema_error("attribute-rule", "unknown direction");
  rule.direction = *direction;
  const auto op = rule_op_from_string(r.string("op"));
  if (!op) schema_error("attribute-rule", "unknown op");
  rule.op = *op;
  rule.attribute = r.string("attribute");
  rule.value = r.optional_string("value");
  return rule;
}

ConfigDocument document_from_json(const Json& j) {
  ObjectReader r(j, "document", {"peers", "routing", "tls", "attributes"});
  ConfigDocument doc;
  for (const Json& item : r.array("peers", false)) doc.peers.push_back(peer_from_json(item));
  for (const Json& item : r.array("routing", false)) doc.routing.push_back(realm_entry_from_json(item));
  for (const Json& item : r.array("tls", false)) doc.tls.push_back(tls_profile_from_json(item));
  for (const Json& item : r.array("attributes", false)) doc.attributes.push_back(attribute_rule_from_json(item));
  return doc;
}

Violation violation_from_json(const Json& j) {
  ObjectReader r(j, "violation", {"code", "path", "detail"});
  return Violation{r.string("code"), r.string("path"), r.string("detail")};
}

Notification notification_from_json(const Json& j) {
  ObjectReader r(j, "notification", {"kind", "node", "realm", "peer", "pattern"});
  const std::string kind = r.string("kind");
  std::string node = r.string("node");
  auto realm = [&] {
    const std::string text = r.string("realm");
    return parse_or_schema_error<Realm>("notification", [&] { return Realm::parse(text); });
  };
  if (kind == "acquire-route") return AcquireRoute{std::move(node), realm()};
  if (kind == "peer-expired") return PeerExpired{std::move(node), r.string("peer")};
  if (kind == "route-expired") {
    const std::string text = r.string("pattern");
    return RouteExpired{std::move(node),
                        parse_or_schema_error<RealmPattern>("notification", [&] { return RealmPattern::parse(text); })};
  }
  if (kind == "forward-failure") return ForwardFailure{std::move(node), r.string("peer"), realm()};
  schema_error("notification", "unknown kind '" + kind + "'");
}

AaaMessage message_from_json(const Json& j) {
  ObjectReader r(j, "aaa-message", {"kind", "msg_id", "nai", "attributes", "trace", "status", "code"});
  AaaMessage msg;
  const std::string kind = r.string("kind");
  if (kind == "request") {
    msg.kind = MessageKind::kRequest;
  } else if (kind == "response") {
    msg.kind = MessageKind::kResponse;
  } else {
    schema_error("aaa-message", "unknown kind '" + kind + "'");
  }
  msg.msg_id = r.string("msg_id");
  const std::string nai = r.string("nai");
  msg.nai = parse_or_schema_error<Nai>("aaa-message", [&] { return parse_nai(nai); });
  msg.dest_realm = msg.nai.realm;
  const Json& attrs = r.required("attributes");
  if (!attrs.is_object()) schema_error("aaa-message", "attributes must be an object");
  for (const auto& [key, value] : attrs.items()) {
    if (!value.is_string()) schema_error("aaa-message", "attribute values must be strings");
    msg.attributes.emplace(key, value.get<std::string>());
  }
  msg.hop_trace = r.strings("trace");
  if (auto status = r.optional_string("status")) {
    if (*status == "pending") {
      msg.status = MessageStatus::pending();
    } else if (*status == "accept") {
      msg.status = MessageStatus::accept();
    } else if (*status == "reject") {
      msg.status = MessageStatus::reject();
    } else if (*status == "error") {
      msg.status = MessageStatus::error(r.optional_string("code").value_or(""));
    } else {
      schema_error("aaa-message", "unknown status");
    }
  }
  return msg;
}

}  // namespace sdnaaa
