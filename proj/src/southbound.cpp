#include "sdnaaa/southbound.hpp"

#include <algorithm>

namespace sdnaaa {

// ---------------------------------------------------------------------------
// Transcript

void Transcript::record(LogicalTime time, std::string_view actor, std::string_view direction, Json fields) {
  if (!enabled_) return;
  Json line = Json::object();
  line["time"] = time;
  line["actor"] = actor;
  line["direction"] = direction;
  for (auto& [key, value] : fields.items()) line[key] = std::move(value);
  lines_.push_back(line.dump());
}

std::string Transcript::text() const {
  std::string out;
  for (const auto& line : lines_) {
    out += line;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Paths and changes

namespace {

constexpr std::string_view container_name(Container c) {
  switch (c) {
    case Container::kPeers:
      return "peers";
    case Container::kRouting:
      return "routing";
    case Container::kTls:
      return "tls";
    case Container::kAttributes:
      return "attributes";
  }
  return "?";
}

}  // namespace

ConfigPath ConfigPath::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) throw Error("BAD_PATH", std::string(text));
  const std::string_view head = text.substr(0, slash);
  std::string key(text.substr(slash + 1));
  if (key.empty()) throw Error("BAD_PATH", std::string(text));
  for (auto c : {Container::kPeers, Container::kRouting, Container::kTls, Container::kAttributes}) {
    if (container_name(c) != head) continue;
    if (c == Container::kRouting) {
      try {
        key = RealmPattern::parse(key).text();
      } catch (const Error&) {
        throw Error("BAD_PATH", std::string(text));
      }
    }
    return ConfigPath{c, std::move(key)};
  }
  throw Error("BAD_PATH", std::string(text));
}

std::string ConfigPath::text() const { return std::string(container_name(container)) + "/" + key; }

ConfigPath path_of(const EntityValue& value) {
  struct Visitor {
    ConfigPath operator()(const PeerEntry& v) const { return {Container::kPeers, v.peer_id}; }
    ConfigPath operator()(const RealmEntry& v) const { return {Container::kRouting, v.pattern.text()}; }
    ConfigPath operator()(const TlsProfile& v) const { return {Container::kTls, v.name}; }
    ConfigPath operator()(const AttributeRule& v) const { return {Container::kAttributes, v.rule_id}; }
  };
  return std::visit(Visitor{}, value);
}

ConfigChange ConfigChange::merge(EntityValue value, std::optional<LogicalTime> ttl) {
  ConfigChange change;
  change.op = ChangeOp::kMerge;
  change.path = path_of(value);
  change.value = std::move(value);
  change.ttl = ttl;
  return change;
}

ConfigChange ConfigChange::remove(ConfigPath path) {
  ConfigChange change;
  change.op = ChangeOp::kDelete;
  change.path = std::move(path);
  return change;
}

// ---------------------------------------------------------------------------
// Frames

std::string_view to_string(FrameType type) {
  switch (type) {
    case FrameType::kEditConfig:
      return "edit-config";
    case FrameType::kGetConfig:
      return "get-config";
    case FrameType::kConfig:
      return "config";
    case FrameType::kOk:
      return "ok";
    case FrameType::kError:
      return "error";
    case FrameType::kNotification:
      return "notification";
  }
  return "?";
}

Frame Frame::edit_config(std::vector<ConfigChange> changes) {
  Frame f;
  f.type = FrameType::kEditConfig;
  f.changes = std::move(changes);
  return f;
}

Frame Frame::get_config() {
  Frame f;
  f.type = FrameType::kGetConfig;
  return f;
}

Frame Frame::ok(std::uint64_t txn) {
  Frame f;
  f.txn = txn;
  f.type = FrameType::kOk;
  return f;
}

Frame Frame::config(std::uint64_t txn, ConfigDocument doc) {
  Frame f;
  f.txn = txn;
  f.type = FrameType::kConfig;
  f.doc = std::move(doc);
  return f;
}

Frame Frame::failure(std::uint64_t txn, std::string code, std::vector<Violation> detail) {
  Frame f;
  f.txn = txn;
  f.type = FrameType::kError;
  f.error = FrameError{std::move(code), std::move(detail)};
  return f;
}

Frame Frame::notification(Notification note) {
  Frame f;
  f.txn = 0;
  f.type = FrameType::kNotification;
  f.note = std::move(note);
  return f;
}

Json to_json(const ConfigChange& change) {
  Json j = Json::object();
  j["op"] = change.op == ChangeOp::kMerge ? "merge" : "delete";
  j["path"] = change.path.text();
  if (change.value) j["value"] = std::visit([](const auto& v) { return to_json(v); }, *change.value);
  if (change.ttl) j["ttl"] = *change.ttl;
  return j;
}

namespace {

[[noreturn]] void frame_schema_error(const std::string& detail) { throw Error("SCHEMA_ERROR", "frame: " + detail); }

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) frame_schema_error(std::string(what) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      frame_schema_error("unknown key '" + key + "' in " + std::string(what));
    }
  }
}

}  // namespace

ConfigChange change_from_json(const Json& j) {
  check_keys(j, {"op", "path", "value", "ttl"}, "change");
  if (!j.contains("op") || !j["op"].is_string()) frame_schema_error("change.op");
  if (!j.contains("path") || !j["path"].is_string()) frame_schema_error("change.path");
  ConfigChange change;
  const auto op = j["op"].get<std::string>();
  if (op == "merge") {
    change.op = ChangeOp::kMerge;
  } else if (op == "delete") {
    change.op = ChangeOp::kDelete;
  } else {
    frame_schema_error("unknown op '" + op + "'");
  }
  change.path = ConfigPath::parse(j["path"].get<std::string>());
  if (j.contains("value")) {
    const Json& v = j["value"];
    switch (change.path.container) {
      case Container::kPeers:
        change.value = peer_from_json(v);
        break;
      case Container::kRouting:
        change.value = realm_entry_from_json(v);
        break;
      case Container::kTls:
        change.value = tls_profile_from_json(v);
        break;
      case Container::kAttributes:
        change.value = attribute_rule_from_json(v);
        break;
    }
  }
  if (j.contains("ttl")) {
    if (!j["ttl"].is_number_integer()) frame_schema_error("change.ttl");
    change.ttl = j["ttl"].get<LogicalTime>();
  }
  return change;
}

Json to_json(const Frame& frame) {
  Json j = Json::object();
  j["txn"] = frame.txn;
  j["type"] = to_string(frame.type);
  switch (frame.type) {
    case FrameType::kEditConfig: {
      Json changes = Json::array();
      for (const auto& c : frame.changes) changes.push_back(to_json(c));
      j["changes"] = std::move(changes);
      break;
    }
    case FrameType::kConfig:
      j["doc"] = to_json(canonicalize(frame.doc.value_or(ConfigDocument{})));
      break;
    case FrameType::kError: {
      const FrameError err = frame.error.value_or(FrameError{});
      j["code"] = err.code;
      Json detail = Json::array();
      for (const auto& v : err.detail) detail.push_back(to_json(v));
      j["detail"] = std::move(detail);
      break;
    }
    case FrameType::kNotification:
      if (frame.note) j["note"] = to_json(*frame.note);
      break;
    case FrameType::kGetConfig:
    case FrameType::kOk:
      break;
  }
  return j;
}

Frame frame_from_json(const Json& j) {
  check_keys(j, {"txn", "type", "changes", "doc", "code", "detail", "note"}, "frame");
  if (!j.contains("txn") || !j["txn"].is_number_integer() ||
      (!j["txn"].is_number_unsigned() && j["txn"].get<std::int64_t>() < 0)) {
    frame_schema_error("txn must be a non-negative integer");
  }
  if (!j.contains("type") || !j["type"].is_string()) frame_schema_error("type");
  Frame frame;
  frame.txn = j["txn"].get<std::uint64_t>();
  const auto type = j["type"].get<std::string>();
  bool known = false;
  for (auto t : {FrameType::kEditConfig, FrameType::kGetConfig, FrameType::kConfig, FrameType::kOk, FrameType::kError,
                 FrameType::kNotification}) {
    if (to_string(t) == type) {
      frame.type = t;
      known = true;
    }
  }
  if (!known) frame_schema_error("unknown type '" + type + "'");
  switch (frame.type) {
    case FrameType::kEditConfig:
      if (!j.contains("changes") || !j["changes"].is_array()) frame_schema_error("changes");
      for (const auto& c : j["changes"]) frame.changes.push_back(change_from_json(c));
      break;
    case FrameType::kConfig:
      if (!j.contains("doc")) frame_schema_error("doc");
      frame.doc = document_from_json(j["doc"]);
      break;
    case FrameType::kError: {
      if (!j.contains("code") || !j["code"].is_string()) frame_schema_error("code");
      FrameError err{j["code"].get<std::string>(), {}};
      if (j.contains("detail")) {
        if (!j["detail"].is_array()) frame_schema_error("detail");
        for (const auto& v : j["detail"]) err.detail.push_back(violation_from_json(v));
      }
      frame.error = std::move(err);
      break;
    }
    case FrameType::kNotification:
      if (!j.contains("note")) frame_schema_error("note");
      frame.note = notification_from_json(j["note"]);
      break;
    case FrameType::kGetConfig:
    case FrameType::kOk:
      break;
  }
  return frame;
}

std::string encode_frame(const Frame& frame) { return to_json(frame).dump(); }

Frame decode_frame(std::string_view text) { return frame_from_json(parse_json(text)); }

Frame redact_frame(Frame frame) {
  for (ConfigChange& change : frame.changes) {
    if (!change.value) continue;
    if (auto* peer = std::get_if<PeerEntry>(&*change.value)) {
      if (auto* shared = std::get_if<SharedSecret>(&peer->credential)) {
        shared->secret = SecretBytes::redacted_placeholder();
      }
    } else if (auto* profile = std::get_if<TlsProfile>(&*change.value)) {
      profile->local_key = SecretBytes::redacted_placeholder();
    }
  }
  if (frame.doc) frame.doc = redact(std::move(*frame.doc));
  return frame;
}

std::string length_prefixed(std::string_view payload) {
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(payload.size() + 4);
  out += static_cast<char>((n >> 24) & 0xff);
  out += static_cast<char>((n >> 16) & 0xff);
  out += static_cast<char>((n >> 8) & 0xff);
  out += static_cast<char>(n & 0xff);
  out.append(payload);
  return out;
}

std::optional<std::string> LengthPrefixedReader::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(buffer_[i]);
  if (buffer_.size() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  std::string payload = buffer_.substr(4, n);
  buffer_.erase(0, 4 + static_cast<std::size_t>(n));
  return payload;
}

std::optional<std::string> LineReader::next() {
  const auto nl = buffer_.find('\n');
  if (nl == std::string::npos) return std::nullopt;
  std::string line = buffer_.substr(0, nl);
  buffer_.erase(0, nl + 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// ---------------------------------------------------------------------------
// Atomic application

namespace {

template <typename T, typename KeyFn>
void upsert(std::vector<T>& items, T value, KeyFn key) {
  auto it = std::find_if(items.begin(), items.end(), [&](const T& item) { return key(item) == key(value); });
  if (it == items.end()) {
    items.push_back(std::move(value));
  } else {
    *it = std::move(value);
  }
}

template <typename T, typename KeyFn>
bool erase_key(std::vector<T>& items, const std::string& wanted, KeyFn key) {
  auto it = std::find_if(items.begin(), items.end(), [&](const T& item) { return key(item) == wanted; });
  if (it == items.end()) return false;
  items.erase(it);
  return true;
}

auto peer_key = [](const PeerEntry& p) { return p.peer_id; };
auto route_key = [](const RealmEntry& r) { return r.pattern.text(); };
auto tls_key = [](const TlsProfile& t) { return t.name; };
auto rule_key = [](const AttributeRule& r) { return r.rule_id; };

bool carries_redacted_secret(const EntityValue& value) {
  if (const auto* peer = std::get_if<PeerEntry>(&value)) {
    const auto* shared = std::get_if<SharedSecret>(&peer->credential);
    return shared != nullptr && shared->secret.redacted();
  }
  if (const auto* profile = std::get_if<TlsProfile>(&value)) return profile->local_key.redacted();
  return false;
}

Expiration* expiration_of(EntityValue& value) {
  if (auto* peer = std::get_if<PeerEntry>(&value)) return &peer->expiration;
  if (auto* route = std::get_if<RealmEntry>(&value)) return &route->expiration;
  return nullptr;
}

}  // namespace

ApplyResult apply_changes_to_copy(const ConfigDocument& running, std::span<const ConfigChange> changes,
                                  LogicalTime now) {
  ApplyResult result;
  ConfigDocument doc = running;
  bool bad_path = false;

  for (const ConfigChange& change : changes) {
    const std::string path = change.path.text();
    if (change.op == ChangeOp::kDelete) {
      if (change.value) {
        result.violations.push_back({"BAD_PATH", path, "delete carries a value"});
        bad_path = true;
        continue;
      }
      bool found = false;
      switch (change.path.container) {
        case Container::kPeers:
          found = erase_key(doc.peers, change.path.key, peer_key);
          break;
        case Container::kRouting:
          found = erase_key(doc.routing, change.path.key, route_key);
          break;
        case Container::kTls:
          found = erase_key(doc.tls, change.path.key, tls_key);
          break;
        case Container::kAttributes:
          found = erase_key(doc.attributes, change.path.key, rule_key);
          break;
      }
      if (!found) {
        result.violations.push_back({"BAD_PATH", path, "no such entry"});
        bad_path = true;
      }
      continue;
    }

    if (!change.value) {
      result.violations.push_back({"BAD_PATH", path, "merge without value"});
      bad_path = true;
      continue;
    }
    if (!(path_of(*change.value) == change.path)) {
      result.violations.push_back({"BAD_PATH", path, "value addresses " + path_of(*change.value).text()});
      bad_path = true;
      continue;
    }
    if (carries_redacted_secret(*change.value)) {
      result.violations.push_back({"REDACTED_SECRET", path, "key material must be supplied"});
      continue;
    }
    EntityValue value = *change.value;
    if (Expiration* expiration = expiration_of(value)) {
      if (change.ttl) {
        if (*change.ttl <= 0) {
          result.violations.push_back({"BAD_TTL", path, std::to_string(*change.ttl)});
          continue;
        }
        *expiration = now + *change.ttl;
      } else if (*expiration && **expiration <= now) {
        result.violations.push_back({"EXPIRED_ON_ARRIVAL", path, std::to_string(**expiration)});
        continue;
      }
    } else if (change.ttl) {
      result.violations.push_back({"BAD_TTL", path, "entry type has no expiration"});
      continue;
    }
    std::visit(
        [&doc](auto&& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, PeerEntry>) {
            upsert(doc.peers, std::move(v), peer_key);
          } else if constexpr (std::is_same_v<T, RealmEntry>) {
            upsert(doc.routing, std::move(v), route_key);
          } else if constexpr (std::is_same_v<T, TlsProfile>) {
            upsert(doc.tls, std::move(v), tls_key);
          } else {
            upsert(doc.attributes, std::move(v), rule_key);
          }
        },
        std::move(value));
  }

  auto structural = validate_document(doc);
  result.violations.insert(result.violations.end(), structural.begin(), structural.end());
  if (!result.violations.empty()) {
    result.error_code = bad_path ? "BAD_PATH" : "VALIDATION_FAILED";
    return result;
  }
  result.document = std::move(doc);
  return result;
}

// ---------------------------------------------------------------------------
// SouthboundHub

SouthboundHub::SouthboundHub(Scheduler& scheduler, Transcript& transcript)
    : scheduler_(scheduler), transcript_(transcript) {}

void SouthboundHub::register_node(ManagedNode& node, std::string authorized_controller) {
  NodeSlot& s = nodes_[node.id()];
  s.node = &node;
  s.authorized_controller = std::move(authorized_controller);
}

SouthboundHub::NodeSlot& SouthboundHub::slot(std::string_view node_id) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw Error("UNKNOWN_NODE", std::string(node_id));
  return it->second;
}

Session& SouthboundHub::open_session(std::string_view controller_id, std::string_view node_id) {
  NodeSlot& s = slot(node_id);
  if (controller_id != s.authorized_controller) {
    throw Error("UNAUTHORIZED", std::string(controller_id) + " may not manage " + std::string(node_id));
  }
  if (!s.node->is_up()) throw Error("NODE_DOWN", std::string(node_id));
  if (s.session) throw Error("SESSION_EXISTS", std::string(node_id));
  s.session = std::make_unique<Session>();
  s.session->session_id = next_session_id_++;
  s.session->controller_id = std::string(controller_id);
  s.session->node_id = std::string(node_id);
  return *s.session;
}

void SouthboundHub::close_session(std::string_view node_id) { slot(node_id).session.reset(); }

Session* SouthboundHub::session_for(std::string_view node_id) {
  auto it = nodes_.find(node_id);
  return it == nodes_.end() ? nullptr : it->second.session.get();
}

void SouthboundHub::log(Session& session, LogicalTime time, std::string_view direction, const Frame& frame) {
  Json body = to_json(redact_frame(frame));
  Json fields = Json::object();
  fields["frame"] = body;
  session.transcript.push_back({time, std::string(direction), body.dump()});
  transcript_.record(time, session.node_id, direction, std::move(fields));
}

Frame SouthboundHub::stamp_request(Session& session, Frame request) {
  request.txn = session.next_txn++;
  return request;
}

Frame SouthboundHub::exchange(Session& session, const Frame& request, LogicalTime at) {
  NodeSlot& s = slot(session.node_id);
  Frame reply = s.node->is_up() ? s.node->handle_request(request, at)
                                : Frame::failure(request.txn, "NODE_DOWN", {{"NODE_DOWN", session.node_id, ""}});
  reply.txn = request.txn;
  return reply;
}

Frame SouthboundHub::edit_config(Session& session, std::vector<ConfigChange> changes) {
  const Frame request = stamp_request(session, Frame::edit_config(std::move(changes)));
  const LogicalTime now = scheduler_.now();
  log(session, now, "down", request);
  Frame reply = exchange(session, request, now);
  log(session, now, "up", reply);
  return reply;
}

Frame SouthboundHub::get_config(Session& session) {
  const Frame request = stamp_request(session, Frame::get_config());
  const LogicalTime now = scheduler_.now();
  log(session, now, "down", request);
  Frame reply = exchange(session, request, now);
  log(session, now, "up", reply);
  return reply;
}

std::uint64_t SouthboundHub::send(Session& session, Frame request, ReplyHandler on_reply) {
  request = stamp_request(session, std::move(request));
  const std::uint64_t txn = request.txn;
  const std::uint64_t sid = session.session_id;
  log(session, scheduler_.now(), "down", request);
  ++requests_sent_;
  pending_replies_.emplace(std::make_pair(sid, txn), std::move(on_reply));

  scheduler_.schedule(1, [this, sid, txn, node_id = session.node_id, request = std::move(request)]() {
    Session* s = session_for(node_id);
    Frame reply = Frame::failure(txn, "SESSION_CLOSED");
    if (s != nullptr && s->session_id == sid) {
      reply = exchange(*s, request, scheduler_.now());
      log(*s, scheduler_.now(), "up", reply);
    }
    scheduler_.schedule(1, [this, sid, txn, reply = std::move(reply)]() {
      auto it = pending_replies_.find({sid, txn});
      if (it == pending_replies_.end()) return;
      ReplyHandler handler = std::move(it->second);
      pending_replies_.erase(it);
      if (handler) handler(reply);
    });
  });
  return txn;
}

void SouthboundHub::notify(std::string_view node_id, Notification note) {
  Session* s = session_for(node_id);
  if (s == nullptr) {
    ++dropped_;
    return;
  }
  log(*s, scheduler_.now(), "up", Frame::notification(note));
  scheduler_.schedule(1, [this, note = std::move(note)]() {
    if (notification_handler_) notification_handler_(note);
  });
}

}  // namespace sdnaaa
