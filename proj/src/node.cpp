#include "sdnaaa/node.hpp"

#include <algorithm>

#include "sdnaaa/model_json.hpp"

namespace sdnaaa {

std::string_view to_string(ChannelStatus status) {
  switch (status) {
    case ChannelStatus::kIdle:
      return "idle";
    case ChannelStatus::kConnecting:
      return "connecting";
    case ChannelStatus::kEstablished:
      return "established";
    case ChannelStatus::kFailed:
      return "failed";
  }
  return "?";
}

ChannelVerdict check_channel(const AaaNode& self, const PeerEntry& entry, const AaaNode* counterpart) {
  if (counterpart == nullptr || !counterpart->is_up()) return {false, "PEER_DOWN"};
  const auto& theirs = counterpart->running();
  auto mirror_it = std::find_if(theirs.peers.begin(), theirs.peers.end(),
                                [&](const PeerEntry& p) { return p.host == self.address(); });
  if (mirror_it == theirs.peers.end()) return {false, "NO_MIRROR_ENTRY"};
  const PeerEntry& mirror = *mirror_it;
  if (mirror.transport != entry.transport) return {false, "TRANSPORT_MISMATCH"};

  const auto* mine_psk = std::get_if<SharedSecret>(&entry.credential);
  const auto* theirs_psk = std::get_if<SharedSecret>(&mirror.credential);
  if (mine_psk != nullptr && theirs_psk != nullptr) {
    const bool usable = !mine_psk->secret.redacted() && !theirs_psk->secret.redacted();
    return usable && mine_psk->secret == theirs_psk->secret ? ChannelVerdict{true, {}}
                                                             : ChannelVerdict{false, "CREDENTIAL_MISMATCH"};
  }
  const auto* mine_tls = std::get_if<TlsRef>(&entry.credential);
  const auto* theirs_tls = std::get_if<TlsRef>(&mirror.credential);
  if (mine_tls == nullptr || theirs_tls == nullptr) return {false, "CREDENTIAL_MISMATCH"};
  const TlsProfile* my_profile = self.running().find_tls(mine_tls->profile);
  const TlsProfile* their_profile = theirs.find_tls(theirs_tls->profile);
  if (my_profile == nullptr || their_profile == nullptr) return {false, "CREDENTIAL_MISMATCH"};
  const bool mutual = my_profile->trusted_identities.contains(their_profile->local_identity) &&
                      their_profile->trusted_identities.contains(my_profile->local_identity);
  return mutual ? ChannelVerdict{true, {}} : ChannelVerdict{false, "CREDENTIAL_MISMATCH"};
}

AaaMessage apply_attribute_rules(AaaMessage msg, std::span<const AttributeRule> rules, RuleDirection direction) {
  for (const AttributeRule& rule : rules) {
    if (rule.direction != direction) continue;
    auto it = msg.attributes.find(rule.attribute);
    switch (rule.op) {
      case RuleOp::kAdd:
        if (it != msg.attributes.end()) throw Error("ADD_EXISTS", rule.attribute);
        msg.attributes.emplace(rule.attribute, rule.value.value_or(""));
        break;
      case RuleOp::kRemove:
        if (it != msg.attributes.end()) msg.attributes.erase(it);
        break;
      case RuleOp::kReplace:
        if (it == msg.attributes.end()) throw Error("REPLACE_MISSING", rule.attribute);
        it->second = rule.value.value_or("");
        break;
    }
  }
  return msg;
}

AaaNode::AaaNode(std::string id, std::string address, NodeNetwork& network)
    : id_(std::move(id)), address_(std::move(address)), network_(network) {}

std::vector<AaaMessage> AaaNode::crash() {
  std::vector<AaaMessage> lost;
  auto take = [&lost](std::deque<Held>& q) {
    for (auto& h : q) lost.push_back(std::move(h.msg));
  };
  for (auto& [realm, q] : pending_) take(q);
  for (auto& [realm, parked] : parked_) take(parked.messages);
  for (auto& [realm, q] : redirect_waiting_) take(q);
  for (auto& [peer, channel] : channels_) {
    for (auto& item : channel.queue) {
      if (auto* msg = std::get_if<AaaMessage>(&item)) lost.push_back(std::move(*msg));
    }
  }
  pending_.clear();
  parked_.clear();
  redirect_waiting_.clear();
  redirect_cache_.clear();
  channels_.clear();
  reported_failures_.clear();
  up_ = false;
  return lost;
}

void AaaNode::load_startup_config(ConfigDocument doc) {
  auto violations = validate_document(doc);
  if (!violations.empty()) {
    throw Error("VALIDATION_FAILED", id_ + ": " + violations.front().code + " at " + violations.front().path);
  }
  running_ = std::move(doc);
}

// ---------------------------------------------------------------------------
// Configuration

Frame AaaNode::handle_request(const Frame& request, LogicalTime now) {
  switch (request.type) {
    case FrameType::kEditConfig: {
      ApplyResult result = apply_changes(request.changes, now);
      if (result.ok()) return Frame::ok(request.txn);
      return Frame::failure(request.txn, result.error_code, std::move(result.violations));
    }
    case FrameType::kGetConfig:
      return Frame::config(request.txn, redact(running_));
    default:
      return Frame::failure(request.txn, "BAD_REQUEST", {{"BAD_REQUEST", "", std::string(to_string(request.type))}});
  }
}

ApplyResult AaaNode::apply_changes(std::span<const ConfigChange> changes, LogicalTime now) {
  ApplyResult result = apply_changes_to_copy(running_, changes, now);
  if (!result.ok()) return result;
  ConfigDocument before = std::move(running_);
  running_ = result.document;
  reset_channels_after_change(before);
  reported_failures_.clear();
  network_.schedule(0, [this] { reconsider_held(); });
  return result;
}

void AaaNode::reset_channels_after_change(const ConfigDocument& before) {
  for (auto it = channels_.begin(); it != channels_.end();) {
    if (it->second.status == ChannelStatus::kConnecting) {
      ++it;
      continue;
    }
    const PeerEntry* old_entry = before.find_peer(it->first);
    const PeerEntry* new_entry = running_.find_peer(it->first);
    bool changed = new_entry == nullptr || old_entry == nullptr || !(*old_entry == *new_entry);
    if (!changed) {
      if (const auto* ref = std::get_if<TlsRef>(&new_entry->credential)) {
        const TlsProfile* old_profile = before.find_tls(ref->profile);
        const TlsProfile* new_profile = running_.find_tls(ref->profile);
        changed = old_profile == nullptr || new_profile == nullptr || !(*old_profile == *new_profile);
      }
    }
    it = changed ? channels_.erase(it) : std::next(it);
  }
}

void AaaNode::reconsider_held() {
  if (!up_) return;
  const LogicalTime now = network_.now();

  std::vector<AaaMessage> ready;
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (select_route(running_.routing, it->first, now) != nullptr) {
      for (auto& h : it->second) ready.push_back(std::move(h.msg));
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = parked_.begin(); it != parked_.end();) {
    const RealmEntry* entry = select_route(running_.routing, it->first, now);
    const bool same_path = entry != nullptr && entry->next_hop && *entry->next_hop == it->second.failed_peer;
    if (!same_path) {
      for (auto& h : it->second.messages) ready.push_back(std::move(h.msg));
      it = parked_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto& msg : ready) dispatch(std::move(msg));
}

// ---------------------------------------------------------------------------
// Channels

ChannelVerdict AaaNode::establish_channel(const std::string& peer_id) {
  const PeerEntry* peer = running_.find_peer(peer_id);
  if (peer == nullptr) return {false, "UNKNOWN_PEER"};
  ++counters_.handshakes;
  ChannelVerdict verdict = check_channel(*this, *peer, network_.find_by_address(peer->host));
  Channel& channel = channels_[peer_id];
  if (verdict.ok) {
    channel.status = ChannelStatus::kEstablished;
    channel.established_at = network_.now();
    channel.failure.clear();
  } else {
    channel.status = ChannelStatus::kFailed;
    channel.failure = verdict.reason;
  }
  return verdict;
}

void AaaNode::send_outbound(Outbound item, const std::string& peer_id) {
  const PeerEntry* peer = running_.find_peer(peer_id);
  if (peer == nullptr) {
    channel_failed(peer_id, "UNKNOWN_PEER", {std::move(item)});
    return;
  }
  Channel& channel = channels_[peer_id];
  if (channel.status == ChannelStatus::kEstablished) {
    AaaNode* counterpart = network_.find_by_address(peer->host);
    if (counterpart != nullptr && counterpart->is_up()) {
      transmit_outbound(item, counterpart->id());
      return;
    }
    channel.status = ChannelStatus::kFailed;
    channel.failure = "PEER_DOWN";
    channel_failed(peer_id, "PEER_DOWN", {std::move(item)});
    return;
  }
  channel.queue.push_back(std::move(item));
  if (channel.status == ChannelStatus::kConnecting) return;
  channel.status = ChannelStatus::kConnecting;
  channel.attempts = 0;
  network_.schedule(1, [this, peer_id] { run_handshake(peer_id); });
}

void AaaNode::run_handshake(const std::string& peer_id) {
  if (!up_) return;
  auto it = channels_.find(peer_id);
  if (it == channels_.end() || it->second.status != ChannelStatus::kConnecting) return;
  Channel& channel = it->second;

  const PeerEntry* peer = running_.find_peer(peer_id);
  if (peer == nullptr) {
    // Peer was removed while connecting; route the queued traffic afresh.
    std::vector<Outbound> items = std::move(channel.queue);
    channels_.erase(it);
    for (auto& item : items) {
      if (auto* msg = std::get_if<AaaMessage>(&item)) {
        dispatch(std::move(*msg));
      } else {
        accept_redirect_hint(std::get<RedirectQuery>(item).realm, std::nullopt, 0);
      }
    }
    return;
  }

  ++counters_.handshakes;
  AaaNode* counterpart = network_.find_by_address(peer->host);
  const ChannelVerdict verdict = check_channel(*this, *peer, counterpart);
  if (verdict.ok) {
    channel.status = ChannelStatus::kEstablished;
    channel.established_at = network_.now();
    channel.failure.clear();
    std::vector<Outbound> items = std::move(channel.queue);
    channel.queue.clear();
    for (const auto& item : items) transmit_outbound(item, counterpart->id());
    return;
  }
  if (verdict.reason == "NO_MIRROR_ENTRY" && ++channel.attempts < kHandshakeAttempts) {
    network_.schedule(1, [this, peer_id] { run_handshake(peer_id); });
    return;
  }
  channel.status = ChannelStatus::kFailed;
  channel.failure = verdict.reason;
  std::vector<Outbound> items = std::move(channel.queue);
  channel.queue.clear();
  channel_failed(peer_id, verdict.reason, std::move(items));
}

void AaaNode::transmit_outbound(const Outbound& item, const std::string& to_node) {
  if (const auto* msg = std::get_if<AaaMessage>(&item)) {
    send_to_node(to_node, *msg);
    return;
  }
  Json query = Json::object();
  query["kind"] = "redirect-query";
  query["realm"] = std::get<RedirectQuery>(item).realm.text();
  ++counters_.redirect_queries;
  network_.transmit(id_, to_node, query.dump());
}

void AaaNode::channel_failed(const std::string& peer_id, const std::string& reason, std::vector<Outbound> items) {
  for (auto& item : items) {
    if (auto* msg = std::get_if<AaaMessage>(&item)) {
      const Realm realm = msg->dest_realm;
      report_forward_failure(peer_id, realm);
      if (reason == "PEER_DOWN") {
        park(std::move(*msg), peer_id);
      } else {
        fail(std::move(*msg), "CHANNEL_FAILED");
      }
    } else {
      const Realm& realm = std::get<RedirectQuery>(item).realm;
      auto waiting = redirect_waiting_.extract(realm);
      if (waiting.empty()) continue;
      for (auto& h : waiting.mapped()) fail(std::move(h.msg), "CHANNEL_FAILED");
    }
  }
}

void AaaNode::report_forward_failure(const std::string& peer_id, const Realm& realm) {
  if (!reported_failures_.emplace(peer_id, realm).second) return;
  ++counters_.forward_failures;
  network_.notify(id_, ForwardFailure{id_, peer_id, realm});
}

// ---------------------------------------------------------------------------
// Message routing

void AaaNode::originate(AaaMessage msg) {
  if (!up_) {
    fail(std::move(msg), "NODE_DOWN");
    return;
  }
  msg.kind = MessageKind::kRequest;
  msg.hop_trace.clear();
  accept_request(std::move(msg));
}

void AaaNode::receive(const std::string& from, std::string_view wire) {
  Json record;
  try {
    record = parse_json(wire);
  } catch (const Error&) {
    return;
  }
  const std::string kind = record.value("kind", "");
  if (kind == "redirect-query") {
    if (!up_) return;
    try {
      answer_redirect_query(from, Realm::parse(record.value("realm", "")));
    } catch (const Error&) {
    }
    return;
  }
  if (kind == "redirect-hint") {
    if (!up_) return;
    try {
      const Realm realm = Realm::parse(record.value("realm", ""));
      std::optional<std::string> next;
      if (record.contains("next") && record["next"].is_string()) next = record["next"].get<std::string>();
      const LogicalTime ttl = record.value("ttl", kDefaultRedirectTtl);
      accept_redirect_hint(realm, next, ttl);
    } catch (const Error&) {
    }
    return;
  }

  AaaMessage msg;
  try {
    msg = message_from_json(record);
  } catch (const Error&) {
    return;
  }
  if (!up_) {
    fail(std::move(msg), "NODE_DOWN");
    return;
  }
  if (msg.kind == MessageKind::kRequest) {
    accept_request(std::move(msg));
  } else {
    on_response(std::move(msg));
  }
}

void AaaNode::accept_request(AaaMessage msg) {
  if (std::find(msg.hop_trace.begin(), msg.hop_trace.end(), id_) != msg.hop_trace.end()) {
    fail(std::move(msg), "ROUTE_LOOP");
    return;
  }
  if (msg.hop_trace.size() + 1 > kHopLimit) {
    fail(std::move(msg), "HOP_LIMIT");
    return;
  }
  msg.hop_trace.push_back(id_);
  dispatch(std::move(msg));
}

std::vector<AttributeRule> AaaNode::resolve_rules(const RealmEntry& entry) const {
  std::vector<AttributeRule> rules;
  for (const auto& ref : entry.rule_refs) {
    if (const AttributeRule* rule = running_.find_rule(ref)) rules.push_back(*rule);
  }
  return rules;
}

void AaaNode::dispatch(AaaMessage msg) {
  const RealmEntry* entry = select_route(running_.routing, msg.dest_realm, network_.now());
  if (entry == nullptr) {
    hold_pending(std::move(msg));
    return;
  }
  switch (entry->action) {
    case Action::kLocal:
      authenticate_local(std::move(msg));
      return;
    case Action::kRelay:
      forward(std::move(msg), *entry->next_hop);
      return;
    case Action::kProxy: {
      const std::string next_hop = *entry->next_hop;
      try {
        msg = apply_attribute_rules(std::move(msg), resolve_rules(*entry), RuleDirection::kOutgoing);
      } catch (const Error& e) {
        fail(std::move(msg), e.code());
        return;
      }
      forward(std::move(msg), next_hop);
      return;
    }
    case Action::kRedirect:
      redirect(std::move(msg), *entry->next_hop);
      return;
  }
}

void AaaNode::hold_pending(AaaMessage msg) {
  auto [it, created] = pending_.try_emplace(msg.dest_realm);
  if (it->second.size() >= kPendingQueueLimit) {
    fail(std::move(msg), "QUEUE_FULL");
    return;
  }
  const Realm realm = msg.dest_realm;
  it->second.push_back({std::move(msg), network_.now()});
  if (created) {
    ++counters_.acquire_sent;
    network_.notify(id_, AcquireRoute{id_, realm});
  }
}

void AaaNode::park(AaaMessage msg, const std::string& failed_peer) {
  ParkedQueue& parked = parked_[msg.dest_realm];
  if (parked.messages.size() >= kPendingQueueLimit) {
    fail(std::move(msg), "QUEUE_FULL");
    return;
  }
  parked.failed_peer = failed_peer;
  parked.messages.push_back({std::move(msg), network_.now()});
}

void AaaNode::forward(AaaMessage msg, const std::string& peer_id) { send_outbound(std::move(msg), peer_id); }

void AaaNode::send_to_node(const std::string& node_id, const AaaMessage& msg) {
  ++counters_.forwarded;
  network_.transmit(id_, node_id, to_json(msg).dump());
}

void AaaNode::authenticate_local(AaaMessage msg) {
  if (!served_realms_.contains(msg.dest_realm)) {
    fail(std::move(msg), "REALM_NOT_SERVED");
    return;
  }
  auto user = users_.find(msg.nai.user);
  auto password = msg.attributes.find("password");
  const bool accepted = user != users_.end() && password != msg.attributes.end() && user->second == password->second;
  msg.kind = MessageKind::kResponse;
  msg.status = accepted ? MessageStatus::accept() : MessageStatus::reject();
  if (msg.hop_trace.size() <= 1) {
    network_.complete(id_, msg);
    return;
  }
  send_to_node(msg.hop_trace[msg.hop_trace.size() - 2], msg);
}

void AaaNode::on_response(AaaMessage msg) {
  auto self = std::find(msg.hop_trace.begin(), msg.hop_trace.end(), id_);
  if (self == msg.hop_trace.end()) {
    fail(std::move(msg), "NOT_ON_PATH");
    return;
  }
  if (self == msg.hop_trace.begin()) {
    network_.complete(id_, msg);
    return;
  }
  const std::string previous = *std::prev(self);
  const RealmEntry* entry = select_route(running_.routing, msg.dest_realm, network_.now());
  if (entry != nullptr && entry->action == Action::kProxy) {
    try {
      msg = apply_attribute_rules(std::move(msg), resolve_rules(*entry), RuleDirection::kIncoming);
    } catch (const Error& e) {
      fail(std::move(msg), e.code());
      return;
    }
  }
  send_to_node(previous, msg);
}

void AaaNode::fail(AaaMessage msg, const std::string& code) {
  ++counters_.errors;
  msg.status = MessageStatus::error(code);
  network_.complete(id_, msg);
}

// ---------------------------------------------------------------------------
// Redirect

void AaaNode::redirect(AaaMessage msg, const std::string& agent_peer_id) {
  const LogicalTime now = network_.now();
  auto cached = redirect_cache_.find(msg.dest_realm);
  if (cached != redirect_cache_.end()) {
    if (!is_expired(cached->second.expiration, now) && running_.find_peer(*cached->second.next_hop) != nullptr) {
      forward(std::move(msg), *cached->second.next_hop);
      return;
    }
    redirect_cache_.erase(cached);
  }
  auto [it, created] = redirect_waiting_.try_emplace(msg.dest_realm);
  const Realm realm = msg.dest_realm;
  it->second.push_back({std::move(msg), now});
  if (created) send_outbound(RedirectQuery{realm}, agent_peer_id);
}

void AaaNode::answer_redirect_query(const std::string& from, const Realm& realm) {
  const LogicalTime now = network_.now();
  Json hint = Json::object();
  hint["kind"] = "redirect-hint";
  hint["realm"] = realm.text();
  hint["next"] = nullptr;
  hint["ttl"] = kDefaultRedirectTtl;
  if (const RealmEntry* entry = select_route(running_.routing, realm, now); entry != nullptr && entry->next_hop) {
    if (const PeerEntry* peer = running_.find_peer(*entry->next_hop)) {
      hint["next"] = peer->host;
      if (entry->expiration) hint["ttl"] = *entry->expiration - now;
    }
  }
  network_.transmit(id_, from, hint.dump());
}

void AaaNode::accept_redirect_hint(const Realm& realm, const std::optional<std::string>& next, LogicalTime ttl) {
  auto waiting = redirect_waiting_.extract(realm);
  if (waiting.empty()) return;
  const PeerEntry* peer = next ? peer_by_host(*next) : nullptr;
  if (peer == nullptr || ttl <= 0) {
    for (auto& h : waiting.mapped()) fail(std::move(h.msg), "REDIRECT_NO_ROUTE");
    return;
  }
  RealmEntry hint;
  hint.pattern = RealmPattern::exact(realm);
  hint.next_hop = peer->peer_id;
  hint.action = Action::kRelay;
  hint.expiration = network_.now() + ttl;
  redirect_cache_[realm] = hint;
  const std::string peer_id = peer->peer_id;
  for (auto& h : waiting.mapped()) forward(std::move(h.msg), peer_id);
}

const PeerEntry* AaaNode::peer_by_host(std::string_view host) const {
  auto it = std::find_if(running_.peers.begin(), running_.peers.end(),
                         [&](const PeerEntry& p) { return p.host == host; });
  return it == running_.peers.end() ? nullptr : &*it;
}

// ---------------------------------------------------------------------------
// Timers

std::vector<Notification> AaaNode::tick(LogicalTime now) {
  std::vector<Notification> notes;
  if (!up_) return notes;

  std::set<std::string> expired_peers;
  for (const PeerEntry& peer : running_.peers) {
    if (is_expired(peer.expiration, now)) expired_peers.insert(peer.peer_id);
  }
  std::vector<RealmPattern> expired_routes;
  for (const RealmEntry& entry : running_.routing) {
    const bool own = is_expired(entry.expiration, now);
    const bool orphaned = entry.next_hop && expired_peers.contains(*entry.next_hop);
    if (own || orphaned) expired_routes.push_back(entry.pattern);
  }
  if (!expired_peers.empty() || !expired_routes.empty()) {
    std::erase_if(running_.routing, [&](const RealmEntry& e) {
      return std::find(expired_routes.begin(), expired_routes.end(), e.pattern) != expired_routes.end();
    });
    std::erase_if(running_.peers, [&](const PeerEntry& p) { return expired_peers.contains(p.peer_id); });
    std::sort(expired_routes.begin(), expired_routes.end(),
              [](const RealmPattern& a, const RealmPattern& b) { return a.text() < b.text(); });
    for (const auto& peer_id : expired_peers) {
      notes.push_back(PeerExpired{id_, peer_id});
      auto ch = channels_.find(peer_id);
      if (ch != channels_.end() && ch->second.status != ChannelStatus::kConnecting) channels_.erase(ch);
    }
    for (auto& pattern : expired_routes) notes.push_back(RouteExpired{id_, pattern});
  }

  auto timed_out = [now](const Held& h) { return now - h.since > kPendingTimeout; };
  for (auto it = pending_.begin(); it != pending_.end();) {
    auto& q = it->second;
    while (!q.empty() && timed_out(q.front())) {
      fail(std::move(q.front().msg), "NO_ROUTE_TIMEOUT");
      q.pop_front();
    }
    it = q.empty() ? pending_.erase(it) : std::next(it);
  }
  for (auto it = parked_.begin(); it != parked_.end();) {
    auto& q = it->second.messages;
    while (!q.empty() && timed_out(q.front())) {
      fail(std::move(q.front().msg), "CHANNEL_FAILED");
      q.pop_front();
    }
    it = q.empty() ? parked_.erase(it) : std::next(it);
  }
  for (auto it = redirect_waiting_.begin(); it != redirect_waiting_.end();) {
    auto& q = it->second;
    while (!q.empty() && timed_out(q.front())) {
      fail(std::move(q.front().msg), "NO_ROUTE_TIMEOUT");
      q.pop_front();
    }
    it = q.empty() ? redirect_waiting_.erase(it) : std::next(it);
  }
  return notes;
}

std::optional<LogicalTime> AaaNode::next_deadline() const {
  if (!up_) return std::nullopt;
  std::optional<LogicalTime> best;
  auto consider = [&best](LogicalTime t) {
    if (!best || t < *best) best = t;
  };
  for (const PeerEntry& peer : running_.peers) {
    if (peer.expiration) consider(*peer.expiration);
  }
  for (const RealmEntry& entry : running_.routing) {
    if (entry.expiration) consider(*entry.expiration);
  }
  for (const auto& [realm, q] : pending_) {
    if (!q.empty()) consider(q.front().since + kPendingTimeout + 1);
  }
  for (const auto& [realm, parked] : parked_) {
    if (!parked.messages.empty()) consider(parked.messages.front().since + kPendingTimeout + 1);
  }
  for (const auto& [realm, q] : redirect_waiting_) {
    if (!q.empty()) consider(q.front().since + kPendingTimeout + 1);
  }
  return best;
}

std::size_t AaaNode::held_messages() const {
  std::size_t n = 0;
  for (const auto& [realm, q] : pending_) n += q.size();
  for (const auto& [realm, parked] : parked_) n += parked.messages.size();
  for (const auto& [realm, q] : redirect_waiting_) n += q.size();
  for (const auto& [peer, channel] : channels_) {
    n += static_cast<std::size_t>(std::count_if(channel.queue.begin(), channel.queue.end(),
                                                [](const Outbound& o) { return std::holds_alternative<AaaMessage>(o); }));
  }
  return n;
}

std::size_t AaaNode::pending_queue_size(const Realm& realm) const {
  auto it = pending_.find(realm);
  return it == pending_.end() ? 0 : it->second.size();
}

}  // namespace sdnaaa
