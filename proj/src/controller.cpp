#include "sdnaaa/controller.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <deque>
#include <memory>
#include <sstream>

#include "sdnaaa/error.hpp"

namespace sdnaaa {

namespace {

constexpr int kPortRadiusUdp = 1812;
constexpr int kPortRadiusTls = 2083;

std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

std::string routing_path(const RealmPattern& pattern) { return "routing/" + pattern.text(); }
std::string peer_path(const std::string& peer) { return "peers/" + peer; }
std::string tls_name_for(const std::string& peer) { return "to-" + peer; }
std::string identity_of(const std::string& node) { return node + "-cert"; }

using Step = std::function<void(std::function<void()>)>;

void run_chain(std::shared_ptr<std::vector<Step>> steps, std::size_t index, std::function<void()> done) {
  if (index == steps->size()) {
    done();
    return;
  }
  (*steps)[index]([steps, index, done] { run_chain(steps, index + 1, done); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Topology

std::string_view to_string(NodeRole role) {
  switch (role) {
    case NodeRole::kClient:
      return "client";
    case NodeRole::kServer:
      return "server";
    case NodeRole::kAgent:
      return "agent";
  }
  return "?";
}

std::optional<NodeRole> role_from_string(std::string_view text) {
  if (text == "client") return NodeRole::kClient;
  if (text == "server") return NodeRole::kServer;
  if (text == "agent") return NodeRole::kAgent;
  return std::nullopt;
}

void Topology::add_node(TopologyNode node) {
  if (has_node(node.id)) throw Error("DUPLICATE_NODE", node.id);
  adjacency_[node.id];
  std::string id = node.id;
  nodes_.emplace(std::move(id), std::move(node));
}

void Topology::add_link(const std::string& a, const std::string& b) {
  if (!has_node(a)) throw Error("UNKNOWN_NODE", a);
  if (!has_node(b)) throw Error("UNKNOWN_NODE", b);
  if (a == b) throw Error("BAD_LINK", a + "-" + b);
  if (!links_.insert(ordered(a, b)).second) return;
  auto insert_sorted = [](std::vector<std::string>& v, const std::string& x) {
    v.insert(std::lower_bound(v.begin(), v.end(), x), x);
  };
  insert_sorted(adjacency_[a], b);
  insert_sorted(adjacency_[b], a);
}

void Topology::assign_homes() {
  home_of_.clear();
  for (const auto& [id, node] : nodes_) {
    if (node.role != NodeRole::kServer) continue;
    for (const Realm& realm : node.served_realms) {
      auto [it, inserted] = home_of_.emplace(realm, id);
      if (!inserted) throw Error("DUPLICATE_HOME", realm.text() + " served by " + it->second + " and " + id);
    }
  }
}

const TopologyNode& Topology::node(std::string_view id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("UNKNOWN_NODE", std::string(id));
  return it->second;
}

TopologyNode& Topology::node(std::string_view id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("UNKNOWN_NODE", std::string(id));
  return it->second;
}

bool Topology::linked(const std::string& a, const std::string& b) const { return links_.contains(ordered(a, b)); }

std::vector<std::string> Topology::neighbors(const std::string& id) const {
  auto it = adjacency_.find(id);
  return it == adjacency_.end() ? std::vector<std::string>{} : it->second;
}

std::map<std::string, int> distances_to(const Topology& topology, const std::string& target,
                                        const std::set<std::string>& excluded) {
  std::map<std::string, int> dist;
  auto usable = [&](const std::string& id) {
    return topology.has_node(id) && topology.node(id).state == NodeState::kUp && !excluded.contains(id);
  };
  if (!usable(target)) return dist;
  std::deque<std::string> frontier{target};
  dist[target] = 0;
  while (!frontier.empty()) {
    std::string current = std::move(frontier.front());
    frontier.pop_front();
    for (const auto& next : topology.neighbors(current)) {
      if (!usable(next) || dist.contains(next)) continue;
      dist[next] = dist[current] + 1;
      frontier.push_back(next);
    }
  }
  return dist;
}

std::map<std::string, std::string> compute_next_hops(const Topology& topology, const std::string& target,
                                                     const std::set<std::string>& excluded) {
  const auto dist = distances_to(topology, target, excluded);
  std::map<std::string, std::string> next;
  for (const auto& [id, d] : dist) {
    if (d == 0) continue;
    for (const auto& neighbor : topology.neighbors(id)) {
      auto it = dist.find(neighbor);
      if (it != dist.end() && it->second == d - 1) {
        next[id] = neighbor;
        break;
      }
    }
  }
  return next;
}

// ---------------------------------------------------------------------------
// Policies

std::string_view to_string(Security security) { return security == Security::kPsk ? "psk" : "tls"; }

Policy parse_policy_line(std::string_view line, const Topology& topology, std::string policy_id) {
  std::istringstream in{std::string(line)};
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  const std::string text(line);
  if ((words.size() != 6 && words.size() != 8) || words[0] != "route" || words[2] != "via" || words[4] != "security") {
    throw Error("PARSE_ERROR", "expected 'route <pattern> via <node> security <psk|tls> [ttl <ms>]': " + text);
  }
  Policy policy;
  policy.policy_id = std::move(policy_id);
  try {
    policy.pattern = RealmPattern::parse(words[1]);
  } catch (const Error& e) {
    throw Error("PARSE_ERROR", e.what());
  }
  if (words[5] == "psk") {
    policy.security = Security::kPsk;
  } else if (words[5] == "tls") {
    policy.security = Security::kTls;
  } else {
    throw Error("PARSE_ERROR", "unknown security '" + words[5] + "'");
  }
  if (words.size() == 8) {
    if (words[6] != "ttl") throw Error("PARSE_ERROR", "unexpected '" + words[6] + "'");
    LogicalTime ttl = 0;
    std::size_t used = 0;
    try {
      ttl = std::stoll(words[7], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != words[7].size() || ttl <= 0) throw Error("PARSE_ERROR", "bad ttl '" + words[7] + "'");
    policy.ttl = ttl;
  }
  if (!topology.has_node(words[3])) throw Error("UNKNOWN_HOME_NODE", words[3]);
  policy.home_node = words[3];
  return policy;
}

std::vector<Policy> parse_policies(std::string_view text, const Topology& topology) {
  std::vector<Policy> out;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_policy_line(line, topology, "p" + std::to_string(out.size() + 1)));
  }
  return out;
}

std::string policy_text(const Policy& policy) {
  std::string text = "route " + policy.pattern.text() + " via " + policy.home_node + " security " +
                     std::string(to_string(policy.security));
  if (policy.ttl) text += " ttl " + std::to_string(*policy.ttl);
  return text;
}

Json to_json(const Policy& policy) {
  Json j = Json::object();
  j["id"] = policy.policy_id;
  j["pattern"] = policy.pattern.text();
  j["home"] = policy.home_node;
  j["security"] = std::string(to_string(policy.security));
  j["ttl"] = policy.ttl ? Json(*policy.ttl) : Json(nullptr);
  return j;
}

std::string_view to_string(AdjacencyStatus status) {
  switch (status) {
    case AdjacencyStatus::kNone:
      return "none";
    case AdjacencyStatus::kHalf:
      return "half";
    case AdjacencyStatus::kEstablished:
      return "established";
  }
  return "?";
}

std::string secret_fingerprint(const SecretBytes& secret) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(secret.bytes().data(), secret.bytes().size(), digest, &length, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "sha256:";
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Controller

Controller::Controller(Scheduler& scheduler, SouthboundHub& hub, Topology topology, ControllerOptions options)
    : scheduler_(scheduler),
      hub_(hub),
      topology_(std::move(topology)),
      options_(std::move(options)),
      rng_(options_.seed) {}

std::vector<Policy> Controller::load_policy(std::string_view text) {
  std::vector<Policy> parsed = parse_policies(text, topology_);
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    parsed[i].policy_id = "p" + std::to_string(policies_.size() + i + 1);
  }
  policies_.insert(policies_.end(), parsed.begin(), parsed.end());
  return parsed;
}

void Controller::add_policy(Policy policy) {
  if (!topology_.has_node(policy.home_node)) throw Error("UNKNOWN_HOME_NODE", policy.home_node);
  if (policy.policy_id.empty()) policy.policy_id = "p" + std::to_string(policies_.size() + 1);
  policies_.push_back(std::move(policy));
}

const Policy* Controller::policy_for(const Realm& realm) const {
  const Policy* best = nullptr;
  int best_score = -1;
  for (const Policy& policy : policies_) {
    auto score = match_realm(policy.pattern, realm);
    if (score && *score > best_score) {
      best = &policy;
      best_score = *score;
    }
  }
  return best;
}

void Controller::enqueue(Job job) {
  jobs_.push_back(std::move(job));
  pump();
}

void Controller::pump() {
  if (busy_ || jobs_.empty()) return;
  busy_ = true;
  Job job = std::move(jobs_.front());
  jobs_.pop_front();
  report_.emplace();
  job([this] {
    if (report_ && (!report_->frames.empty() || !report_->failures.empty())) reports_.push_back(std::move(*report_));
    report_.reset();
    busy_ = false;
    scheduler_.schedule(0, [this] { pump(); });
  });
}

void Controller::record_event(std::string kind, Json fields) {
  Json event = Json::object();
  event["time"] = scheduler_.now();
  event["kind"] = std::move(kind);
  for (auto& [key, value] : fields.items()) event[key] = value;
  events_.push_back(std::move(event));
}

bool Controller::ledger_has(const std::string& node, const std::string& path) const {
  return ledger_item(node, path) != nullptr;
}

const LedgerItem* Controller::ledger_item(const std::string& node, const std::string& path) const {
  auto n = ledger_.find(node);
  if (n == ledger_.end()) return nullptr;
  auto it = n->second.find(path);
  return it == n->second.end() ? nullptr : &it->second;
}

AdjacencyRecord& Controller::adjacency_slot(const std::string& a, const std::string& b) {
  auto key = ordered(a, b);
  auto [it, inserted] = adjacencies_.try_emplace(key);
  if (inserted) {
    it->second.node_a = key.first;
    it->second.node_b = key.second;
  }
  return it->second;
}

const AdjacencyRecord* Controller::adjacency(const std::string& a, const std::string& b) const {
  auto it = adjacencies_.find(ordered(a, b));
  return it == adjacencies_.end() ? nullptr : &it->second;
}

std::vector<AdjacencyRecord> Controller::adjacencies() const {
  std::vector<AdjacencyRecord> out;
  for (const auto& [key, record] : adjacencies_) out.push_back(record);
  return out;
}

SecretBytes Controller::random_secret(std::size_t size) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(size);
  while (bytes.size() < size) {
    std::uint64_t word = rng_();
    for (int i = 0; i < 8 && bytes.size() < size; ++i) {
      bytes.push_back(static_cast<std::uint8_t>(word & 0xff));
      word >>= 8;
    }
  }
  SecretBytes secret(bytes);
  std::fill(bytes.begin(), bytes.end(), 0);
  return secret;
}

void Controller::send_changes(const std::string& node, std::vector<ConfigChange> changes,
                              const std::string& policy_id, ReplyCallback on_reply) {
  FrameRecord record;
  record.time = scheduler_.now();
  record.node = node;
  std::vector<std::pair<std::string, std::optional<LedgerItem>>> updates;
  for (const ConfigChange& change : changes) {
    const std::string path = change.path.text();
    record.changes.push_back((change.op == ChangeOp::kMerge ? "merge " : "delete ") + path);
    if (change.op == ChangeOp::kDelete || !change.value) {
      updates.emplace_back(path, std::nullopt);
      continue;
    }
    LedgerItem item{policy_id, {}, {}};
    if (const auto* peer = std::get_if<PeerEntry>(&*change.value)) {
      item.next_hop = peer->peer_id;
    } else if (const auto* route = std::get_if<RealmEntry>(&*change.value)) {
      item.action = std::string(to_string(route->action));
      item.next_hop = route->next_hop.value_or("");
    }
    updates.emplace_back(path, item);
  }
  ++frames_sent_;

  auto finish = [this, node, record, updates = std::move(updates), on_reply](const Frame& reply) mutable {
    const bool ok = reply.type == FrameType::kOk;
    record.outcome = ok ? "ok" : (reply.error ? reply.error->code : std::string(to_string(reply.type)));
    if (ok) {
      auto& items = ledger_[node];
      for (auto& [path, item] : updates) {
        if (item) {
          items[path] = *item;
        } else {
          items.erase(path);
        }
      }
    }
    if (report_) report_->frames.push_back(record);
    on_reply(reply, record);
  };

  Session* session = hub_.session_for(node);
  if (session == nullptr) {
    scheduler_.schedule(0, [finish]() mutable { finish(Frame::failure(0, "NO_SESSION")); });
    return;
  }
  hub_.send(*session, Frame::edit_config(std::move(changes)), std::move(finish));
}

void Controller::establish(const std::string& a, const std::string& b, Security security,
                           std::vector<ConfigChange> extra_a, std::vector<ConfigChange> extra_b,
                           const std::string& policy_id, AdjacencyCallback done) {
  std::vector<ConfigChange> changes_a;
  std::vector<ConfigChange> changes_b;
  std::string fingerprint;
  auto peer_entry = [this](const std::string& counterpart, Transport transport, Credential credential,
                           std::string identity) {
    PeerEntry entry;
    entry.peer_id = counterpart;
    entry.identity = std::move(identity);
    entry.host = topology_.node(counterpart).address;
    entry.port = transport == Transport::kRadiusTls ? kPortRadiusTls : kPortRadiusUdp;
    entry.transport = transport;
    entry.credential = std::move(credential);
    return entry;
  };
  if (security == Security::kPsk) {
    SecretBytes psk = random_secret(32);
    fingerprint = secret_fingerprint(psk);
    changes_a.push_back(ConfigChange::merge(peer_entry(b, Transport::kRadiusUdp, SharedSecret{psk}, b)));
    changes_b.push_back(ConfigChange::merge(peer_entry(a, Transport::kRadiusUdp, SharedSecret{psk}, a)));
    psk.wipe();
  } else {
    auto profile = [this](const std::string& self, const std::string& counterpart) {
      TlsProfile p;
      p.name = tls_name_for(counterpart);
      p.local_identity = identity_of(self);
      p.local_key = random_secret(32);
      p.trusted_identities = {identity_of(counterpart)};
      return p;
    };
    changes_a.push_back(ConfigChange::merge(profile(a, b)));
    changes_a.push_back(ConfigChange::merge(
        peer_entry(b, Transport::kRadiusTls, TlsRef{tls_name_for(b)}, identity_of(b))));
    changes_b.push_back(ConfigChange::merge(profile(b, a)));
    changes_b.push_back(ConfigChange::merge(
        peer_entry(a, Transport::kRadiusTls, TlsRef{tls_name_for(a)}, identity_of(a))));
  }
  for (auto& c : extra_a) changes_a.push_back(std::move(c));
  for (auto& c : extra_b) changes_b.push_back(std::move(c));

  auto paths_of = [](const std::vector<ConfigChange>& changes) {
    std::vector<ConfigPath> paths;
    for (const auto& c : changes) paths.push_back(c.path);
    return paths;
  };
  const std::vector<ConfigPath> paths_a = paths_of(changes_a);
  const std::vector<ConfigPath> paths_b = paths_of(changes_b);

  AdjacencyRecord& slot = adjacency_slot(a, b);
  slot.security = security;

  auto established = [this, a, b, fingerprint, done] {
    AdjacencyRecord& rec = adjacency_slot(a, b);
    rec.status = AdjacencyStatus::kEstablished;
    rec.configured_side.clear();
    rec.fingerprint = fingerprint;
    if (report_) ++report_->adjacencies_established;
    done(true);
  };
  // `ok_side` holds the entries that must be withdrawn again.
  auto failed = [this, a, b, policy_id, done](const std::string& ok_side, std::vector<ConfigPath> installed,
                                              const std::string& code) {
    if (report_) report_->failures.push_back("adjacency " + a + "-" + b + ": " + code);
    record_event("adjacency-failed", Json{{"nodes", Json::array({a, b})}, {"code", code}});
    if (ok_side.empty()) {
      done(false);
      return;
    }
    adjacency_slot(a, b).status = AdjacencyStatus::kHalf;
    adjacency_slot(a, b).configured_side = ok_side;
    record_event("rollback", Json{{"node", ok_side}, {"nodes", Json::array({a, b})}});
    rollback(ok_side, std::move(installed), policy_id, [done] { done(false); });
  };
  auto code_of = [](const Frame& reply) {
    return reply.error ? reply.error->code : std::string(to_string(reply.type));
  };

  if (!options_.parallel_adjacency) {
    auto second = std::make_shared<std::vector<ConfigChange>>(std::move(changes_b));
    send_changes(a, std::move(changes_a), policy_id,
                 [this, a, b, second, paths_a, policy_id, established, failed, code_of](const Frame& reply,
                                                                                       const FrameRecord&) {
                   if (reply.type != FrameType::kOk) {
                     failed("", {}, code_of(reply));
                     return;
                   }
                   AdjacencyRecord& rec = adjacency_slot(a, b);
                   rec.status = AdjacencyStatus::kHalf;
                   rec.configured_side = a;
                   send_changes(b, std::move(*second), policy_id,
                                [a, paths_a, established, failed, code_of](const Frame& reply2, const FrameRecord&) {
                                  if (reply2.type == FrameType::kOk) {
                                    established();
                                  } else {
                                    failed(a, paths_a, code_of(reply2));
                                  }
                                });
                 });
    return;
  }

  struct Pending {
    int replies = 0;
    bool ok_a = false;
    bool ok_b = false;
    std::string code;
  };
  auto state = std::make_shared<Pending>();
  auto settle = [a, b, state, paths_a, paths_b, established, failed] {
    if (++state->replies < 2) return;
    if (state->ok_a && state->ok_b) {
      established();
    } else if (state->ok_a) {
      failed(a, paths_a, state->code);
    } else if (state->ok_b) {
      failed(b, paths_b, state->code);
    } else {
      failed("", {}, state->code);
    }
  };
  send_changes(a, std::move(changes_a), policy_id, [state, settle, code_of](const Frame& reply, const FrameRecord&) {
    state->ok_a = reply.type == FrameType::kOk;
    if (!state->ok_a) state->code = code_of(reply);
    settle();
  });
  send_changes(b, std::move(changes_b), policy_id, [state, settle, code_of](const Frame& reply, const FrameRecord&) {
    state->ok_b = reply.type == FrameType::kOk;
    if (!state->ok_b && state->code.empty()) state->code = code_of(reply);
    settle();
  });
}

void Controller::rollback(const std::string& node, std::vector<ConfigPath> installed, const std::string& policy_id,
                          Done done) {
  std::vector<ConfigChange> deletes;
  for (auto& path : installed) deletes.push_back(ConfigChange::remove(std::move(path)));
  send_changes(node, std::move(deletes), policy_id, [this, node, done](const Frame& reply, const FrameRecord&) {
    if (reply.type == FrameType::kOk) {
      for (auto& [key, rec] : adjacencies_) {
        if (rec.status == AdjacencyStatus::kHalf && rec.configured_side == node) {
          rec.status = AdjacencyStatus::kNone;
          rec.configured_side.clear();
        }
      }
    } else if (report_) {
      report_->failures.push_back("rollback on " + node + " failed: " +
                                  (reply.error ? reply.error->code : std::string("?")));
    }
    done();
  });
}

ConfigChange Controller::local_route_change(const Policy& policy) const {
  RealmEntry entry;
  entry.pattern = policy.pattern;
  entry.action = Action::kLocal;
  return ConfigChange::merge(entry, policy.ttl);
}

void Controller::local_route_step(const Policy& policy, bool force, Done done) {
  const LedgerItem* item = ledger_item(policy.home_node, routing_path(policy.pattern));
  if (!force && item != nullptr && item->action == to_string(Action::kLocal)) {
    done();
    return;
  }
  send_changes(policy.home_node, {local_route_change(policy)}, policy.policy_id,
               [this, done](const Frame& reply, const FrameRecord& record) {
                 if (reply.type == FrameType::kOk) {
                   if (report_) ++report_->routes_installed;
                 } else if (report_) {
                   report_->failures.push_back("local route on " + record.node + ": " + record.outcome);
                 }
                 done();
               });
}

void Controller::route_step(const Policy& policy, const std::string& node, const std::string& next_hop,
                            std::vector<ConfigChange> mirror_extra, bool force, Done done) {
  const std::string path = routing_path(policy.pattern);
  const LedgerItem* current = ledger_item(node, path);
  const AdjacencyRecord* adj = adjacency(node, next_hop);
  const bool adjacency_ready = adj != nullptr && adj->status == AdjacencyStatus::kEstablished &&
                               ledger_has(node, peer_path(next_hop)) && ledger_has(next_hop, peer_path(node));
  const bool route_current = current != nullptr && current->next_hop == next_hop;
  if (!force && route_current && adjacency_ready && mirror_extra.empty()) {
    done();
    return;
  }
  const bool reroute = current != nullptr && !current->next_hop.empty() && current->next_hop != next_hop;

  RealmEntry entry;
  entry.pattern = policy.pattern;
  entry.next_hop = next_hop;
  entry.action = Action::kRelay;
  ConfigChange change = ConfigChange::merge(entry, policy.ttl);

  auto installed = [this, node, next_hop, reroute, pattern = policy.pattern.text()](bool ok) {
    if (!ok) return;
    if (report_) ++report_->routes_installed;
    if (reroute) {
      ++reroutes_;
      if (report_) ++report_->reroutes;
      record_event("reroute", Json{{"node", node}, {"pattern", pattern}, {"next-hop", next_hop}});
    }
  };

  if (!adjacency_ready) {
    establish(node, next_hop, adj != nullptr && adj->status != AdjacencyStatus::kNone ? adj->security : policy.security,
              {change}, std::move(mirror_extra), policy.policy_id, [installed, done](bool ok) {
                installed(ok);
                done();
              });
    return;
  }
  auto extra = std::make_shared<std::vector<ConfigChange>>(std::move(mirror_extra));
  send_changes(node, {change}, policy.policy_id,
               [this, installed, extra, next_hop, policy_id = policy.policy_id, done](const Frame& reply,
                                                                                   const FrameRecord& record) {
                 installed(reply.type == FrameType::kOk);
                 if (reply.type != FrameType::kOk && report_) {
                   report_->failures.push_back("route on " + record.node + ": " + record.outcome);
                 }
                 if (extra->empty()) {
                   done();
                   return;
                 }
                 send_changes(next_hop, std::move(*extra), policy_id,
                              [done](const Frame&, const FrameRecord&) { done(); });
               });
}

void Controller::provision_realm_now(const Policy& policy, Done done) {
  if (report_) report_->policy_id = policy.policy_id;
  const std::string& home = policy.home_node;
  const auto next = compute_next_hops(topology_, home, suspected_);
  const auto dist = distances_to(topology_, home, suspected_);
  if (!dist.contains(home)) {
    if (report_) report_->failures.push_back("home " + home + " unavailable");
    done();
    return;
  }

  std::set<std::string> on_path;
  for (const auto& [id, node] : topology_.nodes()) {
    if (node.role != NodeRole::kClient || id == home) continue;
    if (!next.contains(id)) {
      if (report_) report_->failures.push_back("no path from " + id + " to " + home);
      continue;
    }
    for (std::string cursor = id; cursor != home; cursor = next.at(cursor)) on_path.insert(cursor);
  }
  std::vector<std::string> order(on_path.begin(), on_path.end());
  std::stable_sort(order.begin(), order.end(),
                   [&dist](const std::string& x, const std::string& y) { return dist.at(x) < dist.at(y); });

  auto steps = std::make_shared<std::vector<Step>>();
  steps->push_back([this, policy](Done next_step) { local_route_step(policy, false, std::move(next_step)); });
  for (const auto& id : order) {
    steps->push_back([this, policy, id, hop = next.at(id)](Done next_step) {
      route_step(policy, id, hop, {}, false, std::move(next_step));
    });
  }
  run_chain(steps, 0, std::move(done));
}

void Controller::provision_node_now(const Policy& policy, const std::string& node, bool force, Done done) {
  if (report_ && report_->policy_id.empty()) report_->policy_id = policy.policy_id;
  if (node == policy.home_node) {
    local_route_step(policy, force, std::move(done));
    return;
  }
  const auto next = compute_next_hops(topology_, policy.home_node, suspected_);
  auto it = next.find(node);
  if (it == next.end()) {
    record_event("no-path", Json{{"node", node}, {"home", policy.home_node}});
    done();
    return;
  }
  std::vector<ConfigChange> mirror_extra;
  if (it->second == policy.home_node) {
    const LedgerItem* local = ledger_item(policy.home_node, routing_path(policy.pattern));
    if (local == nullptr || local->action != to_string(Action::kLocal)) {
      mirror_extra.push_back(local_route_change(policy));
    }
  }
  route_step(policy, node, it->second, std::move(mirror_extra), force, std::move(done));
}

// ---------------------------------------------------------------------------
// Queued entry points

void Controller::establish_adjacency(const std::string& node_a, const std::string& node_b, Security security,
                                     AdjacencyCallback done) {
  enqueue([this, node_a, node_b, security, done](Done finish) {
    if (!topology_.has_node(node_a) || !topology_.has_node(node_b) || !topology_.linked(node_a, node_b)) {
      if (report_) report_->failures.push_back("no allowed link " + node_a + "-" + node_b);
      if (done) done(false);
      finish();
      return;
    }
    establish(node_a, node_b, security, {}, {}, "", [done, finish](bool ok) {
      if (done) done(ok);
      finish();
    });
  });
}

void Controller::install_route(const std::string& node, RealmEntry entry, std::optional<LogicalTime> ttl,
                               RouteCallback done) {
  enqueue([this, node, entry = std::move(entry), ttl, done](Done finish) {
    const Policy* owner = nullptr;
    for (const Policy& p : policies_) {
      if (p.pattern == entry.pattern) owner = &p;
    }
    send_changes(node, {ConfigChange::merge(entry, ttl)}, owner ? owner->policy_id : "",
                 [this, done, finish](const Frame& reply, const FrameRecord& record) {
                   if (reply.type == FrameType::kOk) {
                     if (report_) ++report_->routes_installed;
                   } else if (report_) {
                     report_->failures.push_back("route on " + record.node + ": " + record.outcome);
                   }
                   if (done) done(record);
                   finish();
                 });
  });
}

void Controller::provision_realm(const Policy& policy, ReportCallback done) {
  enqueue([this, policy, done](Done finish) {
    provision_realm_now(policy, [this, done, finish] {
      if (done && report_) done(*report_);
      finish();
    });
  });
}

void Controller::provision_all() {
  for (const Policy& policy : policies_) provision_realm(policy);
}

void Controller::withdraw_policy(const std::string& policy_id, ReportCallback done) {
  enqueue([this, policy_id, done](Done finish) {
    auto it = std::find_if(policies_.begin(), policies_.end(),
                           [&](const Policy& p) { return p.policy_id == policy_id; });
    if (it == policies_.end()) {
      if (report_) report_->failures.push_back("unknown policy " + policy_id);
      if (done && report_) done(*report_);
      finish();
      return;
    }
    const std::string path = routing_path(it->pattern);
    policies_.erase(it);
    if (report_) report_->policy_id = policy_id;
    auto steps = std::make_shared<std::vector<Step>>();
    for (const auto& [node, items] : ledger_) {
      auto item = items.find(path);
      if (item == items.end() || item->second.policy_id != policy_id) continue;
      steps->push_back([this, node = node, path, policy_id](Done next_step) {
        send_changes(node, {ConfigChange::remove(ConfigPath::parse(path))}, policy_id,
                     [next_step](const Frame&, const FrameRecord&) { next_step(); });
      });
    }
    run_chain(steps, 0, [this, done, finish] {
      if (done && report_) done(*report_);
      finish();
    });
  });
}

void Controller::on_notification(const Notification& note) {
  enqueue([this, note](Done finish) {
    if (const auto* acquire = std::get_if<AcquireRoute>(&note)) {
      const Policy* policy = policy_for(acquire->realm);
      if (policy == nullptr) {
        record_event("unroutable", Json{{"node", acquire->node_id}, {"realm", acquire->realm.text()}});
        finish();
        return;
      }
      provision_node_now(Policy(*policy), acquire->node_id, true, std::move(finish));
      return;
    }
    if (const auto* expired = std::get_if<RouteExpired>(&note)) {
      ledger_[expired->node_id].erase(routing_path(expired->pattern));
      auto owner = std::find_if(policies_.begin(), policies_.end(),
                                [&](const Policy& p) { return p.pattern == expired->pattern; });
      if (owner == policies_.end()) {
        record_event("removed", Json{{"node", expired->node_id}, {"path", routing_path(expired->pattern)}});
        finish();
        return;
      }
      record_event("renew", Json{{"node", expired->node_id}, {"path", routing_path(expired->pattern)}});
      provision_node_now(Policy(*owner), expired->node_id, false, std::move(finish));
      return;
    }
    if (const auto* expired = std::get_if<PeerExpired>(&note)) {
      ledger_[expired->node_id].erase(peer_path(expired->peer_id));
      if (auto it = adjacencies_.find(ordered(expired->node_id, expired->peer_id)); it != adjacencies_.end()) {
        const bool other_side_holds = ledger_has(expired->peer_id, peer_path(expired->node_id));
        it->second.status = other_side_holds ? AdjacencyStatus::kHalf : AdjacencyStatus::kNone;
        it->second.configured_side = other_side_holds ? expired->peer_id : std::string();
      }
      record_event("removed", Json{{"node", expired->node_id}, {"path", peer_path(expired->peer_id)}});
      finish();
      return;
    }
    const auto& failure = std::get<ForwardFailure>(note);
    suspected_.insert(failure.peer_id);
    record_event("suspect", Json{{"node", failure.peer_id}, {"reported-by", failure.node_id}});
    const Policy* policy = policy_for(failure.realm);
    if (policy == nullptr) {
      finish();
      return;
    }
    Policy copy = *policy;
    const std::string reporter = failure.node_id;
    if (options_.reactive) {
      provision_node_now(copy, reporter, false, std::move(finish));
      return;
    }
    provision_realm_now(copy, [this, copy, reporter, finish] { provision_node_now(copy, reporter, false, finish); });
  });
}

Json Controller::snapshot() const {
  Json out = Json::object();
  Json policies = Json::array();
  for (const Policy& p : policies_) policies.push_back(to_json(p));
  Json adjacencies = Json::array();
  for (const auto& [key, rec] : adjacencies_) {
    Json a = Json::object();
    a["nodes"] = Json::array({rec.node_a, rec.node_b});
    a["status"] = std::string(to_string(rec.status));
    if (rec.status == AdjacencyStatus::kHalf) a["configured"] = rec.configured_side;
    a["security"] = std::string(to_string(rec.security));
    a["fingerprint"] = rec.fingerprint.empty() ? Json(nullptr) : Json(rec.fingerprint);
    adjacencies.push_back(std::move(a));
  }
  Json ledger = Json::object();
  for (const auto& [node, items] : ledger_) {
    Json entries = Json::object();
    for (const auto& [path, item] : items) {
      Json e = Json::object();
      e["policy"] = item.policy_id;
      if (!item.action.empty()) e["action"] = item.action;
      if (!item.next_hop.empty()) e["next-hop"] = item.next_hop;
      entries[path] = std::move(e);
    }
    ledger[node] = std::move(entries);
  }
  out["policies"] = std::move(policies);
  out["adjacencies"] = std::move(adjacencies);
  out["ledger"] = std::move(ledger);
  return out;
}

}  // namespace sdnaaa
