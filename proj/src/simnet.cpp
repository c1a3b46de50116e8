#include "sdnaaa/simnet.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <random>

#include "sdnaaa/error.hpp"

namespace sdnaaa {

namespace {

[[noreturn]] void bad_scenario(const std::string& detail) { throw Error("PARSE_ERROR", detail); }

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad_scenario(std::string("missing '") + key + "'");
  return j.at(key);
}

std::string require_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) bad_scenario(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

LogicalTime require_time(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    bad_scenario(std::string("'") + key + "' must be a non-negative integer");
  }
  return v.get<LogicalTime>();
}

std::string_view event_type_text(Event::Type type) {
  switch (type) {
    case Event::Type::kInject:
      return "inject";
    case Event::Type::kNodeDown:
      return "node-down";
    case Event::Type::kNodeUp:
      return "node-up";
    case Event::Type::kSnapshot:
      return "snapshot";
  }
  return "?";
}

// Uniform double in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) { return rng() % bound; }

std::string node_name(int index) {
  std::string digits = std::to_string(index);
  return "n" + std::string(digits.size() < 2 ? 2 - digits.size() : 0, '0') + digits;
}

}  // namespace

std::string_view to_string(Mode mode) { return mode == Mode::kProactive ? "proactive" : "reactive"; }

std::optional<Mode> mode_from_string(std::string_view text) {
  if (text == "proactive") return Mode::kProactive;
  if (text == "reactive") return Mode::kReactive;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scenario files

Scenario load_scenario(std::string_view text) {
  const Json root = parse_json(text);
  if (!root.is_object()) bad_scenario("scenario must be an object");
  static const std::set<std::string> kKeys = {"seed",   "topology",  "policies",          "mode",
                                              "events", "stop_time", "parallel_adjacency"};
  for (const auto& [key, value] : root.items()) {
    if (!kKeys.contains(key)) bad_scenario("unknown key '" + key + "'");
  }

  Scenario s;
  const Json& seed = require(root, "seed");
  if (!seed.is_number_integer()) bad_scenario("'seed' must be an integer");
  s.seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>() : static_cast<std::uint64_t>(seed.get<std::int64_t>());

  const Json& topology = require(root, "topology");
  const Json& nodes = require(topology, "nodes");
  if (!nodes.is_array()) bad_scenario("'topology.nodes' must be an array");
  for (const Json& n : nodes) {
    TopologyNode node;
    node.id = require_string(n, "id");
    if (!is_valid_token(node.id)) bad_scenario("bad node id '" + node.id + "'");
    node.address = n.contains("address") ? require_string(n, "address") : node.id;
    auto role = role_from_string(require_string(n, "role"));
    if (!role) bad_scenario("bad role for " + node.id);
    node.role = *role;
    if (n.contains("realms")) {
      if (!n["realms"].is_array()) bad_scenario("'realms' must be an array");
      for (const Json& r : n["realms"]) {
        if (!r.is_string()) bad_scenario("realm must be a string");
        try {
          node.served_realms.insert(Realm::parse(r.get<std::string>()));
        } catch (const Error& e) {
          bad_scenario(e.what());
        }
      }
    }
    if (n.contains("state")) {
      const std::string state = require_string(n, "state");
      if (state != "up" && state != "down") bad_scenario("bad state for " + node.id);
      node.state = state == "up" ? NodeState::kUp : NodeState::kDown;
    }
    if (n.contains("users")) {
      if (!n["users"].is_object()) bad_scenario("'users' must be an object");
      for (const auto& [user, password] : n["users"].items()) {
        if (!password.is_string()) bad_scenario("password must be a string");
        s.users[node.id][user] = password.get<std::string>();
      }
    }
    if (n.contains("config")) {
      ConfigDocument doc;
      try {
        doc = document_from_json(n["config"]);
      } catch (const Error& e) {
        bad_scenario(e.what());
      }
      auto violations = validate_document(doc);
      if (!violations.empty()) {
        throw Error("VALIDATION_FAILED", node.id + ": " + violations.front().code + " at " + violations.front().path);
      }
      s.startup[node.id] = std::move(doc);
    }
    try {
      s.topology.add_node(std::move(node));
    } catch (const Error& e) {
      bad_scenario(e.what());
    }
  }
  if (topology.contains("links")) {
    if (!topology["links"].is_array()) bad_scenario("'topology.links' must be an array");
    for (const Json& link : topology["links"]) {
      if (!link.is_array() || link.size() != 2 || !link[0].is_string() || !link[1].is_string()) {
        bad_scenario("link must be a pair of node ids");
      }
      const std::string a = link[0].get<std::string>();
      const std::string b = link[1].get<std::string>();
      if (!s.topology.has_node(a)) throw Error("UNKNOWN_NODE", a);
      if (!s.topology.has_node(b)) throw Error("UNKNOWN_NODE", b);
      s.topology.add_link(a, b);
    }
  }
  try {
    s.topology.assign_homes();
  } catch (const Error& e) {
    bad_scenario(e.what());
  }

  if (root.contains("policies")) {
    const Json& policies = root["policies"];
    if (policies.is_string()) {
      s.policies = parse_policies(policies.get<std::string>(), s.topology);
    } else if (policies.is_array()) {
      for (const Json& line : policies) {
        if (!line.is_string()) bad_scenario("policy must be a string");
        s.policies.push_back(
            parse_policy_line(line.get<std::string>(), s.topology, "p" + std::to_string(s.policies.size() + 1)));
      }
    } else {
      bad_scenario("'policies' must be a string or an array of strings");
    }
  }

  auto mode = mode_from_string(require_string(root, "mode"));
  if (!mode) bad_scenario("'mode' must be proactive or reactive");
  s.mode = *mode;
  s.stop_time = require_time(root, "stop_time");
  if (root.contains("parallel_adjacency")) {
    if (!root["parallel_adjacency"].is_boolean()) bad_scenario("'parallel_adjacency' must be a boolean");
    s.parallel_adjacency = root["parallel_adjacency"].get<bool>();
  }

  const Json& events = require(root, "events");
  if (!events.is_array()) bad_scenario("'events' must be an array");
  for (const Json& e : events) {
    Event event;
    event.time = require_time(e, "time");
    const std::string type = require_string(e, "type");
    if (type == "inject") {
      event.type = Event::Type::kInject;
      event.nai = require_string(e, "nai");
      event.password = e.contains("password") ? require_string(e, "password") : "";
    } else if (type == "node-down") {
      event.type = Event::Type::kNodeDown;
    } else if (type == "node-up") {
      event.type = Event::Type::kNodeUp;
    } else if (type == "snapshot") {
      event.type = Event::Type::kSnapshot;
    } else {
      bad_scenario("unknown event type '" + type + "'");
    }
    if (event.type != Event::Type::kSnapshot) {
      event.node = require_string(e, "node");
      if (!s.topology.has_node(event.node)) throw Error("UNKNOWN_NODE", event.node);
    }
    if (!s.events.empty() && event.time < s.events.back().time) {
      throw Error("UNSORTED_EVENTS", "event at " + std::to_string(event.time) + " follows " +
                                         std::to_string(s.events.back().time));
    }
    s.events.push_back(std::move(event));
  }
  return s;
}

Json scenario_to_json(const Scenario& scenario) {
  Json root = Json::object();
  root["seed"] = scenario.seed;
  Json nodes = Json::array();
  for (const auto& [id, node] : scenario.topology.nodes()) {
    Json n = Json::object();
    n["id"] = id;
    n["address"] = node.address;
    n["role"] = std::string(to_string(node.role));
    Json realms = Json::array();
    for (const Realm& r : node.served_realms) realms.push_back(r.text());
    n["realms"] = std::move(realms);
    n["state"] = node.state == NodeState::kUp ? "up" : "down";
    if (auto users = scenario.users.find(id); users != scenario.users.end()) {
      Json u = Json::object();
      for (const auto& [user, password] : users->second) u[user] = password;
      n["users"] = std::move(u);
    }
    if (auto doc = scenario.startup.find(id); doc != scenario.startup.end()) n["config"] = to_json(doc->second);
    nodes.push_back(std::move(n));
  }
  Json links = Json::array();
  for (const auto& [a, b] : scenario.topology.links()) links.push_back(Json::array({a, b}));
  root["topology"] = Json{{"nodes", std::move(nodes)}, {"links", std::move(links)}};
  Json policies = Json::array();
  for (const Policy& p : scenario.policies) policies.push_back(policy_text(p));
  root["policies"] = std::move(policies);
  root["mode"] = std::string(to_string(scenario.mode));
  Json events = Json::array();
  for (const Event& e : scenario.events) {
    Json j = Json::object();
    j["time"] = e.time;
    j["type"] = std::string(event_type_text(e.type));
    if (e.type != Event::Type::kSnapshot) j["node"] = e.node;
    if (e.type == Event::Type::kInject) {
      j["nai"] = e.nai;
      j["password"] = e.password;
    }
    events.push_back(std::move(j));
  }
  root["events"] = std::move(events);
  root["stop_time"] = scenario.stop_time;
  if (scenario.parallel_adjacency) root["parallel_adjacency"] = true;
  return root;
}

Json Metrics::to_json() const {
  Json j = Json::object();
  j["injected"] = injected;
  j["delivered"] = delivered;
  j["rejected"] = rejected;
  j["errored"] = errored;
  j["pending"] = pending;
  j["hop_counts"] = hop_counts;
  j["frames_sent"] = frames_sent;
  j["notifications"] = notifications;
  j["reroutes"] = reroutes;
  j["dropped_notifications"] = dropped_notifications;
  j["errors_by_code"] = errors_by_code;
  return j;
}

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(const Scenario& scenario) : scenario_(scenario), hub_(*this, transcript_) {
  ControllerOptions options;
  options.seed = scenario.seed;
  options.parallel_adjacency = scenario.parallel_adjacency;
  options.reactive = scenario.mode == Mode::kReactive;

  for (const auto& [id, info] : scenario.topology.nodes()) {
    auto node = std::make_unique<AaaNode>(id, info.address, *this);
    for (const Realm& realm : info.served_realms) node->serve_realm(realm);
    if (auto users = scenario.users.find(id); users != scenario.users.end()) {
      for (const auto& [user, password] : users->second) node->add_user(user, password);
    }
    if (auto doc = scenario.startup.find(id); doc != scenario.startup.end()) node->load_startup_config(doc->second);
    if (info.state == NodeState::kDown) node->crash();
    hub_.register_node(*node, options.controller_id);
    by_address_[info.address] = node.get();
    nodes_.emplace(id, std::move(node));
  }

  controller_ = std::make_unique<Controller>(*this, hub_, scenario.topology, options);
  for (const Policy& policy : scenario.policies) controller_->add_policy(policy);
  hub_.on_notification([this](const Notification& note) { controller_->on_notification(note); });

  for (auto& [id, node] : nodes_) {
    if (node->is_up()) hub_.open_session(options.controller_id, id);
  }
}

void Simulation::schedule(LogicalTime delay, std::function<void()> fn) {
  schedule_at(now_ + std::max<LogicalTime>(delay, 0), std::move(fn));
}

void Simulation::schedule_at(LogicalTime time, std::function<void()> fn) {
  queue_.emplace(std::make_pair(std::max(time, now_), next_seq_++), std::move(fn));
}

void Simulation::transmit(const std::string& from, const std::string& to, std::string wire) {
  Json fields = Json::object();
  fields["to"] = to;
  Json message = parse_json(wire);
  if (message.contains("attributes") && message["attributes"].contains("password")) {
    message["attributes"]["password"] = kRedactedToken;
  }
  fields["message"] = std::move(message);
  transcript_.record(now_, from, "aaa", std::move(fields));
  schedule(1, [this, from, to, wire = std::move(wire)] {
    auto it = nodes_.find(to);
    if (it != nodes_.end()) it->second->receive(from, wire);
  });
}

AaaNode* Simulation::find_by_address(std::string_view address) {
  auto it = by_address_.find(address);
  return it == by_address_.end() ? nullptr : it->second;
}

void Simulation::notify(const std::string& node_id, Notification note) {
  ++metrics_.notifications[std::string(notification_kind(note))];
  hub_.notify(node_id, std::move(note));
}

void Simulation::complete(const std::string& node_id, const AaaMessage& message) {
  auto it = outcomes_.find(message.msg_id);
  if (it == outcomes_.end() || it->second.completed_at) return;
  MessageOutcome& outcome = it->second;
  outcome.completed_at = now_;
  outcome.status = message.status;
  outcome.trace = message.hop_trace;

  Json fields = Json::object();
  fields["msg_id"] = message.msg_id;
  switch (message.status.kind) {
    case MessageStatus::Kind::kAccept:
      ++metrics_.delivered;
      metrics_.hop_counts[message.msg_id] = message.hop_trace.size();
      break;
    case MessageStatus::Kind::kReject:
      ++metrics_.rejected;
      metrics_.hop_counts[message.msg_id] = message.hop_trace.size();
      break;
    case MessageStatus::Kind::kError:
    case MessageStatus::Kind::kPending:
      ++metrics_.errored;
      ++metrics_.errors_by_code[message.status.error_code];
      fields["code"] = message.status.error_code;
      break;
  }
  fields["status"] = message.status.text();
  fields["trace"] = message.hop_trace;
  const bool error = message.status.kind == MessageStatus::Kind::kError;
  transcript_.record(now_, node_id, error ? "error" : "complete", std::move(fields));
}

std::string Simulation::inject(const std::string& node, std::string_view nai, const std::string& password) {
  const std::string msg_id = "m" + std::to_string(next_msg_++);
  ++metrics_.injected;
  MessageOutcome outcome;
  outcome.msg_id = msg_id;
  outcome.origin = node;
  outcome.injected_at = now_;
  outcomes_[msg_id] = outcome;

  Json fields = Json::object();
  fields["msg_id"] = msg_id;
  fields["nai"] = std::string(nai);
  transcript_.record(now_, node, "inject", std::move(fields));

  AaaMessage msg;
  try {
    msg = make_request(msg_id, parse_nai(nai), {{"password", password}});
  } catch (const Error& e) {
    msg.msg_id = msg_id;
    msg.status = MessageStatus::error(e.code());
    complete(node, msg);
    return msg_id;
  }
  auto it = nodes_.find(node);
  if (it == nodes_.end()) {
    msg.status = MessageStatus::error("UNKNOWN_NODE");
    complete(node, msg);
    return msg_id;
  }
  it->second->originate(std::move(msg));
  return msg_id;
}

void Simulation::node_down(const std::string& id) {
  AaaNode& n = node(id);
  if (!n.is_up()) return;
  transcript_.record(now_, id, "node-down");
  for (AaaMessage& lost : n.crash()) {
    lost.status = MessageStatus::error("NODE_DOWN");
    complete(id, lost);
  }
}

void Simulation::node_up(const std::string& id) {
  AaaNode& n = node(id);
  if (n.is_up()) return;
  n.restart();
  transcript_.record(now_, id, "node-up");
  if (hub_.session_for(id) == nullptr) hub_.open_session(controller_->options().controller_id, id);
}

void Simulation::record_snapshot() {
  Json docs = Json::object();
  for (const auto& [id, n] : nodes_) docs[id] = to_json(canonicalize(redact(n->running())));
  Json fields = Json::object();
  fields["controller"] = controller_->snapshot();
  fields["nodes"] = std::move(docs);
  transcript_.record(now_, "sim", "snapshot", std::move(fields));
}

AaaNode& Simulation::node(std::string_view id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("UNKNOWN_NODE", std::string(id));
  return *it->second;
}

std::set<std::pair<std::string, std::string>> Simulation::established_channels() const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [id, n] : nodes_) {
    for (const auto& [peer_id, channel] : n->channels()) {
      if (channel.status != ChannelStatus::kEstablished) continue;
      const PeerEntry* peer = n->running().find_peer(peer_id);
      auto it = peer ? by_address_.find(peer->host) : by_address_.end();
      if (it == by_address_.end()) continue;
      const std::string& other = it->second->id();
      out.insert(id < other ? std::pair{id, other} : std::pair{other, id});
    }
  }
  return out;
}

void Simulation::start() {
  if (scenario_.mode == Mode::kProactive) schedule_at(0, [this] { controller_->provision_all(); });
  for (const Event& event : scenario_.events) {
    schedule_at(event.time, [this, &event] {
      switch (event.type) {
        case Event::Type::kInject:
          inject(event.node, event.nai, event.password);
          break;
        case Event::Type::kNodeDown:
          node_down(event.node);
          break;
        case Event::Type::kNodeUp:
          node_up(event.node);
          break;
        case Event::Type::kSnapshot:
          record_snapshot();
          break;
      }
    });
  }
}

void Simulation::tick_nodes() {
  for (auto& [id, n] : nodes_) {
    for (Notification& note : n->tick(now_)) notify(id, std::move(note));
  }
}

void Simulation::run_until(LogicalTime time) {
  constexpr LogicalTime kNever = std::numeric_limits<LogicalTime>::max();
  while (true) {
    LogicalTime next = queue_.empty() ? kNever : queue_.begin()->first.first;
    for (const auto& [id, n] : nodes_) {
      if (auto deadline = n->next_deadline()) next = std::min(next, *deadline);
    }
    if (next == kNever || next > time) break;
    now_ = std::max(now_, next);
    tick_nodes();
    while (!queue_.empty() && queue_.begin()->first.first <= now_) {
      auto handle = queue_.extract(queue_.begin());
      handle.mapped()();
    }
  }
  now_ = std::max(now_, time);
}

void Simulation::run_until_idle(LogicalTime limit) {
  while (!queue_.empty() && queue_.begin()->first.first <= limit) run_until(queue_.begin()->first.first);
}

Metrics Simulation::metrics() const {
  Metrics m = metrics_;
  m.pending = m.injected - m.delivered - m.rejected - m.errored;
  m.frames_sent = controller_->frames_sent();
  m.reroutes = controller_->reroutes();
  m.dropped_notifications = hub_.dropped_notifications();
  return m;
}

RunResult run(const Scenario& scenario) {
  Simulation sim(scenario);
  sim.start();
  sim.run_until(scenario.stop_time);
  return {sim.metrics(), sim.transcript().text(), sim.outcomes()};
}

// ---------------------------------------------------------------------------
// Random topologies

Topology gen_random_topology(std::uint64_t seed, int n_nodes, double edge_prob) {
  if (n_nodes < 3 || n_nodes > 64) throw Error("BAD_ARGUMENT", "n_nodes must be in [3, 64]");
  if (!(edge_prob > 0.0 && edge_prob <= 1.0)) throw Error("BAD_ARGUMENT", "edge_prob must be in (0, 1]");
  std::mt19937_64 rng(seed);

  const int n_realms = std::max(1, n_nodes / 6);
  const int n_clients = std::max(1, n_nodes / 5);
  std::vector<int> order(n_nodes);
  for (int i = 0; i < n_nodes; ++i) order[i] = i;
  for (int i = n_nodes - 1; i > 0; --i) {
    std::swap(order[i], order[bounded_draw(rng, static_cast<std::uint64_t>(i) + 1)]);
  }

  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<int>> adj(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
      for (int j = i + 1; j < n_nodes; ++j) {
        if (unit_draw(rng) < edge_prob) {
          edges.emplace_back(i, j);
          adj[i].push_back(j);
          adj[j].push_back(i);
        }
      }
    }
    std::vector<bool> seen(n_nodes, false);
    std::deque<int> frontier{0};
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
      int u = frontier.front();
      frontier.pop_front();
      for (int v : adj[u]) {
        if (!seen[v]) {
          seen[v] = true;
          ++reached;
          frontier.push_back(v);
        }
      }
    }
    if (reached != n_nodes) continue;

    Topology topology;
    for (int i = 0; i < n_nodes; ++i) {
      TopologyNode node;
      node.id = node_name(i);
      node.address = node.id + ".sim";
      topology.add_node(std::move(node));
    }
    for (int k = 0; k < n_realms; ++k) {
      TopologyNode& server = topology.node(node_name(order[k]));
      server.role = NodeRole::kServer;
      server.served_realms.insert(Realm::parse("realm" + std::to_string(k + 1) + ".org"));
    }
    for (int k = 0; k < n_clients; ++k) topology.node(node_name(order[n_realms + k])).role = NodeRole::kClient;
    for (auto [i, j] : edges) topology.add_link(node_name(i), node_name(j));
    topology.assign_homes();
    return topology;
  }
  throw Error("GIVE_UP", "no connected graph after 1000 attempts");
}

Scenario random_scenario(const RandomScenarioOptions& options) {
  Scenario s;
  s.seed = options.seed;
  s.topology = gen_random_topology(options.seed, options.n_nodes, options.edge_prob);
  s.mode = options.mode;

  std::vector<std::string> clients;
  std::vector<std::pair<std::string, Realm>> servers;
  for (const auto& [id, node] : s.topology.nodes()) {
    if (node.role == NodeRole::kClient) clients.push_back(id);
  }
  for (const auto& [realm, home] : s.topology.home_of()) servers.emplace_back(home, realm);
  for (std::size_t k = 0; k < servers.size(); ++k) {
    const auto& [home, realm] = servers[k];
    const std::string user = "user" + std::to_string(k + 1);
    s.users[home][user] = "pw";
    Policy policy;
    policy.policy_id = "p" + std::to_string(k + 1);
    policy.pattern = RealmPattern::exact(realm);
    policy.home_node = home;
    policy.security = options.security;
    s.policies.push_back(std::move(policy));
  }
  for (int i = 0; i < options.requests; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) % servers.size();
    const Realm& realm = servers[k].second;
    Event event;
    event.time = options.start + options.spacing * i;
    event.type = Event::Type::kInject;
    event.node = clients[static_cast<std::size_t>(i) % clients.size()];
    event.nai = "user" + std::to_string(k + 1) + "@" + realm.text();
    event.password = "pw";
    s.events.push_back(std::move(event));
  }
  s.stop_time = options.start + options.spacing * options.requests + 6 * kPendingTimeout;
  return s;
}

}  // namespace sdnaaa
