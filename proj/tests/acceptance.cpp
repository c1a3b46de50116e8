// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "support.hpp"

using namespace sdnaaa;
using namespace testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool ok = true;
  std::string failure;     // first failed requirement
  std::ostringstream why;  // summary of what was measured

  void require(bool condition, const std::string& what) {
    if (!condition && ok) failure = what;
    ok = ok && condition;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Management frames from the transcript: {time, node, direction, frame}.
struct FrameLine {
  LogicalTime time;
  std::string node;
  std::string direction;
  Json frame;
};

std::vector<FrameLine> frame_lines(const Transcript& transcript) {
  std::vector<FrameLine> out;
  for (const auto& l : parse_lines(transcript.lines())) {
    if (!l.contains("frame")) continue;
    out.push_back({l["time"].get<LogicalTime>(), l["actor"].get<std::string>(), l["direction"].get<std::string>(),
                   l["frame"]});
  }
  return out;
}

bool touches(const Json& frame, const std::string& op, const std::string& path) {
  if (!frame.contains("changes")) return false;
  for (const auto& c : frame["changes"]) {
    if (c["op"] == op && c["path"] == path) return true;
  }
  return false;
}

std::string hex_of(const std::string& raw) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  for (unsigned char c : raw) {
    out += kDigits[c >> 4];
    out += kDigits[c & 15];
  }
  return out;
}

// ---------------------------------------------------------------------------

Verdict roaming_path() {
  Verdict v;
  const auto start = Clock::now();
  Simulation sim(load_fixture("roaming.json"));
  sim.start();
  sim.run_until(1000);
  const double elapsed = seconds_since(start);
  const auto& m1 = sim.outcomes().at("m1");
  v.require(m1.status.kind == MessageStatus::Kind::kAccept, "request not accepted: " + m1.status.text());
  v.require(m1.trace == std::vector<std::string>{"ac", "ai", "aj", "ah"}, "unexpected trace");
  const std::set<std::pair<std::string, std::string>> expected{{"ac", "ai"}, {"ai", "aj"}, {"ah", "aj"}};
  v.require(sim.established_channels() == expected,
            "established channels: " + std::to_string(sim.established_channels().size()));
  v.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
  v.why << "trace ac>ai>aj>ah, " << sim.established_channels().size() << " channels, " << elapsed << " s";
  return v;
}

Verdict adjacency_order() {
  Verdict v;
  for (bool parallel : {false, true}) {
    Scenario s = load_fixture("roaming.json");
    s.parallel_adjacency = parallel;
    Simulation sim(s);
    sim.start();
    sim.run_until(99);
    // The (ai, aj) exchange: frames carrying each side's peer entry and their replies.
    std::vector<std::string> steps;
    std::map<std::pair<std::string, std::uint64_t>, bool> ours;
    for (const auto& f : frame_lines(sim.transcript())) {
      const std::uint64_t txn = f.frame["txn"].get<std::uint64_t>();
      if (f.direction == "down" && f.frame["type"] == "edit-config") {
        const bool is_ai = f.node == "ai" && touches(f.frame, "merge", "peers/aj");
        const bool is_aj = f.node == "aj" && touches(f.frame, "merge", "peers/ai");
        if (is_ai || is_aj) {
          ours[{f.node, txn}] = true;
          steps.push_back("EDIT>" + f.node);
        }
      } else if (f.direction == "up" && f.frame["type"] == "ok" && ours.contains({f.node, txn})) {
        steps.push_back("OK<" + f.node);
      }
    }
    std::string seen;
    for (const auto& s : steps) seen += s + " ";
    if (!parallel) {
      v.require(steps == std::vector<std::string>{"EDIT>ai", "OK<ai", "EDIT>aj", "OK<aj"}, "sequential: " + seen);
      v.why << "sequential [" << seen << "] ";
    } else {
      const bool shape = steps.size() == 4 && steps[0].starts_with("EDIT") && steps[1].starts_with("EDIT") &&
                         steps[2].starts_with("OK") && steps[3].starts_with("OK");
      v.require(shape, "parallel: " + seen);
      v.why << "parallel [" << seen << "]";
    }
  }
  return v;
}

Verdict rollback() {
  Verdict v;
  Scenario s = load_fixture("roaming.json");
  s.policies.clear();
  s.events.clear();
  Simulation sim(s);
  sim.start();
  std::optional<bool> established;
  // Step 1 leaves at 10, step 2 (ai's OK) is logged at 11, step 3 would leave at 12.
  sim.schedule_at(10, [&] {
    sim.controller().establish_adjacency("ai", "aj", Security::kPsk, [&](bool ok) { established = ok; });
  });
  sim.schedule_at(11, [&] { sim.node_down("aj"); });
  sim.run_until(100);
  v.require(established.has_value() && !*established, "adjacency did not fail");

  bool delete_to_ai = false;
  for (const auto& f : frame_lines(sim.transcript())) {
    if (f.node == "ai" && f.direction == "down" && touches(f.frame, "delete", "peers/aj")) delete_to_ai = true;
  }
  v.require(delete_to_ai, "no DELETE sent to ai");
  const Frame reply = sim.hub().get_config(*sim.hub().session_for("ai"));
  v.require(reply.doc.has_value() && reply.doc->find_peer("aj") == nullptr, "ai still holds an aj peer");
  v.require(sim.controller().adjacency("ai", "aj")->status == AdjacencyStatus::kNone, "adjacency record not cleared");
  v.why << "DELETE peers/aj sent to ai, get_config(ai) has " << reply.doc.value_or(ConfigDocument{}).peers.size()
        << " peers";
  return v;
}

Verdict reactive_acquire() {
  Verdict v;
  Scenario s = load_fixture("roaming.json");
  s.mode = Mode::kReactive;
  Simulation sim(s);
  sim.start();
  sim.run_until(s.stop_time);
  const auto& m1 = sim.outcomes().at("m1");
  v.require(m1.status.kind == MessageStatus::Kind::kAccept, "not delivered: " + m1.status.text());

  const auto frames = frame_lines(sim.transcript());
  std::map<std::pair<std::string, std::string>, int> acquires;
  std::vector<std::pair<std::string, LogicalTime>> order;
  for (const auto& f : frames) {
    if (f.frame["type"] != "notification" || f.frame["note"]["kind"] != "acquire-route") continue;
    ++acquires[{f.node, f.frame["note"]["realm"].get<std::string>()}];
    order.emplace_back(f.node, f.time);
  }
  v.require(order.size() == 3, "acquire count " + std::to_string(order.size()));
  for (const auto& [key, count] : acquires) v.require(count == 1, key.first + " asked " + std::to_string(count) + "x");

  // Path nodes lacking routes before the request: everyone but the home node.
  std::set<std::string> askers;
  for (const auto& [node, t] : order) askers.insert(node);
  v.require(askers == std::set<std::string>{"ac", "ai", "aj"}, "unexpected askers");

  for (const auto& [node, t] : order) {
    int answers = 0;
    bool combined = false;
    for (const auto& f : frames) {
      if (f.node != node || f.direction != "down" || f.frame["type"] != "edit-config" || f.time < t) continue;
      ++answers;
      bool peer = false, route = false;
      for (const auto& c : f.frame["changes"]) {
        const std::string path = c["path"];
        peer = peer || (c["op"] == "merge" && path.starts_with("peers/"));
        route = route || (c["op"] == "merge" && path == "routing/realm.org");
      }
      combined = peer && route;
    }
    v.require(answers == 1 && combined, node + ": " + std::to_string(answers) + " answering frames");
  }
  v.why << order.size() << " acquire-route, each answered by one peer+route frame; delivered";
  return v;
}

Verdict oracle_equivalence() {
  Verdict v;
  const auto start = Clock::now();
  const double probs[] = {0.3, 0.5, 0.8};
  std::size_t delivered = 0, checked = 0, injected = 0;
  for (int i = 0; i < 100; ++i) {
    RandomScenarioOptions options;
    options.seed = 1000 + static_cast<std::uint64_t>(i);
    options.n_nodes = 3 + i % 10;
    options.edge_prob = probs[i % 3];
    options.requests = 12;
    const Scenario s = random_scenario(options);
    std::set<std::string> ids;
    for (const auto& [id, n] : s.topology.nodes()) ids.insert(id);
    const RunResult result = run(s);
    injected += result.metrics.injected;
    for (const auto& [msg_id, outcome] : result.outcomes) {
      if (outcome.status.kind != MessageStatus::Kind::kAccept) continue;
      ++delivered;
      // Every event is an injection, so m<k> is the k-th event.
      const Event& e = s.events.at(std::stoul(msg_id.substr(1)) - 1);
      const std::string& home = s.topology.home_of().at(parse_nai(e.nai).realm);
      const auto dist = oracle_distances(s.topology.links(), ids, home);
      ++checked;
      if (outcome.trace.size() != 1 + static_cast<std::size_t>(dist.at(outcome.origin))) {
        v.require(false, "seed " + std::to_string(options.seed) + " " + msg_id + ": " +
                             std::to_string(outcome.trace.size()) + " hops vs " +
                             std::to_string(1 + dist.at(outcome.origin)));
      }
    }
  }
  const double elapsed = seconds_since(start);
  v.require(delivered > 0, "nothing delivered");
  v.require(elapsed < 30.0, "took " + std::to_string(elapsed) + " s");
  v.why << checked << "/" << injected << " delivered requests match, " << elapsed << " s";
  return v;
}

Verdict failure_recovery() {
  Verdict v;
  Simulation sim(load_fixture("diamond.json"));
  sim.start();
  sim.run_until(299);
  v.require(sim.outcomes().at("m1").trace == std::vector<std::string>{"a", "b", "d"}, "initial path is not via b");
  sim.run_until(100000);
  const Metrics m = sim.metrics();
  int via_c = 0;
  for (int i = 2; i <= 11; ++i) {
    const auto& o = sim.outcomes().at("m" + std::to_string(i));
    if (o.status.kind == MessageStatus::Kind::kAccept && o.trace == std::vector<std::string>{"a", "c", "d"}) ++via_c;
  }
  const auto failures = m.notifications.contains("forward-failure") ? m.notifications.at("forward-failure") : 0;
  v.require(failures >= 1, "no forward-failure");
  v.require(m.reroutes >= 1, "no reroute");
  v.require(via_c == 10, std::to_string(via_c) + "/10 delivered via c");
  v.why << failures << " forward-failure, " << m.reroutes << " reroute(s), " << via_c << "/10 delivered via c";
  return v;
}

Verdict secret_hygiene() {
  Verdict v;
  std::size_t secrets = 0, config_frames = 0;
  for (const char* name : {"roaming.json", "diamond.json"}) {
    Simulation sim(load_fixture(name));
    sim.start();
    sim.run_until(1000);
    for (const auto& [id, n] : sim.controller().topology().nodes()) {
      if (Session* session = sim.hub().session_for(id)) sim.hub().get_config(*session);
    }
    std::vector<std::string> needles;
    for (const auto& [id, n] : sim.controller().topology().nodes()) {
      for (const auto& p : sim.node(id).running().peers) {
        if (const auto* shared = std::get_if<SharedSecret>(&p.credential)) {
          const auto& bytes = shared->secret.bytes();
          needles.emplace_back(bytes.begin(), bytes.end());
        }
      }
    }
    secrets += needles.size();
    v.require(!needles.empty(), std::string(name) + ": no secrets installed");

    std::vector<std::string> haystacks;
    for (const auto& f : frame_lines(sim.transcript())) {
      if (f.frame["type"] == "config") ++config_frames;
      haystacks.push_back(f.frame.dump());
    }
    for (const auto& [id, n] : sim.controller().topology().nodes()) {
      if (Session* session = sim.hub().session_for(id)) {
        for (const auto& e : session->transcript) haystacks.push_back(e.frame);
      }
    }
    haystacks.push_back(sim.controller().snapshot().dump());
    haystacks.push_back(sim.transcript().text());
    for (const auto& needle : needles) {
      const std::string hex = hex_of(needle);
      for (const auto& hay : haystacks) {
        if (hay.find(needle) != std::string::npos || hay.find(hex) != std::string::npos) {
          v.require(false, std::string(name) + ": secret bytes leaked");
        }
      }
    }
  }
  v.require(config_frames > 0, "no CONFIG frames scanned");
  v.why << secrets << " secrets, " << config_frames << " CONFIG frames and the controller snapshot scanned";
  return v;
}

Verdict route_expiry() {
  Verdict v;
  Scenario s = load_fixture("roaming.json");
  s.policies = parse_policies("route realm.org via ah security psk ttl 500", s.topology);
  s.events.clear();
  Simulation sim(s);
  sim.start();
  sim.run_until(100);

  const RealmPattern pattern = RealmPattern::parse("realm.org");
  std::map<std::string, LogicalTime> expires;
  for (const std::string id : {"ac", "ai", "aj", "ah"}) {
    const RealmEntry* route = sim.node(id).running().find_route(pattern);
    v.require(route != nullptr && route->expiration.has_value(), id + " has no expiring route");
    if (route && route->expiration) expires[id] = *route->expiration;
  }
  if (!v.ok) return v;

  const LogicalTime t_ac = expires.at("ac");
  std::string during, after;
  sim.schedule_at(t_ac, [&] { during = sim.inject("ac", "alice@realm.org", "wonderland"); });
  std::map<std::string, LogicalTime> restored;
  LogicalTime last = 0;
  for (const auto& [id, t] : expires) last = std::max(last, t);
  for (LogicalTime t = 101; t <= last + 20; ++t) {
    sim.run_until(t);
    for (const auto& [id, expiry] : expires) {
      const RealmEntry* route = sim.node(id).running().find_route(pattern);
      if (t >= expiry && !restored.contains(id) && route && route->expiration && *route->expiration > expiry) {
        restored[id] = t;
      }
    }
  }
  sim.schedule_at(t_ac + 10, [&] { after = sim.inject("ac", "alice@realm.org", "wonderland"); });
  sim.run_until(t_ac + 60);

  std::map<std::string, std::vector<LogicalTime>> notes;
  for (const auto& f : frame_lines(sim.transcript())) {
    if (f.frame["type"] == "notification" && f.frame["note"]["kind"] == "route-expired") {
      notes[f.node].push_back(f.time);
    }
  }
  for (const auto& [id, expiry] : expires) {
    std::vector<LogicalTime> in_life;
    for (LogicalTime t : notes[id]) {
      if (t > expiry - 500 && t <= expiry) in_life.push_back(t);
    }
    v.require(in_life == std::vector<LogicalTime>{expiry}, id + ": route-expired not exactly once at creation+500");
    v.require(restored.contains(id) && restored[id] - expiry <= 10, id + ": route not restored within 10");
  }
  const auto& o_after = sim.outcomes().at(after);
  const auto& o_during = sim.outcomes().at(during);
  v.require(o_after.status.kind == MessageStatus::Kind::kAccept, "request after renewal: " + o_after.status.text());
  v.require(o_during.status.kind == MessageStatus::Kind::kAccept, "request during renewal: " + o_during.status.text());
  LogicalTime worst = 0;
  for (const auto& [id, t] : restored) worst = std::max(worst, t - expires[id]);
  v.why << "one route-expired per node at creation+500, routes back within " << worst << " units, delivered";
  return v;
}

// One invalid change per batch; the rest are valid on their own.
ConfigChange valid_change(std::mt19937_64& rng, const ConfigDocument& doc, int i) {
  const std::string tag = std::to_string(i);
  switch (rng() % 4) {
    case 0: {
      RealmEntry e = relay("r" + tag + ".org", doc.peers[rng() % doc.peers.size()].peer_id);
      return ConfigChange::merge(e);
    }
    case 1:
      return ConfigChange::merge(psk_peer("x" + tag, "x" + tag + ".net", secret_of(static_cast<std::uint8_t>(i))));
    case 2:
      return ConfigChange::merge(AttributeRule{"rule" + tag, RuleDirection::kOutgoing, RuleOp::kAdd, "a" + tag, "v"});
    default:
      return ConfigChange::merge(local("l" + tag + ".org"));
  }
}

ConfigChange invalid_change(std::mt19937_64& rng, const ConfigDocument& doc, int i) {
  const std::string tag = std::to_string(i);
  switch (rng() % 6) {
    case 0:
      return ConfigChange::merge(relay("g" + tag + ".org", "ghost"));
    case 1:
      return ConfigChange::remove(ConfigPath::parse("routing/absent" + tag + ".org"));
    case 2:
      return ConfigChange::merge(psk_peer("short" + tag, "s.net", secret_of(1, 8)));
    case 3: {
      RealmEntry e = relay("k" + tag + ".org", doc.peers.front().peer_id);
      e.rule_refs = {"nope"};
      return ConfigChange::merge(e);
    }
    case 4: {
      const RealmEntry& used = doc.routing.front();
      return ConfigChange::remove(ConfigPath{Container::kPeers, *used.next_hop});
    }
    default:
      return ConfigChange::merge(local("t" + tag + ".org"), 0);
  }
}

Verdict atomicity_fuzz() {
  Verdict v;
  Simulation sim(load_fixture("roaming.json"));
  sim.start();
  sim.run_until(99);
  std::mt19937_64 rng(20240611);
  const std::vector<std::string> nodes{"ac", "ai", "aj"};
  int rejected = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string& id = nodes[rng() % nodes.size()];
    const ConfigDocument& doc = sim.node(id).running();
    const std::string before = encode_document(doc);
    std::vector<ConfigChange> batch;
    for (std::size_t k = 0, n = rng() % 5; k < n; ++k) batch.push_back(valid_change(rng, doc, i * 10 + static_cast<int>(k)));
    batch.insert(batch.begin() + static_cast<long>(rng() % (batch.size() + 1)), invalid_change(rng, doc, i));
    const Frame reply = sim.hub().edit_config(*sim.hub().session_for(id), batch);
    if (reply.type == FrameType::kError) ++rejected;
    if (encode_document(sim.node(id).running()) != before) {
      v.require(false, "batch " + std::to_string(i) + " on " + id + " changed the config");
    }
  }
  v.require(rejected == 1000, std::to_string(rejected) + "/1000 rejected");
  v.why << rejected << "/1000 batches rejected, configs byte-identical";
  return v;
}

Verdict determinism() {
  Verdict v;
  std::vector<Scenario> scenarios;
  for (const char* name : {"roaming.json", "diamond.json", "agents.json", "loop.json"}) {
    scenarios.push_back(load_fixture(name));
  }
  Scenario reactive = load_fixture("roaming.json");
  reactive.mode = Mode::kReactive;
  scenarios.push_back(reactive);
  for (std::uint64_t seed : {3u, 17u, 99u}) {
    RandomScenarioOptions options;
    options.seed = seed;
    options.n_nodes = 12;
    options.requests = 50;
    options.security = seed == 17 ? Security::kTls : Security::kPsk;
    scenarios.push_back(random_scenario(options));
  }
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const RunResult a = run(scenarios[i]);
    const RunResult b = run(scenarios[i]);
    v.require(a.transcript == b.transcript, "scenario " + std::to_string(i) + ": transcripts differ");
    v.require(a.metrics.to_json().dump() == b.metrics.to_json().dump(),
              "scenario " + std::to_string(i) + ": metrics differ");
  }
  v.why << scenarios.size() << " scenarios, byte-identical transcripts and metrics";
  return v;
}

Verdict throughput() {
  Verdict v;
  RandomScenarioOptions options;
  options.seed = 2020;
  options.n_nodes = 20;
  options.requests = 10000;
  options.spacing = 1;
  const Scenario s = random_scenario(options);
  const auto start = Clock::now();
  const RunResult result = run(s);
  const double elapsed = seconds_since(start);
  v.require(result.metrics.injected == 10000, "injected " + std::to_string(result.metrics.injected));
  v.require(result.metrics.pending == 0, std::to_string(result.metrics.pending) + " still pending");
  v.require(elapsed < 10.0, "took " + std::to_string(elapsed) + " s");
  v.why << result.metrics.delivered << " delivered in " << elapsed << " s";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Verdict (*)()>> criteria{
      {"roaming request crosses three channels", roaming_path},
      {"adjacency exchange ordering", adjacency_order},
      {"half-configured adjacency rollback", rollback},
      {"reactive route acquisition", reactive_acquire},
      {"hop counts match shortest paths", oracle_equivalence},
      {"recovery after agent failure", failure_recovery},
      {"no key material in frames or snapshot", secret_hygiene},
      {"route expiry and renewal", route_expiry},
      {"edit-config atomicity fuzz", atomicity_fuzz},
      {"deterministic replay", determinism},
      {"throughput, 20 nodes / 10k requests", throughput},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.ok = false;
      v.failure = std::string("exception: ") + e.what();
    }
    std::printf("%s %2zu %s: %s\n", v.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), (v.ok ? v.why.str() : v.failure).c_str());
    failed += !v.ok;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
