#include <doctest.h>

#include "support.hpp"

using namespace sdnaaa;
using namespace testing;

namespace {

std::string error_code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

std::vector<Json> events_of_kind(const Controller& c, const std::string& kind) {
  std::vector<Json> out;
  for (const auto& e : c.events()) {
    if (e["kind"] == kind) out.push_back(e);
  }
  return out;
}

std::size_t frames_in_reports(const Controller& c) {
  std::size_t n = 0;
  for (const auto& r : c.reports()) n += r.frames.size();
  return n;
}

}  // namespace

TEST_CASE("topology rejects malformed input") {
  Topology t;
  t.add_node({"a", "a", NodeRole::kClient, {}, NodeState::kUp});
  t.add_node({"b", "b", NodeRole::kServer, {Realm::parse("realm.org")}, NodeState::kUp});
  t.add_node({"c", "c", NodeRole::kServer, {Realm::parse("realm.org")}, NodeState::kUp});
  CHECK(error_code_of([&] { t.add_node({"a", "a", NodeRole::kAgent, {}, NodeState::kUp}); }) == "DUPLICATE_NODE");
  CHECK(error_code_of([&] { t.add_link("a", "zz"); }) == "UNKNOWN_NODE");
  CHECK(error_code_of([&] { t.add_link("a", "a"); }) == "BAD_LINK");
  CHECK(error_code_of([&] { t.assign_homes(); }) == "DUPLICATE_HOME");
  t.add_link("b", "a");
  CHECK(t.linked("a", "b"));
  CHECK(t.links().contains({"a", "b"}));
}

TEST_CASE("policy lines") {
  const Scenario s = load_fixture("roaming.json");
  const auto policies = parse_policies(
      "# roaming\n"
      "route realm.org via ah security psk\n"
      "\n"
      "route *.org via ah security tls ttl 500  # short-lived\n",
      s.topology);
  REQUIRE(policies.size() == 2);
  CHECK(policies[0].policy_id == "p1");
  CHECK(policies[0].pattern.text() == "realm.org");
  CHECK(policies[0].security == Security::kPsk);
  CHECK_FALSE(policies[0].ttl.has_value());
  CHECK(policies[1].policy_id == "p2");
  CHECK(policies[1].security == Security::kTls);
  CHECK(policies[1].ttl == 500);
  CHECK(policy_text(policies[1]) == "route *.org via ah security tls ttl 500");

  CHECK(error_code_of([&] { parse_policies("route realm.org via nowhere security psk", s.topology); }) ==
        "UNKNOWN_HOME_NODE");
  for (const char* bad : {"route realm.org via ah", "route realm.org via ah security rot13",
                          "route realm.org via ah security psk ttl", "route realm.org via ah security psk ttl -5",
                          "route realm.org via ah security psk ttl 0", "send realm.org via ah security psk",
                          "route re*lm.org via ah security psk", "route realm.org by ah security psk"}) {
    CHECK_MESSAGE(error_code_of([&] { parse_policies(bad, s.topology); }) == "PARSE_ERROR", bad);
  }
}

TEST_CASE("roaming chain next hops") {
  const Scenario s = load_fixture("roaming.json");
  const auto hops = compute_next_hops(s.topology, "ah");
  CHECK(hops == std::map<std::string, std::string>{{"ac", "ai"}, {"ai", "aj"}, {"aj", "ah"}, {"at", "ai"}});
  const auto dist = distances_to(s.topology, "ah");
  CHECK(dist.at("ac") == 3);
  CHECK(dist.at("at") == 3);
  CHECK(dist.at("ah") == 0);
}

TEST_CASE("diamond next hops follow a shortest path and break ties by id") {
  const Scenario s = load_fixture("diamond.json");
  const auto paths = all_simple_paths(s.topology, "a", "d");
  std::size_t shortest = SIZE_MAX;
  for (const auto& p : paths) shortest = std::min(shortest, p.size());
  std::set<std::string> first_hops;
  for (const auto& p : paths) {
    if (p.size() == shortest) first_hops.insert(p[1]);
  }
  CHECK(first_hops == std::set<std::string>{"b", "c"});
  CHECK(compute_next_hops(s.topology, "d").at("a") == *first_hops.begin());
  CHECK(compute_next_hops(s.topology, "d", {"b"}).at("a") == "c");
  CHECK_FALSE(compute_next_hops(s.topology, "d", {"b", "c"}).contains("a"));
}

TEST_CASE("next hops are optimal on random topologies") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const double p = seed % 3 == 0 ? 0.3 : seed % 3 == 1 ? 0.5 : 0.8;
    const Topology topo = gen_random_topology(seed, 3 + static_cast<int>(seed % 10), p);
    std::set<std::string> ids;
    for (const auto& [id, n] : topo.nodes()) ids.insert(id);
    for (const auto& [realm, home] : topo.home_of()) {
      const auto oracle = oracle_distances(topo.links(), ids, home);
      CHECK(distances_to(topo, home) == oracle);
      const auto hops = compute_next_hops(topo, home);
      for (const auto& [node, next] : hops) {
        CHECK(topo.linked(node, next));
        CHECK(oracle.at(next) == oracle.at(node) - 1);
        for (const auto& nb : topo.neighbors(node)) {
          if (nb < next) CHECK(oracle.at(nb) != oracle.at(node) - 1);
        }
      }
      CHECK(hops.size() == ids.size() - 1);
    }
  }
}

TEST_CASE("proactive provisioning installs the client path only") {
  Simulation sim(load_fixture("roaming.json"));
  sim.start();
  sim.run_until(99);
  Controller& c = sim.controller();
  CHECK(c.idle());
  REQUIRE(c.reports().size() == 1);
  CHECK(c.reports()[0].ok());
  CHECK(c.reports()[0].adjacencies_established == 3);
  CHECK(c.frames_sent() == 7);
  CHECK(sim.node("at").running() == ConfigDocument{});
  for (const auto& [a, b] : {std::pair{"ac", "ai"}, std::pair{"ai", "aj"}, std::pair{"aj", "ah"}}) {
    const AdjacencyRecord* rec = c.adjacency(a, b);
    REQUIRE(rec != nullptr);
    CHECK(rec->status == AdjacencyStatus::kEstablished);
    CHECK(rec->fingerprint.starts_with("sha256:"));
    CHECK(rec->fingerprint.size() == 7 + 64);
  }
  CHECK(c.ledger().at("ai").at("routing/realm.org").next_hop == "aj");
  CHECK(c.ledger().at("ah").at("routing/realm.org").action == "local");
}

TEST_CASE("re-provisioning a converged realm sends nothing") {
  Simulation sim(load_fixture("roaming.json"));
  sim.start();
  sim.run_until(99);
  Controller& c = sim.controller();
  const auto sent = c.frames_sent();
  std::optional<ProvisionReport> report;
  c.provision_realm(c.policies().front(), [&](const ProvisionReport& r) { report = r; });
  sim.run_until(200);
  REQUIRE(report);
  CHECK(report->ok());
  CHECK(report->frames.empty());
  CHECK(c.frames_sent() == sent);
}

TEST_CASE("forced reprovision on an established adjacency is a route-only frame") {
  Simulation sim(load_fixture("roaming.json"));
  sim.start();
  sim.run_until(99);
  Controller& c = sim.controller();
  const auto before = frames_in_reports(c);
  c.on_notification(AcquireRoute{"ai", Realm::parse("realm.org")});
  sim.run_until(200);
  REQUIRE(frames_in_reports(c) == before + 1);
  const FrameRecord& f = c.reports().back().frames.back();
  CHECK(f.node == "ai");
  CHECK(f.changes == std::vector<std::string>{"merge routing/realm.org"});
  CHECK(f.outcome == "ok");
}

TEST_CASE("unroutable realms are logged without frames") {
  Simulation sim(load_fixture("roaming.json"));
  sim.start();
  sim.run_until(99);
  Controller& c = sim.controller();
  const auto sent = c.frames_sent();
  c.on_notification(AcquireRoute{"ac", Realm::parse("nowhere.net")});
  sim.run_until(200);
  CHECK(c.frames_sent() == sent);
  const auto events = events_of_kind(c, "unroutable");
  REQUIRE(events.size() == 1);
  CHECK(events[0]["realm"] == "nowhere.net");
}

TEST_CASE("half-configured adjacency is rolled back") {
  for (bool parallel : {false, true}) {
    CAPTURE(parallel);
    Scenario s = load_fixture("roaming.json");
    s.policies.clear();
    s.parallel_adjacency = parallel;
    Simulation sim(s);
    sim.start();
    sim.node_down("aj");
    std::optional<bool> result;
    sim.controller().establish_adjacency("ai", "aj", Security::kPsk, [&](bool ok) { result = ok; });
    sim.run_until(100);
    REQUIRE(result.has_value());
    CHECK_FALSE(*result);
    CHECK(sim.node("ai").running().peers.empty());
    CHECK(sim.controller().adjacency("ai", "aj")->status == AdjacencyStatus::kNone);
    CHECK(events_of_kind(sim.controller(), "rollback").size() == 1);
    const auto& ledger = sim.controller().ledger();
    CHECK((!ledger.contains("ai") || ledger.at("ai").empty()));
  }
}

TEST_CASE("tls adjacencies carry profiles, never key bytes, in the snapshot") {
  Scenario s = load_fixture("roaming.json");
  s.policies = parse_policies("route realm.org via ah security tls", s.topology);
  Simulation sim(s);
  sim.start();
  sim.run_until(1000);
  CHECK(sim.metrics().delivered == 1);
  const ConfigDocument& ai = sim.node("ai").running();
  REQUIRE(ai.find_tls("to-aj") != nullptr);
  CHECK(ai.find_tls("to-aj")->local_identity == "ai-cert");
  CHECK(ai.find_peer("aj")->port == 2083);
  const std::string snapshot = sim.controller().snapshot().dump();
  for (const auto& [id, n] : sim.controller().topology().nodes()) {
    for (const auto& hex : secret_hex(sim.node(id).running())) CHECK(snapshot.find(hex) == std::string::npos);
  }
}

TEST_CASE("withdrawing a policy deletes its routes") {
  Simulation sim(load_fixture("roaming.json"));
  sim.start();
  sim.run_until(99);
  Controller& c = sim.controller();
  std::optional<ProvisionReport> report;
  c.withdraw_policy("p1", [&](const ProvisionReport& r) { report = r; });
  sim.run_until(200);
  REQUIRE(report);
  CHECK(report->frames.size() == 4);
  for (const std::string id : {"ac", "ai", "aj", "ah"}) CHECK(sim.node(id).running().routing.empty());
  CHECK(c.policies().empty());
  std::string id;
  sim.schedule_at(300, [&] { id = sim.inject("ac", "alice@realm.org", "wonderland"); });
  sim.run_until(400);
  CHECK(sim.controller().events().back()["kind"] == "unroutable");
}

TEST_CASE("fingerprints") {
  CHECK(secret_fingerprint(SecretBytes(std::vector<std::uint8_t>{})) ==
        "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(secret_fingerprint(SecretBytes(std::vector<std::uint8_t>{'a', 'b', 'c'})) ==
        "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
