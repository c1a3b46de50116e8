#include <doctest.h>

#include <random>

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

Scenario pair_scenario() {
  return bare_scenario({{"a", NodeRole::kClient, {}, {}}, {"b", NodeRole::kServer, {"realm.org"}, {}}}, {{"a", "b"}});
}

}  // namespace

TEST_CASE("config paths") {
  CHECK(ConfigPath::parse("peers/aj").container == Container::kPeers);
  CHECK(ConfigPath::parse("routing/*.org").text() == "routing/*.org");
  CHECK(error_code_of([] { ConfigPath::parse("bogus/x"); }) == "BAD_PATH");
  CHECK(error_code_of([] { ConfigPath::parse("peers/"); }) == "BAD_PATH");
  CHECK(error_code_of([] { ConfigPath::parse("peers"); }) == "BAD_PATH");
}

TEST_CASE("sessions are exclusive and authorized") {
  Simulation sim(pair_scenario());
  auto& hub = sim.hub();
  REQUIRE(hub.session_for("a") != nullptr);
  CHECK(error_code_of([&] { hub.open_session("controller", "a"); }) == "SESSION_EXISTS");
  hub.close_session("a");
  CHECK(error_code_of([&] { hub.open_session("rogue", "a"); }) == "UNAUTHORIZED");
  CHECK(error_code_of([&] { hub.open_session("controller", "zz"); }) == "UNKNOWN_NODE");
  sim.node_down("a");
  CHECK(error_code_of([&] { hub.open_session("controller", "a"); }) == "NODE_DOWN");
  sim.node_up("a");
  CHECK(hub.session_for("a") != nullptr);
}

TEST_CASE("edit-config applies a combined frame atomically") {
  Simulation sim(pair_scenario());
  auto& hub = sim.hub();
  Session& s = *hub.session_for("a");

  const Frame bad = hub.edit_config(
      s, {ConfigChange::merge(psk_peer("b", "b", secret_of(1))), ConfigChange::merge(relay("realm.org", "ghost"))});
  CHECK(bad.type == FrameType::kError);
  REQUIRE(bad.error);
  CHECK(bad.error->code == "VALIDATION_FAILED");
  CHECK(bad.error->detail.front().code == "DANGLING_NEXT_HOP");
  CHECK(sim.node("a").running() == ConfigDocument{});

  const Frame good = hub.edit_config(
      s, {ConfigChange::merge(psk_peer("b", "b", secret_of(1))), ConfigChange::merge(relay("realm.org", "b"))});
  CHECK(good.type == FrameType::kOk);
  CHECK(good.txn == bad.txn + 1);
  CHECK(sim.node("a").running().peers.size() == 1);
  CHECK(sim.node("a").running().routing.size() == 1);

  const Frame missing = hub.edit_config(s, {ConfigChange::remove(ConfigPath::parse("peers/zz"))});
  CHECK(missing.error->code == "BAD_PATH");

  const Frame referenced = hub.edit_config(s, {ConfigChange::remove(ConfigPath::parse("peers/b"))});
  CHECK(referenced.error->code == "VALIDATION_FAILED");
  CHECK(sim.node("a").running().peers.size() == 1);
}

TEST_CASE("get-config redacts key material") {
  Simulation sim(pair_scenario());
  auto& hub = sim.hub();
  Session& s = *hub.session_for("a");
  const SecretBytes key = secret_of(0xab);
  REQUIRE(hub.edit_config(s, {ConfigChange::merge(psk_peer("b", "b", key))}).type == FrameType::kOk);

  const Frame reply = hub.get_config(s);
  REQUIRE(reply.type == FrameType::kConfig);
  REQUIRE(reply.doc);
  CHECK(std::get<SharedSecret>(reply.doc->peers[0].credential).secret.redacted());
  CHECK(encode_frame(reply).find(key.text()) == std::string::npos);
  CHECK(sim.transcript().text().find(key.text()) == std::string::npos);

  // A redacted secret cannot be written back.
  const Frame echo = hub.edit_config(s, {ConfigChange::merge(reply.doc->peers[0])});
  CHECK(echo.type == FrameType::kError);
}

TEST_CASE("asynchronous requests take one unit each way") {
  Simulation sim(pair_scenario());
  auto& hub = sim.hub();
  Session& s = *hub.session_for("a");
  std::optional<LogicalTime> replied;
  sim.schedule_at(10, [&] {
    hub.send(s, Frame::edit_config({ConfigChange::merge(local("realm.org"))}), [&](const Frame& reply) {
      CHECK(reply.type == FrameType::kOk);
      replied = sim.now();
    });
  });
  sim.run_until(20);
  CHECK(replied == 12);

  const auto lines = parse_lines(sim.transcript().lines());
  std::vector<std::pair<LogicalTime, std::string>> seen;
  for (const auto& l : lines) seen.emplace_back(l["time"].get<LogicalTime>(), l["direction"].get<std::string>());
  CHECK(seen == std::vector<std::pair<LogicalTime, std::string>>{{10, "down"}, {11, "up"}});
}

TEST_CASE("requests to a down node fail") {
  Simulation sim(pair_scenario());
  auto& hub = sim.hub();
  Session& s = *hub.session_for("a");
  std::string code;
  sim.schedule_at(5, [&] {
    sim.node_down("a");
    hub.send(s, Frame::get_config(), [&](const Frame& reply) { code = reply.error ? reply.error->code : "none"; });
  });
  sim.run_until(10);
  CHECK(code == "NODE_DOWN");
}

TEST_CASE("notifications without a session are dropped and counted") {
  Simulation sim(pair_scenario());
  auto& hub = sim.hub();
  hub.close_session("a");
  hub.notify("a", AcquireRoute{"a", Realm::parse("realm.org")});
  CHECK(hub.dropped_notifications() == 1);
  hub.notify("b", AcquireRoute{"b", Realm::parse("realm.org")});
  CHECK(hub.dropped_notifications() == 1);
}

TEST_CASE("frames round-trip through the codec") {
  std::vector<Frame> frames;
  frames.push_back(Frame::edit_config({ConfigChange::merge(psk_peer("b", "b.org", secret_of(2)), 500),
                                       ConfigChange::remove(ConfigPath::parse("routing/*.org"))}));
  frames.back().txn = 7;
  frames.push_back(Frame::ok(7));
  frames.push_back(Frame::failure(8, "VALIDATION_FAILED", {{"DANGLING_NEXT_HOP", "routing/realm.org", "ghost"}}));
  ConfigDocument doc;
  doc.routing.push_back(local("realm.org"));
  frames.push_back(Frame::config(9, doc));
  frames.push_back(Frame::notification(RouteExpired{"aj", RealmPattern::parse("*.org")}));
  frames.push_back(Frame::notification(ForwardFailure{"ai", "aj", Realm::parse("realm.org")}));
  frames.push_back(Frame::notification(PeerExpired{"ai", "aj"}));
  frames.push_back(Frame::notification(AcquireRoute{"ac", Realm::parse("realm.org")}));
  for (const auto& f : frames) {
    const std::string text = encode_frame(f);
    CHECK(decode_frame(text) == f);
    CHECK(encode_frame(decode_frame(text)) == text);
  }
  CHECK(error_code_of([] { decode_frame("{"); }) == "PARSE_ERROR");
  CHECK(error_code_of([] { decode_frame(R"({"type":"nope"})"); }) == "SCHEMA_ERROR");
}

TEST_CASE("redact_frame hides secrets in edit frames") {
  TlsProfile t;
  t.name = "to-b";
  t.local_identity = "a-cert";
  t.local_key = secret_of(0x5c);
  t.trusted_identities = {"b-cert"};
  Frame f = Frame::edit_config({ConfigChange::merge(psk_peer("b", "b", secret_of(0x3d))), ConfigChange::merge(t)});
  const std::string text = encode_frame(redact_frame(f));
  CHECK(text.find(secret_of(0x3d).text()) == std::string::npos);
  CHECK(text.find(secret_of(0x5c).text()) == std::string::npos);
  CHECK(text.find("<redacted>") != std::string::npos);
}

TEST_CASE("stream framing helpers") {
  const std::string stream = length_prefixed("abc") + length_prefixed("") + length_prefixed("hello");
  LengthPrefixedReader reader;
  std::vector<std::string> out;
  for (char c : stream) {
    reader.feed(std::string_view(&c, 1));
    while (auto payload = reader.next()) out.push_back(*payload);
  }
  CHECK(out == std::vector<std::string>{"abc", "", "hello"});

  LineReader lines;
  lines.feed("one\ntw");
  CHECK(lines.next() == "one");
  CHECK_FALSE(lines.next().has_value());
  lines.feed("o\n");
  CHECK(lines.next() == "two");
}

TEST_CASE("failed batches leave the running config untouched") {
  std::mt19937_64 rng(77);
  Simulation sim(pair_scenario());
  AaaNode& node = sim.node("a");
  REQUIRE(node.apply_changes(std::vector<ConfigChange>{ConfigChange::merge(psk_peer("b", "b", secret_of(1))),
                                                       ConfigChange::merge(relay("realm.org", "b"))},
                             0)
              .ok());
  const std::string before = encode_document(node.running());
  int rejected = 0;
  for (int i = 0; i < 300; ++i) {
    std::vector<ConfigChange> batch;
    for (std::size_t k = 0, n = 1 + rng() % 4; k < n; ++k) {
      batch.push_back(ConfigChange::merge(relay("r" + std::to_string(rng() % 5) + ".org", "b")));
    }
    batch.insert(batch.begin() + static_cast<long>(rng() % (batch.size() + 1)),
                 ConfigChange::merge(relay("bad.org", "ghost")));
    const ApplyResult result = node.apply_changes(batch, 0);
    CHECK_FALSE(result.ok());
    rejected += !result.ok();
    CHECK(encode_document(node.running()) == before);
  }
  CHECK(rejected == 300);
}
