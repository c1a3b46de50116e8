#pragma once

// Shared helpers for the test suites: fixture loading, entity builders and
// independent oracles.

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sdnaaa/controller.hpp"
#include "sdnaaa/model.hpp"
#include "sdnaaa/model_json.hpp"
#include "sdnaaa/simnet.hpp"
#include "sdnaaa/southbound.hpp"

namespace testing {

using namespace sdnaaa;

inline std::string fixture_path(const std::string& name) { return std::string(SDNAAA_FIXTURE_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline Scenario load_fixture(const std::string& name) { return load_scenario(read_text(fixture_path(name))); }

inline SecretBytes secret_of(std::uint8_t fill, std::size_t size = 32) {
  return SecretBytes(std::vector<std::uint8_t>(size, fill));
}

inline PeerEntry psk_peer(const std::string& id, const std::string& host, const SecretBytes& secret) {
  PeerEntry p;
  p.peer_id = id;
  p.identity = id;
  p.host = host;
  p.port = 1812;
  p.transport = Transport::kRadiusUdp;
  p.credential = SharedSecret{secret};
  return p;
}

inline RealmEntry relay(const std::string& pattern, const std::string& next_hop) {
  RealmEntry e;
  e.pattern = RealmPattern::parse(pattern);
  e.next_hop = next_hop;
  e.action = Action::kRelay;
  return e;
}

inline RealmEntry local(const std::string& pattern) {
  RealmEntry e;
  e.pattern = RealmPattern::parse(pattern);
  e.action = Action::kLocal;
  return e;
}

/// Lowercase hex of every secret in the document (PSKs and TLS keys).
inline std::vector<std::string> secret_hex(const ConfigDocument& doc) {
  std::vector<std::string> out;
  for (const auto& p : doc.peers) {
    if (const auto* s = std::get_if<SharedSecret>(&p.credential); s && !s->secret.redacted()) {
      out.push_back(s->secret.text());
    }
  }
  for (const auto& t : doc.tls) {
    if (!t.local_key.redacted()) out.push_back(t.local_key.text());
  }
  return out;
}

/// Scenario with the given nodes (id, role, realms) and links but no policies
/// or events; node addresses equal their ids.
struct NodeSpec {
  std::string id;
  NodeRole role = NodeRole::kAgent;
  std::vector<std::string> realms;
  std::map<std::string, std::string> users;
};

inline Scenario bare_scenario(const std::vector<NodeSpec>& nodes,
                              const std::vector<std::pair<std::string, std::string>>& links,
                              Mode mode = Mode::kProactive) {
  Scenario s;
  for (const auto& node_spec : nodes) {
    TopologyNode n;
    n.id = node_spec.id;
    n.address = node_spec.id;
    n.role = node_spec.role;
    for (const auto& r : node_spec.realms) n.served_realms.insert(Realm::parse(r));
    s.topology.add_node(n);
    if (!node_spec.users.empty()) s.users[node_spec.id] = node_spec.users;
  }
  for (const auto& [a, b] : links) s.topology.add_link(a, b);
  s.topology.assign_homes();
  s.mode = mode;
  s.stop_time = 100000;
  return s;
}

// ---------------------------------------------------------------------------
// Oracles

/// All-pairs hop distances by Floyd-Warshall relaxation, restricted to `nodes`.
/// Returns the row for `target`; unreachable nodes are absent.
inline std::map<std::string, int> oracle_distances(const std::set<std::pair<std::string, std::string>>& links,
                                                   const std::set<std::string>& nodes, const std::string& target) {
  const std::vector<std::string> ids(nodes.begin(), nodes.end());
  const std::size_t n = ids.size();
  constexpr int kInf = 1 << 20;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kInf));
  auto index = [&](const std::string& id) {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& [a, b] : links) {
    if (!nodes.contains(a) || !nodes.contains(b)) continue;
    d[index(a)][index(b)] = 1;
    d[index(b)][index(a)] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  std::map<std::string, int> out;
  if (!nodes.contains(target)) return out;
  const std::size_t t = index(target);
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i][t] < kInf) out[ids[i]] = d[i][t];
  }
  return out;
}

/// Every simple path from `from` to `to`.
inline std::vector<std::vector<std::string>> all_simple_paths(const Topology& topology, const std::string& from,
                                                              const std::string& to) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> path{from};
  std::function<void()> walk = [&] {
    if (path.back() == to) {
      out.push_back(path);
      return;
    }
    for (const auto& next : topology.neighbors(path.back())) {
      if (std::find(path.begin(), path.end(), next) != path.end()) continue;
      path.push_back(next);
      walk();
      path.pop_back();
    }
  };
  walk();
  return out;
}

/// Transcript lines parsed back into JSON.
inline std::vector<Json> parse_lines(const std::vector<std::string>& lines) {
  std::vector<Json> out;
  for (const auto& l : lines) out.push_back(Json::parse(l));
  return out;
}

inline std::vector<Json> parse_lines(const std::string& text) {
  std::vector<Json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(Json::parse(line));
  }
  return out;
}

}  // namespace testing
