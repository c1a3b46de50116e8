// sdn-aaa: validate configuration artifacts, run scenarios, inspect node state.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "sdnaaa/error.hpp"
#include "sdnaaa/model.hpp"
#include "sdnaaa/model_json.hpp"
#include "sdnaaa/simnet.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kIoError = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_st("sdn-aaa");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("SDN_AAA_LOG")) {
    const std::string text = level;
    if (text == "error") spdlog::set_level(spdlog::level::err);
    if (text == "info") spdlog::set_level(spdlog::level::info);
    if (text == "debug") spdlog::set_level(spdlog::level::debug);
  }
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  return static_cast<bool>(out);
}

bool looks_like_scenario(const sdnaaa::Json& root) {
  return root.is_object() && (root.contains("topology") || root.contains("events") || root.contains("stop_time"));
}

int cmd_validate(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    spdlog::error("cannot read {}", path);
    return kIoError;
  }
  sdnaaa::Json root;
  try {
    root = sdnaaa::parse_json(*text);
  } catch (const sdnaaa::Error& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  }
  if (looks_like_scenario(root)) {
    try {
      const auto scenario = sdnaaa::load_scenario(*text);
      spdlog::info("scenario ok: {} nodes, {} policies, {} events", scenario.topology.nodes().size(),
                   scenario.policies.size(), scenario.events.size());
      return kOk;
    } catch (const sdnaaa::Error& e) {
      spdlog::error("{}", e.what());
      return kInvalid;
    }
  }
  sdnaaa::ConfigDocument doc;
  try {
    doc = sdnaaa::document_from_json(root);
  } catch (const sdnaaa::Error& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  }
  const auto violations = sdnaaa::validate_document(doc);
  for (const auto& v : violations) std::cerr << v.code << " " << v.path << ": " << v.detail << "\n";
  if (!violations.empty()) return kInvalid;
  spdlog::info("document ok");
  return kOk;
}

std::optional<sdnaaa::Scenario> load(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    spdlog::error("cannot read {}", path);
    return std::nullopt;
  }
  try {
    return sdnaaa::load_scenario(*text);
  } catch (const sdnaaa::Error& e) {
    spdlog::error("{}", e.what());
    return std::nullopt;
  }
}

int cmd_run(const std::string& path, const std::string& mode, std::optional<std::uint64_t> seed,
            const std::string& transcript_path, const std::string& metrics_path) {
  auto scenario = load(path);
  if (!scenario) return kIoError;
  if (!mode.empty()) scenario->mode = *sdnaaa::mode_from_string(mode);
  if (seed) scenario->seed = *seed;

  const auto result = sdnaaa::run(*scenario);
  const std::string metrics = result.metrics.to_json().dump(2) + "\n";
  std::cout << metrics;
  if (!transcript_path.empty() && !write_file(transcript_path, result.transcript)) {
    spdlog::error("cannot write {}", transcript_path);
    return kIoError;
  }
  if (!metrics_path.empty() && !write_file(metrics_path, metrics)) {
    spdlog::error("cannot write {}", metrics_path);
    return kIoError;
  }
  spdlog::info("delivered={} rejected={} errored={} pending={}", result.metrics.delivered, result.metrics.rejected,
               result.metrics.errored, result.metrics.pending);
  for (const auto& [code, count] : result.metrics.errors_by_code) spdlog::warn("{} x{}", code, count);
  return result.metrics.errored == 0 ? kOk : kInvalid;
}

int cmd_inspect(const std::string& path, const std::string& node_id, sdnaaa::LogicalTime at) {
  auto scenario = load(path);
  if (!scenario) return kIoError;
  if (!scenario->topology.has_node(node_id)) {
    spdlog::error("unknown node {}", node_id);
    return kInvalid;
  }
  sdnaaa::Simulation sim(*scenario);
  sim.start();
  sim.run_until(at);
  const auto doc = sdnaaa::canonicalize(sdnaaa::redact(sim.node(node_id).running()));
  std::cout << sdnaaa::to_json(doc).dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"SDN-managed AAA routing: validate, run and inspect scenarios"};
  app.require_subcommand(1);

  std::string file;
  auto* validate = app.add_subcommand("validate", "Check a configuration document or scenario file");
  validate->add_option("file", file, "Path to the file")->required();

  std::string mode;
  std::optional<std::uint64_t> seed;
  std::string transcript_path;
  std::string metrics_path;
  auto* run = app.add_subcommand("run", "Run a scenario and print its metrics");
  run->add_option("file", file, "Scenario file")->required();
  run->add_option("--mode", mode, "Override the scenario mode")->check(CLI::IsMember({"proactive", "reactive"}));
  run->add_option("--seed-override", seed, "Override the scenario seed");
  run->add_option("--transcript", transcript_path, "Write the transcript here");
  run->add_option("--metrics", metrics_path, "Write the metrics here");

  std::string node_id;
  sdnaaa::LogicalTime at = 0;
  auto* inspect = app.add_subcommand("inspect", "Replay a scenario and print one node's configuration");
  inspect->add_option("file", file, "Scenario file")->required();
  inspect->add_option("node", node_id, "Node id")->required();
  inspect->add_option("--at", at, "Logical time to replay to")->required()->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kIoError;
  }

  if (*validate) return cmd_validate(file);
  if (*run) return cmd_run(file, mode, seed, transcript_path, metrics_path);
  return cmd_inspect(file, node_id, at);
}
