#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opforge/version.hpp"

namespace opforge {

/// Run metadata written next to the artifacts of every command. Carries
/// wall-clock facts (timestamps, training seconds); the data artifacts
/// themselves stay byte-reproducible.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string started_at;
  std::string finished_at;
  struct Artifact {
    std::string stage;
    std::string path;
  };
  std::vector<Artifact> artifacts;
  std::vector<std::pair<std::string, double>> timings_s;

  void add_artifact(const std::string& stage, const std::string& path) {
    for (const auto& a : artifacts)
      if (a.path == path)
        throw std::logic_error("manifest: artifact listed twice: " + path);
    artifacts.push_back({stage, path});
  }
};

inline std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config_path"] = m.config_path;
  j["seed"] = m.seed;
  j["out_dir"] = m.out_dir;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["toolkit_version"] = kVersion;
  j["artifacts"] = nlohmann::json::array();
  for (const auto& a : m.artifacts)
    j["artifacts"].push_back({{"stage", a.stage}, {"path", a.path}});
  j["timings_s"] = nlohmann::json::object();
  for (const auto& [name, secs] : m.timings_s) j["timings_s"][name] = secs;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("manifest: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace opforge
