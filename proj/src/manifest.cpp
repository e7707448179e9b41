#include "coolish/manifest.hpp"

#include <ctime>
#include <fstream>

#include "coolish/errors.hpp"
#include "json.hpp"

namespace coolish {

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunManifest begin_manifest(const std::string& command,
                           std::map<std::string, std::string> config,
                           std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config = std::move(config);
  m.seed = seed;
  m.version = COOLISH_VERSION;
  m.started_at = utc_now();
  return m;
}

void finish_manifest(RunManifest& manifest, const std::string& output_path) {
  manifest.finished_at = utc_now();
  nlohmann::json j;
  j["command"] = manifest.command;
  j["config"] = manifest.config;
  j["seed"] = manifest.seed;
  j["version"] = manifest.version;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;

  const std::string path = output_path + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace coolish
