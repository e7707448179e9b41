#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace coolish {

// Reproducibility sidecar written next to every CLI output file: the
// subcommand, its full flag snapshot, the seed, and tool version. Re-running
// the recorded command reproduces the output byte for byte.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::string version;
  std::string started_at;
  std::string finished_at;
};

RunManifest begin_manifest(const std::string& command,
                           std::map<std::string, std::string> config,
                           std::uint64_t seed);

// Stamps the end time and writes `<output_path>.manifest.json`.
void finish_manifest(RunManifest& manifest, const std::string& output_path);

}  // namespace coolish
