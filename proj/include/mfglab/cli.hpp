#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mfglab {

enum ExitCode : int {
  kExitOk = 0,
  kExitMismatch = 1,
  kExitAssumption = 2,
  kExitNoConvergence = 3,
  kExitIo = 4,
};

struct RunConfig {
  std::string command;          // verify | ergodic | horizon | converge
  std::string instance_label;   // built-in name or file path
  nlohmann::json instance;      // instance document before resolution overrides
  std::vector<double> T;
  std::optional<double> dx;
  std::optional<double> dt;
  std::optional<double> tol;
  double R = 3.0;
  std::string out;
  std::uint64_t seed = 20240601;
  int threads = 1;
};

// Merge a JSON config file (keys mirror the flag names) with command-line
// flags; flags win. Throws IoError on unreadable or malformed files.
RunConfig load_config(const std::string& command, const nlohmann::json& file_config);

// The instance document with the config's resolution overrides applied.
nlohmann::json resolved_instance(const RunConfig& cfg);

// Manifest written next to every output set. Serialization is canonical
// (sorted keys, shortest round-trip doubles), so serialize(parse(s)) == s.
struct RunManifest {
  nlohmann::json doc;

  std::string serialize() const;
  static RunManifest parse(const std::string& text);
  RunConfig config() const;
};

// FNV-1a 64 over the canonical dump of command, instance, and parameters.
std::string config_hash(const RunConfig& cfg);

// Write `contents` to a sibling temp file, then rename over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

// Dispatch one subcommand; diagnostics go to `err`, summaries to `out`.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct Mismatch {
  std::string file;
  std::size_t line = 0;  // 1-based; 0 when the file is missing
};

// Re-run the manifest's config into a scratch directory and compare every
// recorded output byte for byte. `rerun_code` receives the rerun's exit code;
// files are only compared when it is 0 or 3.
std::optional<Mismatch> reproduce_outputs(const std::filesystem::path& manifest_path, std::ostream& err,
                                          int* rerun_code = nullptr);
int reproduce(const std::filesystem::path& manifest_path, std::ostream& out, std::ostream& err);

// Entry point used by the `mfg` binary.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mfglab
