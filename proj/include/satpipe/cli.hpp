#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace satpipe::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

/// Entry point behind the `satpipe` executable. argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Config files: one `key = value` per line, `#` starts a comment, keys are
// long flag names without the leading dashes. Flags given on the command
// line win over the file.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap parse_config(const std::string& text, const std::string& origin = "config");
ConfigMap read_config_file(const std::filesystem::path& path);

enum class SeedSource { kFlag, kConfig, kEnvironment, kDefault };
std::string to_string(SeedSource source);

struct ResolvedSeed {
  std::uint64_t value = 0;
  SeedSource source = SeedSource::kDefault;
};

/// --seed, then the config file's `seed`, then SATPIPE_SEED, then 0.
ResolvedSeed resolve_seed(const std::optional<std::string>& flag, const ConfigMap& config, const char* env);
std::uint64_t parse_seed(const std::string& text);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::string started_at;
  double duration_seconds = 0;
  std::string status = "ok";
  std::string error;
};

nlohmann::json to_json(const RunManifest& manifest);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// `runs/<YYYYmmdd-HHMMSS>` under `base`, suffixed with -2, -3, ... when taken.
std::filesystem::path default_out_dir(const std::filesystem::path& base = "runs");

}  // namespace satpipe::cli
