#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "satpipe/cli.hpp"
#include "satpipe/errors.hpp"

namespace satpipe::cli {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

ConfigMap parse_config(const std::string& text, const std::string& origin) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.starts_with("--")) key.erase(0, 2);
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[key] = value;  // later lines win
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_string(SeedSource source) {
  switch (source) {
    case SeedSource::kFlag: return "flag";
    case SeedSource::kConfig: return "config";
    case SeedSource::kEnvironment: return "SATPIPE_SEED";
    case SeedSource::kDefault: return "default";
  }
  return "default";
}

std::uint64_t parse_seed(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("seed must be a non-negative integer, got '" + text + "'");
  return v;
}

ResolvedSeed resolve_seed(const std::optional<std::string>& flag, const ConfigMap& config, const char* env) {
  if (flag) return {parse_seed(*flag), SeedSource::kFlag};
  if (auto it = config.find("seed"); it != config.end()) return {parse_seed(it->second), SeedSource::kConfig};
  if (env && *env) return {parse_seed(env), SeedSource::kEnvironment};
  return {0, SeedSource::kDefault};
}

}  // namespace satpipe::cli
