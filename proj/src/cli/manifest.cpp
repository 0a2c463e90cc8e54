#include <chrono>
#include <ctime>
#include <fstream>

#include <openssl/evp.h>

#include "satpipe/cli.hpp"
#include "satpipe/errors.hpp"

namespace satpipe::cli {

namespace {

std::string hex(const unsigned char* data, unsigned len) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    s.push_back(digits[data[i] >> 4]);
    s.push_back(digits[data[i] & 15]);
  }
  return s;
}

struct Hasher {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  Hasher() {
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  ~Hasher() { EVP_MD_CTX_free(ctx); }
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx, data, n); }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    return hex(md, len);
  }
};

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  Hasher h;
  h.update(bytes.data(), bytes.size());
  return h.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Hasher h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.finish();
}

nlohmann::json to_json(const RunManifest& m) {
  auto files = [](const std::vector<FileDigest>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : v) a.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return a;
  };
  nlohmann::json j = {
      {"subcommand", m.subcommand},
      {"argv", m.argv},
      {"config", m.config},
      {"seeds", m.seeds},
      {"inputs", files(m.inputs)},
      {"outputs", files(m.outputs)},
      {"started_at", m.started_at},
      {"duration_seconds", m.duration_seconds},
      {"status", m.status},
  };
  if (!m.error.empty()) j["error"] = m.error;
  return j;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(manifest).dump(2) << "\n";
}

std::filesystem::path default_out_dir(const std::filesystem::path& base) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  std::filesystem::path dir = base / stamp;
  for (int n = 2; std::filesystem::exists(dir); ++n) dir = base / (std::string(stamp) + "-" + std::to_string(n));
  return dir;
}

}  // namespace satpipe::cli
