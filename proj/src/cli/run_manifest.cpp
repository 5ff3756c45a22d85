#include "fmsnet/cli/run_manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <memory>
#include <stdexcept>

#include "fmsnet/harness/run_io.hpp"

namespace fmsnet::cli {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(harness::read_file(path)); }

std::map<std::string, std::string> hash_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) out[fs::relative(entry.path(), dir).generic_string()] = sha256_file(entry.path());
  }
  return out;
}

std::string tree_digest(const std::map<std::string, std::string>& tree) {
  std::string text;
  for (const auto& [path, hash] : tree) text += path + '\0' + hash + '\n';
  return sha256_hex(text);
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"command", m.command},         {"arguments", m.arguments},     {"config", m.config},
          {"seeds", m.seeds},             {"input_hashes", m.input_hashes}, {"tool_version", m.tool_version},
          {"started_at", m.started_at},   {"finished_at", m.finished_at}, {"status", m.status},
          {"error", m.error}};
}

RunManifest run_manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.arguments = j.value("arguments", std::vector<std::string>{});
  m.config = j.value("config", nlohmann::json::object());
  m.seeds = j.value("seeds", nlohmann::json::object());
  m.input_hashes = j.value("input_hashes", std::map<std::string, std::string>{});
  m.tool_version = j.value("tool_version", std::string{});
  m.started_at = j.value("started_at", std::string{});
  m.finished_at = j.value("finished_at", std::string{});
  m.status = j.value("status", std::string{});
  m.error = j.value("error", std::string{});
  return m;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace fmsnet::cli
