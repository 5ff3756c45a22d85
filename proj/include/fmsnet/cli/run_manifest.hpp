#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace fmsnet::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Per-file hashes of every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> hash_tree(const std::filesystem::path& dir);
/// Hash over the sorted (path, file hash) pairs of hash_tree.
std::string tree_digest(const std::map<std::string, std::string>& tree);

/// Provenance record written as run_manifest.json in every run directory.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  std::map<std::string, std::string> input_hashes;
  std::string tool_version = kToolVersion;
  std::string started_at;
  std::string finished_at;
  /// running | ok | failed
  std::string status = "running";
  std::string error;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest run_manifest_from_json(const nlohmann::json& j);

/// UTC timestamp, ISO 8601 with seconds.
std::string utc_now();

}  // namespace fmsnet::cli
