#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace sigld {

// FNV-1a 64-bit content digest, hex encoded. Stable fingerprint for
// reproducibility checks, not a cryptographic hash.
std::string content_digest(const std::string& bytes);
std::string file_digest(const std::string& path);

// Record of one CLI run: command, full config echo, seed, version,
// timestamps and a digest per output file. Re-running the same config must
// reproduce identical output digests.
struct Manifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t master_seed = 0;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, digest)

  void add_output(const std::string& path);
  nlohmann::json to_json() const;
  void write(const std::string& path) const;
};

std::string iso8601_now();

}  // namespace sigld
