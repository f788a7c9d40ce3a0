#include "sigld/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "sigld/serialize.hpp"
#include "sigld/version.hpp"

namespace sigld {

std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::string& path) { return content_digest(read_text_file(path)); }

void Manifest::add_output(const std::string& path) { outputs.emplace_back(path, file_digest(path)); }

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  j["master_seed"] = master_seed;
  j["version"] = version.empty() ? kVersion : version;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& [path, digest] : outputs) outs.push_back({{"path", path}, {"digest", digest}});
  j["outputs"] = outs;
  return j;
}

void Manifest::write(const std::string& path) const { write_text_file(path, to_json().dump(2) + "\n"); }

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace sigld
