#include "mednorm/manifest.hpp"

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mednorm/errors.hpp"

namespace mednorm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string RunManifest::to_json() const {
    json j;
    j["tool_version"] = tool_version;
    j["stage"] = stage;
    j["config_digest"] = config_digest;
    j["kb_hash"] = kb_hash;
    j["parameters"] = parameters;
    j["timestamp"] = timestamp;
    return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::string& artifact_path) {
    fs::path target = fs::is_directory(artifact_path)
                          ? fs::path(artifact_path) / "manifest.run.json"
                          : fs::path(artifact_path + ".manifest.json");
    std::ofstream out(target, std::ios::binary);
    if (!out) throw IoError("cannot write manifest " + target.string());
    out << manifest.to_json();
}

}  // namespace mednorm
