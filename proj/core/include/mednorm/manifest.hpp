#pragma once

#include <map>
#include <string>

namespace mednorm {

inline constexpr const char* kToolVersion = "0.1.0";

// Provenance record written next to every CLI artifact. Timestamps live
// only here, keeping the artifacts themselves byte-deterministic.
struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string stage;
    std::string config_digest;
    std::string kb_hash;
    std::map<std::string, std::string> parameters;
    std::string timestamp;  // ISO-8601 UTC

    std::string to_json() const;
};

// FNV-1a 64 hex digest of arbitrary bytes (config files, reports).
std::string content_digest(const std::string& bytes);

std::string utc_timestamp();

// Writes <artifact>.manifest.json for file artifacts or
// <artifact>/manifest.run.json for directory artifacts.
void write_manifest(const RunManifest& manifest, const std::string& artifact_path);

}  // namespace mednorm
