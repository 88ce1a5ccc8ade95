#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

namespace atomize {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestSchema = 1;

// Digest of the reproducible part of a manifest: schema, tool version,
// command, effective config and input hashes. Timestamps and output paths
// are left out so reruns hash identically.
std::string manifest_hash(const std::string& command, const nlohmann::json& config,
                          const nlohmann::json& inputs);

// Entry point behind the `atomize` binary. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace atomize
