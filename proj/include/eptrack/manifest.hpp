#pragma once

// Per-run manifest: config hash, seed, code version, output checksums and
// wall-clock duration, written atomically once a run has succeeded.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace eptrack::io {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct OutputEntry {
    std::string path;  ///< as written, relative to the manifest directory when possible
    std::string sha256;
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string code_version;
    std::vector<OutputEntry> outputs;
    double wall_clock_s = 0.0;

    /// Hashes each file and records it.
    void add_output(const std::filesystem::path& file, const std::filesystem::path& base);
};

std::string code_version();
std::string manifest_to_json(const RunManifest& m);
void write_manifest(const std::filesystem::path& path, const RunManifest& m);

}  // namespace eptrack::io
