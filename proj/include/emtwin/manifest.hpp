#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace emtwin {

struct InputHash {
    std::string path;
    std::string sha256;  // lowercase hex
    std::uint64_t bytes = 0;
};

struct RunManifest {
    std::string command;
    std::string config_path;
    std::vector<InputHash> inputs;
    std::optional<std::uint64_t> seed;
    std::string tool_version;
    std::string timestamp;  // UTC, ISO 8601
    std::vector<std::string> outputs;

    /// Hashes the whole file at `path` and records it.
    void add_input(const std::filesystem::path& path);
    std::string to_json() const;
    void write(const std::filesystem::path& path) const;
};

std::string sha256_hex(const std::string& bytes);
std::string tool_version();
/// Current UTC time, or SOURCE_DATE_EPOCH when that variable is set.
std::string utc_timestamp();

}  // namespace emtwin
