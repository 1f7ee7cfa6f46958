#include "emtwin/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <memory>
#include <json.hpp>

#include "emtwin/errors.hpp"
#include "emtwin/io.hpp"

#ifndef EMTWIN_VERSION
#define EMTWIN_VERSION "0.0.0"
#endif

namespace emtwin {

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(Errc::Io, "SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

std::string tool_version() { return EMTWIN_VERSION; }

std::string utc_timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(epoch, &end, 10);
        if (end != epoch && *end == '\0') t = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::add_input(const std::filesystem::path& path) {
    const std::string bytes = io::read_text(path);
    inputs.push_back({path.string(), sha256_hex(bytes), bytes.size()});
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config_path"] = config_path;
    j["inputs"] = nlohmann::json::array();
    for (const auto& in : inputs) j["inputs"].push_back({{"path", in.path}, {"sha256", in.sha256}, {"bytes", in.bytes}});
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    j["tool_version"] = tool_version;
    j["timestamp"] = timestamp;
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
}

void RunManifest::write(const std::filesystem::path& path) const { io::write_text_atomic(path, to_json()); }

}  // namespace emtwin
