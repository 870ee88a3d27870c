#include "eptrack/manifest.hpp"

#include "eptrack/common.hpp"
#include "eptrack/csv.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <memory>

#ifndef EPTRACK_VERSION
#define EPTRACK_VERSION "0.0.0"
#endif

namespace eptrack::io {

std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
        throw Error(ErrorKind::Io, "SHA-256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    return sha256_hex(read_file(path));
}

void RunManifest::add_output(const std::filesystem::path& file, const std::filesystem::path& base) {
    std::error_code ec;
    auto rel = std::filesystem::relative(file, base, ec);
    outputs.push_back({ec || rel.empty() ? file.string() : rel.string(), sha256_file(file)});
}

std::string code_version() { return EPTRACK_VERSION; }

std::string manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["format"] = "eptrack-manifest";
    j["version"] = 1;
    j["command"] = m.command;
    j["config_sha256"] = m.config_hash;
    j["seed"] = m.seed;
    j["code_version"] = m.code_version;
    j["wall_clock_s"] = m.wall_clock_s;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& o : m.outputs) {
        outs.push_back({{"path", o.path}, {"sha256", o.sha256}});
    }
    j["outputs"] = outs;
    return j.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
    write_file_atomic(path, manifest_to_json(m));
}

}  // namespace eptrack::io
