#include "manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

namespace tubelab::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::string out;
    char hex[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(hex, sizeof hex, "%02x", md[i]);
        out += hex;
    }
    return out;
}

RunManifest::RunManifest(std::string command, nlohmann::json config)
    : command_(std::move(command)), config_(std::move(config)), started_(utc_now()) {
    hash_ = sha256_hex(command_ + '\n' + config_.dump() + '\n' + kVersion).substr(0, 16);
}

nlohmann::json RunManifest::to_json() const {
    return {{"command", command_},
            {"config", config_},
            {"hash", hash_},
            {"versions", {{"tubelab", kVersion}, {"compiler", __VERSION__}}},
            {"started", started_},
            {"finished", utc_now()},
            {"inputs", inputs_},
            {"outputs", outputs_}};
}

void RunManifest::write(const std::filesystem::path& p) { write_text(p, to_json().dump(2) + '\n'); }

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    out.close();
    if (!out) throw IoError("write failed: " + p.string());
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace tubelab::cli
