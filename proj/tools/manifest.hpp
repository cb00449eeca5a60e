#pragma once

// Run manifests: the full configuration of a command, a hash of it, and the
// files it read and wrote. Timestamps live only here, so data files stay
// byte-identical across runs.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tubelab::cli {

std::string sha256_hex(const std::string& data);

class RunManifest {
public:
    RunManifest(std::string command, nlohmann::json config);

    /// First 16 hex digits of sha256(command + canonical config + version).
    const std::string& hash() const { return hash_; }
    void add_input(const std::filesystem::path& p) { inputs_.push_back(p.string()); }
    void add_output(const std::filesystem::path& p) { outputs_.push_back(p.string()); }
    nlohmann::json to_json() const;
    void write(const std::filesystem::path& p);

private:
    std::string command_;
    nlohmann::json config_;
    std::string hash_;
    std::string started_;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
};

/// Writes text to p, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tubelab::cli
