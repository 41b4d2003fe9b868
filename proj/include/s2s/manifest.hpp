#pragma once
// Run-directory plumbing: the manifest every command leaves behind, artifact
// hashing, the single-owner lock file, and CSV report output.

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "s2s/version.hpp"
#include <nlohmann/json.hpp>

namespace s2s::run {

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunManifest {
    std::vector<std::string> cmdline;
    nlohmann::json config;                        // resolved values the run used
    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::string> artifacts;  // relative path -> sha256
    double wall_seconds = 0.0;
    std::string version = version_string;
};

inline std::string sha256_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    unsigned char buf[65536];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) EVP_DigestUpdate(ctx, buf, n);
    std::fclose(f);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

inline void write_manifest(const std::string& dir, const RunManifest& m) {
    nlohmann::json j;
    j["cmdline"] = m.cmdline;
    j["config"] = m.config;
    j["seeds"] = m.seeds;
    j["artifacts"] = m.artifacts;
    j["wall_seconds"] = m.wall_seconds;
    j["version"] = m.version;
    std::ofstream f(dir + "/manifest.json");
    if (!f) throw std::runtime_error("cannot write manifest in " + dir);
    f << j.dump(2) << "\n";
}

inline RunManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ManifestError("cannot open manifest " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("invalid manifest " + path + ": " + e.what());
    }
    RunManifest m;
    try {
        m.cmdline = j.at("cmdline").get<std::vector<std::string>>();
        m.config = j.at("config");
        m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
        m.wall_seconds = j.at("wall_seconds").get<double>();
        m.version = j.at("version").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("invalid manifest " + path + ": " + e.what());
    }
    return m;
}

// Exclusive ownership of a run directory for the duration of a command.
class RunLock {
public:
    explicit RunLock(const std::string& dir) : path_(dir + "/.lock") {
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0)
            throw std::runtime_error("run directory is locked: " + dir +
                                     " (remove .lock if no run is active)");
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] auto r = ::write(fd, pid.data(), pid.size());
        ::close(fd);
    }
    ~RunLock() { std::filesystem::remove(path_); }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::string path_;
};

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
        f << "\n";
    }
}

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace s2s::run
