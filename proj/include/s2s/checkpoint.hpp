#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2s/net.hpp"
#include "s2s/version.hpp"

namespace s2s::nn {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_f32_le(std::string& out, float f) { put_u32_le(out, std::bit_cast<std::uint32_t>(f)); }

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline constexpr char kCheckpointMagic[4] = {'S', '2', 'S', '1'};

template <class T>
std::string serialize_checkpoint(const Model<T>& m) {
    nlohmann::json hdr;
    hdr["arch"] = {{"n_branches", m.arch.n_branches},
                   {"base_channels", m.arch.base_channels},
                   {"enc_conv_blocks", m.arch.enc_conv_blocks},
                   {"enc_res_blocks", m.arch.enc_res_blocks},
                   {"dec_conv_blocks", m.arch.dec_conv_blocks},
                   {"dec_res_blocks", m.arch.dec_res_blocks},
                   {"activation", "relu"},
                   {"norm", "none"}};
    hdr["seed"] = m.seed;
    hdr["version"] = version_string;
    const std::string header = hdr.dump();

    std::string out;
    out.reserve(8 + header.size() + param_count(m) * 4);
    out.append(kCheckpointMagic, 4);
    detail::put_u32_le(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    m.visit([&](const Conv2d<T>& c) {
        for (T w : c.W) detail::put_f32_le(out, static_cast<float>(w));
        for (T b : c.b) detail::put_f32_le(out, static_cast<float>(b));
    });
    return out;
}

template <class T>
void save_checkpoint(const Model<T>& m, const std::string& path) {
    const std::string bytes = serialize_checkpoint(m);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("short write to checkpoint: " + path);
}

inline Model<float> parse_checkpoint(const std::vector<unsigned char>& bytes, const std::string& what) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
        throw CheckpointError("bad checkpoint magic in " + what + ": expected S2S1");
    if (bytes.size() < 8) throw CheckpointError("truncated checkpoint header in " + what);
    const std::uint32_t hlen = detail::get_u32_le(bytes.data() + 4);
    if (bytes.size() < 8 + static_cast<std::size_t>(hlen))
        throw CheckpointError("truncated checkpoint header in " + what);

    ArchConfig arch;
    std::uint64_t seed = 0;
    try {
        const nlohmann::json hdr =
            nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + hlen);
        const auto& a = hdr.at("arch");
        arch.n_branches = a.at("n_branches").get<int>();
        arch.base_channels = a.at("base_channels").get<int>();
        arch.enc_conv_blocks = a.at("enc_conv_blocks").get<int>();
        arch.enc_res_blocks = a.at("enc_res_blocks").get<int>();
        arch.dec_conv_blocks = a.at("dec_conv_blocks").get<int>();
        arch.dec_res_blocks = a.at("dec_res_blocks").get<int>();
        seed = hdr.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("invalid checkpoint header in " + what + ": " + e.what());
    }
    try {
        arch.validate();
    } catch (const std::exception& e) {
        throw CheckpointError("invalid checkpoint architecture in " + what + ": " + e.what());
    }

    Model<float> m = build_model<float>(arch, seed);
    const std::size_t expect = 8 + static_cast<std::size_t>(hlen) + param_count(m) * 4;
    if (bytes.size() != expect)
        throw CheckpointError("checkpoint length mismatch in " + what + ": expected " +
                              std::to_string(expect) + " bytes, found " + std::to_string(bytes.size()));
    const unsigned char* p = bytes.data() + 8 + hlen;
    m.visit([&](Conv2d<float>& c) {
        for (auto& w : c.W) {
            w = std::bit_cast<float>(detail::get_u32_le(p));
            p += 4;
        }
        for (auto& b : c.b) {
            b = std::bit_cast<float>(detail::get_u32_le(p));
            p += 4;
        }
    });
    return m;
}

inline Model<float> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_checkpoint(bytes, path);
}

}  // namespace s2s::nn
