#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2s/checkpoint.hpp"
#include "s2s/net.hpp"

using namespace s2s;

namespace {

nn::ArchConfig tiny_arch() {
    nn::ArchConfig a;
    a.n_branches = 2;
    a.base_channels = 2;
    a.enc_conv_blocks = 2;
    a.enc_res_blocks = 1;
    a.dec_conv_blocks = 2;
    a.dec_res_blocks = 1;
    return a;
}

std::vector<unsigned char> to_bytes(const std::string& s) {
    return std::vector<unsigned char>(s.begin(), s.end());
}

}  // namespace

TEST_CASE("checkpoint layout: magic, length-prefixed header, f32 payload") {
    auto m = nn::build_model<float>(tiny_arch(), 55);
    const std::string bytes = nn::serialize_checkpoint(m);

    REQUIRE(bytes.size() > 8);
    CHECK(bytes[0] == 'S');
    CHECK(bytes[1] == '2');
    CHECK(bytes[2] == 'S');
    CHECK(bytes[3] == '1');

    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t hlen = p[4] | (p[5] << 8) | (p[6] << 16) | (p[7] << 24);
    REQUIRE(bytes.size() == 8 + hlen + nn::param_count(m) * 4);

    const auto hdr = nlohmann::json::parse(bytes.substr(8, hlen));
    CHECK(hdr.at("seed").get<std::uint64_t>() == 55);
    CHECK(hdr.at("arch").at("n_branches").get<int>() == 2);
    CHECK(hdr.at("arch").at("base_channels").get<int>() == 2);
    CHECK(hdr.at("arch").at("activation").get<std::string>() == "relu");

    // first payload float is the first weight of encoder 1's first conv
    float w0 = 0.0f;
    std::memcpy(&w0, bytes.data() + 8 + hlen, 4);
    CHECK(w0 == m.encoders[0].convs[0].W[0]);
}

TEST_CASE("checkpoint round-trip is bit-identical") {
    auto m = nn::build_model<float>(tiny_arch(), 987);
    const std::string path = "roundtrip.s2s";
    nn::save_checkpoint(m, path);
    auto r = nn::load_checkpoint(path);
    std::remove(path.c_str());

    CHECK(r.seed == m.seed);
    CHECK(r.arch.n_branches == m.arch.n_branches);
    CHECK(r.arch.base_channels == m.arch.base_channels);
    REQUIRE(nn::param_count(r) == nn::param_count(m));

    std::vector<float> a, b;
    m.visit([&](const nn::Conv2d<float>& c) {
        a.insert(a.end(), c.W.begin(), c.W.end());
        a.insert(a.end(), c.b.begin(), c.b.end());
    });
    r.visit([&](const nn::Conv2d<float>& c) {
        b.insert(b.end(), c.W.begin(), c.W.end());
        b.insert(b.end(), c.b.begin(), c.b.end());
    });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("double-precision models narrow to f32 on save") {
    auto m = nn::build_model<double>(tiny_arch(), 42);
    m.encoders[0].convs[0].W[0] = 0.1;  // not representable in f32 exactly
    auto r = nn::parse_checkpoint(to_bytes(nn::serialize_checkpoint(m)), "mem");
    CHECK(r.encoders[0].convs[0].W[0] == 0.1f);
}

TEST_CASE("checkpoint rejects corruption") {
    auto m = nn::build_model<float>(tiny_arch(), 7);
    const std::string good = nn::serialize_checkpoint(m);

    std::string bad = good;
    bad[0] = 'X';
    CHECK_THROWS_WITH(nn::parse_checkpoint(to_bytes(bad), "mem"),
                      Catch::Matchers::ContainsSubstring("magic"));

    CHECK_THROWS_AS(nn::parse_checkpoint(to_bytes(good.substr(0, good.size() - 3)), "mem"),
                    nn::CheckpointError);
    CHECK_THROWS_WITH(nn::parse_checkpoint(to_bytes(good + "z"), "mem"),
                      Catch::Matchers::ContainsSubstring("length mismatch"));
    CHECK_THROWS_WITH(nn::parse_checkpoint(to_bytes(good.substr(0, 6)), "mem"),
                      Catch::Matchers::ContainsSubstring("truncated"));

    std::string garbled = good;
    garbled[9] = '!';  // breaks the JSON header
    CHECK_THROWS_WITH(nn::parse_checkpoint(to_bytes(garbled), "mem"),
                      Catch::Matchers::ContainsSubstring("header"));

    CHECK_THROWS_AS(nn::load_checkpoint("no/such/file.s2s"), nn::CheckpointError);
}
