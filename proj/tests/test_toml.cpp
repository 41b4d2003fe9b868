#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "s2s/toml.hpp"

using namespace s2s;

TEST_CASE("toml: scalars, sections, and qualified keys") {
    const toml::Table t = toml::parse(
        "top = 1\n"
        "[sim]\n"
        "f_c = 7.5\n"
        "grid = 128\n"
        "name = \"probe a\"\n"
        "on = true\n"
        "off = false\n"
        "[dataset]\n"
        "grid = 64\n");
    CHECK(t.get_int("top", 0) == 1);
    CHECK(t.get_double("sim.f_c", 0.0) == 7.5);
    CHECK(t.get_int("sim.grid", 0) == 128);
    CHECK(t.get_string("sim.name", "") == "probe a");
    CHECK(t.get_bool("sim.on", false));
    CHECK_FALSE(t.get_bool("sim.off", true));
    CHECK(t.get_int("dataset.grid", 0) == 64);  // same leaf, different section
    CHECK(t.has("sim.grid"));
    CHECK_FALSE(t.has("grid"));
}

TEST_CASE("toml: missing keys fall back to defaults") {
    const toml::Table t = toml::parse("[a]\nx = 1\n");
    CHECK(t.get_int("a.y", 42) == 42);
    CHECK(t.get_double("a.y", 2.5) == 2.5);
    CHECK(t.get_string("b.z", "dflt") == "dflt");
    CHECK(t.get_doubles("a.v", {1.0, 2.0}) == std::vector<double>{1.0, 2.0});
}

TEST_CASE("toml: arrays, comments, and escapes") {
    const toml::Table t = toml::parse(
        "# full-line comment\n"
        "v = [1, 2.5, -3]  # trailing comment\n"
        "s = \"a # not a comment\"\n"
        "e = \"tab\\there\"\n"
        "empty_note = \"\"\n");
    CHECK(t.get_doubles("v", {}) == std::vector<double>{1.0, 2.5, -3.0});
    CHECK(t.get_string("s", "") == "a # not a comment");
    CHECK(t.get_string("e", "") == "tab\there");
    CHECK(t.get_string("empty_note", "x").empty());
}

TEST_CASE("toml: ints stay ints, floats stay floats") {
    const toml::Table t = toml::parse("i = 128\nf = 1e-3\ng = 0.5\n");
    CHECK(t.raw("i").kind == toml::Value::Kind::Int);
    CHECK(t.raw("f").kind == toml::Value::Kind::Float);
    CHECK(t.get_double("i", 0.0) == 128.0);  // int promotes to double
    CHECK(t.get_double("f", 0.0) == 1e-3);
    CHECK_THROWS_AS(t.get_int("g", 0), toml::TomlError);  // but floats never truncate to int
}

TEST_CASE("toml: malformed input is rejected with the line number") {
    CHECK_THROWS_WITH(toml::parse("x 1\n"), Catch::Matchers::ContainsSubstring("line 1"));
    CHECK_THROWS_WITH(toml::parse("a = 1\nb = \n"), Catch::Matchers::ContainsSubstring("line 2"));
    CHECK_THROWS_WITH(toml::parse("a = 1\n\n[bad\n"), Catch::Matchers::ContainsSubstring("line 3"));
    CHECK_THROWS_AS(toml::parse("a = what\n"), toml::TomlError);
    CHECK_THROWS_AS(toml::parse("a = \"unterminated\n"), toml::TomlError);
    CHECK_THROWS_AS(toml::parse("a = [1, 2\n"), toml::TomlError);
    CHECK_THROWS_AS(toml::parse("a.b = 1\n"), toml::TomlError);  // dotted keys unsupported
    CHECK_THROWS_AS(toml::parse("= 1\n"), toml::TomlError);
}

TEST_CASE("toml: duplicate keys are rejected") {
    CHECK_THROWS_WITH(toml::parse("a = 1\na = 2\n"), Catch::Matchers::ContainsSubstring("duplicate"));
    CHECK_THROWS_AS(toml::parse("[s]\nk = 1\nk = 2\n"), toml::TomlError);
    // same leaf under different sections is fine
    CHECK_NOTHROW(toml::parse("[s]\nk = 1\n[t]\nk = 2\n"));
}

TEST_CASE("toml: typed getters reject mismatched kinds") {
    const toml::Table t = toml::parse("s = \"text\"\nn = 3\n");
    CHECK_THROWS_AS(t.get_int("s", 0), toml::TomlError);
    CHECK_THROWS_AS(t.get_bool("n", false), toml::TomlError);
    CHECK_THROWS_AS(t.get_string("n", ""), toml::TomlError);
    CHECK_THROWS_AS(t.get_doubles("n", {}), toml::TomlError);
    CHECK_THROWS_AS(t.get_double("s", 0.0), toml::TomlError);
}

TEST_CASE("toml: parse_file round trip and missing file") {
    const std::string path = "toml_roundtrip_test.toml";
    {
        std::ofstream f(path);
        f << "[train]\nepochs = 7\nlr = 0.01\n";
    }
    const toml::Table t = toml::parse_file(path);
    CHECK(t.get_int("train.epochs", 0) == 7);
    CHECK(t.get_double("train.lr", 0.0) == 0.01);
    std::remove(path.c_str());
    CHECK_THROWS_AS(toml::parse_file("no_such_file.toml"), toml::TomlError);
}
