#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <steklab/tomlmini.hpp>

#include <cstdio>
#include <fstream>
#include <string>

using namespace steklab;

namespace {

const char* kSample = R"(# run configuration
title = "demo run"   # trailing comment

[sweep]
surface = "sphere"
k = [6, 12, 24]
alpha = 1.5
seed = 42
certify = true
h_values = [0.02, 1e-2, 5e-3]
big = 1_000_000

[output]
csv = "out.csv"
note = "hash # inside \"string\" stays"
)";

}  // namespace

// ===========================================================================
// parsing the supported subset
// ===========================================================================

TEST_CASE("sections flatten to dotted keys") {
  const toml::Table t = toml::parse(kSample);
  CHECK(t.has("title"));
  CHECK(t.has("sweep.surface"));
  CHECK(t.has("output.csv"));
  CHECK_FALSE(t.has("surface"));  // unsectioned alias must not exist

  CHECK(t.get_string("title") == "demo run");
  CHECK(t.get_string("sweep.surface") == "sphere");
  CHECK(t.get_int("sweep.seed") == 42);
  CHECK(t.get_double("sweep.alpha") == 1.5);
  CHECK(t.get_bool("sweep.certify"));
  CHECK(t.get_int("sweep.big") == 1000000);
}

TEST_CASE("arrays parse with scientific floats and int coercion") {
  const toml::Table t = toml::parse(kSample);
  const auto k = t.get_int_array("sweep.k");
  REQUIRE(k.size() == 3);
  CHECK(k[0] == 6);
  CHECK(k[2] == 24);

  const auto h = t.get_double_array("sweep.h_values");
  REQUIRE(h.size() == 3);
  CHECK(h[0] == 0.02);
  CHECK(h[1] == 0.01);
  CHECK(h[2] == 0.005);

  // int array reads as double array (coerced), not vice versa.
  const auto kd = t.get_double_array("sweep.k");
  CHECK(kd[1] == 12.0);
  CHECK_THROWS_AS(t.get_int_array("sweep.h_values"), Error);
}

TEST_CASE("strings keep hashes and escapes") {
  const toml::Table t = toml::parse(kSample);
  CHECK(t.get_string("output.note") == "hash # inside \"string\" stays");
  const toml::Table e = toml::parse("s = \"a\\tb\\nc\\\\d\"");
  CHECK(e.get_string("s") == "a\tb\nc\\d");
}

TEST_CASE("get_double coerces integers; get_int does not coerce floats") {
  const toml::Table t = toml::parse("a = 3\nb = 3.5");
  CHECK(t.get_double("a") == 3.0);
  CHECK_THROWS_AS(t.get_int("b"), Error);
}

TEST_CASE("_or getters fall back only when the key is absent") {
  const toml::Table t = toml::parse("x = 7\nname = \"n\"\nflag = false");
  CHECK(t.get_int_or("x", 1) == 7);
  CHECK(t.get_int_or("y", 1) == 1);
  CHECK(t.get_double_or("x", 2.5) == 7.0);
  CHECK(t.get_double_or("z", 2.5) == 2.5);
  CHECK(t.get_string_or("name", "d") == "n");
  CHECK(t.get_string_or("missing", "d") == "d");
  CHECK(t.get_bool_or("flag", true) == false);
  CHECK(t.get_bool_or("other", true) == true);
}

TEST_CASE("keys lists every flattened key") {
  const toml::Table t = toml::parse("a = 1\n[s]\nb = 2");
  const auto ks = t.keys();
  REQUIRE(ks.size() == 2);
  CHECK(((ks[0] == "a" && ks[1] == "s.b") || (ks[0] == "s.b" && ks[1] == "a")));
}

// ===========================================================================
// error reporting
// ===========================================================================

TEST_CASE("malformed input raises Config errors with the line number") {
  auto expect_line = [](const std::string& text, const std::string& line_tag) {
    try {
      (void)toml::parse(text);
      FAIL("expected a parse error for: ", text);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
      CHECK(std::string(e.what()).find(line_tag) != std::string::npos);
    }
  };
  expect_line("a = 1\nnot a kv pair\n", "line 2");
  expect_line("[unclosed\n", "line 1");
  expect_line("a = \n", "line 1");
  expect_line("ok = 1\nb = [1, 2\n", "line 2");
  expect_line("x = \"unterminated\n", "line 1");
  expect_line("x = nonsense\n", "line 1");
  expect_line("a = 1\na = 2\n", "line 2");   // duplicate key
  expect_line("bad key = 1\n", "line 1");
  expect_line("v = [1,, 2]\n", "line 1");
}

TEST_CASE("missing and mistyped keys raise Config errors") {
  const toml::Table t = toml::parse("a = 1");
  CHECK_THROWS_AS(t.get_int("nope"), Error);
  CHECK_THROWS_AS(t.get_string("a"), Error);
  CHECK_THROWS_AS(t.get_bool("a"), Error);
  CHECK_THROWS_AS(t.get_int_array("a"), Error);
}

TEST_CASE("parse_file loads from disk and reports Io on missing path") {
  const std::string path = "tomlmini_test_tmp.toml";
  {
    std::ofstream out(path);
    out << "[run]\nn = 5\n";
  }
  const toml::Table t = toml::parse_file(path);
  CHECK(t.get_int("run.n") == 5);
  std::remove(path.c_str());

  try {
    (void)toml::parse_file("definitely_absent_dir/none.toml");
    FAIL("expected an Io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
