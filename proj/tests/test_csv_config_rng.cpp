#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"

#include "glassbox/config.hpp"
#include "glassbox/csv.hpp"
#include "glassbox/rng.hpp"

using namespace glassbox;

namespace {

std::string temp_file(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("csv parses headers, comments, and quoted fields") {
  const csv::Table t = csv::parse_table(
      "# comment line\n"
      "name,value,note\n"
      "\n"
      "a,1.5,\"x, y\"\n"
      "b,-2,plain\n");
  CHECK(t.header == std::vector<std::string>{"name", "value", "note"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][2] == "x, y");
  CHECK(t.column("value") == 1);
  CHECK(t.column("missing") == -1);
}

TEST_CASE("csv rejects ragged rows and non-numeric cells") {
  CHECK_THROWS_AS(csv::parse_table("a,b\n1\n"), std::runtime_error);
  CHECK_THROWS_AS(csv::to_real("12x"), std::runtime_error);
  CHECK_THROWS_AS(csv::to_real(""), std::runtime_error);
  CHECK(csv::to_real(" 2.5 ") == doctest::Approx(2.5));
}

TEST_CASE("format_real round-trips exactly") {
  for (double x : {0.1, 1.0 / 3.0, 1e300, 5e-324, -0.0, 123456789.123456789, 2.0}) {
    const std::string s = csv::format_real(x);
    CHECK(csv::to_real(s) == x);
  }
}

TEST_CASE("csv write/read round-trip preserves numeric content") {
  const std::string path = temp_file("glassbox_test_roundtrip.csv");
  csv::write_table(path, {"x", "y"},
                   {{csv::format_real(0.1), csv::format_real(-3.5)},
                    {csv::format_real(1e-12), csv::format_real(7.0)}},
                   "schema_version=1");
  const csv::Table t = csv::read_table(path);
  CHECK(csv::to_real(t.rows[0][0]) == 0.1);
  CHECK(csv::to_real(t.rows[1][0]) == 1e-12);
  const Eigen::MatrixXd m = csv::numeric_matrix(t);
  CHECK(m.rows() == 2);
  CHECK(m(0, 1) == -3.5);
  std::filesystem::remove(path);
}

TEST_CASE("config sections prefix keys and values parse strictly") {
  const config::File f = config::File::parse(
      "# top\n"
      "seed = 7\n"
      "flag = true\n"
      "[ranges]\n"
      "f_min = 0.25\n"
      "penalties = 2, 3, 5\n");
  CHECK(f.get_int("seed", 0) == 7);
  CHECK(f.get_bool("flag", false));
  CHECK(f.get_real("ranges.f_min", 0.0) == doctest::Approx(0.25));
  CHECK(f.get_reals("ranges.penalties", {}) == std::vector<double>{2.0, 3.0, 5.0});
  CHECK(f.get_string("absent", "dflt") == "dflt");
  CHECK_THROWS(f.get_int("ranges.f_min", 0));
}

TEST_CASE("config save/load round-trip") {
  config::File f;
  f.set_int("seed", 42);
  f.set("gti.transform", "poly2");
  f.set_real("ranges.f_min", 0.125);
  const std::string path = temp_file("glassbox_test_config.cfg");
  f.save(path);
  const config::File g = config::File::load(path);
  CHECK(g.get_int("seed", 0) == 42);
  CHECK(g.get_string("gti.transform", "") == "poly2");
  CHECK(g.get_real("ranges.f_min", 0.0) == 0.125);
  std::filesystem::remove(path);
}

TEST_CASE("config rejects malformed lines") {
  CHECK_THROWS_AS(config::File::parse("[unclosed\n"), std::runtime_error);
  CHECK_THROWS_AS(config::File::parse("novalue\n"), std::runtime_error);
  CHECK_THROWS_AS(config::File::parse("= 3\n"), std::runtime_error);
}

TEST_CASE("rng is deterministic and platform-independent per seed") {
  Rng a(12345), b(12345);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(12346);
  CHECK(Rng(12345).next_u64() != c.next_u64());
}

TEST_CASE("rng streams depend only on the original seed") {
  Rng parent(99);
  const std::uint64_t first = parent.stream(3).next_u64();
  for (int i = 0; i < 1000; ++i) parent.next_u64();
  CHECK(parent.stream(3).next_u64() == first);  // consuming the parent changes nothing
  CHECK(parent.stream(4).next_u64() != first);
}

TEST_CASE("rng uniform, bounded, bernoulli stay in range") {
  Rng r(5);
  for (int i = 0; i < 2000; ++i) {
    const double u = r.uniform(2.0, 3.0);
    CHECK(u >= 2.0);
    CHECK(u < 3.0);
    CHECK(r.bounded(7) < 7);
  }
  Rng r2(6);
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(r2.bernoulli(0.0));
    CHECK(r2.bernoulli(1.0));
  }
  CHECK_THROWS_AS(Rng(1).bounded(0), std::invalid_argument);
}

TEST_CASE("rng bounded covers all residues") {
  Rng r(8);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 500; ++i) seen.insert(r.bounded(5));
  CHECK(seen.size() == 5);
}

TEST_CASE("rng normal has roughly standard moments") {
  Rng r(17);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("rng records its identity string") {
  CHECK(std::string(Rng::kAlgorithm).find("xoshiro256**") != std::string::npos);
}
