#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "catch2/catch_amalgamated.hpp"
#include "tailbound/io.hpp"

using namespace tailbound;
using namespace tailbound::io;
using Catch::Approx;

TEST_CASE("reads replicate columns and averages them", "[io]") {
  std::istringstream in("gene\tr1\tr2\ng1\t1.0\t3.0\ng2\t-2\t0.5\n");
  const auto ds = read_tsv(in);
  REQUIRE(ds.size() == 2);
  CHECK(ds.ids[0] == "g1");
  CHECK(ds.averaged[0] == 2.0);
  CHECK(ds.averaged[1] == -0.75);
  CHECK(ds.id_column == "gene");
  CHECK(ds.replicate_columns == std::vector<std::string>{"r1", "r2"});
}

TEST_CASE("missing replicates are skipped", "[io]") {
  std::istringstream in("id\ta\tb\nx\tNA\t4\ny\t\t\nz\t1\t\n");
  const auto ds = read_tsv(in);
  REQUIRE(ds.size() == 2);
  CHECK(ds.averaged[0] == 4.0);
  CHECK(ds.replicate_values[0].size() == 1);
  CHECK(ds.averaged[1] == 1.0);
  CHECK(ds.dropped == 1);
}

TEST_CASE("column selection", "[io]") {
  std::istringstream in("a\tid\tb\tc\n1\tq\t2\t3\n");
  const auto ds = read_tsv(in, {"id", {"c"}});
  REQUIRE(ds.size() == 1);
  CHECK(ds.ids[0] == "q");
  CHECK(ds.averaged[0] == 3.0);
  std::istringstream again("a\tb\n1\t2\n");
  CHECK_THROWS_AS(read_tsv(again, {"id", {}}), InputError);
}

TEST_CASE("malformed input", "[io]") {
  std::istringstream bad("id\tv\ng1\t1.5\ng2\tabc\n");
  try {
    read_tsv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream empty("");
  CHECK_THROWS_AS(read_tsv(empty), InputError);
  std::istringstream only_id("id\n");
  CHECK_THROWS_AS(read_tsv(only_id), InputError);
  CHECK_THROWS_AS(load_tsv("/nonexistent/file.tsv"), InputError);
}

TEST_CASE("write and reload round-trips exactly", "[io]") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Dataset ds;
  ds.id_column = "gene";
  ds.replicate_columns = {"r1", "r2", "r3"};
  for (int i = 0; i < 50; ++i) {
    ds.ids.push_back("g" + std::to_string(i));
    std::vector<double> reps;
    for (int k = 0; k < 1 + i % 3; ++k) reps.push_back(z(rng) * 1e3);
    double s = 0.0;
    for (double v : reps) s += v;
    ds.averaged.push_back(s / static_cast<double>(reps.size()));
    ds.replicate_values.push_back(std::move(reps));
  }
  const auto path = std::filesystem::temp_directory_path() / "tailbound_roundtrip.tsv";
  write_tsv(path.string(), ds);
  const auto back = load_tsv(path.string());
  std::filesystem::remove(path);
  CHECK(back.ids == ds.ids);
  CHECK(back.replicate_values == ds.replicate_values);
  CHECK(back.averaged == ds.averaged);
  CHECK(back.replicate_columns == ds.replicate_columns);
}

TEST_CASE("null scale fit", "[io]") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 0.5);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = z(rng);
  const auto fit = fit_null_scale(xs);
  CHECK(fit.variance == Approx(0.25).margin(0.01));
  CHECK(fit.sigma == Approx(fit.mad / 0.674489750196082));
  CHECK_THROWS_AS(fit_null_scale(std::vector<double>(20, 1.0)), DegenerateDataError);
  CHECK_THROWS_AS(fit_null_scale(std::vector<double>(5, 1.0)), ParameterError);

  const std::vector<double> small{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto s = fit_null_scale(small);
  CHECK(s.center == 5.5);
  CHECK(s.mad == 2.5);
}
