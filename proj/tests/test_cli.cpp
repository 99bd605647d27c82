#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hybridbell/cli.hpp"
#include "json.hpp"

using hybridbell::cli::run;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int status = run(args, out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hybridbell_cli_" + name);
}

}  // namespace

TEST_CASE("nc-scan over the figure grid") {
  const auto path = temp_path("nc.csv");
  std::filesystem::remove(path);
  const Result r = call({"nc-scan", "--eta-a", "0.7", "--eta-b", "0.6", "--r-min", "0.05", "--r-max",
                         "2.0", "--r-step", "0.05", "--out", path.string()});
  REQUIRE(r.status == 0);
  CHECK(r.out.empty());
  const auto rows = parse_csv(slurp(path));
  REQUIRE(rows.size() == 41);
  CHECK(rows[0] == std::vector<std::string>{"r", "eta_A", "eta_B", "x0", "alpha0", "D", "lhs", "rhs", "R"});
  bool positive = false;
  for (std::size_t k = 1; k < rows.size(); ++k) positive = positive || std::stod(rows[k][8]) > 0.0;
  CHECK(positive);
  CHECK(rows[1][1] == "0.69999999999999996");
}

TEST_CASE("reruns are byte-identical") {
  const auto a = temp_path("a.csv");
  const auto b = temp_path("b.csv");
  const std::vector<std::string> base = {"nc-scan", "--r-min", "0.4", "--r-max", "0.6",
                                         "--r-step", "0.1", "--seed", "3", "--out"};
  auto args_a = base;
  args_a.push_back(a.string());
  auto args_b = base;
  args_b.push_back(b.string());
  REQUIRE(call(args_a).status == 0);
  REQUIRE(call(args_b).status == 0);
  CHECK(slurp(a) == slurp(b));

  const Result s1 = call({"sample", "--samples", "200", "--seed", "9"});
  const Result s2 = call({"sample", "--samples", "200", "--seed", "9"});
  const Result s3 = call({"sample", "--samples", "200", "--seed", "10"});
  CHECK(s1.out == s2.out);
  CHECK(s1.out != s3.out);
}

TEST_CASE("spec errors exit with status 2") {
  const auto path = temp_path("empty.csv");
  std::filesystem::remove(path);
  const Result empty = call({"nc-scan", "--r-min", "1.0", "--r-max", "0.5", "--out", path.string()});
  CHECK(empty.status == 2);
  CHECK_FALSE(std::filesystem::exists(path));
  CHECK(empty.out.empty());
  CHECK(empty.err.find("empty") != std::string::npos);

  CHECK(call({"nc-scan", "--r-step", "0"}).status == 2);
  CHECK(call({"nc-scan", "--state", "cat"}).status == 2);
  CHECK(call({"cat-scan", "--state", "tmsvs"}).status == 2);
  CHECK(call({"sample", "--gamma1", "a,b"}).status == 2);
  CHECK(call({"sample", "--format", "xml"}).status == 2);
  CHECK(call({"sample", "--setting-i", "3"}).status == 2);
  CHECK(call({"sample", "--eta-a", "1.5"}).status == 2);
  CHECK(call({"bogus"}).status == 2);
  CHECK(call({}).status == 2);
  CHECK(call({"--help"}).status == 0);
}

TEST_CASE("cat-scan locates the onset of nonlocality") {
  const Result r = call({"cat-scan"});
  REQUIRE(r.status == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 32);
  CHECK(rows[0][0] == "alpha0");
  CHECK(std::stod(rows[1][0]) == 0.0);
  CHECK(std::stod(rows[1][3]) <= 0.0);
  double crossing_lo = -1.0;
  double crossing_hi = -1.0;
  for (std::size_t k = 2; k < rows.size(); ++k) {
    const double a = std::stod(rows[k][0]);
    const double v = std::stod(rows[k][3]);
    if (a <= 0.6 + 1e-12) CHECK(v <= 0.0);
    if (a >= 1.0 - 1e-12) CHECK(v > 0.0);
    if (std::stod(rows[k - 1][3]) <= 0.0 && v > 0.0) {
      crossing_lo = std::stod(rows[k - 1][0]);
      crossing_hi = a;
    }
  }
  CHECK(crossing_lo >= 0.7 - 1e-12);
  CHECK(crossing_hi <= 0.9 + 1e-12);
  CHECK(r.err.find("changes sign") != std::string::npos);
}

TEST_CASE("locality reports the maximum of F") {
  const Result r = call({"locality", "--state", "tmsvs", "--r-min", "1.0", "--r-max", "1.0",
                         "--starts", "3", "--max-evaluations", "300"});
  REQUIRE(r.status == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][3] == "F_max");
  const double f = std::stod(rows[1][3]);
  CHECK(f >= -1e-6);
  CHECK(f <= 1e-6);
}

TEST_CASE("jpdao gate and dump") {
  const Result nonlocal = call({"jpdao", "--state", "cat", "--alpha0-min", "1.0"});
  CHECK(nonlocal.status == 3);
  CHECK(nonlocal.err.find("not local") != std::string::npos);
  CHECK(nonlocal.out.empty());

  const Result ok = call({"jpdao", "--state", "tmsvs", "--r-min", "1.0", "--nodes", "8"});
  REQUIRE(ok.status == 0);
  const auto rows = parse_csv(ok.out);
  CHECK(rows[0] == std::vector<std::string>{"x1", "x2", "n1", "n2", "w"});
  CHECK(rows.size() == 1 + 8 * 8 * 4);
  CHECK(ok.err.find("kappa") != std::string::npos);
}

TEST_CASE("sample and behavior tables") {
  const Result s = call({"sample", "--state", "tmsvs", "--samples", "1000", "--seed", "7"});
  REQUIRE(s.status == 0);
  const auto rows = parse_csv(s.out);
  REQUIRE(rows.size() == 1001);
  CHECK(rows[0] == std::vector<std::string>{"x", "n"});
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK((rows[k][1] == "0" || rows[k][1] == "1"));

  const Result b = call({"behavior", "--x-points", "11"});
  REQUIRE(b.status == 0);
  const auto table = parse_csv(b.out);
  CHECK(table[0] == std::vector<std::string>{"x", "n", "i", "j", "p"});
  CHECK(table.size() == 1 + 11 * 8);
}

TEST_CASE("json mirrors csv") {
  const Result csv = call({"cat-scan", "--alpha0-max", "0.3"});
  const Result js = call({"cat-scan", "--alpha0-max", "0.3", "--format", "json"});
  REQUIRE(csv.status == 0);
  REQUIRE(js.status == 0);
  const auto rows = parse_csv(csv.out);
  const nlohmann::json doc = nlohmann::json::parse(js.out);
  REQUIRE(doc.is_array());
  REQUIRE(doc.size() == rows.size() - 1);
  for (std::size_t k = 0; k < doc.size(); ++k) {
    for (std::size_t c = 0; c < rows[0].size(); ++c) {
      CHECK(doc[k].at(rows[0][c]).get<double>() == std::stod(rows[k + 1][c]));
    }
  }
}

TEST_CASE("configuration file precedence") {
  const auto cfg = temp_path("config.ini");
  {
    std::ofstream f(cfg);
    f << "samples=10\nseed=5\neta-a=0.8\n";
  }
  setenv(hybridbell::cli::kConfigEnv, cfg.string().c_str(), 1);
  const Result from_file = call({"sample"});
  const Result flag_wins = call({"sample", "--samples", "20"});
  unsetenv(hybridbell::cli::kConfigEnv);
  const Result defaults = call({"sample"});
  const Result explicit_same = call({"sample", "--samples", "10", "--seed", "5", "--eta-a", "0.8"});

  REQUIRE(from_file.status == 0);
  CHECK(parse_csv(from_file.out).size() == 11);
  CHECK(parse_csv(flag_wins.out).size() == 21);
  CHECK(parse_csv(defaults.out).size() == 1001);
  CHECK(from_file.out == explicit_same.out);

  setenv(hybridbell::cli::kConfigEnv, temp_path("missing.ini").string().c_str(), 1);
  CHECK(call({"sample"}).status == 2);
  unsetenv(hybridbell::cli::kConfigEnv);
}
