#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "kernspec_test_cli";

struct Workspace {
  Workspace() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};
const Workspace workspace;

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = kRoot / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(KERNSPEC_CLI_PATH) + " " + args + " > " + (kRoot / "stdout.txt").string() +
                          " 2> " + (kRoot / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_CASE("eigs writes JSON and CSV") {
  const fs::path cfg = write_config("eigs.json", {{"kernel", {{"family", "linear"}, {"d", 4}, {"p0", 0.5}, {"p1", 0.1}}}});
  const fs::path out = kRoot / "eigs_out";
  REQUIRE(run("eigs --config " + cfg.string() + " --out " + out.string()) == 0);
  const json doc = read_json(out / "eigs.json");
  CHECK(doc["kind"] == "eigs");
  CHECK(doc["config"]["kernel"]["family"] == "linear");
  CHECK(doc["kernel"]["eigenvalues"][0].get<double>() == doctest::Approx(0.5));
  CHECK(doc["kernel"]["eigenvalues"][1].get<double>() == doctest::Approx(0.05));
  const std::string csv = slurp(out / "eigs.csv");
  CHECK(csv.rfind("# kernspec ", 0) == 0);
  CHECK(csv.find("index,lambda,level,sup_norm") != std::string::npos);
}

TEST_CASE("deviation is reproducible byte for byte") {
  const fs::path cfg = write_config(
      "dev.json", {{"kernel", {{"family", "threshold"}}}, {"n_grid", {60, 120}}, {"indices", {1, 2}}, {"trials", 30},
                   {"seed", 5}});
  const fs::path a = kRoot / "dev_a" / "nested";
  const fs::path b = kRoot / "dev_b";
  REQUIRE(run("deviation --config " + cfg.string() + " --out " + a.string()) == 0);
  CHECK(fs::is_directory(a));
  const std::string first_csv = slurp(a / "deviation_trials.csv");
  const std::string first_json = slurp(a / "deviation_summary.json");
  REQUIRE(run("deviation --config " + cfg.string() + " --out " + a.string()) == 0);
  CHECK(slurp(a / "deviation_trials.csv") == first_csv);
  CHECK(slurp(a / "deviation_summary.json") == first_json);

  // the thread count is echoed in the preamble but does not change the rows
  const fs::path c = kRoot / "dev_c";
  REQUIRE(run("deviation --config " + cfg.string() + " --out " + c.string() + " --threads 2") == 0);
  const std::string one = slurp(a / "deviation_trials.csv"), two = slurp(c / "deviation_trials.csv");
  CHECK(one.substr(one.find("\ntrial,")) == two.substr(two.find("\ntrial,")));
  CHECK(slurp(a / "deviation_summary.json") != "");
  const json doc = read_json(a / "deviation_summary.json");
  CHECK(doc["config"]["seed"] == 5);

  REQUIRE(run("deviation --config " + cfg.string() + " --out " + b.string() + " --seed 6") == 0);
  const std::string other = slurp(b / "deviation_trials.csv");
  CHECK(one.substr(one.find("\ntrial,")) != other.substr(other.find("\ntrial,")));
}

TEST_CASE("coverage on a finite-rank kernel") {
  const fs::path cfg = write_config(
      "cov.json", {{"kernel", {{"family", "linear"}, {"d", 5}, {"p0", 0.6}, {"p1", 0.1}}}, {"n", 150}, {"R", 6},
                   {"trials", 30}});
  const fs::path out = kRoot / "cov";
  REQUIRE(run("coverage --config " + cfg.string() + " --out " + out.string()) == 0);
  const json doc = read_json(out / "coverage_summary.json");
  const json& cov = doc["study"]["coverage"];
  REQUIRE(cov.size() == 3);
  CHECK(cov[1]["bound"] == 0.0);
  CHECK(cov[2]["bound"] == 0.0);
  CHECK(cov[2]["violations"] == 0);
}

TEST_CASE("bounds and rates") {
  const fs::path cfg = write_config(
      "bounds.json", {{"kernel", {{"family", "synthetic"}, {"synthetic", {{"tag", "H1"}, {"delta", 4}, {"s", 0}}}}},
                      {"n", 10000},
                      {"i", 3},
                      {"regularity", {{"tag", "H1"}, {"delta", 4}, {"s", 0}}}});
  const fs::path out = kRoot / "bounds";
  REQUIRE(run("bounds --config " + cfg.string() + " --out " + out.string()) == 0);
  const json doc = read_json(out / "bounds.json");
  CHECK(doc["report"].contains("rate_row"));

  REQUIRE(run("rates --config " + cfg.string() + " --out " + out.string()) == 0);
  const std::string csv = slurp(out / "rates.csv");
  CHECK(csv.find("\n4,0,-0.5,-0.85,-1.2,-1.55,-1.9,-2.25,-2.6,-2.95,-3.3,-3.65\n") != std::string::npos);
  CHECK(csv.find("\n8,0,-0.5,-1.25,-2,-2.75,-3.5,-4.25,-5,-5.75,-6.5,-7.25\n") != std::string::npos);
  const json rates = read_json(out / "rates.json");
  CHECK(rates["table"]["rows"][0]["cells"][5]["h"] == "-9/4");
}

TEST_CASE("exit codes") {
  const fs::path good = write_config("good.json", {{"kernel", {{"family", "threshold"}}}, {"n", 50}, {"R", 50}});
  CHECK(run("coverage --config " + good.string() + " --out " + (kRoot / "x").string()) == 2);
  CHECK(run("eigs --config " + (kRoot / "missing.json").string()) == 2);
  CHECK(run("frobnicate --config " + good.string()) == 2);
  CHECK(run("eigs") == 2);
  const fs::path bad = write_config("unknown.json", {{"kernel", {{"family", "threshold"}}}, {"nn", 5}});
  CHECK(run("eigs --config " + bad.string() + " --out " + (kRoot / "y").string()) == 2);
  CHECK(slurp(kRoot / "stderr.txt").find("nn") != std::string::npos);

  // a regular file where the output directory should go
  std::ofstream(kRoot / "blocker") << "x";
  CHECK(run("eigs --config " + good.string() + " --out " + (kRoot / "blocker" / "sub").string()) != 0);
  CHECK(run("--version") == 0);
}
