#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semicp/cli.hpp"
#include "semicp/harness.hpp"

using namespace semicp;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "semicp_cli_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("sweep writes one row per cell") {
  const fs::path out = scratch() / "r.csv";
  const auto r = run({"sweep", "--n", "100,200", "--lambda", "2,6", "--replicas", "100", "--seed", "7", "--out",
                      out.string()});
  CHECK(r.code == kExitOk);
  const auto rows = parse_rows<SweepRow>(slurp(out), OutputFormat::Csv);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.replicas == 100);
    CHECK(row.extinct_count + row.survived_count == 100);
  }
  CHECK(rows[0].lambda == 2);
  CHECK(rows[3].lambda == 6);
  CHECK(rows[3].survived_count >= 99);
}

TEST_CASE("reruns are byte-identical") {
  const fs::path a = scratch() / "a.json", b = scratch() / "b.json";
  const std::vector<std::string> base = {"meanfield", "--n", "300", "--lambda", "3", "--replicas", "12",
                                         "--seed", "99", "--horizon", "2"};
  auto args = base;
  args.insert(args.end(), {"--out", a.string(), "--threads", "1"});
  REQUIRE(run(args).code == 0);
  args = base;
  args.insert(args.end(), {"--out", b.string(), "--threads", "4"});
  REQUIRE(run(args).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).front() == '[');
}

TEST_CASE("exit codes") {
  CHECK(run({"aux", "--lambda", "3"}).code == kExitInfeasible);
  const auto unknown = run({"sweep", "--bogus", "1"});
  CHECK(unknown.code == kExitUsage);
  CHECK(unknown.err.find("--lambda") != std::string::npos);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"sweep", "--n", "10"}).code == kExitUsage);
  CHECK(run({"sweep", "--n", "abc", "--lambda", "1"}).code == kExitUsage);
  CHECK(run({"sweep", "--n", "10", "--lambda", "-1"}).code == kExitUsage);
  CHECK(run({"lumping", "--n", "9", "--lambda", "1", "--replicas", "10"}).code == kExitUsage);
  CHECK(run({"ode", "--lambda", "2", "--horizon", "1", "--out", "/nonexistent-dir/o.csv"}).code == kExitIo);
  CHECK(run({"sweep", "--config", "/nonexistent-dir/c.conf"}).code == kExitIo);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("config file merges under explicit flags") {
  const fs::path conf = scratch() / "c.conf";
  {
    std::ofstream f(conf);
    f << "# sweep settings\nn = 10, 20\nlambda = 1\nreplicas = 5\nhorizon = 50 # comment\nseed = 3\n";
  }
  const auto r = run({"sweep", "--config", conf.string(), "--lambda", "2"});
  REQUIRE(r.code == 0);
  const auto rows = parse_rows<SweepRow>(r.out, OutputFormat::Csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].lambda == 2);
  CHECK(rows[0].replicas == 5);
  CHECK(rows[0].horizon == 50);

  const fs::path js = scratch() / "c.json";
  {
    std::ofstream f(js);
    f << R"({"n": [10], "lambda": [1, 2], "replicas": 3, "format": "json", "seed": 3})";
  }
  const auto j = run({"sweep", "--config", js.string()});
  REQUIRE(j.code == 0);
  CHECK(parse_rows<SweepRow>(j.out, OutputFormat::Json).size() == 2);

  const fs::path bad = scratch() / "bad.conf";
  {
    std::ofstream f(bad);
    f << "unknown_key = 1\n";
  }
  CHECK(run({"sweep", "--config", bad.string()}).code == kExitUsage);
}

TEST_CASE("seed precedence") {
  const std::vector<std::string> args = {"sweep", "--n", "30", "--lambda", "2", "--replicas", "20"};
  setenv("SEMICP_SEED", "5", 1);
  const auto env5 = run(args).out;
  auto with_flag = args;
  with_flag.insert(with_flag.end(), {"--seed", "5"});
  unsetenv("SEMICP_SEED");
  CHECK(run(with_flag).out == env5);
  CHECK(run(args).out != env5);
  setenv("SEMICP_SEED", "6", 1);
  CHECK(run(with_flag).out == env5);
  unsetenv("SEMICP_SEED");
}

TEST_CASE("every subcommand runs") {
  CHECK(run({"coupling-audit", "--n", "10", "--lambda", "3", "--replicas", "50"}).code == 0);
  CHECK(run({"lumping", "--n", "3", "--lambda", "1", "--replicas", "100"}).code == 0);
  CHECK(run({"aux", "--theta", "0.5", "--n", "100", "--replicas", "20"}).code == 0);
  const auto ode = run({"ode", "--lambda", "2", "--horizon", "1", "--format", "json"});
  CHECK(ode.code == 0);
  CHECK(parse_rows<OdeRow>(ode.out, OutputFormat::Json).size() == 1001);
}
