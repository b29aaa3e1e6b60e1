#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = XORFLOW_BIN_PATH;

int run_cmd(const std::string& args) {
  const std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Tmp {
  fs::path dir;
  Tmp() {
    dir = fs::temp_directory_path() / ("xorflow_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Tmp() { std::error_code ec; fs::remove_all(dir, ec); }
  std::string operator/(const std::string& s) const { return (dir / s).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen, run, verify round trip") {
  Tmp t;
  REQUIRE(run_cmd("gen line --nodes 2 --rate 1.0 --out " + (t / "line.json")) == 0);
  REQUIRE(run_cmd("run " + (t / "line.json") + " --big-l 1 --big-f 1 --out " + (t / "out")) == 0);
  CHECK(fs::exists(t / "out/rounds.csv"));
  CHECK(fs::exists(t / "out/solution.json"));
  CHECK(fs::exists(t / "out/report.json"));
  CHECK(run_cmd("verify " + (t / "line.json") + " " + (t / "out/solution.json") + " --out " +
                (t / "v")) == 0);
  CHECK(fs::exists(t / "v/verification.json"));

  SUBCASE("tampered solution fails verification with exit 1") {
    auto j = nlohmann::json::parse(slurp(t / "out/solution.json"));
    REQUIRE(!j["nu"].empty());
    j["nu"][0]["val"] = j["nu"][0]["val"].get<double>() + 0.5;
    std::ofstream(t / "out/tampered.json") << j.dump(2);
    CHECK(run_cmd("verify " + (t / "line.json") + " " + (t / "out/tampered.json") + " --out " +
                  (t / "v2")) == 1);
  }

  SUBCASE("reports are deterministic") {
    REQUIRE(run_cmd("run " + (t / "line.json") + " --big-l 1 --big-f 1 --out " + (t / "out2")) ==
            0);
    CHECK(slurp(t / "out/rounds.csv") == slurp(t / "out2/rounds.csv"));
    CHECK(slurp(t / "out/solution.json") == slurp(t / "out2/solution.json"));
  }
}

TEST_CASE("oracle subcommand exit codes") {
  Tmp t;
  REQUIRE(run_cmd("gen two-unicast-poison --rate 0.6 --out " + (t / "tup.json")) == 0);
  CHECK(run_cmd("oracle " + (t / "tup.json") + " --routing-only") == 1);  // infeasible
  REQUIRE(run_cmd("gen two-unicast-poison --rate 0.9 --out " + (t / "tup9.json")) == 0);
  CHECK(run_cmd("oracle " + (t / "tup9.json")) == 0);  // feasible with coding
  CHECK(run_cmd("oracle " + (t / "tup9.json") + " --max-states 4") == 2);  // refusal
}

TEST_CASE("non-convergence exits 3") {
  Tmp t;
  std::ofstream(t / "inf.json") << R"({"mode":"wired","nodes":["a","b"],
      "links":[{"from":"a","to":"b","cap":0.2}],
      "sessions":[{"src":"a","dst":"b","rate":1.0}]})";
  CHECK(run_cmd("run " + (t / "inf.json") + " --max-rounds 50 --out " + (t / "o")) == 3);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cmd("frobnicate") == 2);
  CHECK(run_cmd("run /nonexistent/instance.json") == 2);
  Tmp t;
  CHECK(run_cmd("gen no-such-fixture --out " + (t / "x.json")) == 2);
}

}  // TEST_SUITE
