// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout captured and stderr discarded.
Run sepex(const std::string& args) {
  const std::string cmd = std::string(SEPEX_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sepex_cli_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(sepex("").code == 2);
  CHECK(sepex("simulate --bogus 1 --out /tmp/x").code == 2);
  CHECK(sepex("rank --out /tmp/x").code == 2);
  CHECK(sepex("fit-ddp --time-scale log --out /tmp/x").code == 2);
  CHECK(sepex("teleport").code == 2);
  CHECK(sepex("--help").code == 0);
}

TEST_CASE("protein pipeline") {
  const std::string d = scratch("pipe");
  REQUIRE(sepex("simulate --model protein -I 15 --paired-times 4 --seed 3 --out " + d + "/sim")
              .code == 0);
  const auto fit = sepex("fit-ddp --data " + d + "/sim/data.csv --iters 60 --burnin 20 --chains 2 "
                         "--seed 4 --out " + d + "/fit");
  REQUIRE(fit.code == 0);
  CHECK(fit.out.find("\"model\"") != std::string::npos);
  CHECK(sepex("summarize --archive " + d + "/fit --out " + d + "/sum").code == 0);
  CHECK(fs::exists(d + "/sum"));
  const auto rk = sepex("rank --archive " + d + "/fit --c 0.8 --out " + d + "/rank");
  REQUIRE(rk.code == 0);
  CHECK(rk.out.find("\"top_set_size\": 4") != std::string::npos);
  const std::string sel = slurp(d + "/rank/selected.csv");
  CHECK(sel.rfind("position,protein_id,exceed_prob,r_star\n", 0) == 0);
  CHECK(std::count(sel.begin(), sel.end(), '\n') == 5);
  CHECK(sepex("rank --archive " + d + "/fit --top 2 --out " + d + "/rank2").out.find(
            "\"top_set_size\": 2") != std::string::npos);
  CHECK(sepex("diagnose --archive " + d + "/fit --out " + d + "/diag").code == 0);

  // The manifest reproduces the run.
  const auto again = sepex("fit-ddp --config " + d + "/fit/manifest.json --out " + d + "/fit2");
  REQUIRE(again.code == 0);
  CHECK(slurp(d + "/fit/chain_0/beta.csv") == slurp(d + "/fit2/chain_0/beta.csv"));
  // Wrong model in the config.
  CHECK(sepex("fit-nested --config " + d + "/fit/manifest.json --out " + d + "/x").code == 2);
}

TEST_CASE("nested pipeline and exchangeability") {
  const std::string d = scratch("nested");
  REQUIRE(sepex("simulate --model nested --rows 12 -J 5 --separation 5 --out " + d + "/sim")
              .code == 0);
  REQUIRE(sepex("fit-nested --data " + d + "/sim/data.csv --normalize none --no-log --iters 40 "
                "--burnin 10 --out " + d + "/fit")
              .code == 0);
  CHECK(sepex("summarize --archive " + d + "/fit --conditional-iters 20 --out " + d + "/sum")
            .code == 0);
  CHECK(sepex("rank --archive " + d + "/fit --out " + d + "/r").code != 0);
  const auto ce = sepex("check-exch --model reference --draws 20000");
  CHECK(ce.code == 0);
  CHECK(ce.out.find("\"pass\": true") != std::string::npos);
}
