#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kCli = FDTR_CLI_PATH;

struct Result {
  int status;
  std::string out;
};

// Runs a shell command line, capturing stdout; stderr is discarded.
Result run(const std::string& args) {
  const std::string cmd = "exec 2>/dev/null; " + kCli + " " + args;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int raw = ::pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fdtr_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  const auto text = slurp(p);
  return text.substr(0, text.find('\n'));
}

}  // namespace

TEST_CASE("optimize writes its artifacts") {
  TempDir tmp;
  const auto r = run("optimize --problem quadratic --design x1 --scheme fraction:0.001 --out " +
                     tmp / "run");
  REQUIRE(r.status == 0);
  const fs::path dir = tmp / "run";
  CHECK(first_line(dir / "trace.csv") == "iter,accepted,rho,delta,step_norm,objective_db,cum_evals");
  CHECK(first_line(dir / "convergence.csv") == "iter,objective_db,best_db,delta");
  CHECK(first_line(dir / "final_response.csv").rfind("freq,run_", 0) == 0);
  const auto json = slurp(dir / "result.json");
  CHECK(json.find("\"termination\"") != std::string::npos);
  CHECK(json.find("\"evaluations\"") != std::string::npos);
}

TEST_CASE("optimize is reproducible") {
  TempDir tmp;
  const std::string args =
      "optimize --problem antenna --design x3 --scheme fraction:0.015 --seed 4 --out ";
  REQUIRE(run(args + tmp / "a").status == 0);
  REQUIRE(run(args + tmp / "b").status == 0);
  for (const char* f : {"trace.csv", "convergence.csv", "final_response.csv", "result.json"})
    CHECK(slurp(fs::path(tmp / "a") / f) == slurp(fs::path(tmp / "b") / f));
}

TEST_CASE("exit codes") {
  TempDir tmp;
  CHECK(run("--help").status == 0);
  CHECK(run("").status == 1);
  CHECK(run("optimize").status == 1);  // --out missing
  CHECK(run("optimize --scheme fraction:abc --out " + tmp / "x").status == 1);
  CHECK(run("optimize --design x42 --out " + tmp / "x").status == 1);
  CHECK(run("optimize --problem nonsense --out " + tmp / "x").status == 1);
  CHECK(run("report --in " + tmp / "missing").status == 2);
  // Evaluator dies on the first request: runtime failure, partial outputs kept.
  const auto r = run("optimize --problem \"cmd:read line; exit 1\" --out " + tmp / "fail");
  CHECK(r.status == 2);
  CHECK(fs::exists(fs::path(tmp / "fail") / "result.json"));
}

TEST_CASE("sweep and report") {
  TempDir tmp;
  {
    std::ofstream plan(tmp / "plan.json");
    plan << R"({"problem":"quadratic","designs":["x1","x4","x7"],)"
         << R"("schemes":["fraction:0.005","fraction:0.03"],"trust":{"max_evals":30},"jobs":3})";
  }
  const auto s = run("sweep --plan " + tmp / "plan.json" + " --out " + tmp / "out");
  REQUIRE(s.status == 0);
  CHECK(s.out.find("E^s") != std::string::npos);
  CHECK(fs::exists(fs::path(tmp / "out") / "cells.csv"));
  CHECK(fs::exists(fs::path(tmp / "out") / "table.md"));

  const auto md = run("report --in " + tmp / "out");
  REQUIRE(md.status == 0);
  CHECK(md.out == slurp(fs::path(tmp / "out") / "table.md"));
  const auto csv = run("report --format csv --in " + tmp / "out");
  REQUIRE(csv.status == 0);
  CHECK(csv.out.find("σ^s,") != std::string::npos);

  CHECK(run("sweep --plan " + tmp / "plan.json").status == 1);
  {
    std::ofstream plan(tmp / "bad.json");
    plan << R"({"designs":[],"schemes":["fraction:0.01"]})";
  }
  CHECK(run("sweep --plan " + tmp / "bad.json" + " --out " + tmp / "o2").status == 1);
}

TEST_CASE("fd-curve") {
  TempDir tmp;
  REQUIRE(run("fd-curve --out " + tmp / "fd.csv").status == 0);
  const auto text = slurp(tmp / "fd.csv");
  CHECK(text.rfind("step,residual,abs_residual\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 61);
  CHECK(run("fd-curve --function tan --out " + tmp / "fd.csv").status == 1);
}

TEST_CASE("serve-mock answers a request") {
  const auto r = run(
      "serve-mock --problem quadratic <<'EOF'\n"
      "{\"id\":1,\"x\":[20,12,3.9,0.3,10.5,9.8],\"freq\":[5.0,5.5]}\n"
      "EOF");
  REQUIRE(r.status == 0);
  CHECK(r.out.rfind("{\"id\":1,\"r_db\":[", 0) == 0);
  CHECK(run("serve-mock --problem \"cmd:cat\" </dev/null").status == 1);
}
