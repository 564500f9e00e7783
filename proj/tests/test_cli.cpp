// End-to-end checks of the command-line tool: artifact layout, input
// validation order, and byte-level reproducibility of emitted CSVs.

#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kBin = VASIM_BIN;

struct RunResult {
  int exit_code = 0;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  const std::string log = (fs::temp_directory_path() / "vasim_cli_out.txt").string();
  const std::string command = kBin + " " + args + " >" + log + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = status == -1 ? -1 : WEXITSTATUS(status);
  std::ifstream in(log);
  std::ostringstream text;
  text << in.rdbuf();
  result.output = text.str();
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text) lines += c == '\n';
  return lines;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / fs::path("vasim_cli_test")) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("gen-trace writes the requested rows and an effective config") {
  TempDir dir;
  const RunResult r = run("gen-trace --out " + dir.str() + " --slots 120 --seed 7");
  REQUIRE(r.exit_code == 0);

  const std::string trace = read_file(dir.path / "trace.csv");
  CHECK(count_lines(trace) == 2 + 120);  // metadata + header + rows
  CHECK(trace.find("slot,h,objects,bandwidth,blocks") != std::string::npos);
  CHECK(fs::exists(dir.path / "effective-config.txt"));
}

TEST_CASE("gen-trace is byte-reproducible") {
  TempDir dir;
  REQUIRE(run("gen-trace --out " + dir.str() + " --slots 200 --seed 9").exit_code == 0);
  const std::string first = read_file(dir.path / "trace.csv");
  REQUIRE(run("gen-trace --out " + dir.str() + " --slots 200 --seed 9").exit_code == 0);
  CHECK(read_file(dir.path / "trace.csv") == first);
}

TEST_CASE("eval before train reports the missing checkpoint") {
  TempDir dir;
  REQUIRE(run("gen-trace --out " + dir.str() + " --slots 100 --seed 7").exit_code == 0);
  const RunResult r = run("eval --out " + dir.str() + " --policy DCRL");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("ddqn.ckpt") != std::string::npos);
  CHECK(r.output.find("train") != std::string::npos);
}

TEST_CASE("train requires the pretrained bandit") {
  TempDir dir;
  REQUIRE(run("gen-trace --out " + dir.str() + " --slots 100 --seed 7").exit_code == 0);
  const RunResult r = run("train --out " + dir.str());
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("cmab.ckpt") != std::string::npos);
}

TEST_CASE("full pipeline on a tiny workload") {
  TempDir dir;
  const std::string cfg = (dir.path / "tiny.cfg").string();
  {
    std::ofstream out(cfg);
    out << "run.slots=80\n";
    out << "run.pretrain_slots=32\n";
    out << "run.passes=1\n";
    out << "compare.seeds=1,2\n";
  }
  const std::string base = " --config " + cfg + " --out " + dir.str();

  REQUIRE(run("gen-trace" + base).exit_code == 0);
  REQUIRE(run("pretrain-cmab" + base).exit_code == 0);
  CHECK(fs::exists(dir.path / "cmab.ckpt"));
  REQUIRE(run("train" + base).exit_code == 0);
  CHECK(fs::exists(dir.path / "ddqn.ckpt"));
  CHECK(fs::exists(dir.path / "training-log.csv"));

  REQUIRE(run("eval" + base + " --policy DCRL --slot-log").exit_code == 0);
  const std::string eval_csv = read_file(dir.path / "eval.csv");
  CHECK(eval_csv.find("policy,seed,cum_reward") != std::string::npos);
  CHECK(count_lines(eval_csv) == 2);
  CHECK(fs::exists(dir.path / "slots-DCRL.csv"));

  REQUIRE(run("compare" + base).exit_code == 0);
  const std::string comparison = read_file(dir.path / "comparison.csv");
  // header + 5 policies x 2 seeds + 5 x {mean, sd}.
  CHECK(count_lines(comparison) == 1 + 10 + 10);

  // Re-running the comparison must reproduce the bytes.
  REQUIRE(run("compare" + base).exit_code == 0);
  CHECK(read_file(dir.path / "comparison.csv") == comparison);
}

TEST_CASE("dump-config output parses back to itself") {
  TempDir dir;
  const RunResult defaults = run("dump-config");
  REQUIRE(defaults.exit_code == 0);
  const std::string cfg = (dir.path / "dumped.cfg").string();
  {
    std::ofstream out(cfg);
    out << defaults.output;
  }
  const RunResult r = run("dump-config --config " + cfg);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output == defaults.output);
}

TEST_CASE("unknown policy and bad config are reported") {
  TempDir dir;
  REQUIRE(run("gen-trace --out " + dir.str() + " --slots 60").exit_code == 0);
  CHECK(run("eval --out " + dir.str() + " --policy NOPE").exit_code != 0);

  const std::string cfg = (dir.path / "bad.cfg").string();
  {
    std::ofstream out(cfg);
    out << "ddqn.gamma=1.5\n";
  }
  const RunResult r = run("dump-config --config " + cfg);
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("gamma must be in [0,1)") != std::string::npos);
}
