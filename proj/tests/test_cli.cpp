#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <oed/cli.hpp>
#include <oed/design_io.hpp>
#include <oed/problem_file.hpp>

namespace fs = std::filesystem;

namespace {

const char* kTinyProblem = R"([model]
name = linear_drift
dimension = 1
horizon = 2
x0 = 0

[control]
intervals = 2
lower = 0
upper = 1

[sensors]
count = 1
sigma_1 = 0.5
noise_order = 5

[prior]
type = gaussian
mean = 1
cov = 1
orders = 6

[budget]
activations = 3
min_separation = 0.2
weight_cells = 8
steps_per_cell = 2
)";

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "oed");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = oed::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_started(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("# started ", 0) != 0) out += line + '\n';
  return out;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("oed_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  TempDir tmp;
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"design"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"validate", "--suite", "everything"}).code == 2);
  CHECK(run({"reproduce", "--figure", "5"}).code == 2);
  CHECK(run({"reproduce", "--figure", "1", "--runs", "5", "--full-scale"}).code == 2);

  Result bad = run({"design", "--problem", "harmonic_similar", "--criterion", "e_opt",
                    "--out", tmp.path.string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("e_opt") != std::string::npos);

  Result missing = run({"design", "--problem", "no_such_problem"});
  CHECK(missing.code == 2);

  fs::create_directories(tmp.path / "empty");
  Result empty = run({"evaluate", "--problem", "harmonic_similar", "--designs",
                      (tmp.path / "empty").string(), "--out", tmp.path.string()});
  CHECK(empty.code == 2);
  for (const char* f : {"a_opt.design", "d_opt.design", "inst.design", "tilt.design",
                        "multi_tilt.design"})
    CHECK(empty.err.find(f) != std::string::npos);
}

TEST_CASE("design and evaluate on a small problem") {
  TempDir tmp;
  const fs::path problem = tmp.path / "tiny.spec";
  std::ofstream(problem) << kTinyProblem;
  const fs::path a = tmp.path / "a", b = tmp.path / "b";

  auto design = [&](const fs::path& out) {
    return run({"design", "--problem", problem.string(), "--criterion", "d_opt,inst",
                "--seed", "4", "--restarts", "2", "--out", out.string()});
  };
  Result r = design(a);
  REQUIRE(r.code == 0);
  CHECK(design(b).code == 0);
  for (const char* name : {"d_opt", "inst"})
    for (const char* ext : {".design", ".relaxed", ".log"}) {
      const std::string file = std::string(name) + ext;
      CAPTURE(file);
      REQUIRE(fs::exists(a / file));
      const std::string text = slurp(a / file);
      CHECK(text.rfind("# argv: oed design --problem ", 0) == 0);
      CHECK(text.find("\n# seed: 4\n") != std::string::npos);
      // the output directory is part of argv, so compare modulo that line
      auto body = [](const std::string& t) { return without_started(t.substr(t.find('\n'))); };
      CHECK(body(text) == body(slurp(b / file)));
    }
  CHECK_FALSE(fs::exists(a / "tilt.design"));

  const oed::ProblemSetup setup = oed::load_problem(problem.string());
  std::ifstream in(a / "d_opt.design");
  CHECK(oed::read_design(in, setup.problem).activations.size() == 3);

  auto evaluate = [&](const fs::path& out) {
    return run({"--threads", "2", "evaluate", "--problem", problem.string(), "--designs",
                a.string(), "--runs", "20", "--seed", "9", "--out", out.string()});
  };
  Result e = evaluate(a);
  REQUIRE(e.code == 0);
  CHECK(e.out.find("loaded 2 designs") != std::string::npos);
  CHECK(e.out.find("median_l2") != std::string::npos);
  const std::string csv = slurp(a / "evaluation.csv");
  CHECK(csv.find("# seed: 9\nmethod,run,theta_true_1,theta_hat_1,err_1,err_l2,status\n") !=
        std::string::npos);
  std::istringstream lines(csv);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) rows += line.rfind("d_opt,", 0) == 0 || line.rfind("inst,", 0) == 0;
  CHECK(rows == 40);

  REQUIRE(evaluate(b).code == 0);
  const std::string other = slurp(b / "evaluation.csv");
  CHECK(csv.substr(csv.find("\n# seed")) == other.substr(other.find("\n# seed")));
}

TEST_CASE("design on the harmonic benchmark fills the budget") {
  TempDir tmp;
  Result r = run({"design", "--problem", "harmonic_similar", "--criterion", "d_opt", "--seed",
                  "1", "--restarts", "1", "--out", tmp.path.string()});
  REQUIRE(r.code == 0);
  std::ifstream in(tmp.path / "d_opt.design");
  const auto d = oed::read_design(in, oed::load_problem("harmonic_similar").problem);
  CHECK(d.activations.size() == 8);
}

TEST_CASE("validate runs the oracle suite") {
  Result r = run({"validate", "--suite", "oracle"});
  CHECK(r.code == 0);
  CHECK(r.out.find("5 of 5 checks passed") != std::string::npos);
  for (const char* id : {"[ 1] PASS", "[ 3] PASS", "[ 5] PASS"})
    CHECK(r.out.find(id) != std::string::npos);
}
