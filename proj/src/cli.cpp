#include "oed/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "oed/design_io.hpp"
#include "oed/error.hpp"
#include "oed/evaluate.hpp"
#include "oed/parallel.hpp"
#include "oed/problem_file.hpp"
#include "oed/validation.hpp"

namespace oed {

namespace {

namespace fs = std::filesystem;

constexpr int kNumeric = 1;
constexpr int kUsage = 2;

// Library errors caused by the user's input rather than by the numerics.
bool is_usage_error(const Error& e) {
  return dynamic_cast<const ArgumentError*>(&e) ||
         dynamic_cast<const ConfigurationError*>(&e) ||
         dynamic_cast<const ParseError*>(&e);
}

std::vector<Criterion> parse_criteria(const std::string& list) {
  if (list == "all") return all_criteria();
  std::vector<Criterion> out;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const Criterion c = parse_criterion(name);
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  if (out.empty()) throw ArgumentError("empty criterion list");
  return out;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ArgumentError("cannot create output directory " + dir.string());
}

void save(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw ArgumentError("cannot write " + path.string());
}

struct Session {
  std::vector<std::string> argv;
  std::ostream& out;
  std::ostream& err;

  FileHeader header(std::uint64_t seed) const { return {argv, seed}; }
};

std::vector<std::pair<std::string, DiscreteDesign>> run_designs(
    const Session& s, const ProblemSetup& setup,
    const std::vector<Criterion>& criteria, const OptimizerOptions& opts,
    const fs::path& dir) {
  make_dir(dir);
  const DesignProblem problem = make_design_problem(setup);
  const FileHeader header = s.header(opts.seed);
  std::vector<std::pair<std::string, DiscreteDesign>> designs;
  for (Criterion c : criteria) {
    const std::string name = criterion_name(c);
    const std::string started = iso_timestamp();
    const RoundedDesign r = design_and_round(problem, c, opts);
    std::ostringstream relaxed, design, log;
    write_relaxed(r.relaxed.design, header, relaxed);
    write_design(r.design, header, design);
    write_log(r, c, header, started, log);
    save(dir / (name + ".relaxed"), relaxed.str());
    save(dir / (name + ".design"), design.str());
    save(dir / (name + ".log"), log.str());
    s.out << name << ": " << r.design.activations.size() << " activations, objective "
          << format_number(r.relaxed.value) << " -> " << (dir / (name + ".design")).string()
          << '\n';
    designs.emplace_back(name, r.design);
  }
  return designs;
}

void print_report(const Session& s, const EvalReport& report) {
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %9s %6s %14s %14s\n", "method", "completed",
                "failed", "median_l2", "mean_l2");
  s.out << line;
  for (const auto& m : report.summary()) {
    std::snprintf(line, sizeof line, "%-12s %9d %6d %14.6g %14.6g\n", m.method.c_str(),
                  m.completed, m.failed, m.median_l2, m.mean_l2);
    s.out << line;
  }
  const auto has = [&](const std::string& m) {
    return std::find(report.methods.begin(), report.methods.end(), m) != report.methods.end();
  };
  if (!has("multi_tilt")) return;
  for (const auto& m : report.methods) {
    if (m == "multi_tilt") continue;
    const SignTest t = sign_test(report, "multi_tilt", m);
    std::snprintf(line, sizeof line, "sign test multi_tilt vs %-6s %4d-%-4d p = %.3g\n",
                  m.c_str(), t.wins, t.losses, t.p_value);
    s.out << line;
  }
}

void run_evaluation(const Session& s, const ProblemSetup& setup,
                    const std::vector<std::pair<std::string, DiscreteDesign>>& designs,
                    int runs, std::uint64_t seed, const fs::path& dir) {
  make_dir(dir);
  const DesignProblem problem = make_design_problem(setup);
  const EvalReport report =
      mc_evaluate(problem.spec, designs, setup.prior.prior, problem.prior, runs, seed);
  std::ostringstream csv;
  write_header(s.header(seed), csv);
  write_csv(report, csv);
  const fs::path path = dir / "evaluation.csv";
  save(path, csv.str());
  print_report(s, report);
  s.out << "wrote " << path.string() << '\n';
}

std::vector<std::pair<std::string, DiscreteDesign>> load_designs(
    const Session& s, const ProblemSpec& spec, const fs::path& dir) {
  std::vector<std::pair<std::string, DiscreteDesign>> designs;
  std::string expected;
  for (Criterion c : all_criteria()) {
    const std::string file = criterion_name(c) + ".design";
    expected += " " + file;
    const fs::path path = dir / file;
    if (!fs::is_regular_file(path)) continue;
    std::ifstream in(path);
    designs.emplace_back(criterion_name(c), read_design(in, spec, path.string()));
  }
  if (designs.empty())
    throw ArgumentError("no design files in " + dir.string() + "; expected one or more of:" +
                        expected);
  s.out << "loaded " << designs.size() << " designs from " << dir.string() << '\n';
  return designs;
}

struct Figure {
  std::string problem;
  std::string title;
};

Figure figure(int n) {
  switch (n) {
    case 1: return {"harmonic_similar", "harmonic oscillators, sensors of similar quality"};
    case 2: return {"harmonic_uneven", "harmonic oscillators, equal noise levels"};
    case 3: return {"lv_lognormal", "Lotka-Volterra, log-normal prior"};
    default: return {"lv_mixture", "Lotka-Volterra, bimodal log-normal mixture prior"};
  }
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Session s{std::vector<std::string>(argv, argv + argc), out, err};

  CLI::App app{"Optimal experimental design for controlled ODE models", "oed"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Worker cap for parallel loops (default: $OED_THREADS)")
      ->check(CLI::PositiveNumber);

  std::function<int()> action;

  std::string problem, criteria = "all", out_dir = ".", designs_dir, suite;
  std::uint64_t seed = 0;
  int runs = 200, figure_no = 0;
  bool full_scale = false;
  OptimizerOptions opt;

  auto add_problem = [&](CLI::App* sub) {
    sub->add_option("--problem", problem, "Problem file or bundled name (e.g. harmonic_similar)")
        ->required();
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
  };
  auto add_optimizer = [&](CLI::App* sub) {
    sub->add_option("--restarts", opt.restarts, "Optimizer starts per relaxed solve")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--max-iters", opt.max_iters, "Projected-gradient iterations per start")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  CLI::App* design = app.add_subcommand("design", "Optimize and round designs");
  add_problem(design);
  design->add_option("--criterion", criteria,
                     "a_opt, d_opt, inst, tilt, multi_tilt, a comma list or all")
      ->capture_default_str();
  add_seed(design);
  design->add_option("--out", out_dir, "Output directory")->capture_default_str();
  add_optimizer(design);
  design->callback([&] {
    action = [&] {
      const ProblemSetup setup = load_problem(problem);
      opt.seed = seed;
      run_designs(s, setup, parse_criteria(criteria), opt, out_dir);
      return 0;
    };
  });

  CLI::App* evaluate = app.add_subcommand("evaluate", "Monte Carlo evaluation of saved designs");
  add_problem(evaluate);
  evaluate->add_option("--designs", designs_dir, "Directory with <criterion>.design files")
      ->required();
  evaluate->add_option("--runs", runs, "Monte Carlo runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_seed(evaluate);
  evaluate->add_option("--out", out_dir, "Output directory")->capture_default_str();
  evaluate->callback([&] {
    action = [&] {
      const ProblemSetup setup = load_problem(problem);
      run_evaluation(s, setup, load_designs(s, setup.problem, designs_dir), runs, seed,
                     out_dir);
      return 0;
    };
  });

  CLI::App* validate = app.add_subcommand("validate", "Run the acceptance checks");
  validate->add_option("--suite", suite, "oracle, gradients or benchmarks (default: all)")
      ->check(CLI::IsMember({"oracle", "gradients", "benchmarks"}));
  validate->add_option("--runs", runs, "Monte Carlo runs of the benchmark checks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_seed(validate);
  validate->callback([&] {
    action = [&] {
      std::vector<int> ids;
      for (Suite x : {Suite::Oracle, Suite::Gradients, Suite::Benchmarks})
        if (suite.empty() || parse_suite(suite) == x)
          for (int id : suite_checks(x)) ids.push_back(id);
      ValidationOptions vo;
      vo.seed = seed;
      vo.runs = runs;
      const auto results = run_checks(ids, vo, [&](const CheckResult& r) {
        print_result_line(r, out);
        out.flush();
      });
      out << '\n';
      print_summary(results, out);
      for (const auto& r : results)
        if (!r.passed) return kNumeric;
      return 0;
    };
  });

  CLI::App* reproduce = app.add_subcommand("reproduce", "Design and evaluate one benchmark scenario");
  reproduce->add_option("--figure", figure_no,
                        "1 harmonic similar, 2 harmonic uneven, 3 LV log-normal, 4 LV mixture")
      ->required()
      ->check(CLI::Range(1, 4));
  auto* runs_opt = reproduce->add_option("--runs", runs, "Monte Carlo runs")
                       ->check(CLI::PositiveNumber)
                       ->capture_default_str();
  reproduce->add_flag("--full-scale", full_scale, "Use 1000 Monte Carlo runs")
      ->excludes(runs_opt);
  add_seed(reproduce);
  reproduce->add_option("--out", out_dir, "Output directory (default: figure<N>)");
  add_optimizer(reproduce);
  reproduce->callback([&] {
    action = [&] {
      const Figure f = figure(figure_no);
      const fs::path dir = reproduce->count("--out") ? fs::path(out_dir)
                                                     : fs::path("figure" + std::to_string(figure_no));
      out << "figure " << figure_no << ": " << f.title << '\n';
      const ProblemSetup setup = load_problem(f.problem);
      opt.seed = seed;
      const auto designs = run_designs(s, setup, all_criteria(), opt, dir);
      run_evaluation(s, setup, designs, full_scale ? 1000 : runs, seed, dir);
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : kUsage;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_usage_error(e) ? kUsage : kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  }
}

int dispatch(int argc, const char* const* argv) {
  return dispatch(argc, argv, std::cout, std::cerr);
}

}  // namespace oed
