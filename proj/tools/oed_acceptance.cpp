// Runs the acceptance checks and prints one PASS/FAIL line per check.
//   oed_acceptance [--suite oracle|gradients|benchmarks] [--runs N] [--seed S]
#include <CLI11.hpp>

#include <iostream>

#include <oed/error.hpp>
#include <oed/validation.hpp>

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks", "oed_acceptance"};
  std::string suite;
  oed::ValidationOptions opts;
  app.add_option("--suite", suite)->check(CLI::IsMember({"oracle", "gradients", "benchmarks"}));
  app.add_option("--runs", opts.runs)->check(CLI::PositiveNumber);
  app.add_option("--seed", opts.seed);
  CLI11_PARSE(app, argc, argv);

  std::vector<int> ids;
  for (auto s : {oed::Suite::Oracle, oed::Suite::Gradients, oed::Suite::Benchmarks})
    if (suite.empty() || oed::parse_suite(suite) == s)
      for (int id : oed::suite_checks(s)) ids.push_back(id);

  const auto results = oed::run_checks(ids, opts, [](const oed::CheckResult& r) {
    oed::print_result_line(r, std::cout);
    std::cout.flush();
  });
  std::cout << '\n';
  oed::print_summary(results, std::cout);
  for (const auto& r : results)
    if (!r.passed) return 1;
  return 0;
}
