#include <doctest.h>

#include <sstream>

#include <oed/design_io.hpp>
#include <oed/error.hpp>

using namespace oed;

namespace {

ProblemSpec small_spec() {
  ProblemSpec spec = benchmark_model("harmonic", "similar");
  spec.control_intervals = 3;
  spec.weight_cells = 12;
  spec.budget = 3;
  spec.min_separation = 1.0;
  return spec;
}

DiscreteDesign sample_design(const ProblemSpec& spec) {
  DiscreteDesign d;
  d.u = Eigen::MatrixXd(3, 1);
  d.u << 0.1, 1.0 / 3.0, 0.9;
  d.activations = {{spec.cell_midpoint(1), 0, 1},
                   {spec.cell_midpoint(1), 1, 1},
                   {spec.cell_midpoint(7), 1, 7}};
  return d;
}

std::string design_text(const std::string& body) {
  return "# argv: oed design\n# seed: 3\ncontrols 3 1\n0.1\n0.2\n0.3\n" + body;
}

void expect_error(const std::string& text, const ProblemSpec& spec, const std::string& what) {
  std::istringstream in(text);
  CHECK_THROWS_WITH_AS(read_design(in, spec, "d.design"), doctest::Contains(what.c_str()), ParseError);
}

}  // namespace

TEST_CASE("design files round trip") {
  const ProblemSpec spec = small_spec();
  const DiscreteDesign d = sample_design(spec);
  std::ostringstream out;
  write_design(d, FileHeader{{"oed", "design", "--seed", "3"}, 3}, out);
  const std::string text = out.str();
  CHECK(text.rfind("# argv: oed design --seed 3\n# seed: 3\n", 0) == 0);
  CHECK(text.find("0.33333333333333331") != std::string::npos);
  CHECK(text.find("\nactivations 3\n") != std::string::npos);

  std::istringstream in(text);
  DiscreteDesign back = read_design(in, spec);
  CHECK(back.u == d.u);
  CHECK(back.activations == d.activations);
}

TEST_CASE("relaxed files round trip") {
  const ProblemSpec spec = small_spec();
  RelaxedDesign d{Eigen::MatrixXd::Random(3, 1), Eigen::MatrixXd::Random(12, 2).cwiseAbs()};
  std::ostringstream out;
  write_relaxed(d, FileHeader{{"oed"}, 0}, out);
  std::istringstream in(out.str());
  RelaxedDesign back = read_relaxed(in, spec);
  CHECK(back.u == d.u);
  CHECK(back.w == d.w);

  std::istringstream wrong("controls 3 1\n0\n0\n0\nweights 11 2\n");
  CHECK_THROWS_WITH_AS(read_relaxed(wrong, spec, "r"), doctest::Contains("r:5: weights block"),
                       ParseError);
}

TEST_CASE("malformed design files") {
  const ProblemSpec spec = small_spec();
  const std::string t1 = "0.41666666666666669";  // midpoint of cell 0
  expect_error("controls 2 1\n0\n0\n", spec, "d.design:1: controls block is 2 x 1");
  expect_error(design_text("activations 1\n" + t1 + " 3\n"), spec, "d.design:8: sensor 3");
  expect_error(design_text("activations 1\n0.5 1\n"), spec, "d.design:8: time 0.5 is not a cell midpoint");
  expect_error(design_text("activations 2\n" + t1 + " 1\n"), spec, "unexpected end of file");
  expect_error(design_text("activations 1\n" + t1 + " 1\nextra\n"), spec, "d.design:9: trailing");
  expect_error(design_text("activations 1\n" + t1 + " x\n"), spec, "bad number 'x'");
  // 1.25 is 0.83 after the first activation, inside the separation
  expect_error(design_text("activations 2\n" + t1 + " 1\n1.25 2\n"), spec,
               "d.design:7: infeasible design");
  std::istringstream ok(design_text("activations 0\n"));
  CHECK(read_design(ok, spec).activations.empty());
}

TEST_CASE("optimization log") {
  const ProblemSpec spec = small_spec();
  RoundedDesign r;
  r.design = sample_design(spec);
  r.solves = 2;
  r.relaxed.value = -1.5;
  r.relaxed.restarts.resize(1);
  r.relaxed.restarts[0].values = {0.5, -1.5};
  r.relaxed.restarts[0].iterations = 1;
  std::ostringstream out;
  write_log(r, Criterion::Tilt, FileHeader{{"oed"}, 9}, "2024-01-02T03:04:05Z", out);
  const std::string log = out.str();
  CHECK(log.find("# seed: 9\n# started 2024-01-02T03:04:05Z\ncriterion tilt\n") != std::string::npos);
  CHECK(log.find("relaxed_solves 2\n") != std::string::npos);
  CHECK(log.find("activations 3\n") != std::string::npos);
  CHECK(log.find("  -1.5\n") != std::string::npos);

  const std::string ts = iso_timestamp();
  CHECK(ts.size() == 20);
  CHECK(ts[10] == 'T');
  CHECK(ts.back() == 'Z');
  CHECK(format_number(0.1) == "0.10000000000000001");
}
