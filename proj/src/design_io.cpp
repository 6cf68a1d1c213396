#include "oed/design_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <istream>
#include <ostream>
#include <sstream>

#include "oed/error.hpp"

namespace oed {

namespace {

// Whitespace-separated tokens of the non-comment lines, with line numbers
// for error messages.
class Tokens {
 public:
  Tokens(std::istream& in, std::string origin) : origin_(std::move(origin)) {
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      std::istringstream ss(line);
      std::string t;
      while (ss >> t) items_.push_back({t, no});
    }
  }

  bool done() const { return pos_ >= items_.size(); }

  std::string word() {
    if (done()) fail(last_line(), "unexpected end of file");
    return items_[pos_++].text;
  }

  void expect(const std::string& w) {
    const int line = next_line();
    if (word() != w) fail(line, "expected '" + w + "'");
  }

  double number() {
    const int line = next_line();
    const std::string t = word();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (*end != '\0' || !std::isfinite(v)) fail(line, "bad number '" + t + "'");
    return v;
  }

  int integer() {
    const int line = next_line();
    const double v = number();
    if (v != std::floor(v) || v < 0 || v > 1e9) fail(line, "expected a count");
    return static_cast<int>(v);
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ParseError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }
  int next_line() const { return done() ? last_line() : items_[pos_].line; }

 private:
  int last_line() const { return items_.empty() ? 1 : items_.back().line; }

  struct Item {
    std::string text;
    int line;
  };
  std::vector<Item> items_;
  size_t pos_ = 0;
  std::string origin_;
};

Eigen::MatrixXd read_matrix(Tokens& t, const std::string& key, int rows, int cols) {
  const int line = t.next_line();
  t.expect(key);
  const int r = t.integer(), c = t.integer();
  if (r != rows || c != cols)
    t.fail(line, key + " block is " + std::to_string(r) + " x " + std::to_string(c) +
                     ", expected " + std::to_string(rows) + " x " + std::to_string(cols));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = t.number();
  return m;
}

void write_matrix(const std::string& key, const Eigen::MatrixXd& m, std::ostream& out) {
  out << key << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_number(m(i, j));
    out << '\n';
  }
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_header(const FileHeader& header, std::ostream& out) {
  out << "# argv:";
  for (const auto& a : header.argv) out << ' ' << a;
  out << "\n# seed: " << header.seed << '\n';
}

void write_design(const DiscreteDesign& design, const FileHeader& header,
                  std::ostream& out) {
  write_header(header, out);
  write_matrix("controls", design.u, out);
  out << "activations " << design.activations.size() << '\n';
  for (const auto& a : design.activations)
    out << format_number(a.time) << ' ' << a.sensor + 1 << '\n';
}

DiscreteDesign read_design(std::istream& in, const ProblemSpec& spec,
                           const std::string& origin) {
  Tokens t(in, origin);
  DiscreteDesign d;
  d.u = read_matrix(t, "controls", spec.control_intervals, spec.control_dim());
  const int line = t.next_line();
  t.expect("activations");
  const int n = t.integer();
  for (int i = 0; i < n; ++i) {
    const int l = t.next_line();
    const double time = t.number();
    const int sensor = t.integer();
    if (sensor < 1 || sensor > spec.sensor_count())
      t.fail(l, "sensor " + std::to_string(sensor) + " out of range");
    const int cell = static_cast<int>(std::lround(time / spec.cell_width() - 0.5));
    if (cell < 0 || cell >= spec.weight_cells ||
        std::abs(spec.cell_midpoint(cell) - time) > 1e-9)
      t.fail(l, "time " + format_number(time) + " is not a cell midpoint");
    d.activations.push_back({spec.cell_midpoint(cell), sensor - 1, cell});
  }
  if (!t.done()) t.fail(t.next_line(), "trailing content");
  std::string why;
  if (!is_feasible(d, spec, &why)) t.fail(line, "infeasible design: " + why);
  return d;
}

void write_relaxed(const RelaxedDesign& design, const FileHeader& header,
                   std::ostream& out) {
  write_header(header, out);
  write_matrix("controls", design.u, out);
  write_matrix("weights", design.w, out);
}

RelaxedDesign read_relaxed(std::istream& in, const ProblemSpec& spec,
                           const std::string& origin) {
  Tokens t(in, origin);
  RelaxedDesign d;
  d.u = read_matrix(t, "controls", spec.control_intervals, spec.control_dim());
  d.w = read_matrix(t, "weights", spec.weight_cells, spec.sensor_count());
  if (!t.done()) t.fail(t.next_line(), "trailing content");
  return d;
}

void write_log(const RoundedDesign& result, Criterion criterion,
               const FileHeader& header, const std::string& timestamp,
               std::ostream& out) {
  write_header(header, out);
  out << "# started " << timestamp << '\n';
  out << "criterion " << criterion_name(criterion) << '\n';
  out << "relaxed_solves " << result.solves << '\n';
  out << "best_restart " << result.relaxed.best_restart << '\n';
  out << "objective " << format_number(result.relaxed.value) << '\n';
  out << "activations " << result.design.activations.size() << '\n';
  for (size_t r = 0; r < result.relaxed.restarts.size(); ++r) {
    const auto& tr = result.relaxed.restarts[r];
    out << "restart " << r << " iterations " << tr.iterations << " converged "
        << (tr.converged ? 1 : 0) << " projected_gradient "
        << format_number(tr.projected_gradient_norm);
    if (!tr.failure.empty()) out << " failure " << tr.failure;
    out << '\n';
    for (double v : tr.values) out << "  " << format_number(v) << '\n';
  }
}

std::string iso_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace oed
