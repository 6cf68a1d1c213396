#include "oed/problem_file.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "oed/error.hpp"
#include "oed/models.hpp"

namespace oed {

namespace detail {
const std::map<std::string, std::string>& bundled_problem_files();
}

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r";
  size_t a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

class Document {
 public:
  Document(const std::string& text, std::string origin)
      : origin_(std::move(origin)) {
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string s = trim(raw.substr(0, raw.find('#')));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail(line, "malformed section header '" + s + "'");
        section = trim(s.substr(1, s.size() - 2));
        static const std::set<std::string> known = {"model", "control",
                                                    "sensors", "prior",
                                                    "budget"};
        if (!known.count(section))
          fail(line, "unknown section [" + section + "]");
        if (!sections_.insert(section).second)
          fail(line, "duplicate section [" + section + "]");
        continue;
      }
      size_t eq = s.find('=');
      if (eq == std::string::npos) fail(line, "expected 'key = value'");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (section.empty()) fail(line, "key '" + key + "' outside a section");
      if (key.empty()) fail(line, "empty key");
      auto [it, fresh] = entries_[section].emplace(key, Entry{value, line});
      if (!fresh)
        fail(line, "duplicate key '" + key + "' in [" + section + "]");
    }
    for (const char* s : {"model", "control", "sensors", "prior", "budget"})
      if (!sections_.count(s))
        throw ParseError(origin_ + ": missing section [" + std::string(s) + "]");
  }

  [[noreturn]] void fail(int line, const std::string& what) const {
    throw ParseError(origin_ + ":" + std::to_string(line) + ": " + what);
  }

  void restrict_keys(const std::string& section,
                     const std::set<std::string>& allowed) const {
    auto it = entries_.find(section);
    if (it == entries_.end()) return;
    for (const auto& [key, e] : it->second)
      if (!allowed.count(key))
        fail(e.line, "unknown key '" + key + "' in [" + section + "]");
  }

  bool has(const std::string& section, const std::string& key) const {
    auto it = entries_.find(section);
    return it != entries_.end() && it->second.count(key);
  }

  const Entry& get(const std::string& section, const std::string& key) const {
    auto it = entries_.find(section);
    if (it != entries_.end()) {
      auto jt = it->second.find(key);
      if (jt != it->second.end()) return jt->second;
    }
    throw ParseError(origin_ + ": missing key '" + key + "' in [" + section +
                     "]");
  }

  std::string text(const std::string& section, const std::string& key) const {
    return get(section, key).value;
  }

  std::vector<double> numbers(const std::string& section,
                              const std::string& key) const {
    const Entry& e = get(section, key);
    std::istringstream in(e.value);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      errno = 0;
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || errno == ERANGE || !std::isfinite(v))
        fail(e.line, "key '" + key + "': '" + tok + "' is not a finite number");
      out.push_back(v);
    }
    if (out.empty()) fail(e.line, "key '" + key + "' has no value");
    return out;
  }

  std::vector<double> numbers(const std::string& section,
                              const std::string& key, size_t count) const {
    std::vector<double> v = numbers(section, key);
    if (v.size() != count)
      fail(get(section, key).line, "key '" + key + "' expects " +
                                       std::to_string(count) + " values, got " +
                                       std::to_string(v.size()));
    return v;
  }

  double number(const std::string& section, const std::string& key) const {
    return numbers(section, key, 1)[0];
  }

  int integer(const std::string& section, const std::string& key) const {
    double v = number(section, key);
    if (v != std::floor(v) || std::abs(v) > 1e9)
      fail(get(section, key).line, "key '" + key + "' must be an integer");
    return static_cast<int>(v);
  }

  std::vector<int> integers(const std::string& section, const std::string& key,
                            size_t count) const {
    std::vector<int> out;
    const Entry& e = get(section, key);
    std::vector<double> v = numbers(section, key);
    if (v.size() == 1 && count > 1) v.assign(count, v[0]);
    if (v.size() != count)
      fail(e.line, "key '" + key + "' expects " + std::to_string(count) +
                       " values");
    for (double x : v) {
      if (x != std::floor(x) || std::abs(x) > 1e9)
        fail(e.line, "key '" + key + "' must hold integers");
      out.push_back(static_cast<int>(x));
    }
    return out;
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::set<std::string> sections_;
  std::map<std::string, std::map<std::string, Entry>> entries_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

Eigen::MatrixXd to_square(const std::vector<double>& v, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = v[i * n + j];
  return m;
}

std::set<std::string> model_keys(const std::string& name) {
  std::set<std::string> keys = {"name", "horizon", "x0"};
  if (name == "harmonic") keys.insert({"damping_1", "damping_2"});
  if (name == "lotka_volterra") keys.insert({"control_gain_1", "control_gain_2"});
  if (name == "linear_drift") keys.insert("dimension");
  return keys;
}

std::set<std::string> prior_keys(const std::string& type, int components) {
  std::set<std::string> keys = {"type", "orders", "center_orders"};
  if (type == "uniform_box") keys.insert({"lower", "upper"});
  if (type == "gaussian") keys.insert({"mean", "cov"});
  if (type == "lognormal") keys.insert({"log_mean", "log_cov"});
  if (type == "lognormal_mixture") {
    keys.insert("components");
    for (int i = 1; i <= components; ++i) {
      std::string s = std::to_string(i);
      keys.insert({"weight_" + s, "log_mean_" + s, "log_cov_" + s});
    }
  }
  return keys;
}

}  // namespace

ProblemSetup parse_problem_text(const std::string& text,
                                const std::string& origin) {
  Document doc(text, origin);

  // Model first: it fixes which keys the other sections may hold.
  const std::string name = doc.text("model", "name");
  doc.restrict_keys("model", model_keys(name));
  std::vector<double> coeffs;
  if (name == "harmonic")
    coeffs = {doc.number("model", "damping_1"), doc.number("model", "damping_2")};
  else if (name == "lotka_volterra")
    coeffs = {doc.number("model", "control_gain_1"),
              doc.number("model", "control_gain_2")};
  else if (name == "linear_drift")
    coeffs = {static_cast<double>(doc.integer("model", "dimension"))};
  else
    doc.fail(doc.get("model", "name").line, "unknown model '" + name + "'");

  ProblemSetup setup;
  ProblemSpec& spec = setup.problem;
  spec.model = make_model(name, coeffs);
  const int nx = spec.state_dim(), nu = spec.control_dim();
  const int ne = spec.sensor_count(), np = spec.param_dim();
  spec.horizon = doc.number("model", "horizon");
  spec.x0 = to_vector(doc.numbers("model", "x0", nx));

  doc.restrict_keys("control", {"intervals", "lower", "upper"});
  spec.control_intervals = doc.integer("control", "intervals");
  spec.control_lower = to_vector(doc.numbers("control", "lower", nu));
  spec.control_upper = to_vector(doc.numbers("control", "upper", nu));

  std::set<std::string> sensor_keys = {"count", "noise_order"};
  for (int d = 1; d <= ne; ++d) {
    sensor_keys.insert("sigma_" + std::to_string(d));
    sensor_keys.insert("variance_" + std::to_string(d));
  }
  doc.restrict_keys("sensors", sensor_keys);
  const int count = doc.integer("sensors", "count");
  if (count != ne)
    doc.fail(doc.get("sensors", "count").line,
             "model '" + name + "' has " + std::to_string(ne) + " sensors");
  for (int d = 1; d <= ne; ++d) {
    const std::string s = "sigma_" + std::to_string(d);
    const std::string v = "variance_" + std::to_string(d);
    const bool hs = doc.has("sensors", s), hv = doc.has("sensors", v);
    if (hs && hv)
      doc.fail(doc.get("sensors", v).line, "give either " + s + " or " + v);
    if (!hs && !hv)
      throw ParseError(origin + ": missing key '" + s + "' in [sensors]");
    const std::string& key = hs ? s : v;
    double x = doc.number("sensors", key);
    if (!(x > 0)) doc.fail(doc.get("sensors", key).line, key + " must be positive");
    spec.noise.sigma.push_back(hs ? x : std::sqrt(x));
  }
  spec.noise.order = doc.integers("sensors", "noise_order", ne);

  // Prior.
  const std::string type = doc.text("prior", "type");
  int components = 0;
  if (type == "lognormal_mixture") {
    components = doc.integer("prior", "components");
    if (components < 1)
      doc.fail(doc.get("prior", "components").line,
               "components must be positive");
  } else if (type != "uniform_box" && type != "gaussian" && type != "lognormal") {
    doc.fail(doc.get("prior", "type").line, "unknown prior type '" + type + "'");
  }
  doc.restrict_keys("prior", prior_keys(type, components));
  if (type == "uniform_box") {
    UniformBoxPrior p;
    p.lower = to_vector(doc.numbers("prior", "lower", np));
    p.upper = to_vector(doc.numbers("prior", "upper", np));
    setup.prior.prior = p;
  } else if (type == "gaussian") {
    GaussianPrior p;
    p.mean = to_vector(doc.numbers("prior", "mean", np));
    p.cov = to_square(doc.numbers("prior", "cov", np * np), np);
    setup.prior.prior = p;
  } else if (type == "lognormal") {
    LogNormalPrior p;
    p.log_mean = to_vector(doc.numbers("prior", "log_mean", np));
    p.log_cov = to_square(doc.numbers("prior", "log_cov", np * np), np);
    setup.prior.prior = p;
  } else {
    LogNormalMixturePrior p;
    for (int i = 1; i <= components; ++i) {
      const std::string s = std::to_string(i);
      p.weights.push_back(doc.number("prior", "weight_" + s));
      LogNormalPrior c;
      c.log_mean = to_vector(doc.numbers("prior", "log_mean_" + s, np));
      c.log_cov = to_square(doc.numbers("prior", "log_cov_" + s, np * np), np);
      p.components.push_back(c);
    }
    setup.prior.prior = p;
  }
  setup.prior.orders = doc.integers("prior", "orders", np);
  setup.prior.center_orders = doc.has("prior", "center_orders")
                                  ? doc.integers("prior", "center_orders", np)
                                  : std::vector<int>(np, 2);

  doc.restrict_keys("budget", {"activations", "min_separation", "weight_cells",
                               "steps_per_cell"});
  spec.budget = doc.integer("budget", "activations");
  spec.min_separation = doc.number("budget", "min_separation");
  spec.weight_cells = doc.integer("budget", "weight_cells");
  spec.steps_per_cell = doc.has("budget", "steps_per_cell")
                            ? doc.integer("budget", "steps_per_cell")
                            : 10;

  try {
    validate(spec);
    // Building the clouds validates the prior and its orders.
    build_prior(setup.prior.prior, setup.prior.orders);
    build_prior(setup.prior.prior, setup.prior.center_orders);
  } catch (const ConfigurationError& e) {
    throw ParseError(origin + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(origin + ": " + e.what());
  }
  return setup;
}

ProblemSetup parse_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open problem file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str(), path);
}

std::vector<std::string> bundled_problem_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : detail::bundled_problem_files())
    out.push_back(name);
  return out;
}

std::string bundled_problem_text(const std::string& name) {
  const auto& files = detail::bundled_problem_files();
  std::string key = name;
  if (key.size() > 5 && key.ends_with(".spec")) key.resize(key.size() - 5);
  auto it = files.find(key);
  if (it == files.end())
    throw ConfigurationError("unknown bundled problem '" + name + "'");
  return it->second;
}

ProblemSetup load_problem(const std::string& ref) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(ref, ec)) return parse_problem(ref);
  std::string text;
  try {
    text = bundled_problem_text(ref);
  } catch (const ConfigurationError&) {
    std::string names;
    for (const auto& n : bundled_problem_names()) names += " " + n;
    throw ArgumentError("'" + ref +
                        "' is neither a readable file nor a bundled problem "
                        "(available:" + names + ")");
  }
  return parse_problem_text(text, ref + ".spec");
}

}  // namespace oed
