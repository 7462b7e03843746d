#include "opdiff/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <list>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "opdiff/error.hpp"
#include "opdiff/experiments.hpp"
#include "opdiff/frechet.hpp"
#include "opdiff/moi.hpp"

namespace opdiff::cli {

namespace {

using nlohmann::json;

[[noreturn]] void violation(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::schema_violation, where + ": " + what);
}

const std::map<std::string, Command> kCommands = {
    {"derive", Command::derive}, {"taylor", Command::taylor}, {"verify", Command::verify}, {"experiment", Command::experiment}};

std::string command_name(Command c) {
  for (const auto& [name, value] : kCommands) {
    if (value == c) return name;
  }
  return "derive";
}

// Reads typed keys with defaults from one JSON object, records the effective
// values, and rejects keys nobody asked for.
class ParamReader {
 public:
  ParamReader(const json& raw, std::string path) : raw_(raw), path_(std::move(path)) {
    if (!raw_.is_object()) violation(path_.empty() ? "/" : path_, "expected an object");
  }

  double number(const std::string& key, double fallback) {
    const double v = lookup(key, json(fallback), [](const json& j) { return j.is_number(); }, "a number").get<double>();
    normalized_[key] = v;
    return v;
  }

  double positive(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v > 0.0)) violation(where(key), "must be positive");
    return v;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo) {
    const auto v =
        lookup(key, json(fallback), [](const json& j) { return j.is_number_integer(); }, "an integer").get<std::int64_t>();
    if (v < lo) violation(where(key), "must be at least " + std::to_string(lo));
    normalized_[key] = v;
    return v;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const auto& j = lookup(key, json(fallback), is_number_list, "a non-empty list of numbers");
    auto v = j.get<std::vector<double>>();
    normalized_[key] = v;
    return v;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> fallback) {
    const auto& j = lookup(key, json(fallback), [](const json& x) {
      return x.is_array() && !x.empty() && std::all_of(x.begin(), x.end(), [](const json& e) { return e.is_number_integer(); });
    }, "a non-empty list of integers");
    auto v = j.get<std::vector<std::int64_t>>();
    normalized_[key] = v;
    return v;
  }

  /// [lo, hi] with lo < hi.
  std::pair<double, double> interval(const std::string& key, std::pair<double, double> fallback) {
    const auto v = numbers(key, {fallback.first, fallback.second});
    if (v.size() != 2 || !(v[0] < v[1])) violation(where(key), "expected [lo, hi] with lo < hi");
    return {v[0], v[1]};
  }

  /// {"lo", "hi", "step"} expanded by uniform_grid.
  std::vector<double> grid(const std::string& key, double lo, double hi, double step) {
    const json fallback = {{"lo", lo}, {"hi", hi}, {"step", step}};
    const json& raw = raw_.contains(key) ? raw_.at(key) : fallback;
    seen_.insert(key);
    ParamReader sub(raw, where(key));
    const double a = sub.number("lo", lo);
    const double b = sub.number("hi", hi);
    const double s = sub.positive("step", step);
    if (b < a) violation(where(key), "hi below lo");
    if ((b - a) / s > 5e6) violation(where(key), "more than 5e6 grid points");
    normalized_[key] = sub.finish();
    return uniform_grid(a, b, s);
  }

  bool has(const std::string& key) const { return raw_.contains(key); }

  json finish() {
    for (const auto& [key, value] : raw_.items()) {
      if (!seen_.contains(key)) violation(where(key), "unknown field");
    }
    return normalized_;
  }

  std::string where(const std::string& key) const { return path_ + "/" + key; }

 private:
  static bool is_number_list(const json& j) {
    return j.is_array() && !j.empty() && std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_number(); });
  }

  template <typename Check>
  const json& lookup(const std::string& key, const json& fallback, Check check, const char* expected) {
    seen_.insert(key);
    if (!raw_.contains(key)) {
      fallbacks_.push_back(fallback);
      return fallbacks_.back();
    }
    const json& v = raw_.at(key);
    if (!check(v)) violation(where(key), std::string("expected ") + expected);
    return v;
  }

  const json& raw_;
  std::string path_;
  std::set<std::string> seen_;
  json normalized_ = json::object();
  std::list<json> fallbacks_;
};

const std::vector<double> kDefaultTGrid = {1e-1, 1e-2, 1e-3, 1e-4};

json normalize_params(Command command, const std::string& experiment, const json& raw) {
  ParamReader r(raw, "/params");
  switch (command) {
    case Command::derive:
      if (r.has("spectrum")) r.interval("spectrum", {-1.0, 1.0});
      if (r.has("fd_step")) r.positive("fd_step", 1e-3);
      r.positive("fd_tolerance", 1e-4);
      break;
    case Command::taylor:
      if (r.has("spectrum")) r.interval("spectrum", {-1.0, 1.0});
      r.integer("trials", 1, 1);
      r.positive("scale", 0.1);
      r.positive("tolerance", 1e-8);
      break;
    case Command::verify:
      if (r.has("spectrum")) r.interval("spectrum", {-1.0, 1.0});
      r.numbers("t_grid", kDefaultTGrid);
      r.integer("directions", 4, 1);
      r.integer("auxiliary_samples", 2, 1);
      r.positive("slope_threshold", 1.8);
      r.positive("noise_factor", 1.05);
      break;
    case Command::experiment:
      if (experiment == "rank_one_check") {
        r.integer("m", 1, 0);
        r.integer("k", 0, 0);
        r.number("t", 0.5);
        r.interval("spectrum", {-10.0, 10.0});
      } else if (experiment == "necessity_probe") {
        r.grid("lambda_grid", 0.0, 100.0, 0.1);
        r.numbers("t_grid", {1e-1, 1e-2, 1e-3, 1e-4, 1e-5});
        r.positive("epsilon", 0.05);
      } else if (experiment == "mollifier_convergence") {
        r.numbers("eps_list", {0.5, 0.1, 0.02});
        r.grid("grid", -10.0, 10.0, 0.01);
        r.integer("quadrature_nodes", MollifyOptions{}.quadrature_nodes, 3);
      } else if (experiment == "norm_bound_probe") {
        r.integer("trials", 20, 1);
        r.numbers("eps_list", NormBoundOptions{}.eps_list);
        r.interval("spectrum", {-3.0, 3.0});
      } else if (experiment == "commutative_counterexample") {
        r.integer("resolution", 1000, 1);
        r.integers("k_list", {1, 10, 100});
        r.numbers("contrast_t", {1e-1, 1e-2, 1e-3, 1e-4});
      }
      break;
  }
  return r.finish();
}

bool needs_function(Command command, const std::string& experiment) {
  return !(command == Command::experiment && experiment == "commutative_counterexample");
}

bool uses_p(Command command, const std::string& experiment) {
  if (command != Command::experiment) return true;
  return experiment == "norm_bound_probe" || experiment == "commutative_counterexample";
}

json p_to_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

std::vector<double> spectrum_points(const json& params, int dim) {
  const auto s = params.at("spectrum").get<std::vector<double>>();
  return golden_ratio_points(static_cast<std::size_t>(dim), s[0], s[1]);
}

HermitianOperator base_operator(const RunConfig& c, std::uint64_t seed) {
  if (c.params.contains("spectrum")) return random_hermitian(seed, c.dim, spectrum_points(c.params, c.dim));
  return random_hermitian(seed, c.dim);
}

ScalarFunction config_function(const RunConfig& c) { return function_from_spec(*c.function); }

ExperimentReport run_derive(const RunConfig& c) {
  const auto f = config_function(c);
  const SchattenIndex p(c.p);
  const auto a = base_operator(c, c.seed);
  const auto dirs = gaussian_directions(c.seed + 1, c.dim, p, c.n);
  std::vector<Matrix> xs;
  for (const auto& d : dirs) xs.push_back(d.x.matrix());
  const FrechetOptions fo{c.diagnostics_mode, {}};
  const Matrix d = frechet_derivative(f, c.n, a, xs, fo);

  ExperimentReport r;
  r.experiment_id = "derive";
  r.anchor = "D^n f(A)[X_1..X_n] as a symmetrized multiple operator integral";
  r.config = {{"function", f.spec()}, {"operator", matrix_to_json(a.matrix())}};
  r.add("derivative", r.anchor, matrix_to_json(d));
  r.add("derivative_schatten_norm", r.anchor, schatten_norm(d, p));

  if (c.n <= 4) {
    const std::vector<Matrix> same(static_cast<std::size_t>(c.n), xs.front());
    const Matrix diag = frechet_derivative(f, c.n, a, same, fo);
    const double h = c.params.contains("fd_step") ? c.params.at("fd_step").get<double>() : default_fd_step(c.n, a);
    const Matrix fd = gateaux_fd(f, c.n, a, dirs.front().x, h);
    // Relative above unit size, absolute below.
    const double gap = (diag - fd).norm() / std::max(1.0, diag.norm());
    const double tol = c.params.at("fd_tolerance").get<double>();
    r.add("fd_step", "central finite differences of t -> f(A + tX)", h);
    r.add("fd_scaled_gap", "central finite differences of t -> f(A + tX)", gap);
    r.verdict = gap <= tol ? Verdict::pass : Verdict::fail;
    r.verdict_detail = gap <= tol ? "finite differences agree" : "finite differences disagree";
  } else {
    r.verdict = Verdict::informational;
    r.verdict_detail = "no finite-difference stencil above order 4";
  }
  return r;
}

ExperimentReport run_taylor(const RunConfig& c) {
  const auto f = config_function(c);
  const SchattenIndex p(c.p);
  const auto trials = c.params.at("trials").get<int>();
  const double scale = c.params.at("scale").get<double>();
  const double tol = c.params.at("tolerance").get<double>();

  std::vector<double> index, gaps, remainders;
  for (int s = 0; s < trials; ++s) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(s);
    const auto a = base_operator(c, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const auto x = random_direction(rng, c.dim, p) * scale;
    const auto expansion = taylor_expand(f, c.n, a, x);
    const Matrix exact = apply_function(f, a + x);
    index.push_back(s);
    gaps.push_back(relative_frobenius_gap(expansion.approximation + expansion.remainder, exact));
    remainders.push_back(schatten_norm(expansion.remainder, p));
  }
  const double worst = *std::max_element(gaps.begin(), gaps.end());

  ExperimentReport r;
  r.experiment_id = "taylor";
  r.anchor = "f(A+X) = sum_{m<n} D^m f(A)[X..X]/m! + T^{A+X,A..A}_{f^[n]}(X..X)";
  r.config = {{"function", f.spec()}};
  r.add("identity_gap", r.anchor, make_series("trial", index, "relative_gap", gaps));
  r.add("remainder_norm", r.anchor, make_series("trial", index, "remainder_p_norm", remainders));
  r.add("max_identity_gap", r.anchor, worst);
  r.verdict = worst < tol ? Verdict::pass : Verdict::fail;
  r.verdict_detail = worst < tol ? "identity holds" : "identity gap above tolerance";
  return r;
}

ExperimentReport run_verify(const RunConfig& c) {
  const auto f = config_function(c);
  const SchattenIndex p(c.p);
  const auto a = base_operator(c, c.seed);
  const auto t_grid = c.params.at("t_grid").get<std::vector<double>>();
  const auto dirs = gaussian_directions(c.seed + 1, c.dim, p, c.params.at("directions").get<int>());
  ReportOptions options;
  options.seed = c.seed;
  options.auxiliary_samples = c.params.at("auxiliary_samples").get<int>();
  options.slope_threshold = c.params.at("slope_threshold").get<double>();
  options.noise_factor = c.params.at("noise_factor").get<double>();
  const auto report = differentiability_report(f, c.n, a, p, dirs, t_grid, options);

  ExperimentReport r;
  r.experiment_id = "verify";
  r.anchor = "||remainder of order n|| = o(t ||X||_p) uniformly over sampled directions";
  r.config = {{"function", f.spec()}, {"operator", matrix_to_json(a.matrix())}};
  r.add("worst_ratio", r.anchor, make_series("t", t_grid, "worst_ratio", report.worst_ratio));
  r.add("slope_estimate", r.anchor, report.to_json().at("slope_estimate"));
  r.add("monotone", r.anchor, report.monotone);
  r.add("samples", r.anchor, report.to_json().at("samples"));
  r.verdict = report.pass ? Verdict::pass : Verdict::fail;
  r.verdict_detail = report.verdict();
  r.notes.push_back("uniformity is checked on the sampled directions only");
  return r;
}

ExperimentReport run_experiment(const RunConfig& c) {
  const auto& q = c.params;
  const std::string& id = c.experiment;
  if (id == "rank_one_check") {
    const auto s = q.at("spectrum").get<std::vector<double>>();
    const DiagonalModel model(golden_ratio_points(static_cast<std::size_t>(c.dim), s[0], s[1]));
    return rank_one_check(config_function(c), q.at("m").get<int>(), model, q.at("k").get<std::size_t>(),
        q.at("t").get<double>());
  }
  if (id == "necessity_probe") {
    const auto& g = q.at("lambda_grid");
    const auto lambdas = uniform_grid(g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("step").get<double>());
    return necessity_probe(config_function(c), c.n, lambdas, q.at("t_grid").get<std::vector<double>>(),
        NecessityOptions{q.at("epsilon").get<double>()});
  }
  if (id == "mollifier_convergence") {
    const auto& g = q.at("grid");
    const auto grid = uniform_grid(g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("step").get<double>());
    MollifierConvergenceOptions options;
    options.mollify.quadrature_nodes = q.at("quadrature_nodes").get<int>();
    return mollifier_convergence(config_function(c), c.n, q.at("eps_list").get<std::vector<double>>(), grid, options);
  }
  if (id == "norm_bound_probe") {
    NormBoundOptions options;
    options.eps_list = q.at("eps_list").get<std::vector<double>>();
    const auto a = random_hermitian(c.seed, c.dim, spectrum_points(q, c.dim));
    return norm_bound_probe(config_function(c), c.n, SchattenIndex(c.p), a, q.at("trials").get<int>(), c.seed, options);
  }
  const auto ks = q.at("k_list").get<std::vector<std::size_t>>();
  return commutative_counterexample(SchattenIndex(c.p), q.at("resolution").get<std::size_t>(), ks,
      q.at("contrast_t").get<std::vector<double>>());
}

void write_atomic(const std::filesystem::path& target, const std::string& payload) {
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << payload;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  json j = {{"schema_version", kConfigSchemaVersion}, {"command", command_name(command)}, {"n", n}, {"p", p_to_json(p)},
      {"dim", dim}, {"seed", seed}, {"diagnostics_mode", diagnostics_mode}, {"params", params}};
  if (command == Command::experiment) j["experiment"] = experiment;
  if (function) j["function"] = *function;
  return j;
}

RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) violation("/", "config must be an object");
  static const std::set<std::string> known = {"schema_version", "command", "experiment", "function", "n", "p", "dim",
      "seed", "diagnostics_mode", "params", "output"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) violation("/" + key, "unknown field");
  }
  if (!j.contains("schema_version")) violation("/schema_version", "missing");
  if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kConfigSchemaVersion) {
    violation("/schema_version", "unsupported, expected " + std::to_string(kConfigSchemaVersion));
  }

  RunConfig c;
  if (!j.contains("command")) violation("/command", "missing");
  if (!j.at("command").is_string() || !kCommands.contains(j.at("command").get<std::string>())) {
    violation("/command", "expected one of derive, taylor, verify, experiment");
  }
  c.command = kCommands.at(j.at("command").get<std::string>());

  if (c.command == Command::experiment) {
    if (!j.contains("experiment") || !j.at("experiment").is_string()) violation("/experiment", "missing experiment id");
    c.experiment = j.at("experiment").get<std::string>();
    const auto catalog = list_experiments();
    if (std::none_of(catalog.begin(), catalog.end(), [&](const auto& e) { return e.id == c.experiment; })) {
      violation("/experiment", "unknown experiment '" + c.experiment + "'");
    }
  } else if (j.contains("experiment")) {
    violation("/experiment", "only valid with command experiment");
  }

  auto read_int = [&](const char* key, int lo, int fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) violation(std::string("/") + key, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > std::numeric_limits<int>::max()) violation(std::string("/") + key, "out of range");
    return static_cast<int>(x);
  };
  c.n = read_int("n", 1, 1);
  c.dim = read_int("dim", 1, 6);
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      violation("/seed", "expected a nonnegative integer");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("diagnostics_mode")) {
    if (!j.at("diagnostics_mode").is_boolean()) violation("/diagnostics_mode", "expected a boolean");
    c.diagnostics_mode = j.at("diagnostics_mode").get<bool>();
  }

  if (j.contains("p")) {
    const auto& v = j.at("p");
    if (v.is_string() && v.get<std::string>() == "inf") {
      c.p = std::numeric_limits<double>::infinity();
    } else if (v.is_number()) {
      c.p = v.get<double>();
    } else {
      violation("/p", "expected a number or \"inf\"");
    }
  }
  if (uses_p(c.command, c.experiment)) {
    const bool diagnostic_p = c.p == 1.0 || std::isinf(c.p);
    if (!(c.p > 1.0 && std::isfinite(c.p)) && !(c.diagnostics_mode && diagnostic_p)) {
      std::ostringstream msg;
      msg << "/p: p = " << c.p << " outside 1 < p < inf"
          << (diagnostic_p ? " (p = 1 and p = inf need diagnostics_mode)" : "");
      throw Error(ErrorKind::invalid_p, msg.str());
    }
  }

  if (j.contains("function")) {
    json spec = j.at("function");
    if (spec.is_string()) spec = json{{"id", spec}, {"params", json::object()}};
    if (!spec.is_object()) violation("/function", "expected an id string or {id, params}");
    try {
      c.function = make_function(spec.at("id").get<std::string>(), spec.value("params", json::object())).spec();
    } catch (const Error& e) {
      throw Error(e.kind(), "/function: " + e.detail());
    } catch (const json::exception& e) {
      violation("/function", e.what());
    }
  } else if (needs_function(c.command, c.experiment)) {
    violation("/function", "missing");
  }

  c.params = normalize_params(c.command, c.experiment, j.value("params", json::object()));

  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (!o.is_object()) violation("/output", "expected an object");
    if (o.contains("dir")) {
      if (!o.at("dir").is_string()) violation("/output/dir", "expected a string");
      c.out_dir = o.at("dir").get<std::string>();
    }
    if (o.contains("csv")) {
      if (!o.at("csv").is_boolean()) violation("/output/csv", "expected a boolean");
      c.csv = o.at("csv").get<bool>();
    }
    for (const auto& [key, value] : o.items()) {
      if (key != "dir" && key != "csv") violation("/output/" + key, "unknown field");
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) violation("/", "cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    violation("/", "parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_config(j);
}

std::vector<ExperimentReport> execute(const RunConfig& config) {
  ExperimentReport r;
  switch (config.command) {
    case Command::derive: r = run_derive(config); break;
    case Command::taylor: r = run_taylor(config); break;
    case Command::verify: r = run_verify(config); break;
    case Command::experiment: r = run_experiment(config); break;
  }
  r.config["run_config"] = config.to_json();
  return {std::move(r)};
}

int exit_status(const std::vector<ExperimentReport>& reports) {
  const bool failed =
      std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.verdict == Verdict::fail; });
  return failed ? 2 : 0;
}

std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const std::filesystem::path& dir,
    std::uint64_t seed, bool csv) {
  std::filesystem::create_directories(dir);
  const std::string stem = report.experiment_id + "_seed" + std::to_string(seed);
  std::vector<std::filesystem::path> written;
  written.push_back(dir / (stem + ".json"));
  write_atomic(written.back(), report.to_json().dump(2) + "\n");
  if (csv) {
    const auto table = report.to_csv();
    if (!table.empty()) {
      written.push_back(dir / (stem + ".csv"));
      write_atomic(written.back(), table);
    }
  }
  return written;
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Higher-order Frechet derivatives of matrix functions"};
  app.name("opdiff");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool diagnostics = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--out", out_dir, "output directory for reports");
  app.add_flag("--diagnostics-mode", diagnostics, "allow p = 1, p = inf and insufficient smoothness");
  auto* list = app.add_subcommand("list-experiments", "print the experiment catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  if (list->parsed()) {
    for (const auto& entry : list_experiments()) out << format_catalog_entry(entry) << '\n';
    return 0;
  }
  if (config_path.empty()) {
    err << "error: --config is required\n" << app.help();
    return 1;
  }

  try {
    std::ifstream in(config_path);
    if (!in) violation("/", "cannot read config file " + config_path);
    json raw;
    try {
      raw = json::parse(in);
    } catch (const json::parse_error& e) {
      violation("/", "parse error at byte " + std::to_string(e.byte));
    }
    if (diagnostics && raw.is_object()) raw["diagnostics_mode"] = true;
    if (seed && raw.is_object()) raw["seed"] = *seed;
    auto config = parse_config(raw);
    if (out_dir) config.out_dir = *out_dir;

    const auto reports = execute(config);
    for (const auto& r : reports) {
      const auto files = write_report(r, config.out_dir, config.seed, config.csv);
      out << r.experiment_id << ": " << to_string(r.verdict) << " (" << r.verdict_detail << ") -> "
          << files.front().string() << '\n';
    }
    return exit_status(reports);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace opdiff::cli
