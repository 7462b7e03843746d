#include "opdiff/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "opdiff/error.hpp"
#include "opdiff/frechet.hpp"
#include "opdiff/moi.hpp"

namespace opdiff {

namespace {

constexpr const char* kSampledNote =
    "finite truncation: suprema over all k and all reals are replaced by maxima over the sampled set";

const char* kRankOneAnchor = "Eq. derivative_at_Q_k";
const char* kRankOneZeroAnchor = "Eq. 0-derivative_at_Q_k";
const char* kNecessityAnchor = "necessity: |f^(n-1)(l+t) - f^(n-1)(l) - t f^(n)(l)| <= eps |t| uniformly";
const char* kLemmaAnchor = "Lemma convolution_lemma";
const char* kGammaAnchor = "Eq. Gamma, C_{p,n} ||(f_eps - f)^(n)||_inf bound";
const char* kCommutativeAnchor = "Comment 2";

void check_decreasing(std::span<const double> values, const char* what) {
  if (values.empty()) throw Error(ErrorKind::degenerate_grid, std::string(what) + " is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) throw Error(ErrorKind::degenerate_grid, std::string(what) + " must be positive");
    if (i > 0 && !(values[i] < values[i - 1])) {
      throw Error(ErrorKind::degenerate_grid, std::string(what) + " must decrease strictly");
    }
  }
}

double min_gap(std::span<const double> grid) {
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] > sorted[i - 1]) gap = std::min(gap, sorted[i] - sorted[i - 1]);
  }
  return gap;
}

}  // namespace

DiagonalModel::DiagonalModel(std::vector<double> lambdas)
    : lambdas_(std::move(lambdas)), a_(HermitianOperator::diagonal(lambdas_)) {}

HermitianOperator DiagonalModel::projection(std::size_t k) const {
  if (k >= lambdas_.size()) throw Error(ErrorKind::index_out_of_range, "projection index " + std::to_string(k));
  Matrix q = Matrix::Zero(dim(), dim());
  q(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
  return HermitianOperator(std::move(q));
}

std::vector<double> golden_ratio_points(std::size_t count, double lo, double hi) {
  const double step = 1.0 / std::numbers::phi;
  std::vector<double> points(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double u = std::fmod(static_cast<double>(k) * step, 1.0);
    points[k] = lo + (hi - lo) * u;
  }
  return points;
}

CommutativeModel::CommutativeModel(std::size_t resolution, SchattenIndex p) : resolution_(resolution), p_(p) {
  if (resolution == 0) throw Error(ErrorKind::degenerate_grid, "commutative model needs N >= 1");
}

double CommutativeModel::norm(std::span<const double> x) const {
  if (x.size() != resolution_) throw Error(ErrorKind::dimension_mismatch, "element has the wrong length");
  if (p_.is_infinite()) {
    double top = 0.0;
    for (double v : x) top = std::max(top, std::abs(v));
    return top;
  }
  double acc = 0.0;
  for (double v : x) acc += std::pow(std::abs(v), p_.p());
  return std::pow(acc / static_cast<double>(resolution_), 1.0 / p_.p());
}

std::vector<double> CommutativeModel::indicator(std::size_t k) const {
  if (k > resolution_) throw Error(ErrorKind::index_out_of_range, "indicator length exceeds N");
  std::vector<double> x(resolution_, 0.0);
  std::fill_n(x.begin(), k, 1.0);
  return x;
}

ExperimentReport rank_one_check(const ScalarFunction& f, int m, const DiagonalModel& model, std::size_t k, double t) {
  if (k >= model.lambdas().size()) {
    throw Error(ErrorKind::index_out_of_range, "k = " + std::to_string(k) + " outside a model of dimension " +
                                                   std::to_string(model.dim()));
  }
  if (m < 0 || m > f.max_order()) throw Error(ErrorKind::order_exceeded, "rank-one check order outside [0, max_order]");

  const double lambda = model.lambdas()[k];
  const HermitianOperator q = model.projection(k);
  const HermitianOperator moved = model.op() + q * t;

  Matrix left;
  Complex scalar;
  if (m == 0) {
    left = apply_function(f, moved) - apply_function(f, model.op());
    scalar = f(lambda + t) - f(lambda);
  } else {
    const std::vector<Matrix> qs(static_cast<std::size_t>(m), q.matrix());
    left = frechet_derivative(f, m, moved, qs, FrechetOptions{true, {}});
    scalar = f.eval(m, lambda + t);
  }
  const Matrix right = scalar * q.matrix();
  const double gap = (left - right).norm();
  const double threshold = 1e-9 * (1.0 + std::abs(f.eval(m, lambda + t)));

  ExperimentReport r;
  r.experiment_id = "rank_one_check";
  r.anchor = m == 0 ? kRankOneZeroAnchor : kRankOneAnchor;
  r.config = {{"function", f.spec()}, {"m", m}, {"k", k}, {"t", t}, {"lambda_k", lambda}, {"dim", model.dim()}};
  r.add("right_scalar_re", r.anchor, scalar.real());
  r.add("right_scalar_im", r.anchor, scalar.imag());
  r.add("frobenius_gap", r.anchor, gap);
  r.add("threshold", r.anchor, threshold);
  r.verdict = gap <= threshold ? Verdict::pass : Verdict::fail;
  r.verdict_detail = gap <= threshold ? "identity holds" : "identity gap above threshold";
  r.notes.push_back(kSampledNote);
  return r;
}

ExperimentReport necessity_probe(const ScalarFunction& f, int n, std::span<const double> lambdas,
    std::span<const double> t_grid, const NecessityOptions& options) {
  if (n < 1 || n > f.max_order()) throw Error(ErrorKind::order_exceeded, "necessity probe order outside [1, max_order]");
  check_decreasing(t_grid, "t_grid");
  if (lambdas.empty()) throw Error(ErrorKind::empty_grid, "necessity probe needs spectral points");

  std::vector<Complex> lower(lambdas.size()), top(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    lower[i] = f.eval(n - 1, lambdas[i]);
    top[i] = f.eval(n, lambdas[i]);
  }
  std::vector<double> ts(t_grid.begin(), t_grid.end()), deviation;
  std::vector<double> argmax;
  for (double t : t_grid) {
    double worst = 0.0, where = lambdas.front();
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      const double d = std::abs((f.eval(n - 1, lambdas[i] + t) - lower[i]) / t - top[i]);
      if (d > worst) {
        worst = d;
        where = lambdas[i];
      }
    }
    deviation.push_back(worst);
    argmax.push_back(where);
  }

  const double floor = deviation.back();
  const double t_min = ts.back();
  // Taylor bound of a reference function with |f^(n+1)| <= 1.
  const double prediction = t_min / 2.0;

  ExperimentReport r;
  r.experiment_id = "necessity_probe";
  r.anchor = kNecessityAnchor;
  r.config = {{"function", f.spec()}, {"n", n}, {"lambda_count", lambdas.size()},
      {"lambda_min", *std::min_element(lambdas.begin(), lambdas.end())},
      {"lambda_max", *std::max_element(lambdas.begin(), lambdas.end())}, {"t_grid", ts}, {"epsilon", options.epsilon}};
  r.add("deviation", kNecessityAnchor, make_series("t", ts, "D", deviation));
  r.add("argmax_lambda", kNecessityAnchor, make_series("t", ts, "lambda", argmax));
  r.add("floor", kNecessityAnchor, floor);
  r.add("uniform_prediction", kNecessityAnchor, prediction);
  if (floor <= options.epsilon) {
    r.verdict = Verdict::pass;
    r.verdict_detail = "uniformly differentiable";
  } else if (floor >= std::max(options.epsilon, 10.0 * prediction)) {
    r.verdict = Verdict::fail;
    r.verdict_detail = "necessity violated: floor " + std::to_string(floor);
  } else {
    r.verdict = Verdict::informational;
    r.verdict_detail = "inconclusive: floor above epsilon but within 10x of the uniform prediction";
  }
  r.notes.push_back(kSampledNote);
  return r;
}

ExperimentReport mollifier_convergence(const ScalarFunction& f, int n, std::span<const double> eps_list,
    std::span<const double> grid, const MollifierConvergenceOptions& options) {
  if (!f.smoothness().is_cnb(n)) {
    throw Error(ErrorKind::smoothness_insufficient, "'" + f.id() + "' is not declared C^" + std::to_string(n) + "_b");
  }
  if (n > f.max_order()) throw Error(ErrorKind::order_exceeded, "order above max_order");
  check_decreasing(eps_list, "eps_list");
  if (grid.empty()) throw Error(ErrorKind::empty_grid, "mollifier convergence needs a grid");
  const double eta = 2.0 * eps_list.back();
  if (grid.size() > 1 && !(min_gap(grid) < eta)) {
    throw Error(ErrorKind::degenerate_grid, "grid spacing must be below 2 * min epsilon");
  }

  std::vector<double> eps(eps_list.begin(), eps_list.end()), errors;
  for (double e : eps_list) errors.push_back(grid_sup_distance(f, mollify(f, e, options.mollify), n, grid));
  const double modulus = uc_modulus(f, n, eta, grid);

  bool nonincreasing = true;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] > errors[i - 1] * options.noise_factor + options.noise_floor) nonincreasing = false;
  }
  const bool bounded = errors.back() <= 2.0 * modulus + options.noise_floor;

  ExperimentReport r;
  r.experiment_id = "mollifier_convergence";
  r.anchor = kLemmaAnchor;
  r.config = {{"function", f.spec()}, {"n", n}, {"eps_list", eps}, {"grid_size", grid.size()},
      {"grid_min", *std::min_element(grid.begin(), grid.end())}, {"grid_max", *std::max_element(grid.begin(), grid.end())},
      {"quadrature_nodes", options.mollify.quadrature_nodes}, {"noise_factor", options.noise_factor}};
  r.add("sup_error", kLemmaAnchor, make_series("epsilon", eps, "sup_error", errors));
  r.add("uc_modulus_2eps", kLemmaAnchor, modulus);
  r.add("final_error", kLemmaAnchor, errors.back());
  r.add("plateau_ratio", kLemmaAnchor, errors.front() > 0.0 ? errors.back() / errors.front() : 0.0);
  r.add("nonincreasing", kLemmaAnchor, nonincreasing);
  r.verdict = nonincreasing && bounded ? Verdict::pass : Verdict::fail;
  r.verdict_detail = !nonincreasing ? "error series increases" : (bounded ? "within 2 * modulus" : "above 2 * modulus");
  r.notes.push_back("sup norms are grid maxima");
  return r;
}

ExperimentReport norm_bound_probe(const ScalarFunction& f, int n, SchattenIndex p, const HermitianOperator& a,
    int trials, std::uint64_t seed, const NormBoundOptions& options) {
  if (!f.smoothness().is_cnb(n)) {
    throw Error(ErrorKind::smoothness_insufficient, "'" + f.id() + "' is not declared C^" + std::to_string(n) + "_b");
  }
  if (trials < 1) throw Error(ErrorKind::degenerate_grid, "norm-bound probe needs at least one trial");

  const auto base = share(decompose(a));
  const double cost = std::pow(static_cast<double>(a.dim()), n + 1) * std::tgamma(n + 1.0) * trials *
                      (1.0 + 2.0 * static_cast<double>(options.eps_list.size()));
  if (cost > kDefaultMoiBudget) throw Error(ErrorKind::budget_exceeded, "norm-bound probe exceeds the MOI budget");

  std::vector<double> grid = options.grid;
  if (grid.empty()) {
    const auto& ev = base->eigenvalues();
    grid = uniform_grid(ev.front() - 1.0, ev.back() + 1.0, 1e-3);
  }

  struct Member {
    std::string label;
    ScalarFunction g;
  };
  std::vector<Member> family{{"f", f}};
  for (double e : options.eps_list) {
    const auto fe = mollify(f, e, options.mollify);
    family.push_back({"f_eps(" + std::to_string(e) + ")", fe});
    family.push_back({"f-f_eps(" + std::to_string(e) + ")", linear_combination(1.0, f, -1.0, fe)});
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<Matrix>> tuples;
  for (int s = 0; s < trials; ++s) {
    std::vector<Matrix> tuple;
    for (int j = 0; j < n; ++j) tuple.push_back(random_direction(rng, a.dim(), p).matrix());
    tuples.push_back(std::move(tuple));
  }

  std::vector<std::string> labels;
  std::vector<double> ratios, sups, constants;
  std::vector<double> f_trial_ratios;
  for (const auto& member : family) {
    const MoiKernel kernel(member.g, std::vector<SpectralHandle>(static_cast<std::size_t>(n) + 1, base));
    double best = 0.0;
    for (const auto& tuple : tuples) {
      const double ratio = schatten_norm(kernel.apply_symmetrized(tuple), p);
      best = std::max(best, ratio);
      if (&member == &family.front()) f_trial_ratios.push_back(ratio);
    }
    const double sup = grid_sup_norm(member.g, n, grid);
    labels.push_back(member.label);
    ratios.push_back(best);
    sups.push_back(sup);
    constants.push_back(sup > 0.0 ? best / sup : 0.0);
  }

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < constants.size(); ++i) {
    if (sups[i] <= 0.0) continue;
    lo = std::min(lo, constants[i]);
    hi = std::max(hi, constants[i]);
  }
  const double spread = (hi > 0.0 && std::isfinite(lo)) ? hi / lo : 1.0;

  ExperimentReport r;
  r.experiment_id = "norm_bound_probe";
  r.anchor = kGammaAnchor;
  r.config = {{"function", f.spec()}, {"n", n}, {"p", p.p()}, {"dim", a.dim()}, {"trials", trials}, {"seed", seed},
      {"eps_list", options.eps_list}, {"grid_size", grid.size()}, {"grid_min", grid.front()}, {"grid_max", grid.back()},
      {"operator", matrix_to_json(a.matrix())}};
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    table.push_back({{"g", labels[i]}, {"max_ratio", ratios[i]}, {"sup_norm_n", sups[i]}, {"fitted_constant", constants[i]}});
  }
  r.add("family", kGammaAnchor, std::move(table));
  r.add("f_trial_ratios", kGammaAnchor, f_trial_ratios);
  r.add("max_ratio_f", kGammaAnchor, ratios.front());
  r.add("sup_norm_n_f", kGammaAnchor, sups.front());
  r.add("fitted_constant_min", kGammaAnchor, std::isfinite(lo) ? lo : 0.0);
  r.add("fitted_constant_max", kGammaAnchor, hi);
  r.add("fitted_constant_spread", kGammaAnchor, spread);
  if (p.p() == 2.0 && n == 1) {
    // At p = 2, n = 1 the MOI is a Schur multiplier bounded entrywise by ||f'||_inf.
    r.add("schur_bound_holds", kGammaAnchor, ratios.front() <= sups.front() * (1.0 + 1e-10));
  }
  r.verdict = Verdict::informational;
  r.verdict_detail = "empirical constants recorded; no constant asserted";
  r.notes.push_back("ratios are maxima over seeded direction tuples, a lower bound for the multilinear norm");
  return r;
}

ExperimentReport commutative_counterexample(SchattenIndex p, std::size_t resolution, std::span<const std::size_t> k_list,
    std::span<const double> contrast_t) {
  if (!p.in_theorem_scope()) throw Error(ErrorKind::invalid_p, "the counterexample needs 1 < p < inf");
  if (k_list.empty()) throw Error(ErrorKind::degenerate_grid, "k_list is empty");
  const CommutativeModel model(resolution, p);
  const auto square = monomial(2);

  std::vector<double> ks, norms, expected, ratios;
  bool all_unit = true;
  for (std::size_t k : k_list) {
    if (k < 1 || k > resolution) throw Error(ErrorKind::index_out_of_range, "k must lie in [1, N]");
    const auto x = model.indicator(k);
    // f(1+X) - f(1) - 2X, evaluated pointwise; equals X^2.
    std::vector<double> remainder(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
      remainder[i] = square(1.0 + x[i]).real() - square(1.0).real() - 2.0 * x[i];
    }
    const double nx = model.norm(x);
    const double ratio = model.norm(remainder) / nx;
    ks.push_back(static_cast<double>(k));
    norms.push_back(nx);
    expected.push_back(std::pow(static_cast<double>(k) / static_cast<double>(resolution), 1.0 / p.p()));
    ratios.push_back(ratio);
    all_unit = all_unit && std::abs(ratio - 1.0) <= 1e-12;
  }

  // Schatten contrast: X = tQ, Q a rank-one projection, (tQ)^2 = t^2 Q.
  std::vector<double> ts(contrast_t.begin(), contrast_t.end()), contrast;
  bool contrast_linear = true;
  constexpr Eigen::Index kContrastDim = 4;
  Matrix q = Matrix::Zero(kContrastDim, kContrastDim);
  q(0, 0) = 1.0;
  const HermitianOperator identity(Matrix::Identity(kContrastDim, kContrastDim));
  const Matrix f_identity = apply_function(square, identity);
  for (double t : contrast_t) {
    const HermitianOperator x(t * q);
    const Matrix remainder = apply_function(square, identity + x) - f_identity - 2.0 * x.matrix();
    const double ratio = schatten_norm(remainder, p) / schatten_norm(x.matrix(), p);
    contrast.push_back(ratio);
    contrast_linear = contrast_linear && std::abs(ratio - std::abs(t)) <= 1e-8 * std::max(1.0, std::abs(t)) + 1e-12;
  }

  const double smallest = *std::min_element(norms.begin(), norms.end());
  const double largest = *std::max_element(norms.begin(), norms.end());

  ExperimentReport r;
  r.experiment_id = "commutative_counterexample";
  r.anchor = kCommutativeAnchor;
  std::vector<std::size_t> k_echo(k_list.begin(), k_list.end());
  r.config = {{"p", p.p()}, {"N", resolution}, {"k_list", k_echo}, {"contrast_t", ts}};
  r.add("norm_x", kCommutativeAnchor, make_series("k", ks, "norm_x", norms));
  r.add("expected_norm_x", kCommutativeAnchor, make_series("k", ks, "(k/N)^(1/p)", expected));
  r.add("ratio", kCommutativeAnchor, make_series("k", ks, "norm_x2_over_norm_x", ratios));
  r.add("schatten_contrast", kCommutativeAnchor, make_series("t", ts, "norm_x2_over_norm_x", contrast));
  r.add("smallest_norm_x", kCommutativeAnchor, smallest);
  const bool shrinking = k_list.size() == 1 || smallest < largest;
  const bool fails = all_unit && shrinking && contrast_linear;
  r.verdict = fails ? Verdict::pass : Verdict::fail;
  r.verdict_detail = fails ? "Frechet differentiability fails: ||X^2||_p / ||X||_p = 1 while ||X||_p -> 0"
                           : "counterexample not reproduced";
  return r;
}

std::vector<CatalogEntry> list_experiments() {
  std::vector<CatalogEntry> entries = {
      {"commutative_counterexample", kCommutativeAnchor},
      {"mollifier_convergence", kLemmaAnchor},
      {"necessity_probe", kNecessityAnchor},
      {"norm_bound_probe", kGammaAnchor},
      {"rank_one_check", kRankOneAnchor},
  };
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return entries;
}

std::string format_catalog_entry(const CatalogEntry& entry) { return entry.id + " — " + entry.anchor; }

}  // namespace opdiff
