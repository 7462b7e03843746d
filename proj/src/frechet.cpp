#include "opdiff/frechet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "opdiff/error.hpp"

namespace opdiff {

namespace {

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

void check_grid(std::span<const double> t_grid) {
  if (t_grid.size() < 2) throw Error(ErrorKind::degenerate_grid, "need at least two step sizes");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw Error(ErrorKind::degenerate_grid, "step sizes must be positive");
    if (i > 0 && !(t_grid[i] < t_grid[i - 1])) throw Error(ErrorKind::degenerate_grid, "step sizes must decrease strictly");
  }
}

}  // namespace

Matrix frechet_derivative(const ScalarFunction& f, int n, const SpectralHandle& a, std::span<const Matrix> xs,
    const FrechetOptions& options) {
  if (!options.allow_insufficient_smoothness && !f.smoothness().meets_hypothesis(n)) {
    throw Error(ErrorKind::smoothness_insufficient,
        "'" + f.id() + "' is declared " + to_string(f.smoothness().kind) + " of order " +
            std::to_string(f.smoothness().order) + ", not C^" + std::to_string(n) +
            "_b with a uniformly continuous top derivative");
  }
  return moi_symmetrized(f, n, a, xs, options.moi);
}

Matrix frechet_derivative(const ScalarFunction& f, int n, const HermitianOperator& a, std::span<const Matrix> xs,
    const FrechetOptions& options) {
  return frechet_derivative(f, n, share(decompose(a)), xs, options);
}

TaylorExpansion taylor_expand(const ScalarFunction& f, int n, const HermitianOperator& a, const HermitianOperator& x,
    const MoiOptions& options) {
  if (n < 1 || n > f.max_order()) throw Error(ErrorKind::order_exceeded, "Taylor order outside [1, max_order]");
  if (a.dim() != x.dim()) throw Error(ErrorKind::dimension_mismatch, "A and X differ in dimension");
  const auto base = share(decompose(a));
  TaylorExpansion out;
  out.approximation = apply_function(f, *base);
  FrechetOptions fo{true, options};
  for (int m = 1; m < n; ++m) {
    const std::vector<Matrix> xs(static_cast<std::size_t>(m), x.matrix());
    out.approximation += frechet_derivative(f, m, base, xs, fo) / factorial(m);
  }
  out.remainder = taylor_remainder(f, n, a, x, options);
  return out;
}

double default_fd_step(int n, const HermitianOperator& a) {
  return std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (n + 2)) * (1.0 + a.operator_norm());
}

Matrix gateaux_fd(const ScalarFunction& f, int n, const HermitianOperator& a, const HermitianOperator& x, double h) {
  if (n < 1 || n > 4) throw Error(ErrorKind::order_exceeded, "finite-difference order must lie in [1, 4]");
  if (a.dim() != x.dim()) throw Error(ErrorKind::dimension_mismatch, "A and X differ in dimension");
  const double floor = 100.0 * std::numeric_limits<double>::epsilon() * (1.0 + a.operator_norm());
  if (!(h >= floor)) throw Error(ErrorKind::step_too_small, "step " + std::to_string(h) + " below " + std::to_string(floor));

  auto g = [&](double s) { return apply_function(f, HermitianOperator(a.matrix() + s * x.matrix())); };
  switch (n) {
    case 1: return (g(h) - g(-h)) / (2.0 * h);
    case 2: return (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
    case 3: return (g(2.0 * h) - 2.0 * g(h) + 2.0 * g(-h) - g(-2.0 * h)) / (2.0 * h * h * h);
    default: return (g(2.0 * h) - 4.0 * g(h) + 6.0 * g(0.0) - 4.0 * g(-h) + g(-2.0 * h)) / (h * h * h * h);
  }
}

std::vector<Direction> gaussian_directions(std::uint64_t seed, Eigen::Index dim, SchattenIndex p, int count) {
  std::mt19937_64 rng(seed);
  std::vector<Direction> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back({"gauss_" + std::to_string(i), random_direction(rng, dim, p)});
  return out;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::degenerate_grid, "slope needs two matching series");
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(x.size());
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(std::max(y[i], std::numeric_limits<double>::min()));
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

DerivativeReport differentiability_report(const ScalarFunction& f, int n, const HermitianOperator& a, SchattenIndex p,
    std::span<const Direction> directions, std::span<const double> t_grid, const ReportOptions& options) {
  check_grid(t_grid);
  if (directions.empty()) throw Error(ErrorKind::degenerate_grid, "need at least one direction");
  if (n < 1 || n > f.max_order()) throw Error(ErrorKind::order_exceeded, "report order outside [1, max_order]");

  DerivativeReport report;
  report.order = n;
  report.p = p.p();
  report.t_grid.assign(t_grid.begin(), t_grid.end());
  report.options = options;

  const FrechetOptions fo{true, options.moi};
  const auto base = share(decompose(a));
  const Matrix f_a = apply_function(f, *base);

  // Auxiliary X_1..X_{n-1}, shared by every (t, direction) pair.
  std::mt19937_64 rng(options.seed);
  std::vector<std::vector<Matrix>> aux;
  if (n >= 2) {
    for (int s = 0; s < options.auxiliary_samples; ++s) {
      std::vector<Matrix> tuple;
      for (int j = 0; j < n - 1; ++j) tuple.push_back(random_direction(rng, a.dim(), p).matrix());
      aux.push_back(std::move(tuple));
    }
  }

  std::vector<Direction> unit;
  for (const auto& d : directions) {
    const double norm = schatten_norm(d.x.matrix(), p);
    if (!(norm > 0.0)) throw Error(ErrorKind::degenerate_grid, "direction '" + d.id + "' is zero");
    unit.push_back({d.id, d.x * (1.0 / norm)});
    report.direction_ids.push_back(d.id);
  }

  // Per-direction quantities that do not depend on t.
  std::vector<Matrix> first_order(unit.size());
  std::vector<std::vector<Matrix>> lower_at_a(unit.size()), top_at_a(unit.size());
  for (std::size_t k = 0; k < unit.size(); ++k) {
    const Matrix& x = unit[k].x.matrix();
    if (n == 1) {
      first_order[k] = frechet_derivative(f, 1, base, std::vector<Matrix>{x}, fo);
    } else {
      for (const auto& tuple : aux) {
        lower_at_a[k].push_back(frechet_derivative(f, n - 1, base, tuple, fo));
        std::vector<Matrix> extended = tuple;
        extended.push_back(x);
        top_at_a[k].push_back(frechet_derivative(f, n, base, extended, fo));
      }
    }
  }

  std::vector<std::vector<double>> per_direction(unit.size());
  std::vector<double> worst_remainder;
  for (double t : t_grid) {
    double worst = 0.0;
    for (std::size_t k = 0; k < unit.size(); ++k) {
      const HermitianOperator moved = a + unit[k].x * t;
      double ratio = 0.0;
      if (n == 1) {
        const Matrix rem = apply_function(f, moved) - f_a - t * first_order[k];
        ratio = schatten_norm(rem, p) / t;
      } else {
        const auto moved_base = share(decompose(moved));
        for (std::size_t s = 0; s < aux.size(); ++s) {
          const Matrix rem = frechet_derivative(f, n - 1, moved_base, aux[s], fo) - lower_at_a[k][s] - t * top_at_a[k][s];
          // Auxiliary directions and X are unit norm.
          ratio = std::max(ratio, schatten_norm(rem, p) / t);
        }
      }
      report.samples.push_back({t, unit[k].id, ratio});
      per_direction[k].push_back(ratio);
      worst = std::max(worst, ratio);
    }
    report.worst_ratio.push_back(worst);
    worst_remainder.push_back(worst * t);
  }

  report.monotone = true;
  for (const auto& series : per_direction) {
    for (std::size_t i = 1; i < series.size(); ++i) {
      if (series[i] > series[i - 1] * options.noise_factor) report.monotone = false;
    }
  }
  const bool exact = *std::max_element(worst_remainder.begin(), worst_remainder.end()) == 0.0;
  report.slope_estimate = exact ? std::numeric_limits<double>::infinity() : log_log_slope(t_grid, worst_remainder);
  report.pass = report.monotone && report.slope_estimate >= options.slope_threshold;
  return report;
}

std::string DerivativeReport::verdict() const {
  return pass ? "pass (sampled uniformity)" : "fail (sampled uniformity)";
}

nlohmann::json DerivativeReport::to_json() const {
  nlohmann::json samples_json = nlohmann::json::array();
  for (const auto& s : samples) {
    samples_json.push_back({{"t", s.t}, {"direction", s.direction_id}, {"remainder_ratio", s.remainder_ratio}});
  }
  nlohmann::json slope = std::isfinite(slope_estimate) ? nlohmann::json(slope_estimate) : nlohmann::json("inf");
  return {{"order", order}, {"p", p}, {"t_grid", t_grid}, {"directions", direction_ids}, {"seed", options.seed},
      {"auxiliary_samples", options.auxiliary_samples}, {"noise_factor", options.noise_factor},
      {"slope_threshold", options.slope_threshold}, {"samples", std::move(samples_json)},
      {"worst_ratio", worst_ratio}, {"slope_estimate", slope}, {"monotone", monotone}, {"verdict", verdict()}};
}

std::string DerivativeReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "t,direction,remainder_ratio\n";
  for (const auto& s : samples) out << s.t << ',' << s.direction_id << ',' << s.remainder_ratio << '\n';
  return out.str();
}

double derivative_gap_norm(const ScalarFunction& f, int n, const HermitianOperator& a, const HermitianOperator* x,
    SchattenIndex p, int samples, std::uint64_t seed, const FrechetOptions& options) {
  if (!options.allow_insufficient_smoothness && !f.smoothness().meets_hypothesis(n)) {
    throw Error(ErrorKind::smoothness_insufficient, "'" + f.id() + "' does not meet the order-" + std::to_string(n) + " hypothesis");
  }
  const auto base = share(decompose(a));
  SpectralHandle moved;
  if (x) moved = share(decompose(a + *x));
  // Kernels are reused across all sampled tuples.
  const MoiKernel at_a(f, std::vector<SpectralHandle>(static_cast<std::size_t>(n) + 1, base));
  std::optional<MoiKernel> at_moved;
  if (moved) at_moved.emplace(f, std::vector<SpectralHandle>(static_cast<std::size_t>(n) + 1, moved));

  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<Matrix> tuple;
    for (int j = 0; j < n; ++j) tuple.push_back(random_direction(rng, a.dim(), p).matrix());
    Matrix value = at_moved ? Matrix(at_moved->apply_symmetrized(tuple) - at_a.apply_symmetrized(tuple))
                            : Matrix(at_a.apply_symmetrized(tuple));
    best = std::max(best, schatten_norm(value, p));
  }
  return best;
}

}  // namespace opdiff
