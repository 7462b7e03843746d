#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "opdiff/moi.hpp"
#include "opdiff/scalar_fn.hpp"
#include "opdiff/spectral.hpp"

namespace opdiff {

struct FrechetOptions {
  /// Compute even when f is not declared C^n_b with f^(n) uniformly
  /// continuous. Necessity probes use this on purpose.
  bool allow_insufficient_smoothness = false;
  MoiOptions moi;
};

/// D^n f(A)[X_1, ..., X_n] as the symmetrized multiple operator integral.
Matrix frechet_derivative(const ScalarFunction& f, int n, const HermitianOperator& a, std::span<const Matrix> xs,
    const FrechetOptions& options = {});
Matrix frechet_derivative(const ScalarFunction& f, int n, const SpectralHandle& a, std::span<const Matrix> xs,
    const FrechetOptions& options = {});

struct TaylorExpansion {
  Matrix approximation;  // f(A) + sum_{m<n} D^m f(A)[X,...,X] / m!
  Matrix remainder;      // T^{A+X, A, ..., A}(X, ..., X)
};

/// approximation + remainder equals f(A+X) identically, not only asymptotically.
TaylorExpansion taylor_expand(const ScalarFunction& f, int n, const HermitianOperator& a, const HermitianOperator& x,
    const MoiOptions& options = {});

/// (machine epsilon)^(1/(n+2)) * (1 + ||A||_2), sized for ||X||_2 near 1.
double default_fd_step(int n, const HermitianOperator& a);

/// n-th central difference of t -> f(A + tX) at 0, O(h^2) accurate, n <= 4.
Matrix gateaux_fd(const ScalarFunction& f, int n, const HermitianOperator& a, const HermitianOperator& x, double h);

struct Direction {
  std::string id;
  HermitianOperator x;
};

/// count Gaussian-ensemble Hermitian directions of unit p-norm, ids "gauss_<i>".
std::vector<Direction> gaussian_directions(std::uint64_t seed, Eigen::Index dim, SchattenIndex p, int count);

struct RemainderSample {
  double t;
  std::string direction_id;
  double remainder_ratio;
};

struct ReportOptions {
  std::uint64_t seed = 0;
  /// Sampled X_1..X_{n-1} per (t, direction) for n >= 2.
  int auxiliary_samples = 2;
  /// "decreasing within noise": each ratio <= previous * noise_factor.
  double noise_factor = 1.05;
  /// Required log-log slope of the un-normalized worst-case remainder.
  double slope_threshold = 1.8;
  MoiOptions moi;
};

struct DerivativeReport {
  int order = 1;
  double p = 2.0;
  std::vector<double> t_grid;
  std::vector<RemainderSample> samples;  // sorted by decreasing t
  std::vector<double> worst_ratio;       // max over directions, per t
  double slope_estimate = 0.0;
  bool monotone = false;
  bool pass = false;
  ReportOptions options;
  std::vector<std::string> direction_ids;

  /// "pass (sampled uniformity)" or "fail (sampled uniformity)".
  std::string verdict() const;
  nlohmann::json to_json() const;
  /// t,direction,ratio rows.
  std::string to_csv() const;
};

/// Remainder-ratio scan of the order-n differentiability condition.
/// n = 1: ||f(A+tX) - f(A) - t D f(A)[X]||_p / t.
/// n >= 2: ||D^{n-1}f(A+tX)[Xs] - D^{n-1}f(A)[Xs] - D^n f(A)[Xs, tX]||_p / (t prod ||X_j||_p).
DerivativeReport differentiability_report(const ScalarFunction& f, int n, const HermitianOperator& a, SchattenIndex p,
    std::span<const Direction> directions, std::span<const double> t_grid, const ReportOptions& options = {});

/// Least-squares slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

/// Lower-bound estimate of the multilinear norm of D^n f(A+X) - D^n f(A)
/// (or of D^n f(A) itself when x is null): max ratio over sampled tuples.
double derivative_gap_norm(const ScalarFunction& f, int n, const HermitianOperator& a, const HermitianOperator* x,
    SchattenIndex p, int samples = 64, std::uint64_t seed = 0, const FrechetOptions& options = {});

}  // namespace opdiff
