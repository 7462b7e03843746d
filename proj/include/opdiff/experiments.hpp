#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "opdiff/report.hpp"
#include "opdiff/scalar_fn.hpp"
#include "opdiff/spectral.hpp"

namespace opdiff {

/// Diagonal truncation A e_k = lambda_k e_k of an unbounded operator with
/// dense spectrum, with its rank-one coordinate projections Q_k.
class DiagonalModel {
 public:
  explicit DiagonalModel(std::vector<double> lambdas);

  Eigen::Index dim() const { return a_.dim(); }
  const std::vector<double>& lambdas() const { return lambdas_; }
  const HermitianOperator& op() const { return a_; }
  /// Q_k = e_k e_k^*.
  HermitianOperator projection(std::size_t k) const;

 private:
  std::vector<double> lambdas_;
  HermitianOperator a_;
};

/// lo + (hi-lo) * frac(k / golden ratio), k = 0..count-1.
std::vector<double> golden_ratio_points(std::size_t count, double lo, double hi);

/// Weighted diagonal algebra: N coordinates with trace weight 1/N each.
class CommutativeModel {
 public:
  CommutativeModel(std::size_t resolution, SchattenIndex p);

  std::size_t resolution() const { return resolution_; }
  SchattenIndex p() const { return p_; }
  /// (sum_i |x_i|^p / N)^(1/p)
  double norm(std::span<const double> x) const;
  /// Indicator of the first k coordinates.
  std::vector<double> indicator(std::size_t k) const;

 private:
  std::size_t resolution_;
  SchattenIndex p_;
};

ExperimentReport rank_one_check(const ScalarFunction& f, int m, const DiagonalModel& model, std::size_t k, double t);

struct NecessityOptions {
  /// D(t_min) at or below epsilon reads as uniformly differentiable.
  double epsilon = 0.05;
};

ExperimentReport necessity_probe(const ScalarFunction& f, int n, std::span<const double> lambdas,
    std::span<const double> t_grid, const NecessityOptions& options = {});

struct MollifierConvergenceOptions {
  MollifyOptions mollify;
  double noise_factor = 1.05;
  /// Absolute slack for the nonincreasing check, below which errors are rounding.
  double noise_floor = 1e-12;
};

ExperimentReport mollifier_convergence(const ScalarFunction& f, int n, std::span<const double> eps_list,
    std::span<const double> grid, const MollifierConvergenceOptions& options = {});

struct NormBoundOptions {
  std::vector<double> eps_list = {0.5, 0.25, 0.1, 0.05, 0.01};
  /// Grid for the sup norms ||g^(n)||_inf; empty means the spectral hull of A
  /// padded by 1, step 1e-3.
  std::vector<double> grid;
  MollifyOptions mollify;
};

ExperimentReport norm_bound_probe(const ScalarFunction& f, int n, SchattenIndex p, const HermitianOperator& a,
    int trials, std::uint64_t seed, const NormBoundOptions& options = {});

ExperimentReport commutative_counterexample(SchattenIndex p, std::size_t resolution, std::span<const std::size_t> k_list,
    std::span<const double> contrast_t = std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4});

struct CatalogEntry {
  std::string id;
  std::string anchor;
};

/// Sorted by id.
std::vector<CatalogEntry> list_experiments();
/// "id — anchor"
std::string format_catalog_entry(const CatalogEntry& entry);

}  // namespace opdiff
