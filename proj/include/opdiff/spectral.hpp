#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "opdiff/scalar_fn.hpp"

namespace opdiff {

using Matrix = Eigen::MatrixXcd;

/// Finite-dimensional self-adjoint operator. Construction checks Hermitian
/// symmetry to 1e-12 * max(1, max|a_ij|) and throws non_hermitian_input.
class HermitianOperator {
 public:
  explicit HermitianOperator(Matrix entries);

  static HermitianOperator diagonal(std::span<const double> values);
  static HermitianOperator zero(Eigen::Index dim);

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }

  /// Largest |eigenvalue|.
  double operator_norm() const;

  HermitianOperator operator+(const HermitianOperator& other) const;
  HermitianOperator operator-(const HermitianOperator& other) const;
  HermitianOperator operator*(double scale) const;

 private:
  Matrix entries_;
};

struct SpectralCluster {
  double value;         // multiplicity-weighted mean of the merged eigenvalues
  Eigen::Index first;   // first column of the cluster in the eigenbasis
  Eigen::Index size;    // rank of the spectral projection
};

/// Clustered spectral decomposition. Immutable after construction.
class SpectralData {
 public:
  SpectralData(std::vector<double> eigenvalues, Matrix basis, double cluster_tol);

  Eigen::Index dim() const { return basis_.rows(); }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  const Matrix& basis() const { return basis_; }
  const std::vector<SpectralCluster>& clusters() const { return clusters_; }
  /// cluster index of each eigenbasis column
  const std::vector<int>& cluster_of_column() const { return cluster_of_column_; }
  double cluster_tol() const { return cluster_tol_; }

  Matrix projection(std::size_t cluster) const;
  /// sum_i value_i P_i
  Matrix reconstruct() const;

 private:
  std::vector<double> eigenvalues_;
  Matrix basis_;
  double cluster_tol_;
  std::vector<SpectralCluster> clusters_;
  std::vector<int> cluster_of_column_;
};

/// Default merge tolerance 1e-8 * (1 + ||A||_2).
double default_cluster_tol(const HermitianOperator& a);

SpectralData decompose(const HermitianOperator& a, std::optional<double> cluster_tol = std::nullopt);

/// Schatten exponent p in [1, inf]. Only 1 < p < inf is inside the scope of
/// the differentiability characterisation; p = 1 and p = inf are diagnostics.
class SchattenIndex {
 public:
  explicit SchattenIndex(double p);
  static SchattenIndex infinity() { return SchattenIndex(std::numeric_limits<double>::infinity()); }

  double p() const { return p_; }
  bool is_infinite() const { return p_ == std::numeric_limits<double>::infinity(); }
  bool in_theorem_scope() const { return p_ > 1.0 && !is_infinite(); }
  /// q with 1/p + 1/q = 1.
  SchattenIndex conjugate() const;

 private:
  double p_;
};

/// (sum sigma_i^p)^(1/p); the largest singular value for p = inf.
double schatten_norm(const Matrix& x, SchattenIndex p);
/// Singular values: |eigenvalues| when x is Hermitian, SVD otherwise.
Eigen::VectorXd singular_values(const Matrix& x);

Matrix apply_function(const ScalarFunction& f, const SpectralData& spectrum);
Matrix apply_function(const ScalarFunction& f, const HermitianOperator& a);

/// Haar-distributed unitary from a seeded complex Gaussian QR.
Matrix random_unitary(std::uint64_t seed, Eigen::Index dim);
/// Deterministic in seed. With a spectrum: U diag(spectrum) U*. Without:
/// Gaussian-ensemble entries, symmetrized and scaled to unit operator norm.
HermitianOperator random_hermitian(std::uint64_t seed, Eigen::Index dim,
    std::optional<std::vector<double>> spectrum = std::nullopt);
/// Gaussian-ensemble Hermitian direction normalized to ||X||_p = 1.
HermitianOperator random_direction(std::mt19937_64& rng, Eigen::Index dim, SchattenIndex p);

/// Matrix I/O: {"dim": d, "data": [[re, im], ...]} in row-major order.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

double relative_frobenius_gap(const Matrix& computed, const Matrix& expected);

}  // namespace opdiff
