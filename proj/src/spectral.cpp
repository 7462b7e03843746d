#include "opdiff/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "opdiff/error.hpp"

namespace opdiff {

namespace {

double max_abs_entry(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs_entry(m - m.adjoint()) <= tol;
}

Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return g;
}

Matrix hermitian_part(const Matrix& m) {
  Matrix h = 0.5 * (m + m.adjoint());
  for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, i) = Complex(h(i, i).real(), 0.0);
  return h;
}

}  // namespace

HermitianOperator::HermitianOperator(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw Error(ErrorKind::dimension_mismatch, "Hermitian operator needs a nonempty square matrix");
  }
  const double tol = 1e-12 * std::max(1.0, max_abs_entry(entries_));
  if (!is_hermitian(entries_, tol)) throw Error(ErrorKind::non_hermitian_input, "matrix is not Hermitian");
}

HermitianOperator HermitianOperator::diagonal(std::span<const double> values) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = values[i];
  return HermitianOperator(std::move(m));
}

HermitianOperator HermitianOperator::zero(Eigen::Index dim) { return HermitianOperator(Matrix::Zero(dim, dim)); }

double HermitianOperator::operator_norm() const {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(entries_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

HermitianOperator HermitianOperator::operator+(const HermitianOperator& other) const {
  if (dim() != other.dim()) throw Error(ErrorKind::dimension_mismatch, "operator sum of different dimensions");
  return HermitianOperator(entries_ + other.entries_);
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& other) const {
  if (dim() != other.dim()) throw Error(ErrorKind::dimension_mismatch, "operator difference of different dimensions");
  return HermitianOperator(entries_ - other.entries_);
}

HermitianOperator HermitianOperator::operator*(double scale) const { return HermitianOperator(entries_ * scale); }

SpectralData::SpectralData(std::vector<double> eigenvalues, Matrix basis, double cluster_tol)
    : eigenvalues_(std::move(eigenvalues)), basis_(std::move(basis)), cluster_tol_(cluster_tol) {
  if (static_cast<Eigen::Index>(eigenvalues_.size()) != basis_.cols() || basis_.rows() != basis_.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "eigenvalue count does not match the basis");
  }
  if (!std::is_sorted(eigenvalues_.begin(), eigenvalues_.end())) {
    throw Error(ErrorKind::eigensolver_failure, "eigenvalues must be sorted ascending");
  }
  // Chain consecutive eigenvalues closer than cluster_tol into one cluster.
  cluster_of_column_.resize(eigenvalues_.size());
  std::size_t start = 0;
  for (std::size_t i = 1; i <= eigenvalues_.size(); ++i) {
    if (i == eigenvalues_.size() || eigenvalues_[i] - eigenvalues_[i - 1] > cluster_tol_) {
      double mean = 0.0;
      for (std::size_t j = start; j < i; ++j) mean += eigenvalues_[j];
      mean /= static_cast<double>(i - start);
      for (std::size_t j = start; j < i; ++j) cluster_of_column_[j] = static_cast<int>(clusters_.size());
      clusters_.push_back({mean, static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(i - start)});
      start = i;
    }
  }
}

Matrix SpectralData::projection(std::size_t cluster) const {
  const auto& c = clusters_.at(cluster);
  const auto block = basis_.middleCols(c.first, c.size);
  return block * block.adjoint();
}

Matrix SpectralData::reconstruct() const {
  Eigen::VectorXd values(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) values(i) = clusters_[static_cast<std::size_t>(cluster_of_column_[static_cast<std::size_t>(i)])].value;
  return basis_ * values.cast<Complex>().asDiagonal() * basis_.adjoint();
}

double default_cluster_tol(const HermitianOperator& a) { return 1e-8 * (1.0 + a.operator_norm()); }

SpectralData decompose(const HermitianOperator& a, std::optional<double> cluster_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::eigensolver_failure, "self-adjoint eigensolver did not converge");
  const auto& ev = solver.eigenvalues();
  std::vector<double> values(ev.data(), ev.data() + ev.size());
  const double tol = cluster_tol ? *cluster_tol : 1e-8 * (1.0 + ev.cwiseAbs().maxCoeff());
  if (tol < 0.0) throw Error(ErrorKind::degenerate_grid, "cluster tolerance must be nonnegative");
  return SpectralData(std::move(values), solver.eigenvectors(), tol);
}

SchattenIndex::SchattenIndex(double p) : p_(p) {
  if (!(p >= 1.0)) throw Error(ErrorKind::invalid_p, "Schatten exponent must satisfy p >= 1, got " + std::to_string(p));
}

SchattenIndex SchattenIndex::conjugate() const {
  if (is_infinite()) return SchattenIndex(1.0);
  if (p_ == 1.0) return infinity();
  return SchattenIndex(p_ / (p_ - 1.0));
}

Eigen::VectorXd singular_values(const Matrix& x) {
  if (x.rows() == 0) return {};
  const double scale = std::max(1.0, max_abs_entry(x));
  if (x.rows() == x.cols() && is_hermitian(x, 1e-14 * scale)) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(x), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs();
  }
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues();
}

double schatten_norm(const Matrix& x, SchattenIndex p) {
  const Eigen::VectorXd sigma = singular_values(x);
  if (sigma.size() == 0) return 0.0;
  const double top = sigma.maxCoeff();
  if (p.is_infinite() || top == 0.0) return top;
  if (p.p() == 1.0) return sigma.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) acc += std::pow(sigma(i) / top, p.p());
  return top * std::pow(acc, 1.0 / p.p());
}

Matrix apply_function(const ScalarFunction& f, const SpectralData& spectrum) {
  const auto& clusters = spectrum.clusters();
  std::vector<Complex> values(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) values[i] = f(clusters[i].value);
  Eigen::VectorXcd diag(spectrum.dim());
  for (Eigen::Index i = 0; i < spectrum.dim(); ++i) {
    diag(i) = values[static_cast<std::size_t>(spectrum.cluster_of_column()[static_cast<std::size_t>(i)])];
  }
  Matrix result = spectrum.basis() * diag.asDiagonal() * spectrum.basis().adjoint();
  if (f.real_valued()) result = hermitian_part(result);
  return result;
}

Matrix apply_function(const ScalarFunction& f, const HermitianOperator& a) { return apply_function(f, decompose(a)); }

Matrix random_unitary(std::uint64_t seed, Eigen::Index dim) {
  std::mt19937_64 rng(seed);
  const Matrix g = gaussian_matrix(rng, dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

HermitianOperator random_hermitian(std::uint64_t seed, Eigen::Index dim, std::optional<std::vector<double>> spectrum) {
  if (dim < 1) throw Error(ErrorKind::dimension_mismatch, "dimension must be at least 1");
  if (spectrum) {
    if (static_cast<Eigen::Index>(spectrum->size()) != dim) {
      throw Error(ErrorKind::dimension_mismatch, "spectrum length differs from the dimension");
    }
    const Matrix u = random_unitary(seed, dim);
    Eigen::VectorXcd d(dim);
    for (Eigen::Index i = 0; i < dim; ++i) d(i) = (*spectrum)[static_cast<std::size_t>(i)];
    return HermitianOperator(hermitian_part(u * d.asDiagonal() * u.adjoint()));
  }
  std::mt19937_64 rng(seed);
  Matrix h = hermitian_part(gaussian_matrix(rng, dim));
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  const double norm = solver.eigenvalues().cwiseAbs().maxCoeff();
  if (norm > 0.0) h /= norm;
  return HermitianOperator(std::move(h));
}

HermitianOperator random_direction(std::mt19937_64& rng, Eigen::Index dim, SchattenIndex p) {
  Matrix h = hermitian_part(gaussian_matrix(rng, dim));
  const double norm = schatten_norm(h, p);
  if (norm > 0.0) h /= norm;
  return HermitianOperator(std::move(h));
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back({m(i, j).real(), m(i, j).imag()});
  }
  return {{"dim", m.rows()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("data")) {
    throw Error(ErrorKind::schema_violation, "matrix needs 'dim' and 'data'");
  }
  const auto dim = j.at("dim").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (dim < 1 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != dim * dim) {
    throw Error(ErrorKind::schema_violation, "matrix data must hold dim*dim [re, im] pairs");
  }
  Matrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index k = 0; k < dim; ++k) {
      const auto& entry = data.at(static_cast<std::size_t>(i * dim + k));
      if (!entry.is_array() || entry.size() != 2) throw Error(ErrorKind::schema_violation, "matrix entries are [re, im] pairs");
      m(i, k) = Complex(entry.at(0).get<double>(), entry.at(1).get<double>());
    }
  }
  return m;
}

double relative_frobenius_gap(const Matrix& computed, const Matrix& expected) {
  const double denom = expected.norm();
  const double gap = (computed - expected).norm();
  return denom > 0.0 ? gap / denom : gap;
}

}  // namespace opdiff
