#include "opdiff/moi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "opdiff/error.hpp"
#include "opdiff/parallel.hpp"

namespace opdiff {

namespace {

void check_order(const ScalarFunction& f, int order) {
  if (order < 1 || order > kMaxMoiOrder) {
    throw Error(ErrorKind::order_exceeded, "MOI order must lie in [1, " + std::to_string(kMaxMoiOrder) + "]");
  }
  if (order > f.max_order()) {
    throw Error(ErrorKind::order_exceeded, "MOI order " + std::to_string(order) + " exceeds max_order of '" + f.id() + "'");
  }
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

void check_budget(double cost, const MoiOptions& options) {
  if (cost > options.budget) {
    throw Error(ErrorKind::budget_exceeded,
        "estimated " + std::to_string(cost) + " multiply-adds exceeds budget " + std::to_string(options.budget));
  }
}

}  // namespace

MoiKernel::MoiKernel(const ScalarFunction& f, std::vector<SpectralHandle> bases) : bases_(std::move(bases)) {
  if (bases_.size() < 2) throw Error(ErrorKind::order_exceeded, "an MOI needs at least two bases");
  check_order(f, order());
  for (const auto& b : bases_) {
    if (!b) throw Error(ErrorKind::dimension_mismatch, "null spectral base");
    if (b->dim() != dim()) throw Error(ErrorKind::dimension_mismatch, "MOI bases differ in dimension");
  }

  const std::size_t n_bases = bases_.size();
  strides_.assign(n_bases, 1);
  for (std::size_t j = n_bases - 1; j-- > 0;) strides_[j] = strides_[j + 1] * bases_[j + 1]->clusters().size();
  const std::size_t total = strides_[0] * bases_[0]->clusters().size();
  coefficients_.resize(total);

  std::map<std::vector<double>, Complex> cache;
  std::vector<double> nodes(n_bases);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t j = 0; j < n_bases; ++j) {
      nodes[j] = bases_[j]->clusters()[rest / strides_[j]].value;
      rest %= strides_[j];
    }
    std::vector<double> key = nodes;
    std::sort(key.begin(), key.end());
    if (auto it = cache.find(key); it != cache.end()) {
      coefficients_[flat] = it->second;
      ++cache_hits_;
    } else {
      const Complex value = divided_difference(f, key);
      cache.emplace(std::move(key), value);
      coefficients_[flat] = value;
    }
  }
}

double MoiKernel::cost() const { return std::pow(static_cast<double>(dim()), order() + 1); }

Matrix MoiKernel::apply(std::span<const Matrix> perturbations) const {
  const int n = order();
  if (static_cast<int>(perturbations.size()) != n) {
    throw Error(ErrorKind::dimension_mismatch, "expected " + std::to_string(n) + " perturbations");
  }
  const Eigen::Index d = dim();
  // Y_j = U_{j-1}^* X_j U_j carries X_j into the eigenbases of its neighbours.
  std::vector<Matrix> y(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto& x = perturbations[static_cast<std::size_t>(j)];
    if (x.rows() != d || x.cols() != d) throw Error(ErrorKind::dimension_mismatch, "perturbation has the wrong shape");
    y[static_cast<std::size_t>(j)] =
        bases_[static_cast<std::size_t>(j)]->basis().adjoint() * x * bases_[static_cast<std::size_t>(j) + 1]->basis();
  }

  std::vector<const int*> cluster_maps(bases_.size());
  for (std::size_t j = 0; j < bases_.size(); ++j) cluster_maps[j] = bases_[j]->cluster_of_column().data();

  Matrix z = Matrix::Zero(d, d);
  // One row of Z per outer index; each row has a fixed accumulation order.
  parallel_for(static_cast<std::size_t>(d), [&](std::size_t a0) {
    Eigen::VectorXcd row = Eigen::VectorXcd::Zero(d);
    auto descend = [&](auto&& self, int level, Eigen::Index prev, std::size_t offset, Complex prod) -> void {
      const Matrix& yl = y[static_cast<std::size_t>(level - 1)];
      const std::size_t stride = strides_[static_cast<std::size_t>(level)];
      const int* clusters = cluster_maps[static_cast<std::size_t>(level)];
      for (Eigen::Index b = 0; b < d; ++b) {
        const Complex p = prod * yl(prev, b);
        if (p == Complex(0.0)) continue;
        const std::size_t off = offset + static_cast<std::size_t>(clusters[b]) * stride;
        if (level == n) {
          row(b) += coefficients_[off] * p;
        } else {
          self(self, level + 1, b, off, p);
        }
      }
    };
    const auto a = static_cast<Eigen::Index>(a0);
    descend(descend, 1, a, static_cast<std::size_t>(cluster_maps[0][a]) * strides_[0], Complex(1.0));
    z.row(a) = row.transpose();
  });

  return bases_.front()->basis() * z * bases_.back()->basis().adjoint();
}

Matrix MoiKernel::apply_symmetrized(std::span<const Matrix> perturbations) const {
  const int n = order();
  if (static_cast<int>(perturbations.size()) != n) {
    throw Error(ErrorKind::dimension_mismatch, "expected " + std::to_string(n) + " perturbations");
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Matrix> ordered(static_cast<std::size_t>(n));
  Matrix total = Matrix::Zero(dim(), dim());
  do {
    for (int j = 0; j < n; ++j) ordered[static_cast<std::size_t>(j)] = perturbations[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
    total += apply(ordered);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

MultilinearResult moi_evaluate(const MoiRequest& request, const MoiOptions& options) {
  check_order(request.f, request.order);
  if (static_cast<int>(request.bases.size()) != request.order + 1 ||
      static_cast<int>(request.perturbations.size()) != request.order) {
    throw Error(ErrorKind::dimension_mismatch, "an order-n MOI needs n+1 bases and n perturbations");
  }
  for (const auto& b : request.bases) {
    if (!b || b->dim() != request.bases.front()->dim()) throw Error(ErrorKind::dimension_mismatch, "MOI bases differ in dimension");
  }
  check_budget(std::pow(static_cast<double>(request.bases.front()->dim()), request.order + 1), options);
  MoiKernel kernel(request.f, request.bases);
  return {kernel.apply(request.perturbations), kernel.tuple_count(), kernel.cache_hits()};
}

Matrix moi_symmetrized(const ScalarFunction& f, int order, const SpectralHandle& a, std::span<const Matrix> xs,
    const MoiOptions& options) {
  check_order(f, order);
  if (!a) throw Error(ErrorKind::dimension_mismatch, "null spectral base");
  if (static_cast<int>(xs.size()) != order) {
    throw Error(ErrorKind::dimension_mismatch, "expected " + std::to_string(order) + " perturbations");
  }
  check_budget(std::pow(static_cast<double>(a->dim()), order + 1) * factorial(order), options);
  MoiKernel kernel(f, std::vector<SpectralHandle>(static_cast<std::size_t>(order) + 1, a));
  return kernel.apply_symmetrized(xs);
}

Matrix taylor_remainder(const ScalarFunction& f, int order, const HermitianOperator& a, const HermitianOperator& x,
    const MoiOptions& options) {
  check_order(f, order);
  if (a.dim() != x.dim()) throw Error(ErrorKind::dimension_mismatch, "A and X differ in dimension");
  MoiRequest request{f, order, {}, std::vector<Matrix>(static_cast<std::size_t>(order), x.matrix())};
  const auto base = share(decompose(a));
  request.bases.push_back(share(decompose(a + x)));
  for (int j = 0; j < order; ++j) request.bases.push_back(base);
  return moi_evaluate(request, options).value;
}

}  // namespace opdiff
