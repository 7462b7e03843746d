#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "opdiff/scalar_fn.hpp"
#include "opdiff/spectral.hpp"

namespace opdiff {

/// Highest supported MOI order.
inline constexpr int kMaxMoiOrder = 5;
/// Default ceiling on scalar multiply-adds per call.
inline constexpr double kDefaultMoiBudget = 1e9;

using SpectralHandle = std::shared_ptr<const SpectralData>;

inline SpectralHandle share(SpectralData data) { return std::make_shared<const SpectralData>(std::move(data)); }

struct MoiRequest {
  ScalarFunction f;
  int order = 1;
  std::vector<SpectralHandle> bases;   // A_0, ..., A_n
  std::vector<Matrix> perturbations;   // X_1, ..., X_n
};

struct MultilinearResult {
  Matrix value;
  std::size_t tuple_count = 0;    // prod_j (clusters of base j)
  std::size_t dd_cache_hits = 0;  // divided differences reused via sorted-node keys
};

struct MoiOptions {
  double budget = kDefaultMoiBudget;
};

/// Divided-difference coefficients f^[n](lambda^(0)_{i0}, ..., lambda^(n)_{in})
/// over all cluster tuples of a fixed list of bases. Building the kernel is
/// the expensive part for costly f (mollified functions); applying it to
/// perturbations is O(d^(n+1)).
class MoiKernel {
 public:
  MoiKernel(const ScalarFunction& f, std::vector<SpectralHandle> bases);

  int order() const { return static_cast<int>(bases_.size()) - 1; }
  Eigen::Index dim() const { return bases_.front()->dim(); }
  std::size_t tuple_count() const { return coefficients_.size(); }
  std::size_t cache_hits() const { return cache_hits_; }
  const std::vector<SpectralHandle>& bases() const { return bases_; }

  /// T(X_1, ..., X_n) = sum f^[n](...) P0 X1 P1 ... Xn Pn.
  Matrix apply(std::span<const Matrix> perturbations) const;
  /// Sum of apply over all orderings of the perturbations.
  Matrix apply_symmetrized(std::span<const Matrix> perturbations) const;

  /// Multiply-adds of one apply call.
  double cost() const;

 private:
  std::vector<SpectralHandle> bases_;
  std::vector<std::size_t> strides_;
  std::vector<Complex> coefficients_;
  std::size_t cache_hits_ = 0;
};

MultilinearResult moi_evaluate(const MoiRequest& request, const MoiOptions& options = {});

/// Gamma(f)[X_1..X_n] = sum over S_n of T^{A,...,A}(X_sigma(1), ..., X_sigma(n)).
Matrix moi_symmetrized(const ScalarFunction& f, int order, const SpectralHandle& a, std::span<const Matrix> xs,
    const MoiOptions& options = {});

/// T^{A+X, A, ..., A}_{f^[n]}(X, ..., X), the exact Taylor remainder.
Matrix taylor_remainder(const ScalarFunction& f, int order, const HermitianOperator& a, const HermitianOperator& x,
    const MoiOptions& options = {});

}  // namespace opdiff
