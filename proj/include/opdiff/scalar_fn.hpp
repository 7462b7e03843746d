#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace opdiff {

using Complex = std::complex<double>;

/// Declared regularity of a scalar function. Classes are declared by the
/// function's author and probed numerically, never detected automatically.
enum class Smoothness {
  /// C^order_b and the top derivative f^(order) is uniformly continuous.
  uniform_top,
  /// C^order_b, but f^(order) is not uniformly continuous.
  bounded_only,
  /// Lipschitz continuous only (no bounded continuous derivative).
  lipschitz_only,
  /// C^infinity with derivatives bounded on bounded sets (polynomials, exp).
  /// On any bounded spectrum such an f agrees with a C^infinity_b function.
  smooth_on_compacts,
};

struct SmoothnessClass {
  Smoothness kind = Smoothness::lipschitz_only;
  int order = 0;

  /// f in C^n_b.
  bool is_cnb(int n) const;
  /// f in C^n_b and f^(n) uniformly continuous.
  bool meets_hypothesis(int n) const;
};

std::string to_string(Smoothness kind);

/// A scalar function R -> C with derivatives available up to max_order.
///
/// Value type; copies share the immutable evaluator. `spec()` is the
/// serializable description `{"id": ..., "params": {...}}` that
/// `make_function` accepts.
class ScalarFunction {
 public:
  using Evaluator = std::function<Complex(int order, double t)>;

  ScalarFunction(std::string id, nlohmann::json params, int max_order, SmoothnessClass smoothness,
      std::optional<double> lipschitz_bound, Evaluator eval, bool real_valued = true);

  const std::string& id() const { return id_; }
  const nlohmann::json& params() const { return params_; }
  nlohmann::json spec() const;

  int max_order() const { return max_order_; }
  SmoothnessClass smoothness() const { return smoothness_; }
  std::optional<double> lipschitz_bound() const { return lipschitz_bound_; }
  bool real_valued() const { return real_valued_; }

  /// f^(order)(t). Throws order_exceeded above max_order.
  Complex eval(int order, double t) const;
  Complex operator()(double t) const { return eval(0, t); }

 private:
  std::string id_;
  nlohmann::json params_;
  int max_order_;
  SmoothnessClass smoothness_;
  std::optional<double> lipschitz_bound_;
  std::shared_ptr<const Evaluator> eval_;
  bool real_valued_;
};

inline Complex eval_derivative(const ScalarFunction& f, int m, double t) { return f.eval(m, t); }

/// Divided difference f^[k] on k+1 nodes, with confluent limits.
///
/// Nodes are sorted and the Newton table is built over contiguous blocks.
/// A block whose spread is below 1e-6 * (1 + max|node|) is evaluated by a
/// Taylor expansion about its mean: f^(k)(c)/k! plus higher terms when the
/// function provides them. Blocks up to a wider, order-dependent spread use
/// the same expansion when at least four further derivatives exist.
Complex divided_difference(const ScalarFunction& f, std::span<const double> nodes);

/// The unnormalized bump exp(-1/(1-u^2)) on (-1,1) and its derivatives.
double bump_derivative(int order, double u);

/// Smooth compactly supported kernel phi_eps(t) = phi(t/eps)/eps, phi the
/// unit-mass bump on (-1,1), together with its composite Simpson rule on
/// [-eps, eps].
class Mollifier {
 public:
  static constexpr int kDefaultQuadratureNodes = 2049;

  explicit Mollifier(double epsilon, int quadrature_nodes = kDefaultQuadratureNodes);

  double epsilon() const { return epsilon_; }
  int quadrature_nodes() const { return static_cast<int>(nodes_.size()); }

  /// phi_eps^(order)(t).
  double operator()(double t, int order = 0) const;

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> simpson_weights() const { return weights_; }

  /// Integral of the unnormalized bump over (-1,1).
  static double normalization();

 private:
  double epsilon_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

struct MollifyOptions {
  int quadrature_nodes = Mollifier::kDefaultQuadratureNodes;
  int smooth_order = 6;
};

/// f_eps = phi_eps * f. Derivatives up to f.max_order() convolve the kernel
/// with f^(m); higher ones move the excess onto the differentiated kernel.
ScalarFunction mollify(const ScalarFunction& f, double epsilon, const MollifyOptions& options = {});

/// a*f + b*g. Used for f - f_eps families and for complex-valued functions
/// assembled from real and imaginary parts.
ScalarFunction linear_combination(Complex a, const ScalarFunction& f, Complex b, const ScalarFunction& g);

/// re + i*im.
ScalarFunction complex_valued(const ScalarFunction& re, const ScalarFunction& im);

/// Grid approximation of sup_{0<|s-r|<eta} |f^(m)(s) - f^(m)(r)|.
double uc_modulus(const ScalarFunction& f, int m, double eta, std::span<const double> grid);

/// max over the grid of |f^(m)(t)|.
double grid_sup_norm(const ScalarFunction& f, int m, std::span<const double> grid);

/// max over the grid of |f^(m)(t) - g^(m)(t)|.
double grid_sup_distance(const ScalarFunction& f, const ScalarFunction& g, int m, std::span<const double> grid);

/// lo, lo+step, ..., up to hi (inclusive when it lands on the grid).
std::vector<double> uniform_grid(double lo, double hi, double step);

// Function library ----------------------------------------------------------

/// Builds a builtin from its id and parameter object. Throws unknown_function
/// or schema_violation.
ScalarFunction make_function(const std::string& id, const nlohmann::json& params = nlohmann::json::object());
/// Accepts the `spec()` form `{"id": ..., "params": {...}}`.
ScalarFunction function_from_spec(const nlohmann::json& spec);

/// Sorted list of builtin ids.
std::vector<std::string> builtin_ids();

ScalarFunction polynomial(std::vector<double> coefficients);
ScalarFunction monomial(int degree);
ScalarFunction affine(double slope, double intercept);
ScalarFunction sine();
ScalarFunction cosine();
ScalarFunction exponential();
ScalarFunction lorentzian();
ScalarFunction absolute_value();
/// f(t) = int_0^t sin(s^2) ds. f' is bounded but not uniformly continuous.
ScalarFunction fresnel();
/// f^(order) is an infinite train of unit-height bump derivatives of width
/// 1/k centred at 2k, k = 1, 2, ...; bounded, not uniformly continuous.
ScalarFunction bump_train(int order);

/// int_0^t sin(s^2) ds, accurate to about 1e-14 absolute.
double fresnel_sine_integral(double t);

}  // namespace opdiff
