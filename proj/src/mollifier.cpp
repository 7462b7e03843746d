#include <cmath>
#include <memory>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "opdiff/error.hpp"
#include "opdiff/scalar_fn.hpp"

namespace opdiff {

namespace {

double binomial(int m, int j) {
  double r = 1.0;
  for (int i = 1; i <= j; ++i) r = r * (m - j + i) / i;
  return r;
}

// g(u) = -1/(1-u^2) = -(1/(1-u) + 1/(1+u))/2, so for j >= 1
// g^(j)(u) = -j!/2 * ((1-u)^(-j-1) + (-1)^j (1+u)^(-j-1)).
double exponent_derivative(int j, double u) {
  double fact = 1.0;
  for (int i = 2; i <= j; ++i) fact *= i;
  const double sign = (j % 2 == 0) ? 1.0 : -1.0;
  return -0.5 * fact * (std::pow(1.0 - u, -j - 1) + sign * std::pow(1.0 + u, -j - 1));
}

}  // namespace

double bump_derivative(int order, double u) {
  if (!(std::abs(u) < 1.0)) return 0.0;
  const double psi = std::exp(-1.0 / (1.0 - u * u));
  if (psi == 0.0) return 0.0;
  // psi = exp(g): psi^(m+1) = sum_j C(m,j) g^(j+1) psi^(m-j).
  std::vector<double> d(order + 1);
  d[0] = psi;
  std::vector<double> g(order + 1);
  for (int j = 1; j <= order; ++j) g[j] = exponent_derivative(j, u);
  for (int m = 0; m < order; ++m) {
    double acc = 0.0;
    for (int j = 0; j <= m; ++j) acc += binomial(m, j) * g[j + 1] * d[m - j];
    d[m + 1] = acc;
  }
  return d[order];
}

double Mollifier::normalization() {
  static const double value = [] {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate([](double u) { return bump_derivative(0, u); }, -1.0, 1.0, 15, 1e-14);
  }();
  return value;
}

Mollifier::Mollifier(double epsilon, int quadrature_nodes) : epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::nonpositive_epsilon, "mollifier width must be positive");
  if (quadrature_nodes < 3) throw Error(ErrorKind::degenerate_grid, "Simpson rule needs at least 3 nodes");
  // Composite Simpson needs an odd node count.
  if (quadrature_nodes % 2 == 0) ++quadrature_nodes;
  const auto count = static_cast<std::size_t>(quadrature_nodes);
  const double h = 2.0 * epsilon / static_cast<double>(count - 1);
  nodes_.resize(count);
  weights_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    nodes_[i] = -epsilon + static_cast<double>(i) * h;
    const double w = (i == 0 || i + 1 == count) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    weights_[i] = w * h / 3.0;
  }
}

double Mollifier::operator()(double t, int order) const {
  const double scale = std::pow(epsilon_, -1 - order);
  return scale * bump_derivative(order, t / epsilon_) / normalization();
}

ScalarFunction mollify(const ScalarFunction& f, double epsilon, const MollifyOptions& options) {
  const auto kernel = std::make_shared<const Mollifier>(epsilon, options.quadrature_nodes);
  const int base_order = f.max_order();
  const int max_order = std::max(base_order, options.smooth_order);

  // Quadrature weights times phi_eps^(r) at the nodes, one row per kernel order r.
  auto weighted = std::make_shared<std::vector<std::vector<double>>>(max_order - std::min(base_order, max_order) + 1);
  for (std::size_t r = 0; r < weighted->size(); ++r) {
    auto& row = (*weighted)[r];
    row.resize(kernel->nodes().size());
    for (std::size_t i = 0; i < row.size(); ++i) {
      row[i] = kernel->simpson_weights()[i] * (*kernel)(kernel->nodes()[i], static_cast<int>(r));
    }
  }

  auto eval = [f, kernel, weighted, base_order](int m, double t) {
    const int j = std::min(m, base_order);
    const auto& w = (*weighted)[static_cast<std::size_t>(m - j)];
    const auto nodes = kernel->nodes();
    Complex acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (w[i] != 0.0) acc += w[i] * f.eval(j, t - nodes[i]);
    }
    return acc;
  };

  SmoothnessClass smoothness = f.smoothness().kind == Smoothness::smooth_on_compacts
                                   ? f.smoothness()
                                   : SmoothnessClass{Smoothness::uniform_top, max_order};
  nlohmann::json params = {{"base_id", f.id()}, {"base_params", f.params()}, {"epsilon", epsilon},
      {"quadrature_nodes", kernel->quadrature_nodes()}, {"smooth_order", options.smooth_order}};
  return ScalarFunction("mollified", std::move(params), max_order, smoothness, f.lipschitz_bound(), std::move(eval),
      f.real_valued());
}

}  // namespace opdiff
