#include "opdiff/scalar_fn.hpp"

#include <algorithm>
#include <cmath>

#include "opdiff/error.hpp"

namespace opdiff {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::order_exceeded: return "order-exceeded";
    case ErrorKind::nonpositive_epsilon: return "nonpositive-epsilon";
    case ErrorKind::empty_grid: return "empty-grid";
    case ErrorKind::degenerate_grid: return "degenerate-grid";
    case ErrorKind::non_hermitian_input: return "non-hermitian-input";
    case ErrorKind::eigensolver_failure: return "eigensolver-failure";
    case ErrorKind::invalid_p: return "invalid-p";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::budget_exceeded: return "budget-exceeded";
    case ErrorKind::smoothness_insufficient: return "smoothness-insufficient";
    case ErrorKind::step_too_small: return "step-too-small";
    case ErrorKind::index_out_of_range: return "index-out-of-range";
    case ErrorKind::unknown_function: return "unknown-function";
    case ErrorKind::schema_violation: return "schema-violation";
  }
  return "unknown-error";
}

bool SmoothnessClass::is_cnb(int n) const {
  switch (kind) {
    case Smoothness::uniform_top:
    case Smoothness::bounded_only: return n <= order;
    case Smoothness::lipschitz_only: return n == 0;
    case Smoothness::smooth_on_compacts: return true;
  }
  return false;
}

bool SmoothnessClass::meets_hypothesis(int n) const {
  switch (kind) {
    case Smoothness::uniform_top: return n <= order;
    // Below the top order the next derivative is bounded, so f^(n) is Lipschitz.
    case Smoothness::bounded_only: return n < order;
    case Smoothness::lipschitz_only: return n == 0;
    case Smoothness::smooth_on_compacts: return true;
  }
  return false;
}

std::string to_string(Smoothness kind) {
  switch (kind) {
    case Smoothness::uniform_top: return "C^n_b, f^(n) uniformly continuous";
    case Smoothness::bounded_only: return "C^n_b only";
    case Smoothness::lipschitz_only: return "Lipschitz-only";
    case Smoothness::smooth_on_compacts: return "C^infinity on bounded sets";
  }
  return "unknown";
}

ScalarFunction::ScalarFunction(std::string id, nlohmann::json params, int max_order,
    SmoothnessClass smoothness, std::optional<double> lipschitz_bound, Evaluator eval,
    bool real_valued)
    : id_(std::move(id)),
      params_(std::move(params)),
      max_order_(max_order),
      smoothness_(smoothness),
      lipschitz_bound_(lipschitz_bound),
      eval_(std::make_shared<const Evaluator>(std::move(eval))),
      real_valued_(real_valued) {}

nlohmann::json ScalarFunction::spec() const { return {{"id", id_}, {"params", params_}}; }

Complex ScalarFunction::eval(int order, double t) const {
  if (order < 0 || order > max_order_) {
    throw Error(ErrorKind::order_exceeded, "derivative order " + std::to_string(order) + " of '" +
                                               id_ + "' (max_order " + std::to_string(max_order_) + ")");
  }
  return (*eval_)(order, t);
}

namespace {

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

// f^[k] over a block of nearly coincident nodes: sum_q f^(k+q)(c)/(k+q)! h_q(y),
// y = nodes - c, h_q the complete homogeneous symmetric polynomials.
Complex confluent_block(const ScalarFunction& f, std::span<const double> block, int max_terms) {
  const int k = static_cast<int>(block.size()) - 1;
  double c = 0.0;
  for (double x : block) c += x;
  c /= static_cast<double>(block.size());

  Complex value = f.eval(k, c) / factorial(k);
  const int extra = std::min(max_terms, f.max_order() - k);
  if (extra < 2) return value;

  // Newton's identities: q h_q = sum_{i=1}^q p_i h_{q-i}.
  std::vector<double> power_sums(extra + 1, 0.0);
  for (double x : block) {
    double y = x - c, yi = 1.0;
    for (int i = 1; i <= extra; ++i) {
      yi *= y;
      power_sums[i] += yi;
    }
  }
  std::vector<double> h(extra + 1, 0.0);
  h[0] = 1.0;
  for (int q = 1; q <= extra; ++q) {
    double acc = 0.0;
    for (int i = 1; i <= q; ++i) acc += power_sums[i] * h[q - i];
    h[q] = acc / q;
  }
  for (int q = 2; q <= extra; ++q) value += f.eval(k + q, c) / factorial(k + q) * h[q];
  return value;
}

constexpr int kConfluentTerms = 3;
constexpr int kTaylorTerms = 12;

// Largest block spread for which a Taylor expansion with `terms` corrections
// beats the Newton quotient: truncation ~ spread^(terms+1) stays near 1e-13.
double taylor_radius(int terms) {
  if (terms < 4) return 0.0;
  return std::pow(1e-13, 1.0 / (terms + 1));
}

}  // namespace

Complex divided_difference(const ScalarFunction& f, std::span<const double> nodes) {
  if (nodes.empty()) throw Error(ErrorKind::degenerate_grid, "divided difference needs at least one node");
  const int k = static_cast<int>(nodes.size()) - 1;
  if (k > f.max_order()) {
    throw Error(ErrorKind::order_exceeded, "divided difference of order " + std::to_string(k) + " for '" +
                                               f.id() + "' (max_order " + std::to_string(f.max_order()) + ")");
  }

  std::vector<double> x(nodes.begin(), nodes.end());
  std::sort(x.begin(), x.end());
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  const double tau = 1e-6 * (1.0 + scale);

  // table[i] holds f[x_i .. x_{i+len}] for the current block length.
  std::vector<Complex> table(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) table[i] = f.eval(0, x[i]);
  for (int len = 1; len <= k; ++len) {
    for (std::size_t i = 0; i + len < x.size(); ++i) {
      const double spread = x[i + len] - x[i];
      const int terms = std::min(kTaylorTerms, f.max_order() - len);
      if (spread < tau) {
        table[i] = confluent_block(f, std::span<const double>(x).subspan(i, len + 1), kConfluentTerms);
      } else if (spread < taylor_radius(terms)) {
        table[i] = confluent_block(f, std::span<const double>(x).subspan(i, len + 1), terms);
      } else {
        table[i] = (table[i + 1] - table[i]) / spread;
      }
    }
  }
  return table[0];
}

ScalarFunction linear_combination(Complex a, const ScalarFunction& f, Complex b, const ScalarFunction& g) {
  const int order = std::min(f.max_order(), g.max_order());
  const auto sf = f.smoothness(), sg = g.smoothness();
  SmoothnessClass combined;
  if (sf.kind == Smoothness::smooth_on_compacts && sg.kind == Smoothness::smooth_on_compacts) {
    combined = sf;
  } else {
    // The combination is at least as regular as the weaker of the two.
    auto top = [order](SmoothnessClass s) {
      if (s.kind == Smoothness::smooth_on_compacts) return SmoothnessClass{Smoothness::uniform_top, order};
      return s;
    };
    const auto tf = top(sf), tg = top(sg);
    auto rank = [](SmoothnessClass s) {
      return s.kind == Smoothness::lipschitz_only ? 0 : 2 * s.order + (s.kind == Smoothness::uniform_top);
    };
    combined = rank(tf) <= rank(tg) ? tf : tg;
  }
  std::optional<double> lip;
  if (f.lipschitz_bound() && g.lipschitz_bound()) {
    lip = std::abs(a) * *f.lipschitz_bound() + std::abs(b) * *g.lipschitz_bound();
  }
  const bool real = f.real_valued() && g.real_valued() && a.imag() == 0.0 && b.imag() == 0.0;
  nlohmann::json params = {{"a", {a.real(), a.imag()}}, {"f", f.spec()}, {"b", {b.real(), b.imag()}}, {"g", g.spec()}};
  return ScalarFunction("linear_combination", std::move(params), order, combined, lip,
      [a, f, b, g](int m, double t) { return a * f.eval(m, t) + b * g.eval(m, t); }, real);
}

ScalarFunction complex_valued(const ScalarFunction& re, const ScalarFunction& im) {
  return linear_combination(1.0, re, Complex(0.0, 1.0), im);
}

double uc_modulus(const ScalarFunction& f, int m, double eta, std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::empty_grid, "uc_modulus needs a nonempty grid");
  if (!(eta > 0.0)) throw Error(ErrorKind::degenerate_grid, "uc_modulus needs eta > 0");

  std::vector<double> t(grid.begin(), grid.end());
  std::sort(t.begin(), t.end());
  std::vector<Complex> values(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) values[i] = f.eval(m, t[i]);

  double best = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = i + 1; j < t.size() && t[j] - t[i] < eta; ++j) {
      if (t[j] == t[i]) continue;
      best = std::max(best, std::abs(values[j] - values[i]));
    }
  }
  return best;
}

double grid_sup_norm(const ScalarFunction& f, int m, std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::empty_grid, "sup norm needs a nonempty grid");
  double best = 0.0;
  for (double t : grid) best = std::max(best, std::abs(f.eval(m, t)));
  return best;
}

double grid_sup_distance(const ScalarFunction& f, const ScalarFunction& g, int m, std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::empty_grid, "sup distance needs a nonempty grid");
  double best = 0.0;
  for (double t : grid) best = std::max(best, std::abs(f.eval(m, t) - g.eval(m, t)));
  return best;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw Error(ErrorKind::degenerate_grid, "uniform grid needs step > 0 and lo <= hi");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
  return grid;
}

}  // namespace opdiff
