#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <set>

#include <boost/math/quadrature/gauss.hpp>

#include "opdiff/error.hpp"
#include "opdiff/scalar_fn.hpp"

namespace opdiff {

namespace {

constexpr int kAnalyticOrder = 16;

// sup over (-1,1) of |psi^(order)|, sampled finely once per order.
double bump_derivative_sup(int order) {
  static std::map<int, double> cache;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(order); it != cache.end()) return it->second;
  double best = 0.0;
  constexpr int samples = 200000;
  for (int i = 1; i < samples; ++i) {
    const double u = -1.0 + 2.0 * i / samples;
    best = std::max(best, std::abs(bump_derivative(order, u)));
  }
  cache.emplace(order, best);
  return best;
}

void require_keys(const nlohmann::json& params, const std::string& id, std::set<std::string> allowed) {
  if (!params.is_object()) throw Error(ErrorKind::schema_violation, "params of '" + id + "' must be an object");
  for (const auto& [key, value] : params.items()) {
    if (!allowed.contains(key)) {
      throw Error(ErrorKind::schema_violation, "unknown parameter '" + key + "' for function '" + id + "'");
    }
  }
}

template <typename T>
T require(const nlohmann::json& params, const std::string& id, const std::string& key) {
  if (!params.contains(key)) throw Error(ErrorKind::schema_violation, "function '" + id + "' requires '" + key + "'");
  try {
    return params.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::schema_violation, "parameter '" + key + "' of '" + id + "' has the wrong type");
  }
}

double cyclic_trig(int m, double t, bool is_sine) {
  // d^m sin = sin(t + m pi/2); d^m cos = cos(t + m pi/2)
  const int phase = (m + (is_sine ? 0 : 1)) % 4;
  switch (phase) {
    case 0: return std::sin(t);
    case 1: return std::cos(t);
    case 2: return -std::sin(t);
    default: return -std::cos(t);
  }
}

}  // namespace

double fresnel_sine_integral(double t) {
  if (t < 0.0) return -fresnel_sine_integral(-t);
  if (t <= 6.0) {
    using boost::math::quadrature::gauss;
    const int panels = static_cast<int>(std::ceil(t * 8.0)) + 1;
    const double width = t / panels;
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
      acc += gauss<double, 20>::integrate([](double s) { return std::sin(s * s); }, i * width, (i + 1) * width);
    }
    return acc;
  }
  // int_t^inf exp(i s^2) ds = exp(i t^2) sum_k c_k t^(-2k-1),
  // c_0 = i/2, c_k = c_{k-1} (2k-1) / (2i).
  const double t2 = t * t;
  Complex coeff(0.0, 0.5);
  double power = 1.0 / t;
  Complex series = coeff * power;
  double previous = std::abs(series);
  for (int k = 1; k < 200; ++k) {
    coeff *= (2.0 * k - 1.0) / Complex(0.0, 2.0);
    power /= t2;
    const Complex term = coeff * power;
    const double size = std::abs(term);
    if (size > previous) break;
    series += term;
    if (size < 1e-18) break;
    previous = size;
  }
  const Complex tail = Complex(std::cos(t2), std::sin(t2)) * series;
  return std::sqrt(std::numbers::pi / 8.0) - tail.imag();
}

ScalarFunction polynomial(std::vector<double> coefficients) {
  while (coefficients.size() > 1 && coefficients.back() == 0.0) coefficients.pop_back();
  if (coefficients.empty()) coefficients.push_back(0.0);
  const int degree = static_cast<int>(coefficients.size()) - 1;
  SmoothnessClass smoothness = degree <= 1 ? SmoothnessClass{Smoothness::uniform_top, kAnalyticOrder}
                                           : SmoothnessClass{Smoothness::smooth_on_compacts, kAnalyticOrder};
  std::optional<double> lip;
  if (degree == 0) lip = 0.0;
  if (degree == 1) lip = std::abs(coefficients[1]);

  auto eval = [coefficients, degree](int m, double t) {
    if (m > degree) return Complex(0.0);
    // Horner on the m-th derivative coefficients.
    double acc = 0.0;
    for (int i = degree; i >= m; --i) {
      double falling = 1.0;
      for (int j = 0; j < m; ++j) falling *= (i - j);
      acc = acc * t + falling * coefficients[static_cast<std::size_t>(i)];
    }
    return Complex(acc);
  };
  return ScalarFunction("poly", {{"coefficients", coefficients}}, kAnalyticOrder, smoothness, lip, std::move(eval));
}

ScalarFunction monomial(int degree) {
  if (degree < 0) throw Error(ErrorKind::schema_violation, "monomial degree must be >= 0");
  std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
  c.back() = 1.0;
  return polynomial(std::move(c));
}

ScalarFunction affine(double slope, double intercept) { return polynomial({intercept, slope}); }

ScalarFunction sine() {
  return ScalarFunction("sin", nlohmann::json::object(), kAnalyticOrder, {Smoothness::uniform_top, kAnalyticOrder}, 1.0,
      [](int m, double t) { return Complex(cyclic_trig(m, t, true)); });
}

ScalarFunction cosine() {
  return ScalarFunction("cos", nlohmann::json::object(), kAnalyticOrder, {Smoothness::uniform_top, kAnalyticOrder}, 1.0,
      [](int m, double t) { return Complex(cyclic_trig(m, t, false)); });
}

ScalarFunction exponential() {
  return ScalarFunction("exp", nlohmann::json::object(), kAnalyticOrder,
      {Smoothness::smooth_on_compacts, kAnalyticOrder}, std::nullopt, [](int, double t) { return Complex(std::exp(t)); });
}

ScalarFunction lorentzian() {
  // 1/(1+t^2) = Im 1/(t-i), hence f^(m) = Im (-1)^m m! (t-i)^(-m-1).
  auto eval = [](int m, double t) {
    double fact = 1.0;
    for (int i = 2; i <= m; ++i) fact *= i;
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    const Complex z(t, -1.0);
    return Complex((sign * fact * std::pow(z, -m - 1)).imag());
  };
  return ScalarFunction("lorentzian", nlohmann::json::object(), kAnalyticOrder,
      {Smoothness::uniform_top, kAnalyticOrder}, 3.0 * std::sqrt(3.0) / 8.0, std::move(eval));
}

ScalarFunction absolute_value() {
  auto eval = [](int m, double t) {
    if (m == 0) return Complex(std::abs(t));
    return Complex(t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0));
  };
  return ScalarFunction("abs", nlohmann::json::object(), 1, {Smoothness::lipschitz_only, 0}, 1.0, std::move(eval));
}

ScalarFunction fresnel() {
  auto eval = [](int m, double t) {
    const double t2 = t * t;
    switch (m) {
      case 0: return Complex(fresnel_sine_integral(t));
      case 1: return Complex(std::sin(t2));
      default: return Complex(2.0 * t * std::cos(t2));
    }
  };
  return ScalarFunction("fresnel", nlohmann::json::object(), 2, {Smoothness::bounded_only, 1}, 1.0, std::move(eval));
}

ScalarFunction bump_train(int order) {
  if (order < 1) throw Error(ErrorKind::schema_violation, "bump_train order must be >= 1");
  const double top = bump_derivative_sup(order);
  // k-th bump: half-width 1/(2k), centre 2k; only one bump is active at any t.
  auto eval = [order, top](int m, double t) {
    const long k = std::lround(t / 2.0);
    if (k < 1) return Complex(0.0);
    const double half_width = 1.0 / (2.0 * static_cast<double>(k));
    const double u = (t - 2.0 * static_cast<double>(k)) / half_width;
    return Complex(std::pow(half_width, order - m) * bump_derivative(m, u) / top);
  };
  const double lip = std::pow(0.5, order - 1) * bump_derivative_sup(1) / top;
  return ScalarFunction("bump_train", {{"order", order}}, order + 1, {Smoothness::bounded_only, order}, lip,
      std::move(eval));
}

std::vector<std::string> builtin_ids() {
  std::vector<std::string> ids = {"abs", "affine", "bump_train", "constant", "cos", "exp", "fresnel",
      "linear_combination", "lorentzian", "mollified", "monomial", "poly", "sin"};
  std::sort(ids.begin(), ids.end());
  return ids;
}

ScalarFunction make_function(const std::string& id, const nlohmann::json& params_in) {
  const nlohmann::json params = params_in.is_null() ? nlohmann::json::object() : params_in;
  if (id == "sin" || id == "cos" || id == "exp" || id == "lorentzian" || id == "abs" || id == "fresnel") {
    require_keys(params, id, {});
    if (id == "sin") return sine();
    if (id == "cos") return cosine();
    if (id == "exp") return exponential();
    if (id == "lorentzian") return lorentzian();
    if (id == "abs") return absolute_value();
    return fresnel();
  }
  if (id == "poly") {
    require_keys(params, id, {"coefficients"});
    return polynomial(require<std::vector<double>>(params, id, "coefficients"));
  }
  if (id == "monomial") {
    require_keys(params, id, {"degree"});
    return monomial(require<int>(params, id, "degree"));
  }
  if (id == "affine") {
    require_keys(params, id, {"slope", "intercept"});
    return affine(require<double>(params, id, "slope"), params.value("intercept", 0.0));
  }
  if (id == "constant") {
    require_keys(params, id, {"value"});
    return polynomial({require<double>(params, id, "value")});
  }
  if (id == "bump_train") {
    require_keys(params, id, {"order"});
    return bump_train(require<int>(params, id, "order"));
  }
  if (id == "mollified") {
    require_keys(params, id, {"base_id", "base_params", "epsilon", "quadrature_nodes", "smooth_order"});
    const auto base = make_function(require<std::string>(params, id, "base_id"),
        params.value("base_params", nlohmann::json::object()));
    MollifyOptions options;
    options.quadrature_nodes = params.value("quadrature_nodes", options.quadrature_nodes);
    options.smooth_order = params.value("smooth_order", options.smooth_order);
    return mollify(base, require<double>(params, id, "epsilon"), options);
  }
  if (id == "linear_combination") {
    require_keys(params, id, {"a", "f", "b", "g"});
    const auto a = require<std::vector<double>>(params, id, "a");
    const auto b = require<std::vector<double>>(params, id, "b");
    if (a.size() != 2 || b.size() != 2) {
      throw Error(ErrorKind::schema_violation, "linear_combination weights are [re, im] pairs");
    }
    return linear_combination(Complex(a[0], a[1]), function_from_spec(params.at("f")), Complex(b[0], b[1]),
        function_from_spec(params.at("g")));
  }
  throw Error(ErrorKind::unknown_function, "no builtin function named '" + id + "'");
}

ScalarFunction function_from_spec(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("id") || !spec.at("id").is_string()) {
    throw Error(ErrorKind::schema_violation, "function spec needs a string 'id'");
  }
  for (const auto& [key, value] : spec.items()) {
    if (key != "id" && key != "params") throw Error(ErrorKind::schema_violation, "unknown function field '" + key + "'");
  }
  return make_function(spec.at("id").get<std::string>(), spec.value("params", nlohmann::json::object()));
}

}  // namespace opdiff
