#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "opdiff/error.hpp"
#include "opdiff/scalar_fn.hpp"
#include "support/oracles.hpp"

using namespace opdiff;

namespace {

constexpr int kTrials = 200;

double raw_bump(double u) { return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0; }

double fresnel_oracle(double t) {
  // 61-point Kronrod on short panels; independent of the library's rule.
  double sum = 0.0;
  const double sign = t < 0 ? -1.0 : 1.0;
  const double end = std::abs(t);
  for (double a = 0.0; a < end; a += 0.05) {
    const double b = std::min(a + 0.05, end);
    sum += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double s) { return std::sin(s * s); }, a, b, 0);
  }
  return sign * sum;
}

std::vector<ScalarFunction> smooth_builtins() {
  return {sine(), cosine(), exponential(), lorentzian(), monomial(3), polynomial({1.0, -2.0, 0.5})};
}

}  // namespace

TEST(EvalDerivative, SpecExamples) {
  EXPECT_NEAR(eval_derivative(monomial(2), 1, 3.0).real(), 6.0, 1e-15);
  EXPECT_NEAR(std::abs(eval_derivative(sine(), 2, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(eval_derivative(fresnel(), 1, std::sqrt(std::numbers::pi)).real(), 0.0, 1e-14);
}

TEST(EvalDerivative, OrderExceededThrows) {
  try {
    (void)eval_derivative(absolute_value(), 2, 0.0);
    FAIL() << "expected order-exceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::order_exceeded);
    EXPECT_NE(std::string(e.what()).find("order-exceeded"), std::string::npos);
  }
}

TEST(EvalDerivative, CentralDifferencesConvergeWithRichardson) {
  std::vector<ScalarFunction> fs = smooth_builtins();
  fs.push_back(fresnel());
  fs.push_back(bump_train(2));
  for (const auto& f : fs) {
    for (int m = 1; m <= std::min(f.max_order(), 3); ++m) {
      for (double t : {-1.3, 0.2, 0.9, 2.5}) {
        auto cd = [&](double h) { return (f.eval(m - 1, t + h) - f.eval(m - 1, t - h)) / (2.0 * h); };
        const Complex exact = f.eval(m, t);
        const double e3 = std::abs(cd(1e-3) - exact);
        const double e4 = std::abs(cd(1e-4) - exact);
        const Complex richardson = (4.0 * cd(1e-4) - cd(2e-4)) / 3.0;
        const double scale = 1.0 + std::abs(exact);
        EXPECT_LE(e4, std::max(e3, 1e-9 * scale) * 1.01) << f.id() << " m=" << m << " t=" << t;
        EXPECT_LE(std::abs(richardson - exact), 1e-6 * scale) << f.id() << " m=" << m << " t=" << t;
      }
    }
  }
}

TEST(EvalDerivative, DeclaredBoundsHoldOnGrid) {
  const auto grid = uniform_grid(-20.0, 20.0, 0.01);
  EXPECT_LE(grid_sup_norm(sine(), 1, grid), 1.0);
  EXPECT_LE(grid_sup_norm(lorentzian(), 1, grid), *lorentzian().lipschitz_bound() + 1e-12);
  EXPECT_LE(grid_sup_norm(absolute_value(), 1, grid), 1.0);
  EXPECT_LE(grid_sup_norm(fresnel(), 1, grid), 1.0);
  for (int n = 1; n <= 3; ++n) {
    const auto f = bump_train(n);
    EXPECT_LE(grid_sup_norm(f, n, uniform_grid(0.0, 60.0, 1e-3)), 1.0 + 1e-12) << n;
  }
}

TEST(Fresnel, MatchesIndependentQuadrature) {
  for (double t : {0.0, 0.3, 1.0, 2.7, 5.9, 6.1, 10.0, 25.0, 80.0}) {
    EXPECT_NEAR(fresnel_sine_integral(t), fresnel_oracle(t), 1e-12) << t;
    EXPECT_NEAR(fresnel_sine_integral(-t), -fresnel_oracle(t), 1e-12) << t;
  }
  EXPECT_NEAR(fresnel_sine_integral(1e6), std::sqrt(std::numbers::pi / 8.0), 1e-6);
}

TEST(DividedDifference, SpecExamples) {
  const std::vector<double> a = {1.0, 3.0}, b = {2.0, 2.0}, c = {0.0, 0.0, 0.0};
  EXPECT_NEAR(divided_difference(monomial(2), a).real(), 4.0, 1e-14);
  EXPECT_NEAR(divided_difference(monomial(2), b).real(), 4.0, 1e-14);
  EXPECT_NEAR(divided_difference(exponential(), c).real(), 0.5, 1e-14);
}

TEST(DividedDifference, OrderExceeded) {
  const std::vector<double> nodes = {0.0, 1.0, 2.0};
  EXPECT_THROW((void)divided_difference(absolute_value(), nodes), Error);
}

TEST(DividedDifference, NearConfluentIsContinuous) {
  // Spread just below and above the confluent threshold.
  for (double h : {1e-7, 1e-5, 1e-3}) {
    const std::vector<double> nodes = {0.4, 0.4 + h, 0.4 + 2 * h};
    // Exact second difference of sin on equispaced nodes.
    const double half = std::sin(h / 2.0);
    const double expected = -std::sin(0.4 + h) * 2.0 * half * half / (h * h);
    EXPECT_NEAR(divided_difference(sine(), nodes).real(), expected, 1e-12) << h;
  }
}

TEST(DividedDifference, PermutationSymmetry) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> order(1, 4);
  const auto fs = smooth_builtins();
  int failures = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto& f = fs[static_cast<std::size_t>(trial) % fs.size()];
    const int k = std::min(order(rng), f.max_order());
    std::vector<double> nodes(static_cast<std::size_t>(k) + 1);
    for (auto& x : nodes) x = u(rng);
    if (trial % 3 == 0) nodes[1] = nodes[0];  // coincident pair
    const Complex base = divided_difference(f, nodes);
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const Complex permuted = divided_difference(f, nodes);
    if (std::abs(permuted - base) > 1e-9 * (1.0 + std::abs(base))) ++failures;
  }
  EXPECT_EQ(failures, 0);
}

TEST(DividedDifference, RecurrenceOnSeparatedNodes) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto fs = smooth_builtins();
  int failures = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto& f = fs[static_cast<std::size_t>(trial) % fs.size()];
    const int k = 1 + trial % 3;
    std::vector<double> nodes;
    while (static_cast<int>(nodes.size()) < k + 1) {
      const double x = u(rng);
      if (std::all_of(nodes.begin(), nodes.end(), [&](double y) { return std::abs(x - y) > 0.3; })) nodes.push_back(x);
    }
    const std::vector<double> drop_last(nodes.begin(), nodes.end() - 1), drop_first(nodes.begin() + 1, nodes.end());
    const Complex lhs = divided_difference(f, nodes);
    const Complex rhs = (divided_difference(f, drop_last) - divided_difference(f, drop_first)) / (nodes.front() - nodes.back());
    const Complex naive = oracle::divided_difference([&](double t) { return f(t); }, nodes);
    if (std::abs(lhs - rhs) > 1e-9 * (1.0 + std::abs(lhs))) ++failures;
    if (std::abs(lhs - naive) > 1e-9 * (1.0 + std::abs(lhs))) ++failures;
  }
  EXPECT_EQ(failures, 0);
}

TEST(DividedDifference, MeanValueBound) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  const auto grid = uniform_grid(-4.0, 4.0, 1e-3);
  std::vector<ScalarFunction> fs = {sine(), cosine(), lorentzian(), fresnel(), bump_train(2)};
  int failures = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto& f = fs[static_cast<std::size_t>(trial) % fs.size()];
    const int k = 1 + trial % std::min(f.max_order(), 3);
    std::vector<double> nodes(static_cast<std::size_t>(k) + 1);
    for (auto& x : nodes) x = u(rng);
    const double bound = grid_sup_norm(f, k, grid) / std::tgamma(k + 1.0);
    if (std::abs(divided_difference(f, nodes)) > bound * (1.0 + 1e-6) + 1e-12) ++failures;
  }
  EXPECT_EQ(failures, 0);
}

TEST(Mollifier, UnitMassAndSupport) {
  for (double eps : {1.0, 0.1, 0.013}) {
    const Mollifier phi(eps);
    const double mass = boost::math::quadrature::tanh_sinh<double>().integrate([&](double t) { return phi(t); }, -eps, eps);
    EXPECT_NEAR(mass, 1.0, 1e-10) << eps;
    double simpson = 0.0;
    for (std::size_t i = 0; i < phi.nodes().size(); ++i) simpson += phi.simpson_weights()[i] * phi(phi.nodes()[i]);
    EXPECT_NEAR(simpson, 1.0, 1e-10) << eps;
    for (double t : {eps, -eps, 1.5 * eps, -7.0 * eps}) EXPECT_EQ(phi(t), 0.0);
  }
  EXPECT_THROW(Mollifier(0.0), Error);
  EXPECT_THROW(Mollifier(-1.0), Error);
}

TEST(Mollifier, BumpDerivativesMatchFiniteDifferences) {
  for (int m = 0; m < 5; ++m) {
    for (double u : {-0.7, -0.2, 0.0, 0.35, 0.8}) {
      const double h = 1e-5;
      const double fd = (bump_derivative(m, u + h) - bump_derivative(m, u - h)) / (2 * h);
      EXPECT_NEAR(bump_derivative(m + 1, u), fd, 1e-5 * (1.0 + std::abs(fd))) << m << " " << u;
    }
  }
  EXPECT_NEAR(bump_derivative(0, 0.3), raw_bump(0.3), 1e-16);
}

TEST(Mollify, AffineReproducedExactly) {
  const auto f = affine(2.5, -1.0);
  for (double eps : {0.5, 0.1, 0.01}) {
    const auto fe = mollify(f, eps);
    for (double t : {-3.0, 0.0, 1.7, 40.0}) {
      EXPECT_NEAR(std::abs(fe(t) - f(t)), 0.0, 1e-10) << eps << " " << t;
      EXPECT_NEAR(fe.eval(1, t).real(), 2.5, 1e-10);
      EXPECT_NEAR(std::abs(fe.eval(2, t)), 0.0, 1e-8);
    }
  }
}

TEST(Mollify, AbsoluteValueAtZeroMatchesFirstMoment) {
  using boost::math::quadrature::tanh_sinh;
  tanh_sinh<double> q;
  const double mass = q.integrate(raw_bump, -1.0, 1.0);
  const double moment = 2.0 * q.integrate([](double u) { return u * raw_bump(u); }, 0.0, 1.0);
  const double c1 = moment / mass;
  const auto fe = mollify(absolute_value(), 0.1);
  EXPECT_NEAR(fe(0.0).real(), c1 * 0.1, 1e-10);
}

TEST(Mollify, AbsoluteValueWithinTwoEpsilon) {
  const auto fe = mollify(absolute_value(), 0.05);
  const auto grid = uniform_grid(-2.0, 2.0, 1e-3);
  EXPECT_LE(grid_sup_distance(absolute_value(), fe, 0, grid), 2 * 0.05);
}

TEST(Mollify, HigherDerivativesUseDifferentiatedKernel) {
  // Fresnel provides two derivatives; orders 3..6 come from the kernel.
  const auto fe = mollify(fresnel(), 0.2);
  EXPECT_EQ(fe.max_order(), MollifyOptions{}.smooth_order);
  for (int m = 1; m <= fe.max_order(); ++m) {
    for (double t : {-0.15, 0.05, 1.3}) {
      const double h = 1e-4;
      const Complex fd = (fe.eval(m - 1, t + h) - fe.eval(m - 1, t - h)) / (2 * h);
      EXPECT_NEAR(std::abs(fe.eval(m, t) - fd), 0.0, 1e-5 * (1.0 + std::abs(fd))) << m << " " << t;
    }
  }
  EXPECT_TRUE(fe.smoothness().meets_hypothesis(3));
  EXPECT_TRUE(mollify(absolute_value(), 0.2).smoothness().meets_hypothesis(3));
}

TEST(Mollify, SerializesAndRebuilds) {
  const auto fe = mollify(sine(), 0.25, {1025, 5});
  const auto spec = fe.spec();
  EXPECT_EQ(spec.at("id"), "mollified");
  EXPECT_EQ(spec.at("params").at("base_id"), "sin");
  EXPECT_EQ(spec.at("params").at("quadrature_nodes"), 1025);
  const auto rebuilt = function_from_spec(spec);
  EXPECT_EQ(rebuilt.spec(), spec);
  EXPECT_EQ(rebuilt(0.7), fe(0.7));
}

TEST(Mollify, NonpositiveEpsilon) {
  try {
    (void)mollify(sine(), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::nonpositive_epsilon);
  }
}

TEST(Mollify, ConvergenceForUniformlyContinuousBuiltins) {
  const std::vector<double> eps = {0.5, 0.25, 0.1, 0.05, 0.01};
  const auto grid = uniform_grid(-6.0, 6.0, 5e-3);
  const std::vector<std::pair<ScalarFunction, int>> cases = {
      {sine(), 1}, {cosine(), 2}, {lorentzian(), 1}, {lorentzian(), 2}, {absolute_value(), 0}, {affine(3.0, 1.0), 1}};
  for (const auto& [f, n] : cases) {
    double previous = std::numeric_limits<double>::infinity();
    for (double e : eps) {
      const double err = grid_sup_distance(f, mollify(f, e), n, grid);
      EXPECT_LE(err, previous * 1.05 + 1e-12) << f.id() << " n=" << n << " eps=" << e;
      EXPECT_LE(err, 10.0 * uc_modulus(f, n, 2 * e, grid) + 1e-12) << f.id() << " n=" << n << " eps=" << e;
      previous = err;
    }
  }
}

TEST(UcModulus, SpecExamples) {
  EXPECT_LE(uc_modulus(sine(), 0, 0.1, uniform_grid(0.0, 10.0, 0.01)), 0.1);
  EXPECT_GE(uc_modulus(fresnel(), 1, 0.1, uniform_grid(0.0, 100.0, 0.005)), 1.5);
  // Affine slope a: the largest admissible grid gap below eta times a.
  const auto grid = uniform_grid(0.0, 5.0, 0.25);
  EXPECT_NEAR(uc_modulus(affine(3.0, 2.0), 0, 1.0, grid), 3.0 * 0.75, 1e-12);
}

TEST(UcModulus, MonotoneInEta) {
  const auto grid = uniform_grid(0.0, 30.0, 0.01);
  double last = 0.0;
  for (double eta : {0.02, 0.05, 0.1, 0.3, 1.0}) {
    const double w = uc_modulus(fresnel(), 1, eta, grid);
    EXPECT_GE(w, last);
    last = w;
  }
}

TEST(UcModulus, Errors) {
  const std::vector<double> empty;
  EXPECT_THROW((void)uc_modulus(sine(), 0, 0.1, empty), Error);
  const std::vector<double> grid = {0.0, 1.0};
  EXPECT_THROW((void)uc_modulus(sine(), 0, 0.0, grid), Error);
}

TEST(Builtins, CatalogRoundTrips) {
  for (const auto& id : builtin_ids()) {
    nlohmann::json params = nlohmann::json::object();
    if (id == "poly") params = {{"coefficients", {1.0, 0.0, 2.0}}};
    if (id == "monomial") params = {{"degree", 3}};
    if (id == "affine") params = {{"slope", 2.0}, {"intercept", 1.0}};
    if (id == "constant") params = {{"value", 4.0}};
    if (id == "bump_train") params = {{"order", 2}};
    if (id == "mollified") params = mollify(sine(), 0.5).params();
    if (id == "linear_combination") params = linear_combination(2.0, sine(), -1.0, cosine()).params();
    const auto f = make_function(id, params);
    EXPECT_EQ(function_from_spec(f.spec()).spec(), f.spec()) << id;
    EXPECT_EQ(function_from_spec(f.spec())(0.3), f(0.3)) << id;
  }
}

TEST(Builtins, UnknownAndMalformed) {
  try {
    (void)make_function("unknown_name");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unknown_function);
  }
  try {
    (void)make_function("monomial", {{"degre", 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema_violation);
  }
}

TEST(Builtins, SmoothnessTags) {
  EXPECT_TRUE(sine().smoothness().meets_hypothesis(4));
  EXPECT_TRUE(absolute_value().smoothness().is_cnb(0));
  EXPECT_FALSE(absolute_value().smoothness().is_cnb(1));
  EXPECT_TRUE(fresnel().smoothness().is_cnb(1));
  EXPECT_FALSE(fresnel().smoothness().meets_hypothesis(1));
  EXPECT_TRUE(bump_train(2).smoothness().is_cnb(2));
  EXPECT_FALSE(bump_train(2).smoothness().meets_hypothesis(2));
  EXPECT_TRUE(bump_train(2).smoothness().meets_hypothesis(1));
}

TEST(Builtins, ComplexValuedIsLinearInParts) {
  const auto g = complex_valued(sine(), cosine());
  EXPECT_FALSE(g.real_valued());
  for (double t : {-1.0, 0.5}) {
    EXPECT_NEAR(std::abs(g.eval(1, t) - Complex(std::cos(t), -std::sin(t))), 0.0, 1e-15);
  }
  const std::vector<double> nodes = {0.1, 0.9};
  const Complex dd = divided_difference(g, nodes);
  const Complex expected = Complex((std::sin(0.9) - std::sin(0.1)) / 0.8, (std::cos(0.9) - std::cos(0.1)) / 0.8);
  EXPECT_NEAR(std::abs(dd - expected), 0.0, 1e-14);
}
