#include <doctest.h>

#include <cmath>
#include <vector>

#include "statecap/errors.hpp"
#include "statecap/numerics.hpp"
#include "statecap/rng.hpp"

using namespace statecap;
using namespace statecap::num;

TEST_CASE("normal cdf basics and symmetry") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.0) ==
        doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CounterRng rng(7);
  for (int i = 0; i < 1000; ++i) {
    double x = (rng.uniform() - 0.5) * 16.0;
    CHECK(std::abs(normal_cdf(-x) - (1.0 - normal_cdf(x))) < 1e-15);
  }
}

TEST_CASE("normal quantile: edge conventions and round trip") {
  CHECK(normal_cdf_inv(0.5) == 0.0);
  CHECK(normal_cdf_inv(0.0) == -kInf);
  CHECK(normal_cdf_inv(-0.1) == -kInf);
  CHECK(normal_cdf_inv(1.0) == kInf);
  CHECK(normal_cdf_inv(1.5) == kInf);

  // |Phi(Phi^-1(e)) - e| <= 1e-12 across [1e-10, 1 - 1e-10].
  std::vector<double> grid;
  for (double e = 1e-10; e < 1e-2; e *= 3.7) {
    grid.push_back(e);
    grid.push_back(1.0 - e);
  }
  for (double e = 0.01; e < 1.0; e += 0.01) grid.push_back(e);
  for (double e : grid) {
    double x = normal_cdf_inv(e);
    CHECK(std::abs(normal_cdf(x) - e) <= 1e-12);
  }
}

TEST_CASE("generalized inverse pins the jump convention") {
  // f(x) = 0 for x < 1, 1 for x >= 1; sup{x | f(x) <= 0.5} = 1.
  StepFunction f{0.0, {1.0}, {1.0}};
  CHECK(generalized_inverse(f, 0.5) == doctest::Approx(1.0));
  CHECK(generalized_inverse(f, 1.0) == kInf);
  CHECK(generalized_inverse(f, -0.5) == -kInf);
}

TEST_CASE("generalized inverse of the identity is the identity") {
  auto id = [](double x) { return x; };
  for (double y : {-3.0, -0.5, 0.0, 1.25, 9.0})
    CHECK(generalized_inverse(id, y, -100.0, 100.0) ==
          doctest::Approx(y).epsilon(1e-9));
}

namespace {

StepFunction random_step(CounterRng& rng, int max_pieces = 8) {
  StepFunction f;
  int k = 1 + static_cast<int>(rng.uniform() * max_pieces);
  double x = -5.0 + 4.0 * rng.uniform();
  double v = -2.0 + rng.uniform();
  f.initial = v;
  for (int i = 0; i < k; ++i) {
    x += 0.1 + 3.0 * rng.uniform();
    v += 0.05 + 2.0 * rng.uniform();
    f.breakpoints.push_back(x);
    f.values.push_back(v);
  }
  return f;
}

}  // namespace

TEST_CASE("generalized inverse properties on random step functions") {
  CounterRng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    StepFunction f = random_step(rng);
    f.validate();

    // (a) monotone in y.
    double prev = -kInf;
    for (double y = f.initial - 1.0; y <= f.values.back() + 1.0; y += 0.03) {
      double g = generalized_inverse(f, y);
      CHECK(g >= prev);
      prev = g;
    }

    // (b) double inversion reproduces f at continuity points. The inverse
    // of the inverse is evaluated through the callable route on a bracket.
    auto inv = [&](double y) { return generalized_inverse(f, y); };
    for (std::size_t i = 0; i + 1 < f.breakpoints.size(); ++i) {
      double x = 0.5 * (f.breakpoints[i] + f.breakpoints[i + 1]);
      double y = generalized_inverse(
          [&](double t) { return inv(t); }, x, f.initial - 10.0,
          f.values.back() + 10.0, 1e-10);
      CHECK(y == doctest::Approx(f(x)).epsilon(1e-6));
    }

    // (c) pointwise domination reverses under inversion: g >= f implies
    // g^-1 <= f^-1 on the shared image range.
    StepFunction g = f;
    for (double& v : g.values) v += 0.25;
    g.initial += 0.25;
    for (double y = f.initial; y <= f.values.back(); y += 0.05)
      CHECK(generalized_inverse(g, y) <= generalized_inverse(f, y) + 1e-12);
  }
}

TEST_CASE("iid type concentration bound: pinned value and MC domination") {
  CHECK(hoeffding_type_bound(10000, 0.05, 2) ==
        doctest::Approx(4.0 * std::exp(-50.0)).epsilon(1e-12));
  CHECK(hoeffding_type_bound(100, 100.0, 2) < 1e-30);

  // Empirical violation frequency over iid trials stays below the bound.
  const int n = 200, trials = 20000;
  const double eta = 0.08;
  std::vector<double> pi = {0.3, 0.7};
  int violations = 0;
  for (int t = 0; t < trials; ++t) {
    CounterRng rng(123, t);
    int c0 = 0;
    for (int k = 0; k < n; ++k)
      if (rng.sample(pi) == 0) ++c0;
    double dev = std::abs(static_cast<double>(c0) / n - pi[0]);
    if (dev > eta) ++violations;
  }
  double bound = hoeffding_type_bound(n, eta, 2);
  // 99% upper confidence on the empirical frequency must stay below bound.
  double freq = static_cast<double>(violations) / trials;
  double ci = 2.576 * std::sqrt(std::max(freq, 1.0 / trials) / trials);
  CHECK(freq <= bound + ci);
}

TEST_CASE("markov type concentration bound: formula and validity gate") {
  double b = markov_type_bound(1001, 0.1, 2, 1.0);
  CHECK(b == doctest::Approx(4.0 * std::exp(-1000.0 * 0.01 / 32.0)));
  CHECK_THROWS_AS(markov_type_bound(50, 0.1, 2, 1.0), OutOfValidity);
}

TEST_CASE("gaussian pdf derivative bound dominates grid maxima") {
  CHECK_THROWS_AS(hermite_derivative_bound(0), InvalidInput);
  // k = 1: the true sup of |phi'| is phi(1).
  CHECK(phi(1.0) <= hermite_derivative_bound(1));
  for (int k = 1; k <= 20; ++k) {
    double bound = hermite_derivative_bound(k);
    double sup = 0.0;
    for (double x = -10.0; x <= 10.0; x += 1e-3)
      sup = std::max(sup, std::abs(phi_derivative(k, x)));
    CHECK(sup <= bound * (1.0 + 1e-12));
  }
}

TEST_CASE("phi derivatives match central differences") {
  for (int k = 1; k <= 4; ++k)
    for (double x : {-1.3, 0.0, 0.7, 2.1}) {
      double h = 1e-5;
      double fd = (phi_derivative(k - 1, x + h) - phi_derivative(k - 1, x - h)) /
                  (2.0 * h);
      CHECK(phi_derivative(k, x) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("berry-esseen constant normalization and monotonicity") {
  int y = 3;
  double lp = l_plus_nats(y);
  CHECK(berry_esseen_constant(std::pow(lp, 2.0 / 3.0), y) ==
        doctest::Approx(6.0).epsilon(1e-12));
  CHECK(berry_esseen_constant(0.5, y) > berry_esseen_constant(0.6, y));
  CHECK_THROWS_AS(berry_esseen_constant(0.0, y), DegenerateDispersion);
}

TEST_CASE("uniform bound constants match their bit-base statements") {
  // V+ = 2.3 |Y| bits^2 and L+ = |Y| (9/e * log2 e)^3 bits^3.
  CHECK(v_plus_nats(4) / (kLn2 * kLn2) == doctest::Approx(2.3 * 4));
  double log2e = 1.0 / kLn2;
  CHECK(l_plus_nats(2) / (kLn2 * kLn2 * kLn2) ==
        doctest::Approx(2.0 * std::pow(9.0 / M_E * log2e, 3.0)));
}
