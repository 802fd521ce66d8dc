#include <doctest.h>

#include <cmath>
#include <vector>

#include "statecap/errors.hpp"
#include "statecap/first_order.hpp"
#include "statecap/numerics.hpp"
#include "statecap/second_order.hpp"

using namespace statecap;
using statecap::num::normal_cdf;
using statecap::num::normal_cdf_inv;

namespace {

Dmc bsc(double p) {
  Alphabet b{{"0", "1"}};
  return Dmc{b, b, {{1 - p, p}, {p, 1 - p}}};
}

StateChannel two_bsc(double p0, double p1) {
  return build_state_channel(Alphabet{{"a", "b"}}, {bsc(p0), bsc(p1)});
}

StateChannel single_bsc(double p) {
  return build_state_channel(Alphabet{{"s"}}, {bsc(p)});
}

}  // namespace

TEST_CASE("k functional: single state at R = C, r = 0 gives 1/2") {
  auto chan = single_bsc(0.11);
  auto proc = StateProcess::iid({1.0});
  for (int n : {1, 10, 500}) {
    KQuery q{0.0, chan.capacities()[0], 0.5, n};
    CHECK(k_functional(q, proc, chan) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("k functional: mixed model matches the two-term expansion") {
  auto chan = two_bsc(0.05, 0.25);
  double ca = chan.capacities()[0], cb = chan.capacities()[1];
  double va = chan.dispersions()[0], vb = chan.dispersions()[1];
  double alpha = 0.3;
  auto proc = StateProcess::mixed({alpha, 1 - alpha});
  double R = 0.45, r = -0.2;
  for (int n : {16, 200}) {
    double sq = std::sqrt(static_cast<double>(n));
    double expect =
        alpha * normal_cdf((n * (R - ca) + sq * r) / std::sqrt(n * va)) +
        (1 - alpha) * normal_cdf((n * (R - cb) + sq * r) / std::sqrt(n * vb));
    KQuery q{r, R, 0.5, n};
    CHECK(k_functional(q, proc, chan) ==
          doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("k functional: monotone in r; parallel equals serial") {
  auto chan = two_bsc(0.05, 0.25);
  auto proc = StateProcess::iid({0.4, 0.6});
  int n = 128;
  auto td = type_distribution(proc, n, TypeMode::Exact);
  double c_eps = closed_eps_capacity(proc, chan, 0.25);
  double prev = -1.0;
  for (double r = -2.0; r <= 2.0; r += 0.125) {
    KQuery q{r, c_eps, 0.5, n};
    double k_par = k_functional_on_types(q, td, chan);
    double k_ser = k_functional_on_types_serial(q, td, chan);
    CHECK(k_par == k_ser);
    CHECK(k_par >= prev);
    prev = k_par;
  }
}

TEST_CASE("closed-form second-order rates per model") {
  auto chan = two_bsc(0.05, 0.25);
  auto caps = chan.capacities();
  auto disp = chan.dispersions();
  double eps = 0.1;
  double q = normal_cdf_inv(eps);

  SUBCASE("mixed case I collapses to a single quantile") {
    auto same = build_state_channel(Alphabet{{"a", "b"}},
                                    {bsc(0.11), bsc(0.11)});
    auto proc = StateProcess::mixed({0.3, 0.7});
    CHECK(closed_form_lambda(proc, same, eps, 0.5) ==
          doctest::Approx(std::sqrt(same.dispersions()[0]) * q)
              .epsilon(1e-9));
  }

  SUBCASE("mixed cases II and III") {
    // State 1 (BSC 0.25) has the smaller capacity: alpha = q(1) = 0.7.
    auto proc = StateProcess::mixed({0.3, 0.7});
    double va = disp[1], vb = disp[0], alpha = 0.7;
    CHECK(closed_form_lambda(proc, chan, 0.2, 0.5) ==
          doctest::Approx(std::sqrt(va) * normal_cdf_inv(0.2 / alpha)));
    CHECK(closed_form_lambda(proc, chan, 0.8, 0.5) ==
          doctest::Approx(std::sqrt(vb) *
                          normal_cdf_inv((0.8 - alpha) / (1 - alpha))));
    CHECK(closed_form_lambda(proc, chan, alpha, 0.5) == -num::kInf);
  }

  SUBCASE("iid") {
    auto proc = StateProcess::iid({0.4, 0.6});
    double v = 0.4 * disp[0] + 0.6 * disp[1];
    double vs = v_star({0.4, 0.6}, caps);
    CHECK(closed_form_lambda(proc, chan, eps, 0.5) ==
          doctest::Approx(std::sqrt(v + vs) * q));
  }

  SUBCASE("block iid requires beta = 1 - nu/2") {
    auto proc = StateProcess::block_iid({0.4, 0.6}, 0.5);
    CHECK(closed_form_lambda(proc, chan, eps, 0.75) ==
          doctest::Approx(std::sqrt(v_star({0.4, 0.6}, caps)) * q));
    CHECK_THROWS_AS(closed_form_lambda(proc, chan, eps, 0.5), BetaMismatch);
  }

  SUBCASE("markov gilbert-elliott") {
    double tau = 0.25;
    auto proc = StateProcess::markov({{1 - tau, tau}, {tau, 1 - tau}},
                                     {0.5, 0.5});
    double v = 0.5 * (disp[0] + disp[1]);
    double gap = caps[0] - caps[1];
    double vss = (1 - tau) / (4 * tau) * gap * gap;
    CHECK(closed_form_lambda(proc, chan, eps, 0.5) ==
          doctest::Approx(std::sqrt(v + vss) * q).epsilon(1e-9));
  }

  SUBCASE("alternating weights 2/3 on the smaller capacity state") {
    auto proc = StateProcess::alternating(0, 1, 2);
    // caps[1] < caps[0] here, so state 1 carries weight 2/3.
    double ups = (2.0 * disp[1] + disp[0]) / 3.0;
    CHECK(closed_form_lambda(proc, chan, eps, 0.5) ==
          doctest::Approx(std::sqrt(ups) * q));
  }
}

TEST_CASE("lambda_solve agrees with the iid closed form") {
  auto chan = two_bsc(0.05, 0.25);
  auto proc = StateProcess::iid({0.4, 0.6});
  for (double eps : {0.1, 0.75}) {
    auto res = lambda_solve(eps, 0.5, proc, chan, {256, 512, 1024});
    REQUIRE(res.lambda_closed.has_value());
    CHECK(std::abs(res.lambda - *res.lambda_closed) < 0.2);
    if (eps != 0.5) {
      REQUIRE(res.dispersion.has_value());
      CHECK(*res.dispersion >= 0.0);
    }
  }
}

TEST_CASE("lambda_solve: mixed at eps = alpha diverges to -inf") {
  auto chan = two_bsc(0.05, 0.25);
  auto proc = StateProcess::mixed({0.3, 0.7});
  auto res = lambda_solve(0.7, 0.5, proc, chan, {64, 256, 1024, 4096});
  CHECK(res.lambda == -num::kInf);
}

TEST_CASE("normal approximation expansion") {
  auto chan = two_bsc(0.05, 0.25);
  auto caps = chan.capacities();
  auto proc = StateProcess::iid({0.4, 0.6});
  double c_pi = 0.4 * caps[0] + 0.6 * caps[1];
  // eps = 1/2 kills the second term.
  CHECK(normal_approximation_logM(0.5, 100, proc, chan) ==
        doctest::Approx(100 * c_pi).epsilon(1e-12));

  // Block-iid mixed-power form at nu = 1/2, n = 256.
  auto bi = StateProcess::block_iid({0.4, 0.6}, 0.5);
  double v_pi = 0.4 * chan.dispersions()[0] + 0.6 * chan.dispersions()[1];
  double vs = v_star({0.4, 0.6}, caps);
  double expect = 256 * c_pi +
                  std::sqrt(256 * v_pi + std::pow(256.0, 1.5) * vs) *
                      normal_cdf_inv(0.1);
  CHECK(normal_approximation_logM(0.1, 256, bi, chan) ==
        doctest::Approx(expect).epsilon(1e-12));

  // Expansion slope at sqrt(n) matches the solved second-order rate.
  double lam = closed_form_lambda(proc, chan, 0.1, 0.5);
  double by_expansion =
      (normal_approximation_logM(0.1, 10000, proc, chan) - 10000 * c_pi) /
      100.0;
  CHECK(by_expansion == doctest::Approx(lam).epsilon(1e-9));

  CHECK_THROWS_AS(
      normal_approximation_logM(0.1, 64, StateProcess::mixed({0.5, 0.5}),
                                chan),
      Unsupported);
}

TEST_CASE("gaussian convolution identity via quadrature") {
  // integral phi(z; 0, a) Phi((x - z - mu)/sqrt(b)) dz = Phi((x-mu)/sqrt(a+b))
  double a = 0.7, b = 1.8, mu = 0.4;
  for (double x : {-2.0, -0.3, 0.0, 1.1, 2.5}) {
    double acc = 0.0;
    const int steps = 4000;
    double lo = -12.0 * std::sqrt(a), hi = 12.0 * std::sqrt(a);
    double h = (hi - lo) / steps;
    for (int i = 0; i <= steps; ++i) {
      double z = lo + i * h;
      double w = (i == 0 || i == steps) ? 0.5 : 1.0;
      acc += w * h * num::phi(z / std::sqrt(a)) / std::sqrt(a) *
             normal_cdf((x - z - mu) / std::sqrt(b));
    }
    CHECK(std::abs(acc - normal_cdf((x - mu) / std::sqrt(a + b))) < 1e-8);
  }
}

TEST_CASE("gap audit: degenerate single state gives zero gaps") {
  auto chan = single_bsc(0.11);
  auto proc = StateProcess::iid({1.0});
  auto audit = approximation_gap_audit(proc, chan, {16, 64, 256});
  for (auto& row : audit.rows) {
    CHECK(row.gap1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(row.gap2 == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("gap audit: iid slopes match the expected decay rates") {
  // The O(log n / n) rate for the dispersion-substitution gap requires the
  // capacity and dispersion fluctuations of the state type to be
  // uncorrelated under pi; otherwise a cross term of order 1/sqrt(n)
  // dominates.  Build a three-state family and tune pi so that
  // Cov_pi(C_S, V_S) = 0, which realizes the fast rate.
  auto chan = build_state_channel(Alphabet{{"a", "b", "c"}},
                                  {bsc(0.02), bsc(0.08), bsc(0.2)});
  auto C = chan.capacities();
  auto V = chan.dispersions();
  const double p1 = 0.3;
  auto cov = [&](double p2) {
    double p3 = 1 - p1 - p2;
    double cb = p1 * C[0] + p2 * C[1] + p3 * C[2];
    double vb = p1 * V[0] + p2 * V[1] + p3 * V[2];
    return p1 * (C[0] - cb) * (V[0] - vb) + p2 * (C[1] - cb) * (V[1] - vb) +
           p3 * (C[2] - cb) * (V[2] - vb);
  };
  // Scan for a sign change, then bisect to the root.
  double lo = 0.01, hi = 0.0;
  for (double p2 = 0.02; p2 < 0.69; p2 += 0.01) {
    if (cov(lo) * cov(p2) <= 0.0) {
      hi = p2;
      break;
    }
    lo = p2;
  }
  REQUIRE(hi > 0.0);
  for (int i = 0; i < 100; ++i) {
    double mid = 0.5 * (lo + hi);
    (cov(lo) * cov(mid) <= 0.0 ? hi : lo) = mid;
  }
  double p2 = 0.5 * (lo + hi);
  REQUIRE(std::abs(cov(p2)) < 1e-14);

  auto proc = StateProcess::iid({p1, p2, 1 - p1 - p2});
  auto audit =
      approximation_gap_audit(proc, chan, {64, 128, 256, 512, 1024});
  CHECK(audit.slope1 <= -0.8);
  CHECK(audit.slope2 <= -0.4);
}

TEST_CASE("gap audit: correlated pair decays at the generic 1/sqrt(n) rate") {
  // With Cov_pi(C_S, V_S) != 0 the dispersion-substitution gap picks up a
  // cross term of order 1/sqrt(n); both gaps still vanish.
  auto chan = two_bsc(0.05, 0.25);
  auto proc = StateProcess::iid({0.4, 0.6});
  auto audit =
      approximation_gap_audit(proc, chan, {64, 128, 256, 512, 1024});
  CHECK(audit.slope1 <= -0.4);
  CHECK(audit.slope1 >= -0.6);  // genuinely 1/sqrt(n), not faster
  CHECK(audit.slope2 <= -0.4);
  CHECK(audit.rows.back().gap1 < audit.rows.front().gap1);
}

TEST_CASE("invalid queries rejected") {
  auto chan = two_bsc(0.05, 0.25);
  auto proc = StateProcess::iid({0.4, 0.6});
  CHECK_THROWS_AS(lambda_solve(0.0, 0.5, proc, chan, {16}), InvalidEpsilon);
  CHECK_THROWS_AS(lambda_solve(0.1, 0.4, proc, chan, {16}), InvalidInput);
  CHECK_THROWS_AS(lambda_solve(0.1, 1.0, proc, chan, {16}), InvalidInput);
}
