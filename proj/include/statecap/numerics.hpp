#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace statecap::num {

inline constexpr double kLn2 = 0.6931471805599453094172321214581766;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double nats_to_bits(double x) { return x / kLn2; }
inline double bits_to_nats(double x) { return x * kLn2; }

// Standard normal pdf.
double phi(double x);

// Standard normal cdf, accurate to ~1e-15.
double normal_cdf(double x);

// Generalized inverse sup{a | Phi(a) <= eps}, extended to +-inf for
// eps <= 0 and eps >= 1. Round trips with normal_cdf to < 1e-12 on
// [1e-10, 1 - 1e-10].
double normal_cdf_inv(double eps);

// Monotone nondecreasing right-continuous step function. Value is
// `initial` on (-inf, breakpoints[0]) and values[i] on
// [breakpoints[i], breakpoints[i+1]).
struct StepFunction {
  double initial = 0.0;
  std::vector<double> breakpoints;  // strictly increasing
  std::vector<double> values;       // nondecreasing, values[i] >= initial

  double operator()(double x) const;
  void validate() const;
};

// sup{x | f(x) <= y}; -inf when the feasible set is empty, +inf when it
// is all of R.
double generalized_inverse(const StepFunction& f, double y);

// Same for a monotone nondecreasing callable, resolved by bisection on
// [lo, hi] to absolute tolerance tol.
double generalized_inverse(const std::function<double(double)>& f, double y,
                           double lo, double hi, double tol = 1e-12);

// Pr[||T - pi||_inf > eta] <= 2|S| exp(-2 n eta^2) for iid sampling.
double hoeffding_type_bound(int n, double eta, int s_size);

// Markov analogue under a Doeblin condition with constant m; valid for
// n >= 12 m / eta + 1, otherwise throws OutOfValidity.
double markov_type_bound(int n, double eta, int s_size, double m_doeblin);

// sup_x |phi^{(k)}(x)| <= e^{1/8} (2 pi)^{-1/4} k^{1/4} (k/e)^{k/2}, k >= 1.
double hermite_derivative_bound(int k);

// k-th derivative of the standard normal pdf via the Hermite recurrence.
double phi_derivative(int k, double x);

// Uniform bounds from the finite-alphabet information-variance analysis,
// stated in nats^2 / nats^3.
double v_plus_nats(int y_size);   // 2.3 |Y| bits^2, converted to nats^2
double l_plus_nats(int y_size);   // |Y| (9/e)^3

// B = 6 L+ / V_min^{3/2}; V_min in nats^2. The ratio is base-invariant.
double berry_esseen_constant(double v_min_nats, int y_size);

// Least-squares slope of log(v) against log(n), ignoring nonpositive
// entries; 0 when fewer than two usable points.
double fit_loglog_slope(const std::vector<int>& n_grid,
                        const std::vector<double>& vals);

}  // namespace statecap::num
