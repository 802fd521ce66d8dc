#include "statecap/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "statecap/errors.hpp"

namespace statecap::num {

double phi(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779399460599344;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_cdf(double x) {
  static const double inv_sqrt2 = 0.7071067811865475244008443621048;
  return 0.5 * std::erfc(-x * inv_sqrt2);
}

namespace {

// Acklam's rational approximation for the central/tail inverse, ~1e-9,
// then polished by two Newton steps against erfc.
double acklam_inv(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r, x;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    q = p - 0.5;
    r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  return x;
}

}  // namespace

double normal_cdf_inv(double eps) {
  if (eps <= 0.0) return -kInf;
  if (eps >= 1.0) return kInf;
  double x = acklam_inv(eps);
  for (int i = 0; i < 2; ++i) {
    double e = normal_cdf(x) - eps;
    double d = phi(x);
    if (d <= 0.0) break;
    x -= e / d;
  }
  return x;
}

void StepFunction::validate() const {
  if (breakpoints.size() != values.size())
    throw InvalidInput("StepFunction: breakpoints/values size mismatch");
  double prev = initial;
  double prevb = -kInf;
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > prevb))
      throw InvalidInput("StepFunction: breakpoints not strictly increasing");
    if (values[i] < prev)
      throw InvalidInput("StepFunction: values not nondecreasing");
    prevb = breakpoints[i];
    prev = values[i];
  }
}

double StepFunction::operator()(double x) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  if (it == breakpoints.begin()) return initial;
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double generalized_inverse(const StepFunction& f, double y) {
  if (f.initial > y) return -kInf;
  // f(x) <= y for all x left of the first breakpoint whose value exceeds y.
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (f.values[i] > y) return f.breakpoints[i];
  return kInf;
}

double generalized_inverse(const std::function<double(double)>& f, double y,
                           double lo, double hi, double tol) {
  if (f(lo) > y) return -kInf;
  if (f(hi) <= y) return kInf;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) <= y)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double hoeffding_type_bound(int n, double eta, int s_size) {
  if (eta <= 0) throw InvalidInput("hoeffding_type_bound: eta must be > 0");
  return 2.0 * s_size * std::exp(-2.0 * n * eta * eta);
}

double markov_type_bound(int n, double eta, int s_size, double m_doeblin) {
  if (eta <= 0) throw InvalidInput("markov_type_bound: eta must be > 0");
  double n_min = 12.0 * m_doeblin / eta + 1.0;
  if (n < n_min)
    throw OutOfValidity("markov_type_bound: n below validity threshold",
                        n_min);
  return 2.0 * s_size *
         std::exp(-(n - 1) * eta * eta / (32.0 * m_doeblin * m_doeblin));
}

double hermite_derivative_bound(int k) {
  if (k < 1) throw InvalidInput("hermite_derivative_bound: k >= 1 required");
  static const double pref = std::exp(0.125) / std::pow(2.0 * M_PI, 0.25);
  return pref * std::pow(k, 0.25) *
         std::pow(static_cast<double>(k) / M_E, 0.5 * k);
}

double phi_derivative(int k, double x) {
  // phi^{(k)}(x) = (-1)^k He_k(x) phi(x), He via the probabilists'
  // recurrence He_{j+1} = x He_j - j He_{j-1}.
  double hm1 = 0.0, h = 1.0;
  for (int j = 0; j < k; ++j) {
    double hp1 = x * h - j * hm1;
    hm1 = h;
    h = hp1;
  }
  double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * h * phi(x);
}

// The uniform variance bound is 2.3|Y| in bits^2; stored internally in nats^2.
double v_plus_nats(int y_size) { return 2.3 * y_size * kLn2 * kLn2; }

double l_plus_nats(int y_size) {
  double c = 9.0 / M_E;
  return y_size * c * c * c;
}

double berry_esseen_constant(double v_min_nats, int y_size) {
  if (v_min_nats <= 0)
    throw DegenerateDispersion("berry_esseen_constant: V_min must be > 0");
  return 6.0 * l_plus_nats(y_size) / std::pow(v_min_nats, 1.5);
}

double fit_loglog_slope(const std::vector<int>& n_grid,
                        const std::vector<double>& vals) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t i = 0; i < vals.size() && i < n_grid.size(); ++i) {
    if (!(vals[i] > 0.0)) continue;
    double x = std::log(static_cast<double>(n_grid[i]));
    double y = std::log(vals[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) return 0.0;
  double denom = k * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return (k * sxy - sx * sy) / denom;
}

}  // namespace statecap::num
