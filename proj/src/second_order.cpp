#include "statecap/second_order.hpp"

#include <algorithm>
#include <cmath>

#include "statecap/errors.hpp"
#include "statecap/first_order.hpp"
#include "statecap/numerics.hpp"

namespace statecap {

namespace {

using num::kInf;

void require_beta(double beta) {
  if (!(beta >= 0.5) || !(beta < 1.0))
    throw InvalidInput("beta must lie in [0.5, 1)");
}

// State marginal used for C(pi) / V(pi): the model's single-letter
// distribution (stationary law for Markov).
std::vector<double> state_marginal(const StateProcess& proc) {
  if (proc.model == StateModel::Markov)
    return stationary_distribution(proc.kernel);
  if (proc.model == StateModel::Alternating)
    throw Unsupported("no single-letter state marginal for this model");
  return proc.dist;
}

double weighted(const std::vector<double>& w, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * v[i];
  return s;
}

double phi_arg(const KQuery& q, double c_t, double v_t) {
  double num_term =
      q.n * (q.R - c_t) + std::pow(static_cast<double>(q.n), q.beta) * q.r;
  return num_term / std::sqrt(q.n * v_t);
}

double weighted_type_impl(const StateType& t, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += t.fraction(static_cast<int>(i)) * v[i];
  return s;
}

}  // namespace

double k_functional_on_types_serial(const KQuery& q,
                                    const TypeDistribution& td,
                                    const StateChannel& chan) {
  std::vector<double> caps = chan.capacities();
  std::vector<double> disp = chan.dispersions();
  double acc = 0.0;
  for (auto& [t, p] : td.atoms) {
    if (p <= 0.0) continue;
    double c_t = weighted_type_impl(t, caps);
    double v_t = weighted_type_impl(t, disp);
    acc += p * num::normal_cdf(phi_arg(q, c_t, v_t));
  }
  return acc;
}

double k_functional_on_types(const KQuery& q, const TypeDistribution& td,
                             const StateChannel& chan) {
  if (q.n < 1) throw InvalidInput("k_functional: n must be >= 1");
  require_beta(q.beta);
  if (chan.v_min <= 0.0)
    throw DegenerateDispersion("k_functional requires V_min > 0");
  std::vector<double> caps = chan.capacities();
  std::vector<double> disp = chan.dispersions();
  const long long m = static_cast<long long>(td.atoms.size());
  std::vector<double> terms(m, 0.0);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < m; ++i) {
    const auto& [t, p] = td.atoms[i];
    if (p <= 0.0) continue;
    double c_t = weighted_type_impl(t, caps);
    double v_t = weighted_type_impl(t, disp);
    terms[i] = p * num::normal_cdf(phi_arg(q, c_t, v_t));
  }
  // Serial summation in atom order keeps the result independent of the
  // thread count and identical to the serial reference.
  double acc = 0.0;
  for (double v : terms) acc += v;
  return acc;
}

double k_functional(const KQuery& q, const StateProcess& proc,
                    const StateChannel& chan, TypeMode mode, long long budget,
                    std::uint64_t seed) {
  TypeDistribution td = type_distribution(proc, q.n, mode, budget, seed);
  return k_functional_on_types(q, td, chan);
}

double closed_form_lambda(const StateProcess& proc, const StateChannel& chan,
                          double eps, double beta) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw InvalidEpsilon("closed_form_lambda: eps must lie in (0, 1)");
  std::vector<double> caps = chan.capacities();
  std::vector<double> disp = chan.dispersions();

  auto need_half = [&](const char* model) {
    if (std::abs(beta - 0.5) > 1e-12)
      throw BetaMismatch(std::string(model) + " closed form requires beta = 1/2");
  };

  switch (proc.model) {
    case StateModel::Mixed: {
      need_half("mixed");
      std::vector<int> live;
      for (std::size_t s = 0; s < proc.dist.size(); ++s)
        if (proc.dist[s] > 0.0) live.push_back(static_cast<int>(s));
      if (live.size() == 1)
        return std::sqrt(disp[live[0]]) * num::normal_cdf_inv(eps);
      if (live.size() != 2)
        throw Unsupported("mixed closed form requires two active states");
      int a = live[0], b = live[1];
      if (caps[a] > caps[b]) std::swap(a, b);  // convention C_a <= C_b
      double alpha = proc.dist[a];
      double va = disp[a], vb = disp[b];
      if (std::abs(caps[a] - caps[b]) < 1e-12) {
        // Case I: alpha Phi(L/sqrt(va)) + (1-alpha) Phi(L/sqrt(vb)) = eps.
        auto f = [&](double l) {
          return alpha * num::normal_cdf(l / std::sqrt(va)) +
                 (1 - alpha) * num::normal_cdf(l / std::sqrt(vb));
        };
        double hi = 40.0 * std::sqrt(std::max(va, vb));
        return num::generalized_inverse(f, eps, -hi, hi, 1e-12);
      }
      if (eps < alpha)  // Case II
        return std::sqrt(va) * num::normal_cdf_inv(eps / alpha);
      // Case III (eps >= alpha); eps = alpha yields -inf via Phi^-1(0).
      return std::sqrt(vb) * num::normal_cdf_inv((eps - alpha) / (1 - alpha));
    }
    case StateModel::Iid: {
      need_half("iid");
      double v = weighted(proc.dist, disp);
      double vs = v_star(proc.dist, caps);
      return std::sqrt(v + vs) * num::normal_cdf_inv(eps);
    }
    case StateModel::BlockIid: {
      double expect = 1.0 - proc.nu / 2.0;
      if (std::abs(beta - expect) > 1e-9)
        throw BetaMismatch("block-iid closed form requires beta = 1 - nu/2");
      return std::sqrt(v_star(proc.dist, caps)) * num::normal_cdf_inv(eps);
    }
    case StateModel::Markov: {
      need_half("markov");
      std::vector<double> pi = stationary_distribution(proc.kernel);
      double v = weighted(pi, disp);
      double vss = v_double_star(proc.kernel, caps);
      return std::sqrt(v + vss) * num::normal_cdf_inv(eps);
    }
    case StateModel::Alternating: {
      need_half("alternating");
      // Weight 2/3 on the smaller-capacity state (the limiting type of the
      // subsequence attaining the limsup), 1/3 on the other.
      int lo = caps[proc.sa] <= caps[proc.sb] ? proc.sa : proc.sb;
      int hi = lo == proc.sa ? proc.sb : proc.sa;
      double ups = (2.0 * disp[lo] + disp[hi]) / 3.0;
      return std::sqrt(ups) * num::normal_cdf_inv(eps);
    }
  }
  throw InvalidModel("closed_form_lambda: unknown model");
}

SecondOrderResult lambda_solve(double eps, double beta,
                               const StateProcess& proc,
                               const StateChannel& chan,
                               const std::vector<int>& n_grid, double tol,
                               TypeMode mode, long long budget,
                               std::uint64_t seed) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw InvalidEpsilon("lambda_solve: eps must lie in (0, 1)");
  require_beta(beta);
  if (n_grid.empty()) throw InvalidInput("lambda_solve: empty n_grid");
  if (chan.v_min <= 0.0)
    throw DegenerateDispersion("lambda_solve requires V_min > 0");

  SecondOrderResult res;
  res.eps = eps;
  res.beta = beta;
  res.n_grid = n_grid;
  res.method = "functional_bisection";

  double c_eps = closed_eps_capacity(proc, chan, eps);
  res.c_eps_source = "closed_form";

  // V+ in bits^2 sets the search range for the second-order rate.
  double v_plus_bits =
      num::v_plus_nats(chan.channels[0].output.size()) /
      (num::kLn2 * num::kLn2);
  double r_max = 20.0 * std::sqrt(v_plus_bits);

  TypeDistribution last_td;
  for (int n : n_grid) {
    TypeDistribution td = type_distribution(proc, n, mode, budget, seed);
    auto k_of_r = [&](double r) {
      KQuery q{r, c_eps, beta, n};
      return k_functional_on_types(q, td, chan);
    };
    double r_hat;
    if (k_of_r(-r_max) > eps)
      r_hat = -kInf;  // K exceeds eps on the whole range
    else if (k_of_r(r_max) <= eps)
      r_hat = kInf;  // K never crosses eps
    else
      r_hat = num::generalized_inverse(k_of_r, eps, -r_max, r_max, tol);
    res.lambda_by_n.push_back(r_hat);
    if (n == n_grid.back()) last_td = std::move(td);
  }

  res.lambda = res.lambda_by_n.back();
  if (std::isfinite(res.lambda)) {
    // Detect a flat crossing: when eps coincides with an atom of the
    // state-capacity law, K(r) sits exactly at level eps over a wide range
    // of r and the bisection lands on the edge of a floating-point plateau.
    // A genuine crossing has visible slope at this scale, so if K one bit
    // below the solution has not dropped below eps the sup is unbounded.
    KQuery probe{res.lambda - 1.0, c_eps, beta, n_grid.back()};
    double k_below = k_functional_on_types(probe, last_td, chan);
    if (k_below >= eps - 1e-9) {
      res.lambda = -kInf;
      res.diagnostics =
          "K(r) is flat at level eps below the bisection point (eps sits on "
          "an atom of the state-capacity law); reported as -inf";
    }
  }
  if (res.lambda_by_n.size() >= 2) {
    double prev = res.lambda_by_n[res.lambda_by_n.size() - 2];
    double last = res.lambda_by_n.back();
    if (std::isfinite(prev) && std::isfinite(last) && last - prev <= -0.5) {
      res.lambda = -kInf;
      res.diagnostics =
          "per-n solutions still decreasing by >= 0.5 bits at the grid tail; "
          "reported as -inf (divergent)";
    } else if (std::isfinite(prev) && std::isfinite(last) &&
               last - prev >= 0.5) {
      res.lambda = kInf;
      res.diagnostics =
          "per-n solutions still increasing by >= 0.5 bits at the grid tail; "
          "reported as +inf (divergent)";
    }
  }

  try {
    res.lambda_closed = closed_form_lambda(proc, chan, eps, beta);
  } catch (const BetaMismatch&) {
    // No closed form at this beta; leave unset.
  } catch (const Unsupported&) {
  }

  if (std::abs(beta - 0.5) < 1e-12 && std::abs(eps - 0.5) > 1e-12 &&
      std::isfinite(res.lambda)) {
    double q = num::normal_cdf_inv(eps);
    res.dispersion = (res.lambda / q) * (res.lambda / q);
  }

  // Dispersion decomposition for reporting.
  std::vector<double> caps = chan.capacities();
  std::vector<double> disp = chan.dispersions();
  switch (proc.model) {
    case StateModel::Mixed:
      res.decomposition["Var_q[C_S]"] = v_star(proc.dist, caps);
      break;
    case StateModel::Iid:
      res.decomposition["V(pi)"] = weighted(proc.dist, disp);
      res.decomposition["V*(pi)"] = v_star(proc.dist, caps);
      break;
    case StateModel::BlockIid: {
      res.decomposition["V*(pi)"] = v_star(proc.dist, caps);
      auto bl = block_layout(n_grid.back(), proc.nu);
      res.decomposition["tau_n"] =
          static_cast<double>(bl.m) * bl.m * (bl.d + 1) / n_grid.back();
      break;
    }
    case StateModel::Markov: {
      std::vector<double> pi = stationary_distribution(proc.kernel);
      res.decomposition["V(pi)"] = weighted(pi, disp);
      res.decomposition["V**(M)"] = v_double_star(proc.kernel, caps);
      break;
    }
    case StateModel::Alternating: {
      int lo = caps[proc.sa] <= caps[proc.sb] ? proc.sa : proc.sb;
      int hi = lo == proc.sa ? proc.sb : proc.sa;
      res.decomposition["V_lo"] = disp[lo];
      res.decomposition["V_hi"] = disp[hi];
      break;
    }
  }
  return res;
}

double normal_approximation_logM(double eps, int n, const StateProcess& proc,
                                 const StateChannel& chan) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw InvalidEpsilon("normal_approximation_logM: eps must lie in (0, 1)");
  if (n < 1) throw InvalidInput("normal_approximation_logM: n must be >= 1");
  std::vector<double> caps = chan.capacities();
  std::vector<double> disp = chan.dispersions();
  switch (proc.model) {
    case StateModel::Iid: {
      double c = weighted(proc.dist, caps);
      double v = weighted(proc.dist, disp) + v_star(proc.dist, caps);
      return n * c + std::sqrt(n * v) * num::normal_cdf_inv(eps);
    }
    case StateModel::BlockIid: {
      double c = weighted(proc.dist, caps);
      double v = weighted(proc.dist, disp);
      double vs = v_star(proc.dist, caps);
      double scale =
          n * v + std::pow(static_cast<double>(n), 2.0 - proc.nu) * vs;
      return n * c + std::sqrt(scale) * num::normal_cdf_inv(eps);
    }
    case StateModel::Markov: {
      std::vector<double> pi = stationary_distribution(proc.kernel);
      double c = weighted(pi, caps);
      double v = weighted(pi, disp) + v_double_star(proc.kernel, caps);
      return n * c + std::sqrt(n * v) * num::normal_cdf_inv(eps);
    }
    default:
      throw Unsupported(
          "normal approximation supported for iid, block-iid and markov "
          "models only");
  }
}

GapAudit approximation_gap_audit(const StateProcess& proc,
                                 const StateChannel& chan,
                                 const std::vector<int>& n_grid, TypeMode mode,
                                 long long budget, std::uint64_t seed) {
  std::vector<double> caps = chan.capacities();
  std::vector<double> disp = chan.dispersions();
  std::vector<double> pi = state_marginal(proc);
  double c_pi = weighted(pi, caps);
  double v_pi = weighted(pi, disp);

  GapAudit audit;
  for (int n : n_grid) {
    double v_eff;
    switch (proc.model) {
      case StateModel::Iid:
        v_eff = v_star(pi, caps);
        break;
      case StateModel::BlockIid: {
        auto bl = block_layout(n, proc.nu);
        double tau_n = static_cast<double>(bl.m) * bl.m * (bl.d + 1) / n;
        v_eff = tau_n * v_star(pi, caps);
        break;
      }
      case StateModel::Markov:
        v_eff = v_double_star_finite(proc.kernel, caps, n);
        break;
      default:
        throw Unsupported("gap audit supports iid, block-iid and markov");
    }

    TypeDistribution td = type_distribution(proc, n, mode, budget, seed);
    double half_width = 5.0 * std::sqrt((v_pi + v_eff) / n);
    const int points = 201;
    std::vector<double> g1(points, 0.0), g2(points, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < points; ++i) {
      double x = c_pi - half_width + 2.0 * half_width * i / (points - 1);
      double e_vt = 0.0, e_vpi = 0.0;
      for (auto& [t, p] : td.atoms) {
        if (p <= 0.0) continue;
        double c_t = weighted_type_impl(t, caps);
        double v_t = weighted_type_impl(t, disp);
        double z = std::sqrt(static_cast<double>(n)) * (x - c_t);
        e_vt += p * num::normal_cdf(z / std::sqrt(v_t));
        e_vpi += p * num::normal_cdf(z / std::sqrt(v_pi));
      }
      double gauss = num::normal_cdf(std::sqrt(static_cast<double>(n)) *
                                     (x - c_pi) / std::sqrt(v_pi + v_eff));
      g1[i] = std::abs(e_vt - e_vpi);
      g2[i] = std::abs(e_vpi - gauss);
    }
    GapAuditRow row;
    row.n = n;
    row.gap1 = *std::max_element(g1.begin(), g1.end());
    row.gap2 = *std::max_element(g2.begin(), g2.end());
    audit.rows.push_back(row);
  }

  std::vector<int> ns;
  std::vector<double> v1, v2;
  for (auto& r : audit.rows) {
    ns.push_back(r.n);
    v1.push_back(r.gap1);
    v2.push_back(r.gap2);
  }
  audit.slope1 = num::fit_loglog_slope(ns, v1);
  audit.slope2 = num::fit_loglog_slope(ns, v2);
  return audit;
}

}  // namespace statecap
