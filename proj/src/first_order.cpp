#include "statecap/first_order.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "statecap/errors.hpp"

namespace statecap {

namespace {

void require_eps_unit(double eps) {
  if (!(eps >= 0.0) || !(eps <= 1.0))
    throw InvalidEpsilon("eps must lie in [0, 1]");
}

// sup{x | f(x) < y} for a right-continuous nondecreasing step function.
double strict_generalized_inverse(const num::StepFunction& f, double y) {
  if (f.initial >= y) return -num::kInf;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (f.values[i] >= y) return f.breakpoints[i];
  return num::kInf;
}

// Step cdf of C_S under a fixed distribution over states.
num::StepFunction state_capacity_cdf(const std::vector<double>& probs,
                                     const std::vector<double>& caps) {
  std::map<double, double> mass;
  for (std::size_t s = 0; s < probs.size(); ++s)
    if (probs[s] > 0.0) mass[caps[s]] += probs[s];
  num::StepFunction f;
  double acc = 0.0;
  for (auto& [c, p] : mass) {
    acc += p;
    f.breakpoints.push_back(c);
    f.values.push_back(acc);
  }
  return f;
}

}  // namespace

num::StepFunction CdfCurve::to_step() const {
  num::StepFunction f;
  for (auto& [r, p] : points) {
    f.breakpoints.push_back(r);
    f.values.push_back(p);
  }
  return f;
}

double type_capacity(const StateType& t, const std::vector<double>& caps) {
  double c = 0.0;
  for (std::size_t s = 0; s < caps.size(); ++s)
    c += t.fraction(static_cast<int>(s)) * caps[s];
  return c;
}

CdfCurve j_cdf(const StateProcess& proc, const StateChannel& chan, int n,
               TypeMode mode, long long budget, std::uint64_t seed) {
  if (proc.state_count() != chan.state_count())
    throw InvalidInput("j_cdf: process/channel state count mismatch");
  TypeDistribution td = type_distribution(proc, n, mode, budget, seed);
  std::vector<double> caps = chan.capacities();
  std::map<double, double> mass;
  for (auto& [t, p] : td.atoms) mass[type_capacity(t, caps)] += p;
  CdfCurve curve;
  curve.n = n;
  curve.exact = td.exact;
  double acc = 0.0;
  for (auto& [r, p] : mass) {
    acc += p;
    curve.points.push_back({r, acc});
  }
  return curve;
}

double closed_eps_capacity(const StateProcess& proc, const StateChannel& chan,
                           double eps) {
  require_eps_unit(eps);
  std::vector<double> caps = chan.capacities();
  switch (proc.model) {
    case StateModel::Mixed:
      return num::generalized_inverse(state_capacity_cdf(proc.dist, caps),
                                      eps);
    case StateModel::Iid:
    case StateModel::BlockIid: {
      double c = 0.0;
      for (std::size_t s = 0; s < caps.size(); ++s)
        c += proc.dist[s] * caps[s];
      return c;
    }
    case StateModel::Markov: {
      std::vector<double> pi = stationary_distribution(proc.kernel);
      double c = 0.0;
      for (std::size_t s = 0; s < caps.size(); ++s) c += pi[s] * caps[s];
      return c;
    }
    case StateModel::Alternating: {
      double lo = std::min(caps[proc.sa], caps[proc.sb]);
      double hi = std::max(caps[proc.sa], caps[proc.sb]);
      return (2.0 * lo + hi) / 3.0;
    }
  }
  throw InvalidModel("closed_eps_capacity: unknown model");
}

double closed_optimistic_capacity(const StateProcess& proc,
                                  const StateChannel& chan, double eps) {
  require_eps_unit(eps);
  std::vector<double> caps = chan.capacities();
  switch (proc.model) {
    case StateModel::Mixed:
      return strict_generalized_inverse(
          state_capacity_cdf(proc.dist, caps), eps);
    case StateModel::Alternating: {
      double lo = std::min(caps[proc.sa], caps[proc.sb]);
      double hi = std::max(caps[proc.sa], caps[proc.sb]);
      return (lo + 2.0 * hi) / 3.0;
    }
    default:
      // Ergodic models: optimistic and pessimistic capacities coincide.
      return closed_eps_capacity(proc, chan, std::min(eps, 1.0));
  }
}

FirstOrderReport eps_capacity(const StateProcess& proc,
                              const StateChannel& chan, double eps,
                              const std::vector<int>& n_grid, TypeMode mode,
                              long long budget, std::uint64_t seed) {
  require_eps_unit(eps);
  if (n_grid.empty()) throw InvalidInput("eps_capacity: empty n_grid");

  std::vector<num::StepFunction> cdfs;
  for (int n : n_grid)
    cdfs.push_back(j_cdf(proc, chan, n, mode, budget, seed).to_step());

  // limsup/liminf proxies: pointwise max/min of the per-n step cdfs over
  // the union of their breakpoints.
  std::vector<double> bps;
  for (auto& f : cdfs)
    bps.insert(bps.end(), f.breakpoints.begin(), f.breakpoints.end());
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
  num::StepFunction jmax, jmin;
  for (double r : bps) {
    double vmax = 0.0, vmin = 1.0;
    for (auto& f : cdfs) {
      double v = f(r);
      vmax = std::max(vmax, v);
      vmin = std::min(vmin, v);
    }
    jmax.breakpoints.push_back(r);
    jmax.values.push_back(vmax);
    jmin.breakpoints.push_back(r);
    jmin.values.push_back(vmin);
  }
  // Enforce monotonicity of the pointwise-min curve (the pointwise min of
  // cdfs is itself nondecreasing; numerical ties are harmless).
  for (std::size_t i = 1; i < jmin.values.size(); ++i)
    jmin.values[i] = std::max(jmin.values[i], jmin.values[i - 1]);

  FirstOrderReport rep;
  rep.eps = eps;
  rep.n_grid = n_grid;
  rep.eps_capacity = num::generalized_inverse(jmax, eps);
  rep.optimistic = strict_generalized_inverse(jmin, eps);
  rep.eps_capacity_closed = closed_eps_capacity(proc, chan, eps);
  rep.optimistic_closed = closed_optimistic_capacity(proc, chan, eps);
  rep.strong_converse = strong_converse_check(proc, chan, n_grid);
  return rep;
}

StrongConverseEvidence strong_converse_check(const StateProcess& proc,
                                             const StateChannel& chan,
                                             const std::vector<int>& n_grid) {
  StrongConverseEvidence ev;
  ev.n_grid = n_grid;
  std::vector<double> caps = chan.capacities();
  for (int n : n_grid) {
    ev.limt_term.push_back(mean_capacity_term(proc, n, caps));
    ev.cov_term.push_back(covariance_sum(proc, n, caps));
  }
  ev.cov_decay_slope = num::fit_loglog_slope(n_grid, ev.cov_term);

  const double floor_tol = 1e-12, clear_tol = 1e-9;
  switch (proc.model) {
    case StateModel::Iid:
    case StateModel::BlockIid:
    case StateModel::Markov:
      // Ergodic classes: mean term converges and covariances vanish.
      ev.verdict = "holds";
      break;
    case StateModel::Mixed: {
      double var = v_star(proc.dist, caps);
      ev.verdict = var > clear_tol ? "fails"
                   : var <= floor_tol ? "holds"
                                      : "inconclusive";
      break;
    }
    case StateModel::Alternating: {
      double gap = std::abs(caps[proc.sa] - caps[proc.sb]);
      ev.verdict = gap > clear_tol ? "fails"
                   : gap <= floor_tol ? "holds"
                                      : "inconclusive";
      break;
    }
  }
  return ev;
}

}  // namespace statecap
