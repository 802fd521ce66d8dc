#include "statecap/oneshot_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include "statecap/errors.hpp"
#include "statecap/numerics.hpp"
#include "statecap/rng.hpp"
#include "statecap/second_order.hpp"

namespace statecap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Finite-support law of one additive term, value in bits.
using AtomLaw = std::vector<std::pair<double, double>>;

// Distribution of a running sum, keyed by the accumulated value.
using SumLaw = std::map<double, double>;

void convolve_in_place(SumLaw& acc, const AtomLaw& law, int copies,
                       long long cap) {
  for (int c = 0; c < copies; ++c) {
    SumLaw next;
    for (const auto& [v, p] : acc)
      for (const auto& [dv, dp] : law) next[v + dv] += p * dp;
    if (static_cast<long long>(next.size()) > cap)
      throw EnumerationTooLarge(
          "convolution support exceeds the enumeration cap");
    acc = std::move(next);
  }
}

double cdf_at(const SumLaw& law, double threshold) {
  if (!std::isfinite(threshold)) {
    if (threshold < 0.0) return 0.0;
    double total = 0.0;
    for (const auto& [v, p] : law) total += p;
    return total;
  }
  double tol = 1e-12 * std::max(1.0, std::abs(threshold));
  double acc = 0.0;
  for (const auto& [v, p] : law) {
    if (v > threshold + tol) break;
    acc += p;
  }
  return acc;
}

// Per-position information-density law for state s under input policy row
// p_x and the output law q it induces (or an override).
AtomLaw density_law(const Dmc& w, const std::vector<double>& p_x,
                    const std::vector<double>& q) {
  AtomLaw law;
  const int nx = w.input.size(), ny = w.output.size();
  for (int x = 0; x < nx; ++x) {
    if (p_x[x] <= 0.0) continue;
    for (int y = 0; y < ny; ++y) {
      double wy = w.rows[x][y];
      if (wy <= 0.0) continue;
      double v = q[y] > 0.0 ? std::log2(wy / q[y]) : kInf;
      law.emplace_back(v, p_x[x] * wy);
    }
  }
  return law;
}

std::vector<double> induced_output(const Dmc& w,
                                   const std::vector<double>& p_x) {
  std::vector<double> q(w.output.size(), 0.0);
  for (int x = 0; x < w.input.size(); ++x)
    for (int y = 0; y < w.output.size(); ++y) q[y] += p_x[x] * w.rows[x][y];
  return q;
}

// Wilson score interval at 99% for k successes out of m.
std::pair<double, double> wilson99(long long k, long long m) {
  const double z = 2.5758293035489004;  // Phi^{-1}(0.995)
  double phat = static_cast<double>(k) / m;
  double z2 = z * z;
  double denom = 1.0 + z2 / m;
  double center = (phat + z2 / (2.0 * m)) / denom;
  double half =
      z * std::sqrt(phat * (1.0 - phat) / m + z2 / (4.0 * m * m)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

void validate_policy(const StateChannel& chan,
                     const std::vector<std::vector<double>>& policy) {
  if (static_cast<int>(policy.size()) != chan.state_count())
    throw InvalidInput("input policy must have one row per state");
  for (int s = 0; s < chan.state_count(); ++s) {
    const auto& row = policy[s];
    if (static_cast<int>(row.size()) != chan.channels[s].input.size())
      throw InvalidInput("input policy row size mismatch");
    double sum = 0.0;
    for (double p : row) {
      if (p < -1e-12) throw InvalidInput("input policy has negative mass");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw InvalidInput("input policy row does not sum to 1");
  }
}

// Enumerate all per-state input count assignments (compositions of the
// state count into |X| parts), invoking fn on each complete assignment.
void for_each_composition(int total, int parts, std::vector<int>& slot,
                          int idx, const std::function<void()>& fn) {
  if (idx == parts - 1) {
    slot[idx] = total;
    fn();
    return;
  }
  for (int k = 0; k <= total; ++k) {
    slot[idx] = k;
    for_each_composition(total - k, parts, slot, idx + 1, fn);
  }
}

void for_each_conditional_type(
    const StateChannel& chan, const StateType& t,
    const std::function<void(const std::vector<std::vector<int>>&)>& fn) {
  const int ns = chan.state_count();
  std::vector<std::vector<int>> counts(ns);
  std::function<void(int)> rec = [&](int s) {
    if (s == ns) {
      fn(counts);
      return;
    }
    int nx = chan.channels[s].input.size();
    counts[s].assign(nx, 0);
    if (t.counts[s] == 0) {
      rec(s + 1);
      return;
    }
    for_each_composition(t.counts[s], nx, counts[s], 0, [&] { rec(s + 1); });
  };
  rec(0);
}

}  // namespace

FeinsteinResult feinstein_rhs(const StateChannel& chan,
                              const StateProcess& proc,
                              const std::vector<std::vector<double>>& policy,
                              int n, double log_m_bits, double eta_bits,
                              TypeMode mode, long long budget,
                              std::uint64_t seed, long long enum_cap) {
  if (n < 1) throw InvalidInput("feinstein_rhs: n must be >= 1");
  if (!(eta_bits > 0.0)) throw InvalidInput("feinstein_rhs: eta must be > 0");
  validate_policy(chan, policy);

  const int ns = chan.state_count();
  std::vector<AtomLaw> laws(ns);
  std::vector<std::vector<double>> qs(ns);
  for (int s = 0; s < ns; ++s) {
    qs[s] = induced_output(chan.channels[s], policy[s]);
    laws[s] = density_law(chan.channels[s], policy[s], qs[s]);
  }
  const double threshold = log_m_bits + eta_bits;

  FeinsteinResult res;
  res.eta_term = std::exp2(-eta_bits);

  if (mode == TypeMode::Exact) {
    try {
      TypeDistribution td = type_distribution(proc, n, TypeMode::Exact);
      double prob = 0.0;
      for (const auto& [t, pt] : td.atoms) {
        SumLaw acc;
        acc[0.0] = 1.0;
        for (int s = 0; s < ns; ++s)
          if (t.counts[s] > 0) convolve_in_place(acc, laws[s], t.counts[s],
                                                 enum_cap);
        prob += pt * cdf_at(acc, threshold);
      }
      res.prob_term = prob;
      res.exact = true;
      res.rhs = std::min(1.0, prob + res.eta_term);
      return res;
    } catch (const EnumerationTooLarge&) {
      // Fall through to Monte Carlo below.
    } catch (const Unsupported&) {
      // Type law not exactly enumerable at this n; use Monte Carlo.
    }
  }

  long long hits = 0;
  for (long long path = 0; path < budget; ++path) {
    CounterRng rng(seed, static_cast<std::uint64_t>(path) + 1);
    auto states = sample_states(proc, n, seed ^ (0x5851f42d4c957f2dULL +
                                                 static_cast<std::uint64_t>(
                                                     path)));
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      int s = states[k];
      int x = rng.sample(policy[s]);
      int y = rng.sample(chan.channels[s].rows[x]);
      double q = qs[s][y];
      sum += q > 0.0 ? std::log2(chan.channels[s].rows[x][y] / q) : kInf;
    }
    if (sum <= threshold + 1e-12 * std::max(1.0, std::abs(threshold)))
      ++hits;
  }
  res.exact = false;
  res.samples = budget;
  res.prob_term = static_cast<double>(hits) / budget;
  std::tie(res.ci_low, res.ci_high) = wilson99(hits, budget);
  res.rhs = std::min(1.0, res.prob_term + res.eta_term);
  return res;
}

double dh_divergence(const std::vector<double>& p,
                     const std::vector<double>& q, double eps) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw InvalidEpsilon("dh_divergence: eps must lie in (0, 1)");
  if (p.size() != q.size())
    throw InvalidInput("dh_divergence: support size mismatch");
  double sp = 0.0, sq = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < -1e-12 || q[i] < -1e-12)
      throw InvalidInput("dh_divergence: negative probability");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    throw InvalidInput("dh_divergence: distributions must sum to 1");

  // Neyman-Pearson: order atoms by likelihood ratio, Q-null atoms first.
  std::vector<int> order;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0 || q[i] > 0.0) order.push_back(static_cast<int>(i));
  auto ratio = [&](int i) {
    if (q[i] <= 0.0) return kInf;
    return p[i] / q[i];
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ratio(a) > ratio(b); });

  const double target = 1.0 - eps;  // required P-mass of the test
  double pacc = 0.0, beta = 0.0;
  for (int i : order) {
    if (pacc >= target) break;
    double take = std::min(1.0, p[i] > 0.0 ? (target - pacc) / p[i] : 1.0);
    // Boundary atom is included with the exact fraction that lands the
    // P-mass on 1 - eps (randomized test).
    pacc += take * p[i];
    beta += take * q[i];
  }
  if (beta <= 0.0) return kInf;
  return std::max(0.0, -std::log2(beta / (1.0 - eps)));
}

bool dpi_check(const std::vector<double>& p, const std::vector<double>& q,
               const std::vector<std::vector<double>>& kernel, double eps) {
  if (kernel.size() != p.size())
    throw InvalidInput("dpi_check: kernel must have one row per input atom");
  size_t out = kernel.empty() ? 0 : kernel[0].size();
  std::vector<double> pw(out, 0.0), qw(out, 0.0);
  for (size_t i = 0; i < kernel.size(); ++i) {
    if (kernel[i].size() != out)
      throw InvalidInput("dpi_check: ragged kernel");
    for (size_t j = 0; j < out; ++j) {
      pw[j] += p[i] * kernel[i][j];
      qw[j] += q[i] * kernel[i][j];
    }
  }
  double lhs = dh_divergence(p, q, eps);
  double rhs = dh_divergence(pw, qw, eps);
  if (lhs == kInf) return true;
  return lhs >= rhs - 1e-9;
}

double xi_cdf(const StateChannel& chan, const StateType& t,
              const std::vector<std::vector<int>>& x_counts, double r_bits,
              int n,
              const std::optional<std::vector<std::vector<double>>>&
                  q_override) {
  const int ns = chan.state_count();
  if (static_cast<int>(x_counts.size()) != ns ||
      static_cast<int>(t.counts.size()) != ns)
    throw InconsistentType("xi_cdf: state dimension mismatch");
  if (t.n != n) throw InconsistentType("xi_cdf: type blocklength mismatch");

  SumLaw acc;
  acc[0.0] = 1.0;
  for (int s = 0; s < ns; ++s) {
    const Dmc& w = chan.channels[s];
    long long row_total = 0;
    if (static_cast<int>(x_counts[s].size()) != w.input.size() &&
        t.counts[s] > 0)
      throw InconsistentType("xi_cdf: input dimension mismatch");
    for (int c : x_counts[s]) {
      if (c < 0) throw InconsistentType("xi_cdf: negative input count");
      row_total += c;
    }
    if (row_total != t.counts[s])
      throw InconsistentType(
          "xi_cdf: input counts do not match the state type");
    if (t.counts[s] == 0) continue;

    std::vector<double> q;
    if (q_override) {
      q = (*q_override)[s];
    } else {
      // Output law induced by the input conditional type for this state.
      std::vector<double> tx(w.input.size());
      for (int x = 0; x < w.input.size(); ++x)
        tx[x] = static_cast<double>(x_counts[s][x]) / t.counts[s];
      q = induced_output(w, tx);
    }
    for (int x = 0; x < w.input.size(); ++x) {
      if (x_counts[s][x] == 0) continue;
      AtomLaw law;
      for (int y = 0; y < w.output.size(); ++y) {
        double wy = w.rows[x][y];
        if (wy <= 0.0) continue;
        law.emplace_back(q[y] > 0.0 ? std::log2(wy / q[y]) : kInf, wy);
      }
      convolve_in_place(acc, law, x_counts[s][x], 10000000);
    }
  }
  return cdf_at(acc, static_cast<double>(n) * r_bits);
}

double spectrum_converse_logM(const StateChannel& chan,
                              const StateProcess& proc, int n, double eps,
                              double delta, ConverseQ q_mode,
                              long long enum_cap) {
  if (n < 1) throw InvalidInput("spectrum_converse_logM: n must be >= 1");
  if (delta <= 0.0) {
    delta = 1.0 / std::sqrt(static_cast<double>(n));
    // The 1/sqrt(n) default is infeasible at tiny n; back off to keep the
    // inversion level strictly below one.
    if (eps + delta >= 1.0) delta = 0.5 * (1.0 - eps);
  }
  if (!(eps >= 0.0) || !(eps + delta < 1.0))
    throw InvalidEpsilon(
        "spectrum_converse_logM: need 0 <= eps and eps + delta < 1");

  std::optional<std::vector<std::vector<double>>> q_override;
  if (q_mode == ConverseQ::Caod) {
    std::vector<std::vector<double>> qs(chan.state_count());
    for (int s = 0; s < chan.state_count(); ++s)
      qs[s] = induced_output(chan.channels[s],
                             chan.summaries[s].caid.probs);
    q_override = std::move(qs);
  }

  TypeDistribution td = type_distribution(proc, n, TypeMode::Exact);

  // Precompute, per type atom, the sum-law of every conditional-type input
  // assignment; the converse takes the pointwise best (smallest cdf).
  struct TypeCell {
    double prob;
    std::vector<SumLaw> laws;
  };
  std::vector<TypeCell> cells;
  long long total_assignments = 0;
  double vmin = kInf, vmax = -kInf;
  for (const auto& [t, pt] : td.atoms) {
    TypeCell cell;
    cell.prob = pt;
    for_each_conditional_type(chan, t, [&](const std::vector<std::vector<int>>&
                                               counts) {
      if (++total_assignments > enum_cap)
        throw EnumerationTooLarge(
            "spectrum_converse_logM: too many conditional types");
      SumLaw acc;
      acc[0.0] = 1.0;
      for (int s = 0; s < chan.state_count(); ++s) {
        if (t.counts[s] == 0) continue;
        const Dmc& w = chan.channels[s];
        std::vector<double> q;
        if (q_override) {
          q = (*q_override)[s];
        } else {
          std::vector<double> tx(w.input.size());
          for (int x = 0; x < w.input.size(); ++x)
            tx[x] = static_cast<double>(counts[s][x]) / t.counts[s];
          q = induced_output(w, tx);
        }
        for (int x = 0; x < w.input.size(); ++x) {
          if (counts[s][x] == 0) continue;
          AtomLaw law;
          for (int y = 0; y < w.output.size(); ++y) {
            double wy = w.rows[x][y];
            if (wy <= 0.0) continue;
            law.emplace_back(q[y] > 0.0 ? std::log2(wy / q[y]) : kInf, wy);
          }
          convolve_in_place(acc, law, counts[s][x], 10000000);
        }
      }
      for (const auto& [v, p] : acc) {
        if (std::isfinite(v)) {
          vmin = std::min(vmin, v);
          vmax = std::max(vmax, v);
        }
      }
      cell.laws.push_back(std::move(acc));
    });
    cells.push_back(std::move(cell));
  }

  const double level = eps + delta;
  auto g_of = [&](double r_block) {
    double acc = 0.0;
    for (const auto& cell : cells) {
      double best = 1.0;
      for (const auto& law : cell.laws)
        best = std::min(best, cdf_at(law, r_block));
      acc += cell.prob * best;
    }
    return acc;
  };

  double lo = vmin - 1.0, hi = vmax + 1.0;
  double r_block;
  if (g_of(lo) > level)
    r_block = lo;  // even the smallest rate fails; bound is vacuously small
  else if (g_of(hi) <= level)
    r_block = hi;
  else
    r_block = num::generalized_inverse(g_of, level, lo, hi, 1e-10);

  double penalty = -std::log2(delta);
  if (q_mode == ConverseQ::TypeInduced) {
    int nx = 0;
    for (const auto& w : chan.channels) nx = std::max(nx, w.input.size());
    penalty += static_cast<double>(nx) * chan.state_count() *
               std::log2(n + 1.0);
  }
  return r_block + penalty;
}

double direct_bound_rhs(const StateChannel& chan, const StateProcess& proc,
                        int n, double r_bits, TypeMode mode,
                        long long budget, std::uint64_t seed) {
  if (chan.v_min <= 0.0)
    throw DegenerateDispersion("direct_bound_rhs requires V_min > 0");
  if (n < 1) throw InvalidInput("direct_bound_rhs: n must be >= 1");
  TypeDistribution td = type_distribution(proc, n, mode, budget, seed);
  KQuery q{0.0, r_bits, 0.5, n};
  double phi_term = k_functional_on_types(q, td, chan);
  double v_min_nats = chan.v_min * num::kLn2 * num::kLn2;
  double d1 = 1.0 / (2.0 * std::sqrt(2.0 * 3.14159265358979323846 * v_min_nats));
  double b = chan.be_constant;
  double rhs = phi_term + d1 * std::log(static_cast<double>(n)) / std::sqrt(n) +
               (b + 1.0) / std::sqrt(static_cast<double>(n));
  return std::clamp(rhs, 0.0, 1.0);
}

}  // namespace statecap
