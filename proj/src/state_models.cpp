#include "statecap/state_models.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "statecap/errors.hpp"
#include "statecap/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace statecap {

namespace {

void check_pmf(const std::vector<double>& p, const char* what) {
  if (p.empty()) throw InvalidModel(std::string(what) + ": empty distribution");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidModel(std::string(what) + ": negative or non-finite mass");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidModel(std::string(what) + ": does not sum to 1");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> kernel_apply(const std::vector<std::vector<double>>& m,
                                 const std::vector<double>& v) {
  std::vector<double> out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

std::vector<double> row_apply(const std::vector<double>& mu,
                              const std::vector<std::vector<double>>& m) {
  std::vector<double> out(m[0].size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += mu[i] * m[i][j];
  return out;
}

long long alternating_j_count(long long n) {
  long long total = 0;
  for (long long lo = 2; lo <= n; lo *= 4) {
    long long hi = 2 * lo - 1;  // segment [lo, 2*lo)
    total += std::min(hi, n) - lo + 1;
    if (lo > n / 4) break;
  }
  return total;
}

}  // namespace

std::string to_string(StateModel m) {
  switch (m) {
    case StateModel::Mixed: return "mixed";
    case StateModel::Iid: return "iid";
    case StateModel::BlockIid: return "block_iid";
    case StateModel::Markov: return "markov";
    case StateModel::Alternating: return "alternating";
  }
  return "?";
}

BlockLayout block_layout(long long n, double nu) {
  if (n < 1) throw InvalidInput("block_layout: n must be >= 1");
  if (!(nu > 0.0) || nu > 1.0)
    throw InvalidModel("block_layout: nu must lie in (0, 1]");
  long long d = static_cast<long long>(std::floor(std::pow(
      static_cast<double>(n), nu) * (1.0 + 1e-12)));
  d = std::max<long long>(1, std::min<long long>(d, n));
  long long m = n / d;
  return BlockLayout{d, m, n - m * d};
}

int StateProcess::state_count() const {
  switch (model) {
    case StateModel::Mixed:
    case StateModel::Iid:
    case StateModel::BlockIid:
      return static_cast<int>(dist.size());
    case StateModel::Markov:
      return static_cast<int>(kernel.size());
    case StateModel::Alternating:
      return std::max(sa, sb) + 1;
  }
  return 0;
}

void StateProcess::validate() const {
  switch (model) {
    case StateModel::Mixed:
      check_pmf(dist, "mixed q");
      break;
    case StateModel::Iid:
      check_pmf(dist, "iid pi");
      break;
    case StateModel::BlockIid:
      check_pmf(dist, "block_iid pi");
      if (!(nu > 0.0) || nu > 1.0)
        throw InvalidModel("block_iid: nu must lie in (0, 1]");
      break;
    case StateModel::Markov: {
      if (kernel.empty()) throw InvalidModel("markov: empty kernel");
      for (const auto& row : kernel) {
        if (row.size() != kernel.size())
          throw InvalidModel("markov: kernel must be square");
        check_pmf(row, "markov kernel row");
      }
      check_pmf(init, "markov init");
      if (init.size() != kernel.size())
        throw InvalidModel("markov: init size mismatch");
      check_ergodic(kernel);
      break;
    }
    case StateModel::Alternating:
      if (sa < 0 || sb < 0 || sa == sb)
        throw InvalidModel("alternating: need two distinct states");
      break;
  }
}

StateProcess StateProcess::mixed(std::vector<double> q) {
  StateProcess p;
  p.model = StateModel::Mixed;
  p.dist = std::move(q);
  p.validate();
  return p;
}

StateProcess StateProcess::iid(std::vector<double> pi) {
  StateProcess p;
  p.model = StateModel::Iid;
  p.dist = std::move(pi);
  p.validate();
  return p;
}

StateProcess StateProcess::block_iid(std::vector<double> pi, double nu) {
  StateProcess p;
  p.model = StateModel::BlockIid;
  p.dist = std::move(pi);
  p.nu = nu;
  p.validate();
  return p;
}

StateProcess StateProcess::markov(std::vector<std::vector<double>> kernel,
                                  std::vector<double> init) {
  StateProcess p;
  p.model = StateModel::Markov;
  p.kernel = std::move(kernel);
  p.init = std::move(init);
  p.validate();
  return p;
}

StateProcess StateProcess::alternating(int sa, int sb, int state_count) {
  StateProcess p;
  p.model = StateModel::Alternating;
  p.sa = sa;
  p.sb = sb;
  if (state_count <= std::max(sa, sb))
    throw InvalidModel("alternating: state_count too small");
  p.dist.assign(state_count, 0.0);  // records |S| only
  p.validate();
  return p;
}

bool alternating_in_j(long long i) {
  if (i < 2) return false;
  int b = 63 - __builtin_clzll(static_cast<unsigned long long>(i));
  return (b % 2) == 1;
}

std::vector<int> sample_states(const StateProcess& proc, int n,
                               std::uint64_t seed) {
  if (n < 1) throw InvalidInput("sample_states: n must be >= 1");
  proc.validate();
  std::vector<int> s(n);
  CounterRng rng(seed, 0);
  switch (proc.model) {
    case StateModel::Mixed: {
      int v = rng.sample(proc.dist);
      std::fill(s.begin(), s.end(), v);
      break;
    }
    case StateModel::Iid:
      for (int k = 0; k < n; ++k) s[k] = rng.sample(proc.dist);
      break;
    case StateModel::BlockIid: {
      BlockLayout bl = block_layout(n, proc.nu);
      int pos = 0;
      for (long long b = 0; b < bl.d; ++b) {
        int v = rng.sample(proc.dist);
        for (long long j = 0; j < bl.m; ++j) s[pos++] = v;
      }
      if (bl.r > 0) {
        int v = rng.sample(proc.dist);
        for (long long j = 0; j < bl.r; ++j) s[pos++] = v;
      }
      break;
    }
    case StateModel::Markov: {
      int cur = rng.sample(proc.init);
      s[0] = cur;
      for (int k = 1; k < n; ++k) {
        cur = rng.sample(proc.kernel[cur]);
        s[k] = cur;
      }
      break;
    }
    case StateModel::Alternating:
      for (int k = 0; k < n; ++k)
        s[k] = alternating_in_j(k + 1) ? proc.sa : proc.sb;
      break;
  }
  return s;
}

namespace {

void normalize_atoms(TypeDistribution& td) {
  std::map<std::vector<int>, double> merged;
  for (auto& [t, p] : td.atoms) merged[t.counts] += p;
  td.atoms.clear();
  for (auto& [c, p] : merged)
    if (p > 0.0) td.atoms.push_back({StateType{c, td.n}, p});
}

// Multinomial law of counts over `slots` i.i.d. draws from pmf, each draw
// adding `weight` to the chosen coordinate (plus a fixed offset vector).
void multinomial_atoms(const std::vector<double>& pmf, long long slots,
                       long long weight, const std::vector<int>& offset,
                       TypeDistribution& out) {
  int s_size = static_cast<int>(pmf.size());
  std::vector<long long> counts(s_size, 0);
  std::vector<double> logp(s_size);
  for (int i = 0; i < s_size; ++i)
    logp[i] = pmf[i] > 0.0 ? std::log(pmf[i]) : -1e300;

  // Recursive composition enumeration with log-space multinomial weights.
  auto rec = [&](auto&& self, int idx, long long rem) -> void {
    if (idx == s_size - 1) {
      counts[idx] = rem;
      double lw = std::lgamma(static_cast<double>(slots) + 1.0);
      bool feasible = true;
      for (int i = 0; i < s_size; ++i) {
        if (counts[i] > 0 && pmf[i] == 0.0) { feasible = false; break; }
        lw -= std::lgamma(static_cast<double>(counts[i]) + 1.0);
        lw += counts[i] * logp[i];
      }
      if (feasible) {
        std::vector<int> c(offset);
        for (int i = 0; i < s_size; ++i)
          c[i] += static_cast<int>(counts[i] * weight);
        out.atoms.push_back({StateType{std::move(c), out.n}, std::exp(lw)});
      }
      return;
    }
    for (long long k = 0; k <= rem; ++k) {
      if (k > 0 && pmf[idx] == 0.0) break;
      counts[idx] = k;
      self(self, idx + 1, rem - k);
    }
  };
  rec(rec, 0, slots);
}

TypeDistribution exact_markov_types(const StateProcess& proc, int n) {
  int s_size = proc.state_count();
  if (s_size > 3)
    throw Unsupported("exact markov type law supports at most 3 states");
  // DP over (position, last state, count vector of all but the last state).
  using Key = std::pair<int, int>;  // counts of state 0 and (if |S|=3) state 1
  std::vector<std::map<Key, double>> cur(s_size), nxt(s_size);
  auto key_of = [&](int state, Key k) -> Key {
    Key r = k;
    if (state == 0) r.first += 1;
    if (state == 1 && s_size == 3) r.second += 1;
    return r;
  };
  for (int s = 0; s < s_size; ++s)
    if (proc.init[s] > 0.0) cur[s][key_of(s, {0, 0})] = proc.init[s];
  for (int pos = 1; pos < n; ++pos) {
    for (auto& m : nxt) m.clear();
    for (int s = 0; s < s_size; ++s)
      for (auto& [k, p] : cur[s])
        for (int t = 0; t < s_size; ++t)
          if (proc.kernel[s][t] > 0.0)
            nxt[t][key_of(t, k)] += p * proc.kernel[s][t];
    cur.swap(nxt);
  }
  TypeDistribution td;
  td.n = n;
  std::map<std::vector<int>, double> merged;
  for (int s = 0; s < s_size; ++s)
    for (auto& [k, p] : cur[s]) {
      std::vector<int> c(s_size, 0);
      c[0] = k.first;
      if (s_size == 3) {
        c[1] = k.second;
        c[2] = n - k.first - k.second;
      } else {
        c[1] = n - k.first;
      }
      merged[c] += p;
    }
  for (auto& [c, p] : merged) td.atoms.push_back({StateType{c, n}, p});
  return td;
}

TypeDistribution exact_type_distribution(const StateProcess& proc, int n,
                                         int exact_markov_cap) {
  TypeDistribution td;
  td.n = n;
  int s_size = proc.state_count();
  switch (proc.model) {
    case StateModel::Mixed:
      for (int s = 0; s < s_size; ++s) {
        if (proc.dist[s] <= 0.0) continue;
        std::vector<int> c(s_size, 0);
        c[s] = n;
        td.atoms.push_back({StateType{c, n}, proc.dist[s]});
      }
      break;
    case StateModel::Iid:
      multinomial_atoms(proc.dist, n, 1, std::vector<int>(s_size, 0), td);
      normalize_atoms(td);
      break;
    case StateModel::BlockIid: {
      BlockLayout bl = block_layout(n, proc.nu);
      TypeDistribution blocks;
      blocks.n = n;
      multinomial_atoms(proc.dist, bl.d, bl.m, std::vector<int>(s_size, 0),
                        blocks);
      if (bl.r == 0) {
        td.atoms = std::move(blocks.atoms);
      } else {
        for (auto& [t, p] : blocks.atoms)
          for (int s = 0; s < s_size; ++s) {
            if (proc.dist[s] <= 0.0) continue;
            std::vector<int> c = t.counts;
            c[s] += static_cast<int>(bl.r);
            td.atoms.push_back({StateType{std::move(c), n}, p * proc.dist[s]});
          }
      }
      normalize_atoms(td);
      break;
    }
    case StateModel::Markov:
      if (n > exact_markov_cap)
        throw Unsupported(
            "exact markov type law: n exceeds exact_markov_cap; use mc mode");
      return exact_markov_types(proc, n);
    case StateModel::Alternating: {
      long long jn = alternating_j_count(n);
      std::vector<int> c(s_size, 0);
      c[proc.sa] = static_cast<int>(jn);
      c[proc.sb] = static_cast<int>(n - jn);
      td.atoms.push_back({StateType{c, n}, 1.0});
      break;
    }
  }
  return td;
}

TypeDistribution mc_from_counts(std::map<std::vector<int>, long long>& counts,
                                int n, long long budget) {
  TypeDistribution td;
  td.n = n;
  td.exact = false;
  td.sample_count = budget;
  for (auto& [c, k] : counts)
    td.atoms.push_back(
        {StateType{c, n}, static_cast<double>(k) / static_cast<double>(budget)});
  return td;
}

std::vector<int> one_sample_counts(const StateProcess& proc, int n,
                                   std::uint64_t seed, long long path) {
  int s_size = proc.state_count();
  std::vector<int> c(s_size, 0);
  CounterRng rng(seed, static_cast<std::uint64_t>(path) + 1);
  switch (proc.model) {
    case StateModel::Mixed:
      c[rng.sample(proc.dist)] = n;
      break;
    case StateModel::Iid:
      for (int k = 0; k < n; ++k) c[rng.sample(proc.dist)]++;
      break;
    case StateModel::BlockIid: {
      BlockLayout bl = block_layout(n, proc.nu);
      for (long long b = 0; b < bl.d; ++b)
        c[rng.sample(proc.dist)] += static_cast<int>(bl.m);
      if (bl.r > 0) c[rng.sample(proc.dist)] += static_cast<int>(bl.r);
      break;
    }
    case StateModel::Markov: {
      int cur = rng.sample(proc.init);
      c[cur]++;
      for (int k = 1; k < n; ++k) {
        cur = rng.sample(proc.kernel[cur]);
        c[cur]++;
      }
      break;
    }
    case StateModel::Alternating: {
      long long jn = alternating_j_count(n);
      c[proc.sa] = static_cast<int>(jn);
      c[proc.sb] = static_cast<int>(n - jn);
      break;
    }
  }
  return c;
}

}  // namespace

TypeDistribution mc_type_distribution_serial(const StateProcess& proc, int n,
                                             long long budget,
                                             std::uint64_t seed) {
  if (budget < 1) throw InvalidInput("mc type law: budget must be >= 1");
  std::map<std::vector<int>, long long> counts;
  for (long long i = 0; i < budget; ++i)
    counts[one_sample_counts(proc, n, seed, i)]++;
  return mc_from_counts(counts, n, budget);
}

TypeDistribution type_distribution(const StateProcess& proc, int n,
                                   TypeMode mode, long long budget,
                                   std::uint64_t seed, int exact_markov_cap) {
  if (n < 1) throw InvalidInput("type_distribution: n must be >= 1");
  proc.validate();
  if (mode == TypeMode::Exact)
    return exact_type_distribution(proc, n, exact_markov_cap);

  if (budget < 1) throw InvalidInput("mc type law: budget must be >= 1");
  // Per-path counter streams make the result independent of the thread
  // schedule: sample i always draws from stream i+1.
  std::map<std::vector<int>, long long> counts;
#ifdef _OPENMP
#pragma omp parallel
  {
    std::map<std::vector<int>, long long> local;
#pragma omp for schedule(static)
    for (long long i = 0; i < budget; ++i)
      local[one_sample_counts(proc, n, seed, i)]++;
#pragma omp critical(statecap_mc_types)
    for (auto& [c, k] : local) counts[c] += k;
  }
#else
  for (long long i = 0; i < budget; ++i)
    counts[one_sample_counts(proc, n, seed, i)]++;
#endif
  return mc_from_counts(counts, n, budget);
}

double v_star(const std::vector<double>& pi, const std::vector<double>& caps) {
  check_pmf(pi, "v_star pi");
  if (pi.size() != caps.size())
    throw InvalidInput("v_star: size mismatch between pi and capacities");
  double mean = dot(pi, caps);
  double var = 0.0;
  for (std::size_t s = 0; s < pi.size(); ++s)
    var += pi[s] * (caps[s] - mean) * (caps[s] - mean);
  return var;
}

void check_ergodic(const std::vector<std::vector<double>>& kernel) {
  int s = static_cast<int>(kernel.size());
  // Primitivity test: a nonnegative square matrix is primitive iff its
  // Wielandt power (s-1)^2 + 1 has all-positive support.
  std::vector<std::vector<bool>> a(s, std::vector<bool>(s, false));
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) a[i][j] = kernel[i][j] > 0.0;
  int target = (s - 1) * (s - 1) + 1;
  std::vector<std::vector<bool>> acc = a;
  for (int k = 1; k < target; ++k) {
    std::vector<std::vector<bool>> nxt(s, std::vector<bool>(s, false));
    for (int i = 0; i < s; ++i)
      for (int l = 0; l < s; ++l)
        if (acc[i][l])
          for (int j = 0; j < s; ++j)
            if (a[l][j]) nxt[i][j] = true;
    acc.swap(nxt);
  }
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      if (!acc[i][j])
        throw NotErgodic("markov kernel is not irreducible and aperiodic");
}

std::vector<double> stationary_distribution(
    const std::vector<std::vector<double>>& kernel) {
  check_ergodic(kernel);
  int s = static_cast<int>(kernel.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(s, s);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(s);
  // (M^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) a(i, j) = kernel[j][i] - (i == j ? 1.0 : 0.0);
  for (int j = 0; j < s; ++j) a(s - 1, j) = 1.0;
  b(s - 1) = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(b);
  std::vector<double> out(s);
  for (int i = 0; i < s; ++i) out[i] = std::max(0.0, pi(i));
  double sum = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= sum;
  return out;
}

double v_double_star_series(const std::vector<std::vector<double>>& kernel,
                            const std::vector<double>& caps,
                            double* tail_bound) {
  std::vector<double> pi = stationary_distribution(kernel);
  double mean = dot(pi, caps);
  double var = v_star(pi, caps);
  double sum = var;
  std::vector<double> r = caps;  // r = M^j caps
  double prev = 0.0, last = 0.0, ratio = 0.0;
  const long long k_max = 1000000;
  for (long long j = 1; j <= k_max; ++j) {
    r = kernel_apply(kernel, r);
    double cov = 0.0;
    for (std::size_t s = 0; s < pi.size(); ++s) cov += pi[s] * caps[s] * r[s];
    cov -= mean * mean;
    sum += 2.0 * cov;
    prev = last;
    last = std::abs(2.0 * cov);
    if (prev > 0.0) ratio = std::min(0.999, last / prev);
    if (last < 1e-14 * std::max(1.0, std::abs(sum))) break;
  }
  if (tail_bound) *tail_bound = ratio > 0.0 ? last * ratio / (1.0 - ratio) : last;
  return sum;
}

double v_double_star(const std::vector<std::vector<double>>& kernel,
                     const std::vector<double>& caps) {
  std::vector<double> pi = stationary_distribution(kernel);
  if (pi.size() != caps.size())
    throw InvalidInput("v_double_star: capacity vector size mismatch");
  int s = static_cast<int>(pi.size());
  Eigen::MatrixXd m(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) m(i, j) = kernel[i][j];
  Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) return v_double_star_series(kernel, caps);
  Eigen::MatrixXcd v = es.eigenvectors();
  Eigen::VectorXcd lam = es.eigenvalues();
  // Fall back to the series when the eigenbasis is numerically degenerate.
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(v);
  if (!lu.isInvertible() || lu.rcond() < 1e-10)
    return v_double_star_series(kernel, caps);
  int unit = 0;
  for (int i = 1; i < s; ++i)
    if (std::abs(lam(i) - 1.0) < std::abs(lam(unit) - 1.0)) unit = i;
  Eigen::VectorXcd g(s);
  for (int i = 0; i < s; ++i) {
    if (i == unit) {
      g(i) = 1.0;
    } else {
      if (std::abs(1.0 - lam(i)) < 1e-12)
        return v_double_star_series(kernel, caps);
      g(i) = (1.0 + lam(i)) / (1.0 - lam(i));
    }
  }
  Eigen::MatrixXcd big = v * g.asDiagonal() * lu.inverse();
  double mean = dot(pi, caps);
  std::complex<double> acc = 0.0;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) acc += pi[i] * big(i, j) * caps[i] * caps[j];
  if (std::abs(acc.imag()) > 1e-8 * std::max(1.0, std::abs(acc.real())))
    return v_double_star_series(kernel, caps);
  return acc.real() - mean * mean;
}

double v_double_star_finite(const std::vector<std::vector<double>>& kernel,
                            const std::vector<double>& caps, int n) {
  if (n < 1) throw InvalidInput("v_double_star_finite: n must be >= 1");
  std::vector<double> pi = stationary_distribution(kernel);
  double mean = dot(pi, caps);
  double sum = v_star(pi, caps);
  std::vector<double> r = caps;
  for (int j = 1; j < n; ++j) {
    r = kernel_apply(kernel, r);
    double cov = 0.0;
    for (std::size_t s = 0; s < pi.size(); ++s) cov += pi[s] * caps[s] * r[s];
    cov -= mean * mean;
    sum += (2.0 / n) * (n - j) * cov;
  }
  return sum;
}

double covariance_sum(const StateProcess& proc, int n,
                      const std::vector<double>& caps) {
  if (n < 1) throw InvalidInput("covariance_sum: n must be >= 1");
  proc.validate();
  if (static_cast<int>(caps.size()) != proc.state_count())
    throw InvalidInput("covariance_sum: capacity vector size mismatch");
  switch (proc.model) {
    case StateModel::Mixed:
      return v_star(proc.dist, caps);
    case StateModel::Iid:
      return v_star(proc.dist, caps) / n;
    case StateModel::BlockIid: {
      BlockLayout bl = block_layout(n, proc.nu);
      double var = v_star(proc.dist, caps);
      return var * (static_cast<double>(bl.m) * bl.m * bl.d +
                    static_cast<double>(bl.r) * bl.r) /
             (static_cast<double>(n) * n);
    }
    case StateModel::Markov:
      return v_double_star_finite(proc.kernel, caps, n) / n;
    case StateModel::Alternating:
      return 0.0;
  }
  return 0.0;
}

double mean_capacity_term(const StateProcess& proc, int n,
                          const std::vector<double>& caps) {
  if (n < 1) throw InvalidInput("mean_capacity_term: n must be >= 1");
  proc.validate();
  switch (proc.model) {
    case StateModel::Mixed:
    case StateModel::Iid:
      return dot(proc.dist, caps);
    case StateModel::BlockIid:
      return dot(proc.dist, caps);
    case StateModel::Markov: {
      std::vector<double> mu = proc.init;
      double acc = dot(mu, caps);
      for (int k = 1; k < n; ++k) {
        mu = row_apply(mu, proc.kernel);
        acc += dot(mu, caps);
      }
      return acc / n;
    }
    case StateModel::Alternating: {
      long long jn = alternating_j_count(n);
      return (static_cast<double>(jn) * caps[proc.sa] +
              static_cast<double>(n - jn) * caps[proc.sb]) /
             n;
    }
  }
  return 0.0;
}

}  // namespace statecap
