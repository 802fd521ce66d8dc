#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace statecap {

enum class StateModel { Mixed, Iid, BlockIid, Markov, Alternating };

std::string to_string(StateModel m);

// Block layout for the block-i.i.d. model: d = floor(n^nu) full blocks of
// length m = floor(n/d) plus a remainder block of length r = n - m*d.
struct BlockLayout {
  long long d;
  long long m;
  long long r;
};
BlockLayout block_layout(long long n, double nu);

struct StateProcess {
  StateModel model = StateModel::Iid;
  std::vector<double> dist;                  // q (Mixed) or pi (Iid/BlockIid)
  double nu = 1.0;                           // BlockIid exponent
  std::vector<std::vector<double>> kernel;   // Markov transition matrix
  std::vector<double> init;                  // Markov initial distribution
  int sa = 0, sb = 1;                        // Alternating states

  int state_count() const;
  void validate() const;

  static StateProcess mixed(std::vector<double> q);
  static StateProcess iid(std::vector<double> pi);
  static StateProcess block_iid(std::vector<double> pi, double nu);
  static StateProcess markov(std::vector<std::vector<double>> kernel,
                             std::vector<double> init);
  static StateProcess alternating(int sa, int sb, int state_count);
};

struct StateType {
  std::vector<int> counts;
  int n = 0;

  double fraction(int s) const { return static_cast<double>(counts[s]) / n; }
};

struct TypeDistribution {
  int n = 0;
  std::vector<std::pair<StateType, double>> atoms;
  bool exact = true;
  long long sample_count = 0;  // when Monte Carlo
};

enum class TypeMode { Exact, Mc };

// True iff position index i (1-based) lies in {i : 2^{2k-1} <= i < 2^{2k}}.
bool alternating_in_j(long long i);

std::vector<int> sample_states(const StateProcess& proc, int n,
                               std::uint64_t seed);

// Exact supported for Mixed, Iid, BlockIid, Alternating at any n and for
// Markov with |S| <= 3 and n <= exact_markov_cap; throws Unsupported
// otherwise in exact mode.
TypeDistribution type_distribution(const StateProcess& proc, int n,
                                   TypeMode mode, long long budget = 100000,
                                   std::uint64_t seed = 1,
                                   int exact_markov_cap = 4096);

// Serial reference for the Monte Carlo path; the parallel version in
// type_distribution must produce identical output for any thread count.
TypeDistribution mc_type_distribution_serial(const StateProcess& proc, int n,
                                             long long budget,
                                             std::uint64_t seed);

// Var_{S<-pi}[C_S].
double v_star(const std::vector<double>& pi, const std::vector<double>& caps);

// Stationary distribution of an ergodic kernel.
std::vector<double> stationary_distribution(
    const std::vector<std::vector<double>>& kernel);

void check_ergodic(const std::vector<std::vector<double>>& kernel);

// V**(M) via the eigendecomposition identity; falls back to the truncated
// series when the kernel is numerically non-diagonalizable.
double v_double_star(const std::vector<std::vector<double>>& kernel,
                     const std::vector<double>& caps);

// Independent truncated-series route Var + 2 sum_k Cov_k; reports the
// geometric tail bound of the truncation.
double v_double_star_series(const std::vector<std::vector<double>>& kernel,
                            const std::vector<double>& caps,
                            double* tail_bound = nullptr);

// V**_n(M) = Var + (2/n) sum_{j<n} (n-j) Cov_j under a stationary start.
double v_double_star_finite(const std::vector<std::vector<double>>& kernel,
                            const std::vector<double>& caps, int n);

// (1/n^2) sum_{k,l} Cov[C_{S_k}, C_{S_l}] via the per-model closed form.
double covariance_sum(const StateProcess& proc, int n,
                      const std::vector<double>& caps);

// Mean of C(T_{S^n}) under the model, (1/n) sum_k E[C_{S_k}].
double mean_capacity_term(const StateProcess& proc, int n,
                          const std::vector<double>& caps);

}  // namespace statecap
