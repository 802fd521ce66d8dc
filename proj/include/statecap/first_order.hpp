#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "statecap/channel.hpp"
#include "statecap/numerics.hpp"
#include "statecap/state_models.hpp"

namespace statecap {

// Right-continuous step cdf of C(T_{S^n}) at blocklength n, in bits.
struct CdfCurve {
  int n = 0;
  bool exact = true;
  std::vector<std::pair<double, double>> points;  // (R bits, Pr[C(T) <= R])

  num::StepFunction to_step() const;
};

struct StrongConverseEvidence {
  std::string verdict;  // "holds" | "fails" | "inconclusive"
  std::vector<int> n_grid;
  std::vector<double> limt_term;  // (1/n) sum_k E[C_{S_k}] per n, bits
  std::vector<double> cov_term;   // covariance_sum per n, bits^2
  double cov_decay_slope = 0.0;   // fitted log-log slope of cov_term
};

struct FirstOrderReport {
  double eps = 0.0;
  double eps_capacity = 0.0;                    // finite-n estimate, bits
  std::optional<double> eps_capacity_closed;    // model closed form
  double optimistic = 0.0;                      // finite-n optimistic estimate
  std::optional<double> optimistic_closed;
  StrongConverseEvidence strong_converse;
  std::vector<int> n_grid;
};

// Average capacity of a type, sum_s t(s) C_s, bits.
double type_capacity(const StateType& t, const std::vector<double>& caps);

CdfCurve j_cdf(const StateProcess& proc, const StateChannel& chan, int n,
               TypeMode mode = TypeMode::Exact, long long budget = 100000,
               std::uint64_t seed = 1);

// Closed-form eps-capacity / optimistic eps-capacity per model (all five
// models admit one). eps in [0,1) for the former, (0,1] for the latter.
double closed_eps_capacity(const StateProcess& proc, const StateChannel& chan,
                           double eps);
double closed_optimistic_capacity(const StateProcess& proc,
                                  const StateChannel& chan, double eps);

FirstOrderReport eps_capacity(const StateProcess& proc,
                              const StateChannel& chan, double eps,
                              const std::vector<int>& n_grid,
                              TypeMode mode = TypeMode::Exact,
                              long long budget = 100000,
                              std::uint64_t seed = 1);

StrongConverseEvidence strong_converse_check(const StateProcess& proc,
                                             const StateChannel& chan,
                                             const std::vector<int>& n_grid);

}  // namespace statecap
