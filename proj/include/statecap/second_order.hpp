#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "statecap/channel.hpp"
#include "statecap/state_models.hpp"

namespace statecap {

// Query for the finite-n expectation of the Gaussian-cdf rate-gap
// functional. Units: r and R in bits (r on the n^beta scale).
struct KQuery {
  double r = 0.0;
  double R = 0.0;
  double beta = 0.5;
  int n = 1;
};

struct SecondOrderResult {
  double eps = 0.0;
  double beta = 0.5;
  double lambda = 0.0;  // bits, may be +-inf
  std::optional<double> lambda_closed;
  std::optional<double> dispersion;  // bits^2, beta = 1/2 and eps != 1/2 only
  std::map<std::string, double> decomposition;
  std::string method;        // "functional_bisection" | "closed_form"
  std::string c_eps_source;  // "closed_form" | "finite_n"
  std::vector<int> n_grid;
  std::vector<double> lambda_by_n;  // per-n bisection results (diagnostics)
  std::string diagnostics;
};

// E over the type law of Phi((nR + n^beta r - n C(t)) / sqrt(n V(t))).
double k_functional(const KQuery& q, const StateProcess& proc,
                    const StateChannel& chan, TypeMode mode = TypeMode::Exact,
                    long long budget = 100000, std::uint64_t seed = 1);

// Same value computed on a precomputed type law; serial reference kernel
// (the parallel path must match it exactly).
double k_functional_on_types(const KQuery& q, const TypeDistribution& td,
                             const StateChannel& chan);
double k_functional_on_types_serial(const KQuery& q,
                                    const TypeDistribution& td,
                                    const StateChannel& chan);

// sup{r | K(r | C_eps, beta) <= eps} by bisection at the largest grid n,
// with divergence diagnostics across the grid tail. Returns +-inf when K
// never crosses eps on [-r_max, r_max].
SecondOrderResult lambda_solve(double eps, double beta,
                               const StateProcess& proc,
                               const StateChannel& chan,
                               const std::vector<int>& n_grid,
                               double tol = 1e-6,
                               TypeMode mode = TypeMode::Exact,
                               long long budget = 100000,
                               std::uint64_t seed = 1);

// Closed forms for the five models; beta must match the model
// (1 - nu/2 for block-iid, 1/2 otherwise) or BetaMismatch is thrown.
double closed_form_lambda(const StateProcess& proc, const StateChannel& chan,
                          double eps, double beta);

// Two-term normal-approximation expansion of log M* (bits); supported for
// iid, block-iid and Markov state models.
double normal_approximation_logM(double eps, int n, const StateProcess& proc,
                                 const StateChannel& chan);

struct GapAuditRow {
  int n = 0;
  double gap1 = 0.0;  // replace V(t) by V(pi) inside the expectation
  double gap2 = 0.0;  // replace the expectation by a single Gaussian
};

struct GapAudit {
  std::vector<GapAuditRow> rows;
  double slope1 = 0.0;  // fitted log-log slopes
  double slope2 = 0.0;
};

GapAudit approximation_gap_audit(const StateProcess& proc,
                                 const StateChannel& chan,
                                 const std::vector<int>& n_grid,
                                 TypeMode mode = TypeMode::Exact,
                                 long long budget = 100000,
                                 std::uint64_t seed = 1);

}  // namespace statecap
