#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "statecap/channel.hpp"
#include "statecap/state_models.hpp"

namespace statecap {

// A finite-blocklength achievability evaluation: error-probability upper
// bound from information-density thresholding.
struct FeinsteinResult {
  double rhs = 0.0;        // total bound, clipped to [0, 1]
  double prob_term = 0.0;  // Pr[i(X^n;Y^n|S^n) <= log M + eta]
  double eta_term = 0.0;   // 2^{-eta}
  bool exact = true;       // enumeration (true) or Monte Carlo (false)
  long long samples = 0;   // MC sample count (0 when exact)
  double ci_low = 0.0;     // 99% Wilson interval for prob_term (MC only)
  double ci_high = 0.0;
};

// Which auxiliary output law the converse evaluates.
//  - TypeInduced: the mixture over conditional types from the blockwise
//    construction; carries the |X||S| log2(n+1) mixture penalty.
//  - Caod: per-state capacity-achieving output law; no mixture penalty.
enum class ConverseQ { TypeInduced, Caod };

// Achievability/converse pair at one (n, logM) operating point.
struct BoundReport {
  int n = 0;
  double log_m_bits = 0.0;
  double eps_target = 0.0;
  double achievability_eps = 0.0;  // Feinstein RHS at logM
  double converse_log_m_bits = 0.0;
  double direct_bound_rhs = 0.0;  // explicit finite-n direct bound at R = logM/n
  double slack_bits = 0.0;  // converse_logM - logM
};

// Error bound for a blocklength-n code of size 2^{log_m_bits}: the
// probability that the accumulated information density falls below
// log M + eta, plus 2^{-eta}.  input_policy[s] is P(x|s).  Exact evaluation
// convolves per-position density laws over the state type distribution;
// when the convolution support would exceed enum_cap atoms (or mode == Mc)
// a Monte Carlo estimate with a 99% Wilson interval is returned.
FeinsteinResult feinstein_rhs(const StateChannel& chan,
                              const StateProcess& proc,
                              const std::vector<std::vector<double>>& input_policy,
                              int n, double log_m_bits, double eta_bits,
                              TypeMode mode = TypeMode::Exact,
                              long long budget = 100000,
                              std::uint64_t seed = 1,
                              long long enum_cap = 10000000);

// eps-hypothesis-testing divergence in bits: -log2(beta_{1-eps}(P,Q)/(1-eps))
// where beta is the optimal type-II error of the randomized Neyman-Pearson
// test at type-I level eps.  +infinity when the optimal test sits entirely
// on Q-null atoms (singular laws).
double dh_divergence(const std::vector<double>& p,
                     const std::vector<double>& q, double eps);

// Data-processing inequality D_h^eps(P||Q) >= D_h^eps(PW||QW), checked
// within 1e-9 bits; kernel rows are indexed by the input letter.
bool dpi_check(const std::vector<double>& p, const std::vector<double>& q,
               const std::vector<std::vector<double>>& kernel, double eps);

// Exact cdf of the per-symbol averaged log-likelihood sum
// (1/n) sum_k log2 W(Y_k|x_k,s_k)/Q(Y_k|s_k) <= r_bits, for a determinstic
// state/input word described by its state type t and per-state input counts
// x_counts[s][x] (sum_x x_counts[s][x] == t.counts[s]).  Q(.|s) is the
// output law induced by the input conditional type unless q_override is
// given (one row per state).
double xi_cdf(const StateChannel& chan, const StateType& t,
              const std::vector<std::vector<int>>& x_counts, double r_bits,
              int n,
              const std::optional<std::vector<std::vector<double>>>&
                  q_override = std::nullopt);

// Information-spectrum converse on log M* (bits per block): inverts the
// expected cdf of the best per-type input assignment at level eps + delta
// and adds the explicit penalty terms.  delta <= 0 selects the default
// 1/sqrt(n).  Enumeration over conditional types; throws
// EnumerationTooLarge past enum_cap (t, conditional type) pairs.
double spectrum_converse_logM(const StateChannel& chan,
                              const StateProcess& proc, int n, double eps,
                              double delta = -1.0,
                              ConverseQ q_mode = ConverseQ::TypeInduced,
                              long long enum_cap = 2000000);

// Explicit finite-n direct bound on the maximum error probability at block
// rate r_bits = logM/n: Gaussian-cdf expectation over the state type plus
// the D1 log n / sqrt(n) and (B+1)/sqrt(n) penalties, clipped to [0, 1].
double direct_bound_rhs(const StateChannel& chan, const StateProcess& proc,
                        int n, double r_bits,
                        TypeMode mode = TypeMode::Exact,
                        long long budget = 100000, std::uint64_t seed = 1);

}  // namespace statecap
