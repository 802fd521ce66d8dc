#pragma once

#include <string>
#include <vector>

namespace statecap {

struct Alphabet {
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(labels.size()); }
  int index(const std::string& label) const;
  void validate() const;
  bool operator==(const Alphabet&) const = default;
};

// Discrete memoryless channel W(y|x): one row per input symbol.
struct Dmc {
  Alphabet input;
  Alphabet output;
  std::vector<std::vector<double>> rows;

  void validate(double tol = 1e-12) const;
};

struct InputDistribution {
  std::vector<double> probs;

  void validate(double tol = 1e-12) const;
};

// All public quantities are in bits / bits^2 / bits^3.
struct ChannelSummary {
  double capacity_bits = 0.0;
  InputDistribution caid;
  double v_cond = 0.0;      // V at the caid, bits^2
  double v_uncond = 0.0;    // U at the caid, bits^2
  double third_moment = 0.0;  // L at the caid, bits^3
  double duality_gap = 0.0;   // solver certificate, bits
  bool caid_unique = false;
};

struct StateChannel {
  Alphabet states;
  std::vector<Dmc> channels;            // indexed by state
  std::vector<ChannelSummary> summaries;
  double v_min = 0.0;       // min_s V_s, bits^2
  double be_constant = 0.0;  // 6 L+ / V_min^{3/2}, base-invariant

  int state_count() const { return static_cast<int>(channels.size()); }
  std::vector<double> capacities() const;
  std::vector<double> dispersions() const;
};

struct CapacityResult {
  double capacity_bits;
  InputDistribution caid;
  double gap_bits;  // certified upper - lower bracket width
  int iterations;
};

double mutual_information(const InputDistribution& p, const Dmc& w);  // bits

double conditional_variance(const InputDistribution& p, const Dmc& w);  // bits^2

// U(P,W) with explicit centering constant C (bits).
double unconditional_variance(const InputDistribution& p, const Dmc& w,
                              double capacity_bits);  // bits^2

double third_absolute_moment(const InputDistribution& p, const Dmc& w);  // bits^3

// Alternating maximization with the max-over-x KL upper bound as the
// stopping certificate. Throws NonConvergence past max_iter.
CapacityResult capacity(const Dmc& w, double tol = 1e-10, int max_iter = 100000);

// Heuristic multi-start probe for uniqueness of the caid; false negatives
// possible. Deterministic given the seed.
bool caid_uniqueness_probe(const Dmc& w, double capacity_bits,
                           double tol = 1e-10, int n_starts = 16,
                           unsigned long long seed = 1);

ChannelSummary summarize_channel(const Dmc& w, double tol = 1e-10);

StateChannel build_state_channel(const Alphabet& states,
                                 const std::vector<Dmc>& channels,
                                 double tol = 1e-10,
                                 double dispersion_floor = 1e-12);

}  // namespace statecap
