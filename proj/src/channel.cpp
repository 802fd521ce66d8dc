#include "statecap/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "statecap/errors.hpp"
#include "statecap/numerics.hpp"
#include "statecap/rng.hpp"

namespace statecap {

using num::kLn2;

int Alphabet::index(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw InvalidInput("unknown symbol: " + label);
  return static_cast<int>(it - labels.begin());
}

void Alphabet::validate() const {
  if (labels.empty()) throw InvalidInput("alphabet must be nonempty");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size())
    throw InvalidInput("alphabet labels must be distinct");
}

void Dmc::validate(double tol) const {
  input.validate();
  output.validate();
  if (static_cast<int>(rows.size()) != input.size())
    throw InvalidInput("Dmc: row count != input alphabet size");
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != output.size())
      throw InvalidInput("Dmc: row length != output alphabet size");
    double sum = 0.0;
    for (double v : row) {
      if (!std::isfinite(v) || v < 0.0)
        throw InvalidInput("Dmc: entries must be finite and nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
      throw InvalidInput("Dmc: row does not sum to 1");
  }
}

void InputDistribution::validate(double tol) const {
  double sum = 0.0;
  for (double v : probs) {
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidInput("InputDistribution: entries must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol)
    throw InvalidInput("InputDistribution: does not sum to 1");
}

namespace {

void check_dims(const InputDistribution& p, const Dmc& w) {
  if (static_cast<int>(p.probs.size()) != w.input.size())
    throw InvalidInput("input distribution / channel dimension mismatch");
}

std::vector<double> output_law(const InputDistribution& p, const Dmc& w) {
  std::vector<double> q(w.output.size(), 0.0);
  for (int x = 0; x < w.input.size(); ++x)
    for (int y = 0; y < w.output.size(); ++y) q[y] += p.probs[x] * w.rows[x][y];
  return q;
}

// D(W(.|x) || q) in nats; terms with W(y|x)=0 contribute 0.
double row_kl_nats(const std::vector<double>& row, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t y = 0; y < row.size(); ++y) {
    if (row[y] > 0.0) d += row[y] * std::log(row[y] / q[y]);
  }
  return d;
}

}  // namespace

double mutual_information(const InputDistribution& p, const Dmc& w) {
  check_dims(p, w);
  auto q = output_law(p, w);
  double i_nats = 0.0;
  for (int x = 0; x < w.input.size(); ++x)
    if (p.probs[x] > 0.0) i_nats += p.probs[x] * row_kl_nats(w.rows[x], q);
  return i_nats / kLn2;
}

double conditional_variance(const InputDistribution& p, const Dmc& w) {
  check_dims(p, w);
  auto q = output_law(p, w);
  double v_nats = 0.0;
  for (int x = 0; x < w.input.size(); ++x) {
    if (p.probs[x] <= 0.0) continue;
    double d = row_kl_nats(w.rows[x], q);
    for (int y = 0; y < w.output.size(); ++y) {
      double wyx = w.rows[x][y];
      if (wyx <= 0.0) continue;
      double z = std::log(wyx / q[y]) - d;
      v_nats += p.probs[x] * wyx * z * z;
    }
  }
  return v_nats / (kLn2 * kLn2);
}

double unconditional_variance(const InputDistribution& p, const Dmc& w,
                              double capacity_bits) {
  check_dims(p, w);
  auto q = output_law(p, w);
  double c_nats = capacity_bits * kLn2;
  double u_nats = 0.0;
  for (int x = 0; x < w.input.size(); ++x) {
    if (p.probs[x] <= 0.0) continue;
    for (int y = 0; y < w.output.size(); ++y) {
      double wyx = w.rows[x][y];
      if (wyx <= 0.0) continue;
      double z = std::log(wyx / q[y]) - c_nats;
      u_nats += p.probs[x] * wyx * z * z;
    }
  }
  return u_nats / (kLn2 * kLn2);
}

double third_absolute_moment(const InputDistribution& p, const Dmc& w) {
  check_dims(p, w);
  auto q = output_law(p, w);
  double l_nats = 0.0;
  for (int x = 0; x < w.input.size(); ++x) {
    if (p.probs[x] <= 0.0) continue;
    double d = row_kl_nats(w.rows[x], q);
    for (int y = 0; y < w.output.size(); ++y) {
      double wyx = w.rows[x][y];
      if (wyx <= 0.0) continue;
      double z = std::abs(std::log(wyx / q[y]) - d);
      l_nats += p.probs[x] * wyx * z * z * z;
    }
  }
  return l_nats / (kLn2 * kLn2 * kLn2);
}

namespace {

// One Blahut-Arimoto sweep starting from p; returns the certified
// (lower, upper) bracket in nats at the final iterate.
struct BaState {
  InputDistribution p;
  double lower_nats;
  double upper_nats;
  int iterations;
};

BaState blahut_arimoto(const Dmc& w, InputDistribution p, double tol_nats,
                       int max_iter) {
  const int nx = w.input.size();
  double lower = 0.0, upper = num::kInf;
  int it = 0;
  std::vector<double> d(nx);
  for (; it < max_iter; ++it) {
    auto q = output_law(p, w);
    double lo = 0.0, hi = -num::kInf;
    for (int x = 0; x < nx; ++x) {
      d[x] = row_kl_nats(w.rows[x], q);
      if (p.probs[x] > 0.0) lo += p.probs[x] * d[x];
      hi = std::max(hi, d[x]);
    }
    lower = lo;
    upper = hi;
    if (upper - lower <= tol_nats) break;
    double norm = 0.0;
    for (int x = 0; x < nx; ++x) {
      p.probs[x] *= std::exp(d[x] - hi);  // shift for stability
      norm += p.probs[x];
    }
    for (int x = 0; x < nx; ++x) p.probs[x] /= norm;
  }
  return {std::move(p), lower, upper, it};
}

}  // namespace

CapacityResult capacity(const Dmc& w, double tol, int max_iter) {
  if (tol <= 0) throw InvalidInput("capacity: tol must be > 0");
  w.validate();
  InputDistribution p;
  p.probs.assign(w.input.size(), 1.0 / w.input.size());
  auto st = blahut_arimoto(w, std::move(p), tol * kLn2, max_iter);
  if (st.upper_nats - st.lower_nats > tol * kLn2)
    throw NonConvergence("capacity: bracket did not close within max_iter",
                         st.lower_nats / kLn2, st.upper_nats / kLn2);
  double c_bits = 0.5 * (st.lower_nats + st.upper_nats) / kLn2;
  return {c_bits, std::move(st.p), (st.upper_nats - st.lower_nats) / kLn2,
          st.iterations};
}

bool caid_uniqueness_probe(const Dmc& w, double capacity_bits, double tol,
                           int n_starts, unsigned long long seed) {
  const int nx = w.input.size();
  std::vector<InputDistribution> found;
  for (int k = 0; k < n_starts; ++k) {
    CounterRng rng(seed, static_cast<std::uint64_t>(k));
    InputDistribution p;
    p.probs.resize(nx);
    double sum = 0.0;
    for (int x = 0; x < nx; ++x) {
      p.probs[x] = -std::log(1.0 - rng.uniform());  // Exp(1), Dirichlet(1..1)
      sum += p.probs[x];
    }
    for (int x = 0; x < nx; ++x) p.probs[x] /= sum;
    auto st = blahut_arimoto(w, std::move(p), tol * kLn2, 200000);
    found.push_back(std::move(st.p));
  }
  double linf_tol = std::sqrt(tol);
  bool same_caid = true;
  double vmin = num::kInf, vmax = -num::kInf;
  for (const auto& p : found) {
    double v = conditional_variance(p, w);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
    for (int x = 0; x < nx; ++x)
      if (std::abs(p.probs[x] - found[0].probs[x]) > linf_tol)
        same_caid = false;
  }
  return same_caid && vmax - vmin < tol;
}

ChannelSummary summarize_channel(const Dmc& w, double tol) {
  auto cap = capacity(w, tol);
  ChannelSummary s;
  s.capacity_bits = cap.capacity_bits;
  s.caid = cap.caid;
  s.duality_gap = cap.gap_bits;
  s.v_cond = conditional_variance(s.caid, w);
  s.v_uncond = unconditional_variance(s.caid, w, s.capacity_bits);
  s.third_moment = third_absolute_moment(s.caid, w);
  s.caid_unique = caid_uniqueness_probe(w, s.capacity_bits, tol);
  return s;
}

std::vector<double> StateChannel::capacities() const {
  std::vector<double> c;
  c.reserve(summaries.size());
  for (const auto& s : summaries) c.push_back(s.capacity_bits);
  return c;
}

std::vector<double> StateChannel::dispersions() const {
  std::vector<double> v;
  v.reserve(summaries.size());
  for (const auto& s : summaries) v.push_back(s.v_cond);
  return v;
}

StateChannel build_state_channel(const Alphabet& states,
                                 const std::vector<Dmc>& channels,
                                 double tol, double dispersion_floor) {
  states.validate();
  if (channels.empty()) throw InvalidInput("state channel needs >= 1 state");
  if (static_cast<int>(channels.size()) != states.size())
    throw InvalidInput("state count != channel count");
  for (const auto& w : channels) {
    w.validate();
    if (!(w.input == channels[0].input) || !(w.output == channels[0].output))
      throw InvalidInput("all per-state channels must share alphabets");
  }
  StateChannel sc;
  sc.states = states;
  sc.channels = channels;
  double v_min = num::kInf;
  for (const auto& w : channels) {
    sc.summaries.push_back(summarize_channel(w, tol));
    v_min = std::min(v_min, sc.summaries.back().v_cond);
  }
  if (v_min < dispersion_floor)
    throw DegenerateDispersion(
        "build_state_channel: V_min below dispersion floor; second-order "
        "quantities are undefined");
  sc.v_min = v_min;
  if (v_min > 0.0) {
    double v_min_nats = v_min * kLn2 * kLn2;
    sc.be_constant =
        num::berry_esseen_constant(v_min_nats, channels[0].output.size());
  } else {
    // Zero-dispersion family (allowed when the floor is relaxed): the
    // Berry-Esseen constant is undefined, so second-order consumers must
    // reject it themselves.
    sc.be_constant = std::numeric_limits<double>::infinity();
  }
  return sc;
}

}  // namespace statecap
