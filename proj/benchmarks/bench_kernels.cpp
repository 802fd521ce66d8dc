// Timing comparison between the OpenMP kernels and their serial reference
// implementations.  Also asserts bitwise agreement, since the parallel
// paths are required to reproduce the serial results exactly.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "statecap/channel.hpp"
#include "statecap/second_order.hpp"
#include "statecap/state_models.hpp"

using namespace statecap;
using clk = std::chrono::steady_clock;

namespace {

double ms_since(clk::time_point t0) {
  return std::chrono::duration<double, std::milli>(clk::now() - t0).count();
}

Dmc bsc(double p) {
  return Dmc{Alphabet{{"0", "1"}}, Alphabet{{"0", "1"}},
             {{1.0 - p, p}, {p, 1.0 - p}}};
}

}  // namespace

int main() {
  auto chan = build_state_channel(Alphabet{{"a", "b", "c"}},
                                  {bsc(0.02), bsc(0.08), bsc(0.2)});
  auto proc = StateProcess::iid({0.3, 0.3, 0.4});

  std::printf("%-28s %10s %10s %8s\n", "kernel", "serial_ms", "omp_ms",
              "speedup");

  // K-functional over an exact type law at a large blocklength.
  {
    const int n = 4096;
    auto td = type_distribution(proc, n, TypeMode::Exact);
    KQuery q{-0.5, 0.55, 0.5, n};
    const int reps = 20;
    double a = 0.0, b = 0.0;
    auto t0 = clk::now();
    for (int i = 0; i < reps; ++i)
      a += k_functional_on_types_serial(q, td, chan);
    double serial_ms = ms_since(t0) / reps;
    t0 = clk::now();
    for (int i = 0; i < reps; ++i) a += k_functional_on_types(q, td, chan);
    double omp_ms = ms_since(t0) / reps;
    b = k_functional_on_types(q, td, chan);
    if (b != k_functional_on_types_serial(q, td, chan)) {
      std::fprintf(stderr, "K-functional parallel/serial mismatch\n");
      return 1;
    }
    std::printf("%-28s %10.3f %10.3f %7.2fx\n", "k_functional (n=4096)",
                serial_ms, omp_ms, serial_ms / omp_ms);
  }

  // Monte Carlo type-law construction.
  {
    const int n = 1024;
    const long long budget = 200000;
    auto t0 = clk::now();
    auto td_s = mc_type_distribution_serial(proc, n, budget, 42);
    double serial_ms = ms_since(t0);
    t0 = clk::now();
    auto td_p = type_distribution(proc, n, TypeMode::Mc, budget, 42);
    double omp_ms = ms_since(t0);
    if (td_s.atoms.size() != td_p.atoms.size()) {
      std::fprintf(stderr, "MC type-law parallel/serial mismatch\n");
      return 1;
    }
    for (size_t i = 0; i < td_s.atoms.size(); ++i) {
      if (td_s.atoms[i].first.counts != td_p.atoms[i].first.counts ||
          td_s.atoms[i].second != td_p.atoms[i].second) {
        std::fprintf(stderr, "MC type-law parallel/serial mismatch\n");
        return 1;
      }
    }
    std::printf("%-28s %10.3f %10.3f %7.2fx\n", "mc_type_law (n=1024)",
                serial_ms, omp_ms, serial_ms / omp_ms);
  }

  return 0;
}
