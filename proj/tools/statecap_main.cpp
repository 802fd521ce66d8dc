#include <cstdint>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "statecap/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "statecap: capacity and finite-blocklength analysis for discrete "
      "memoryless channels whose statistics are driven by a random state "
      "sequence"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config")
        ->required();
    sub->add_option("--seed", seed, "override the RNG seed");
    sub->add_option("--out", out_dir, "output directory (default: .)");
  };

  add_common(app.add_subcommand(
      "first-order",
      "epsilon-capacity and its optimistic counterpart from the cumulative "
      "law of the per-type capacity, plus a strong-converse check"));
  add_common(app.add_subcommand(
      "second-order",
      "second-order rate coefficient: solve for the largest backoff from "
      "capacity whose normal-approximation error probability stays at or "
      "below epsilon"));
  add_common(app.add_subcommand(
      "bounds",
      "non-asymptotic achievability and converse bounds on log M at a fixed "
      "blocklength"));
  add_common(app.add_subcommand(
      "audit",
      "measure how fast the normal-approximation error terms shrink with "
      "blocklength"));
  add_common(app.add_subcommand(
      "constants",
      "per-state channel constants (capacity, dispersion, third moment, "
      "optimal inputs) and process-level variance constants"));

  CLI11_PARSE(app, argc, argv);

  const std::string task = app.get_subcommands().front()->get_name();
  return statecap::run_config_file(config_path, task, out_dir, seed);
}
