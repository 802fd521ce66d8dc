#include "statecap/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "statecap/errors.hpp"
#include "statecap/first_order.hpp"
#include "statecap/numerics.hpp"
#include "statecap/oneshot_bounds.hpp"
#include "statecap/second_order.hpp"

namespace statecap {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& msg) {
  throw SchemaError("config schema: " + msg);
}

const json& need(const json& j, const char* key, const char* ctx) {
  if (!j.contains(key))
    schema_fail(std::string(ctx) + ": missing field '" + key + "'");
  return j.at(key);
}

std::vector<double> as_vector(const json& j, const char* ctx) {
  if (!j.is_array()) schema_fail(std::string(ctx) + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) schema_fail(std::string(ctx) + " must be numeric");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> as_matrix(const json& j, const char* ctx) {
  if (!j.is_array()) schema_fail(std::string(ctx) + " must be a matrix");
  std::vector<std::vector<double>> out;
  for (const auto& row : j) out.push_back(as_vector(row, ctx));
  return out;
}

Alphabet as_alphabet(const json& j, const char* ctx) {
  if (!j.is_array()) schema_fail(std::string(ctx) + " must be a label array");
  Alphabet a;
  for (const auto& v : j) {
    if (!v.is_string()) schema_fail(std::string(ctx) + " labels are strings");
    a.labels.push_back(v.get<std::string>());
  }
  return a;
}

StateChannel parse_channel(const json& j) {
  Alphabet states = as_alphabet(need(j, "states", "channel"), "states");
  Alphabet in = as_alphabet(need(j, "input", "channel"), "input");
  Alphabet out = as_alphabet(need(j, "output", "channel"), "output");
  const json& mats = need(j, "matrices", "channel");
  if (!mats.is_array() || mats.size() != states.labels.size())
    schema_fail("channel.matrices needs one matrix per state");
  std::vector<Dmc> dmcs;
  for (const auto& m : mats)
    dmcs.push_back(Dmc{in, out, as_matrix(m, "channel.matrices")});
  try {
    double floor = j.value("dispersion_floor", 1e-12);
    return build_state_channel(states, dmcs, 1e-10, floor);
  } catch (const std::exception& e) {
    schema_fail(std::string("channel rejected: ") + e.what());
  }
}

StateProcess parse_process(const json& j, int state_count) {
  std::string model = need(j, "model", "process").get<std::string>();
  try {
    StateProcess proc;
    if (model == "mixed") {
      proc = StateProcess::mixed(as_vector(need(j, "dist", "process"),
                                           "process.dist"));
    } else if (model == "iid") {
      proc = StateProcess::iid(as_vector(need(j, "dist", "process"),
                                         "process.dist"));
    } else if (model == "block_iid") {
      proc = StateProcess::block_iid(
          as_vector(need(j, "dist", "process"), "process.dist"),
          need(j, "nu", "process").get<double>());
    } else if (model == "markov") {
      auto kernel = as_matrix(need(j, "kernel", "process"), "process.kernel");
      std::vector<double> init;
      if (j.contains("init")) {
        init = as_vector(j.at("init"), "process.init");
      } else {
        init = stationary_distribution(kernel);
      }
      proc = StateProcess::markov(kernel, init);
    } else if (model == "alternating") {
      proc = StateProcess::alternating(need(j, "sa", "process").get<int>(),
                                       need(j, "sb", "process").get<int>(),
                                       state_count);
    } else {
      schema_fail("unknown process model '" + model + "'");
    }
    if (proc.state_count() > 0 && proc.state_count() != state_count &&
        proc.model != StateModel::Alternating)
      schema_fail("process dimension does not match the channel state count");
    return proc;
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    schema_fail(std::string("process rejected: ") + e.what());
  }
}

std::vector<int> as_n_grid(const json& j) {
  if (!j.is_array() || j.empty()) schema_fail("n_grid must be nonempty");
  std::vector<int> grid;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<int>() < 1)
      schema_fail("n_grid entries must be positive integers");
    grid.push_back(v.get<int>());
  }
  return grid;
}

double checked_eps(const json& params) {
  double eps = need(params, "eps", "parameters").get<double>();
  if (!(eps > 0.0) || !(eps < 1.0))
    schema_fail("eps must lie strictly between 0 and 1");
  return eps;
}

TypeMode parse_mode(const json& params) {
  std::string mode = params.value("mode", "exact");
  if (mode == "exact") return TypeMode::Exact;
  if (mode == "mc") return TypeMode::Mc;
  schema_fail("mode must be 'exact' or 'mc'");
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s(buf);
  // Pin a float-looking form so ints and floats don't collide.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void dump_rec(const json& j, std::string& out, int indent, int depth) {
  auto pad = [&](int d) { out.append(static_cast<size_t>(d) * indent, ' '); };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        pad(depth + 1);
        out += json(it.key()).dump();
        out += ": ";
        dump_rec(it.value(), out, indent, depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        pad(depth + 1);
        dump_rec(v, out, indent, depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "]";
      return;
    }
    case json::value_t::number_float:
      out += fmt_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

json opt_num(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw TaskError("cannot open output file " + path.string());
  f << text;
  if (!f) throw TaskError("failed writing " + path.string());
}

std::string csv_header(std::uint64_t hash, const std::string& columns) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
  return "# config_hash=" + std::string(buf) + " units=bits\n" + columns +
         "\n";
}

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- task runners ---------------------------------------------------------

json run_first_order(const ExperimentConfig& cfg, std::uint64_t seed,
                     std::string& csv) {
  const json& p = cfg.parameters;
  double eps = checked_eps(p);
  auto grid = as_n_grid(need(p, "n_grid", "parameters"));
  TypeMode mode = parse_mode(p);
  long long budget = p.value("budget", 100000LL);
  auto rep = eps_capacity(cfg.process, cfg.channel, eps, grid, mode, budget,
                          seed);
  json out;
  out["task"] = "first-order";
  out["units"] = "bits";
  out["eps"] = rep.eps;
  out["eps_capacity_bits"] = rep.eps_capacity;
  out["eps_capacity_closed_bits"] = opt_num(rep.eps_capacity_closed);
  out["optimistic_capacity_bits"] = rep.optimistic;
  out["optimistic_capacity_closed_bits"] = opt_num(rep.optimistic_closed);
  out["n_grid"] = rep.n_grid;
  json sc;
  sc["verdict"] = rep.strong_converse.verdict;
  sc["cov_term_bits2"] = rep.strong_converse.cov_term;
  sc["cov_decay_slope"] = rep.strong_converse.cov_decay_slope;
  out["strong_converse"] = sc;

  std::ostringstream rows;
  rows << csv_header(cfg.config_hash, "n,capacity_bits,cdf");
  for (int n : grid) {
    auto curve = j_cdf(cfg.process, cfg.channel, n, mode, budget, seed);
    for (const auto& [r, f] : curve.points)
      rows << n << ',' << csv_num(r) << ',' << csv_num(f) << "\n";
  }
  csv = rows.str();
  return out;
}

json run_second_order(const ExperimentConfig& cfg, std::uint64_t seed,
                      std::string& csv) {
  const json& p = cfg.parameters;
  double eps = checked_eps(p);
  double beta = p.value("beta", 0.5);
  auto grid = as_n_grid(need(p, "n_grid", "parameters"));
  TypeMode mode = parse_mode(p);
  long long budget = p.value("budget", 100000LL);
  double tol = p.value("tol", 1e-6);
  auto res =
      lambda_solve(eps, beta, cfg.process, cfg.channel, grid, tol, mode,
                   budget, seed);
  json out;
  out["task"] = "second-order";
  out["units"] = "bits";
  out["eps"] = res.eps;
  out["beta"] = res.beta;
  out["lambda_bits"] = res.lambda;
  out["lambda_closed_bits"] = opt_num(res.lambda_closed);
  out["dispersion_bits2"] = opt_num(res.dispersion);
  out["decomposition_bits2"] = res.decomposition;
  out["method"] = res.method;
  out["c_eps_source"] = res.c_eps_source;
  out["n_grid"] = res.n_grid;
  out["lambda_by_n_bits"] = res.lambda_by_n;
  out["diagnostics"] = res.diagnostics;

  std::ostringstream rows;
  rows << csv_header(cfg.config_hash, "n,lambda_bits");
  for (size_t i = 0; i < grid.size(); ++i)
    rows << grid[i] << ',' << csv_num(res.lambda_by_n[i]) << "\n";
  csv = rows.str();
  return out;
}

json run_bounds(const ExperimentConfig& cfg, std::uint64_t seed,
                std::string& csv) {
  const json& p = cfg.parameters;
  double eps = checked_eps(p);
  int n = need(p, "n", "parameters").get<int>();
  if (n < 1) schema_fail("n must be >= 1");
  double delta = p.value("delta", -1.0);
  double eta = p.value("eta", 1.0);
  TypeMode mode = parse_mode(p);
  long long budget = p.value("budget", 100000LL);

  std::vector<double> log_m_grid;
  if (p.contains("log_m_grid")) {
    log_m_grid = as_vector(p.at("log_m_grid"), "parameters.log_m_grid");
  } else {
    double cap_hi = 0.0;
    for (double c : cfg.channel.capacities()) cap_hi = std::max(cap_hi, c);
    for (int i = 0; i <= 40; ++i) log_m_grid.push_back(n * cap_hi * i / 40.0);
  }

  // Uniform input policy per state unless the config provides one.
  std::vector<std::vector<double>> policy;
  if (p.contains("input_policy")) {
    policy = as_matrix(p.at("input_policy"), "parameters.input_policy");
  } else {
    for (int s = 0; s < cfg.channel.state_count(); ++s) {
      int nx = cfg.channel.channels[s].input.size();
      policy.emplace_back(nx, 1.0 / nx);
    }
  }

  double conv = spectrum_converse_logM(cfg.channel, cfg.process, n, eps,
                                       delta);
  json rows = json::array();
  std::ostringstream lines;
  lines << csv_header(cfg.config_hash,
                      "log_m_bits,achievability_eps,direct_bound_rhs,"
                      "converse_log_m_bits");
  for (double log_m : log_m_grid) {
    auto fr = feinstein_rhs(cfg.channel, cfg.process, policy, n, log_m, eta,
                            mode, budget, seed);
    double p3 = cfg.channel.v_min > 0.0
                    ? direct_bound_rhs(cfg.channel, cfg.process, n, log_m / n,
                                       mode, budget, seed)
                    : std::nan("");
    json row;
    row["log_m_bits"] = log_m;
    row["achievability_eps"] = fr.rhs;
    row["direct_bound_rhs"] = p3;
    rows.push_back(row);
    lines << csv_num(log_m) << ',' << csv_num(fr.rhs) << ',' << csv_num(p3)
          << ',' << csv_num(conv) << "\n";
  }
  csv = lines.str();

  json out;
  out["task"] = "bounds";
  out["units"] = "bits";
  out["n"] = n;
  out["eps"] = eps;
  out["eta_bits"] = eta;
  out["converse_log_m_bits"] = conv;
  out["rows"] = rows;
  return out;
}

json run_audit(const ExperimentConfig& cfg, std::uint64_t seed,
               std::string& csv) {
  const json& p = cfg.parameters;
  auto grid = as_n_grid(need(p, "n_grid", "parameters"));
  TypeMode mode = parse_mode(p);
  long long budget = p.value("budget", 100000LL);
  auto audit = approximation_gap_audit(cfg.process, cfg.channel, grid, mode,
                                       budget, seed);
  json out;
  out["task"] = "audit";
  out["units"] = "bits";
  out["slope1"] = audit.slope1;
  out["slope2"] = audit.slope2;
  json rows = json::array();
  std::ostringstream lines;
  lines << csv_header(cfg.config_hash, "n,gap1,gap2");
  for (const auto& row : audit.rows) {
    json r;
    r["n"] = row.n;
    r["gap1"] = row.gap1;
    r["gap2"] = row.gap2;
    rows.push_back(r);
    lines << row.n << ',' << csv_num(row.gap1) << ',' << csv_num(row.gap2)
          << "\n";
  }
  out["rows"] = rows;
  csv = lines.str();
  return out;
}

json run_constants(const ExperimentConfig& cfg, std::string& csv) {
  json out;
  out["task"] = "constants";
  out["units"] = "bits, bits^2, bits^3";
  json per_state = json::array();
  auto caps = cfg.channel.capacities();
  for (int s = 0; s < cfg.channel.state_count(); ++s) {
    const auto& sum = cfg.channel.summaries[s];
    json e;
    e["state"] = cfg.channel.states.labels[s];
    e["capacity_bits"] = sum.capacity_bits;
    e["v_cond_bits2"] = sum.v_cond;
    e["v_uncond_bits2"] = sum.v_uncond;
    e["third_moment_bits3"] = sum.third_moment;
    e["caid"] = sum.caid.probs;
    e["caid_unique"] = sum.caid_unique;
    e["duality_gap_bits"] = sum.duality_gap;
    per_state.push_back(e);
  }
  out["per_state"] = per_state;
  int ny = cfg.channel.channels[0].output.size();
  out["v_plus_bits2"] = num::v_plus_nats(ny) / (num::kLn2 * num::kLn2);
  out["l_plus_bits3"] =
      num::l_plus_nats(ny) / (num::kLn2 * num::kLn2 * num::kLn2);
  out["berry_esseen_b"] = cfg.channel.be_constant;
  out["v_min_bits2"] = cfg.channel.v_min;

  json proc;
  switch (cfg.process.model) {
    case StateModel::Iid:
    case StateModel::BlockIid:
    case StateModel::Mixed:
      proc["v_star_bits2"] = v_star(cfg.process.dist, caps);
      break;
    case StateModel::Markov: {
      auto pi = stationary_distribution(cfg.process.kernel);
      proc["stationary"] = pi;
      proc["v_star_bits2"] = v_star(pi, caps);
      proc["v_double_star_bits2"] = v_double_star(cfg.process.kernel, caps);
      break;
    }
    case StateModel::Alternating: {
      double lo = std::min(caps[cfg.process.sa], caps[cfg.process.sb]);
      double hi = std::max(caps[cfg.process.sa], caps[cfg.process.sb]);
      proc["eps_capacity_bits"] = (2.0 * lo + hi) / 3.0;
      break;
    }
  }
  out["process"] = proc;

  std::ostringstream lines;
  lines << csv_header(cfg.config_hash,
                      "state,capacity_bits,v_cond_bits2,third_moment_bits3");
  for (int s = 0; s < cfg.channel.state_count(); ++s) {
    const auto& sum = cfg.channel.summaries[s];
    lines << cfg.channel.states.labels[s] << ','
          << csv_num(sum.capacity_bits) << ',' << csv_num(sum.v_cond) << ','
          << csv_num(sum.third_moment) << "\n";
  }
  csv = lines.str();
  return out;
}

}  // namespace

std::string dump_pinned(const json& j, int indent) {
  std::string out;
  dump_rec(j, out, indent, 0);
  out += "\n";
  return out;
}

ExperimentConfig parse_config(const json& doc,
                              const std::string& task_override) {
  if (!doc.is_object()) schema_fail("top level must be an object");
  ExperimentConfig cfg;
  cfg.channel = parse_channel(need(doc, "channel", "config"));
  cfg.process = parse_process(need(doc, "process", "config"),
                              cfg.channel.state_count());
  std::string doc_task = doc.value("task", "");
  if (!task_override.empty() && !doc_task.empty() &&
      task_override != doc_task)
    schema_fail("task '" + doc_task + "' in the config conflicts with the '" +
                task_override + "' subcommand");
  cfg.task = !task_override.empty() ? task_override : doc_task;
  static const char* kTasks[] = {"first-order", "second-order", "bounds",
                                 "audit", "constants"};
  bool ok = false;
  for (const char* t : kTasks) ok = ok || cfg.task == t;
  if (!ok) schema_fail("unknown task '" + cfg.task + "'");
  cfg.parameters = doc.value("parameters", json::object());
  if (!cfg.parameters.is_object())
    schema_fail("parameters must be an object");
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    cfg.json_out = o.value("json", "");
    cfg.csv_out = o.value("csv", "");
  }
  cfg.config_hash = fnv1a(doc.dump());

  // Fail fast on parameter ranges before any compute.
  if (cfg.task == "first-order" || cfg.task == "second-order" ||
      cfg.task == "bounds")
    checked_eps(cfg.parameters);
  if (cfg.task != "constants") parse_mode(cfg.parameters);
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             const std::string& task_override) {
  std::ifstream f(path);
  if (!f) throw SchemaError("cannot open config file " + path);
  json doc;
  try {
    f >> doc;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc, task_override);
}

json run(const ExperimentConfig& config, const std::string& out_dir,
         std::optional<std::uint64_t> seed_override) {
  std::uint64_t seed = seed_override.value_or(
      config.parameters.value("seed", std::uint64_t{1}));
  json result;
  std::string csv;
  try {
    if (config.task == "first-order")
      result = run_first_order(config, seed, csv);
    else if (config.task == "second-order")
      result = run_second_order(config, seed, csv);
    else if (config.task == "bounds")
      result = run_bounds(config, seed, csv);
    else if (config.task == "audit")
      result = run_audit(config, seed, csv);
    else
      result = run_constants(config, csv);
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw TaskError(std::string("task '") + config.task + "' failed: " +
                    e.what());
  }

  char hash[64];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64, config.config_hash);
  result["config_hash"] = hash;
  result["seed"] = seed;

  std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::string json_name =
      config.json_out.empty() ? config.task + ".json" : config.json_out;
  write_file(dir / json_name, dump_pinned(result));
  if (!csv.empty()) {
    std::string csv_name =
        config.csv_out.empty() ? config.task + ".csv" : config.csv_out;
    write_file(dir / csv_name, csv);
  }
  return result;
}

int run_config_file(const std::string& config_path,
                    const std::string& task_override,
                    const std::string& out_dir,
                    std::optional<std::uint64_t> seed_override) {
  try {
    ExperimentConfig cfg = load_config(config_path, task_override);
    run(cfg, out_dir, seed_override);
    return 0;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "compute error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace statecap
