#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "statecap/errors.hpp"
#include "statecap/io.hpp"

using namespace statecap;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "task": "second-order",
    "channel": {
      "states": ["good", "bad"],
      "input": ["0", "1"],
      "output": ["0", "1"],
      "matrices": [
        [[0.99, 0.01], [0.01, 0.99]],
        [[0.89, 0.11], [0.11, 0.89]]
      ]
    },
    "process": {
      "model": "markov",
      "kernel": [[0.9, 0.1], [0.2, 0.8]]
    },
    "parameters": {
      "eps": 0.1,
      "beta": 0.5,
      "n_grid": [128, 256],
      "mode": "exact",
      "seed": 7
    }
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("statecap_io_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing round-trips and validates ranges") {
  json doc = base_config();
  ExperimentConfig cfg = parse_config(doc);
  CHECK(cfg.task == "second-order");
  CHECK(cfg.channel.state_count() == 2);
  CHECK(cfg.process.model == StateModel::Markov);
  CHECK(cfg.config_hash != 0);

  SUBCASE("eps outside (0,1) is a schema error, caught before compute") {
    doc["parameters"]["eps"] = 1.5;
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
    doc["parameters"]["eps"] = 0.0;
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
  }
  SUBCASE("missing channel block") {
    doc.erase("channel");
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
  }
  SUBCASE("non-stochastic matrix") {
    doc["channel"]["matrices"][0][0] = {0.7, 0.7};
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
  }
  SUBCASE("process dimension mismatch") {
    doc["process"] = {{"model", "iid"}, {"dist", {0.2, 0.3, 0.5}}};
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
  }
  SUBCASE("unknown task") {
    doc["task"] = "third-order";
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
  }
  SUBCASE("subcommand conflicting with task field") {
    CHECK_THROWS_AS(parse_config(doc, "first-order"), SchemaError);
  }
  SUBCASE("subcommand override supplies the task") {
    doc.erase("task");
    ExperimentConfig c2 = parse_config(doc, "second-order");
    CHECK(c2.task == "second-order");
  }
}

TEST_CASE("runs are deterministic: same config and seed give identical bytes") {
  TempDir a("detA"), b("detB");
  ExperimentConfig cfg = parse_config(base_config());
  run(cfg, a.path.string());
  run(cfg, b.path.string());
  CHECK(slurp(a.path / "second-order.json") ==
        slurp(b.path / "second-order.json"));
  CHECK(slurp(a.path / "second-order.csv") ==
        slurp(b.path / "second-order.csv"));
  CHECK(!slurp(a.path / "second-order.json").empty());
}

TEST_CASE("two-state markov second-order run emits lambda and its variance split") {
  TempDir dir("ge");
  ExperimentConfig cfg = parse_config(base_config());
  json out = run(cfg, dir.path.string());
  REQUIRE(out.contains("lambda_bits"));
  CHECK(out["lambda_bits"].get<double>() < 0.0);
  REQUIRE(out.contains("decomposition_bits2"));
  const json& dec = out["decomposition_bits2"];
  REQUIRE(dec.contains("V(pi)"));
  REQUIRE(dec.contains("V**(M)"));
  CHECK(dec["V(pi)"].get<double>() > 0.0);
  CHECK(dec["V**(M)"].get<double>() > 0.0);
  // the measured dispersion converges to the sum of the split; at the
  // moderate n in this config it is already within a few percent
  CHECK(out["dispersion_bits2"].get<double>() ==
        doctest::Approx(dec["V(pi)"].get<double>() +
                        dec["V**(M)"].get<double>())
            .epsilon(0.05));

  std::string csv = slurp(dir.path / "second-order.csv");
  CHECK(csv.rfind("# config_hash=", 0) == 0);
  CHECK(csv.find("units=bits") != std::string::npos);
  CHECK(csv.find("n,lambda_bits") != std::string::npos);

  // the on-disk JSON parses back to the in-memory result
  json reloaded = json::parse(slurp(dir.path / "second-order.json"));
  CHECK(reloaded["lambda_bits"].get<double>() ==
        out["lambda_bits"].get<double>());
  CHECK(reloaded["config_hash"] == out["config_hash"]);
}

TEST_CASE("run_config_file maps error classes to exit codes") {
  TempDir dir("codes");
  json doc = base_config();
  auto write_cfg = [&](const json& j, const char* name) {
    std::ofstream f(dir.path / name);
    f << j.dump(2);
    return (dir.path / name).string();
  };
  CHECK(run_config_file(write_cfg(doc, "ok.json"), "", dir.path.string()) ==
        0);
  doc["parameters"]["eps"] = 1.5;
  CHECK(run_config_file(write_cfg(doc, "bad.json"), "", dir.path.string()) ==
        2);
  CHECK(run_config_file((dir.path / "missing.json").string(), "",
                        dir.path.string()) == 2);
  // audit needs a per-letter state law; the two-point mixture has none,
  // so the task itself fails -> compute error
  json doc2 = base_config();
  doc2["task"] = "audit";
  doc2["process"] = {{"model", "mixed"}, {"dist", {0.3, 0.7}}};
  doc2["parameters"] = {{"n_grid", {64, 128}}, {"mode", "exact"}};
  CHECK(run_config_file(write_cfg(doc2, "audit.json"), "",
                        dir.path.string()) == 3);
}

TEST_CASE("pinned dump writes sorted keys and tagged non-finite floats") {
  json j;
  j["b"] = 1.5;
  j["a"] = std::numeric_limits<double>::infinity();
  j["c"] = -std::numeric_limits<double>::infinity();
  j["d"] = 3;  // integer stays an integer
  std::string s = dump_pinned(j);
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("\"b\"") < s.find("\"c\""));
  CHECK(s.find("\"inf\"") != std::string::npos);
  CHECK(s.find("\"-inf\"") != std::string::npos);
  CHECK(s.find("1.5") != std::string::npos);
  CHECK(s.find("\"d\": 3") != std::string::npos);
}
