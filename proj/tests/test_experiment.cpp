#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "llt/common.hpp"
#include "llt/experiment.hpp"

using namespace llt;

namespace {

const Artifact& find(const RunResult& r, const std::string& name) {
  for (const auto& a : r.files)
    if (a.name == name) return a;
  throw std::runtime_error("missing artifact " + name);
}

int lines(const std::string& s) { return int(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("numbers and csv tables") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-2.5e-300) == "-2.5e-300");
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-1.0 / 0.0) == "-inf");

  CsvTable empty({"a", "b"});
  CHECK(empty.str() == "a,b\n");
  CsvTable t({"k", "v"});
  t.add_row({"1", "0.5"});
  t.add_row({"2", ""});
  CHECK(t.str() == "k,v\n1,0.5\n2,\n");
  CHECK_THROWS_AS(t.add_row({"1"}), Error);
  const Json j = t.to_json();
  CHECK(j[0]["v"].get<double>() == 0.5);
  CHECK(j[1]["v"].is_null());
}

TEST_CASE("config hash ignores key order") {
  const Json a = Json::parse(R"({"command":"verify","suite":"dp","seed":3})");
  const Json b = Json::parse(R"({"seed":3,"suite":"dp","command":"verify"})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(Json::parse(R"({"command":"verify","suite":"dp","seed":4})")));
}

TEST_CASE("schema violations are input errors") {
  CHECK_THROWS_AS(execute(Json::parse(R"({"command":"nope"})")), InputError);
  CHECK_THROWS_AS(execute(Json::parse(R"({"command":"prox","model":{"kind":"gaussian"},"extra":1})")), InputError);
  CHECK_THROWS_AS(execute(Json::parse(R"({"command":"prox","model":{"kind":"cauchy"}})")), InputError);
  CHECK_THROWS_AS(execute(Json::parse(R"({"command":"prox","model":{"kind":"gaussian","dim":"two"}})")), InputError);
  CHECK_THROWS_AS(execute(Json::parse(R"({"command":"localize","model":{"kind":"gaussian"}})")), InputError);
  CHECK_THROWS_AS(execute(Json::parse(R"({"command":"verify","suite":"gaussian","seed":-1})")), InputError);
  CHECK_THROWS_AS(execute(Json::parse(R"({"command":"verify","suite":"everything"})")), InputError);
  CHECK_THROWS_AS(execute(Json::parse(R"({"command":"dp-plan","instance":{"n":10,"epsilon":2,"delta":0.1,"d":2}})")),
                  InputError);
  RunOptions fmt;
  fmt.format = "xml";
  CHECK_THROWS_AS(execute(Json::parse(R"({"command":"verify","suite":"dp"})"), fmt), InputError);
}

TEST_CASE("prox chain output has one row per iteration and is reproducible") {
  const Json cfg = Json::parse(R"({"command":"prox","model":{"kind":"laplace-noise"},"tau":2,"iterations":3})");
  RunOptions opts;
  opts.seed = 11;
  const auto a = execute(cfg, opts), b = execute(cfg, opts);
  const std::string csv = find(a, "chain.csv").content;
  CHECK(lines(csv) == 4);
  CHECK(csv.rfind("iteration,chi2,kl,accept_rate\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv == find(b, "chain.csv").content);
  CHECK(find(a, "summary.json").content == find(b, "summary.json").content);
  CHECK(a.summary["seed"] == 11);
  CHECK(a.summary["version"] == kToolkitVersion);

  RunOptions other = opts;
  other.seed = 12;
  CHECK(execute(cfg, other).summary["final"] != a.summary["final"]);

  // Gaussian chains carry the exact divergences.
  const auto g = execute(Json::parse(
      R"({"command":"prox","model":{"kind":"gaussian","dim":2},"iterations":2,"init":{"mean":[1,0],"cov":[[1,0],[0,1]]}})"));
  const std::string gcsv = find(g, "chain.csv").content;
  CHECK(gcsv.find("1,0.") != std::string::npos);
}

TEST_CASE("replicas and formats") {
  RunOptions opts;
  opts.replicas = 3;
  opts.format = "json";
  const auto r = execute(Json::parse(R"({"command":"localize","model":{"kind":"gaussian","dim":2},"time":4})"), opts);
  CHECK(r.files.size() == 4);
  const Json traj = Json::parse(find(r, "trajectory_2.json").content);
  CHECK(traj.size() == 5);
  CHECK(traj[4]["step"] == 4);
  CHECK(r.summary["final"].size() == 3);
}

TEST_CASE("gibbs, llt and dp commands") {
  const auto g = execute(Json::parse(R"({"command":"gibbs","matrix":[[0.5,0],[0,0.5]]})"));
  CHECK(g.summary["lambda2"].get<double>() == doctest::Approx(1.0));
  CHECK(std::abs(g.summary["gap"].get<double>()) < 1e-12);

  const auto e = execute(Json::parse(
      R"({"command":"llt-eval","potential":{"kind":"gaussian","dim":1,"params":{"mean":[0],"cov":[[1]]}},"points":[[1],[2]]})"));
  const std::string csv = find(e, "llt_eval.csv").content;
  CHECK(csv.rfind("point,x0,value,grad0,hess00\n", 0) == 0);
  CHECK(csv.find("\n0,1,0.5,1,1\n") != std::string::npos);

  const auto p = execute(Json::parse(R"({"command":"dp-plan","instance":{"n":1000,"epsilon":1,"delta":1e-6,"d":10},
                                          "constants":{"theta_value":1}})"));
  CHECK(p.summary["k"].get<double>() == doctest::Approx(617.3).epsilon(1e-4));
  CHECK(p.summary["surrogate"].size() == 5);

  RunOptions two;
  two.replicas = 2;
  const auto t = execute(
      Json::parse(R"({"command":"dp-toy","instance":{"n":50,"epsilon":1,"delta":1e-6,"d":2},"grid_nodes":24,"iterations":2})"),
      two);
  CHECK(lines(find(t, "toy.csv").content) == 3);
}

TEST_CASE("artifacts are written all at once") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "llt_artifacts_test";
  fs::remove_all(dir);
  write_artifacts(dir.string(), {{"a.csv", "x\n1\n"}, {"b.json", "{}\n"}});
  std::ifstream is(dir / "a.csv");
  std::stringstream ss;
  ss << is.rdbuf();
  CHECK(ss.str() == "x\n1\n");
  CHECK(!fs::exists(dir / "a.csv.tmp"));
  fs::remove_all(dir);

  ::setenv("LLT_OUT_DIR", "/tmp/from-env", 1);
  CHECK(resolve_out_dir(std::nullopt, Json::object()) == "/tmp/from-env");
  CHECK(resolve_out_dir(std::string("flag"), Json::object()) == "flag");
  ::unsetenv("LLT_OUT_DIR");
  CHECK(resolve_out_dir(std::nullopt, Json{{"out", "cfg"}}) == "cfg");
  CHECK(resolve_out_dir(std::nullopt, Json::object()) == "lltctl-out");
}

TEST_CASE("verify runs a suite") {
  const auto v = execute(Json::parse(R"({"command":"verify","suite":"appendix"})"));
  CHECK(v.exit_code == 0);
  CHECK(v.summary["criteria"].size() == 2);
  CHECK(v.summary["criteria"][1]["name"] == "quartic_counterexample");
  CHECK(v.console.find("criterion 9 quartic_counterexample: PASS") != std::string::npos);
}
