// lltctl: command-line driver. Every subcommand builds an experiment config
// (optionally starting from --config) and hands it to llt::execute.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "llt/common.hpp"
#include "llt/experiment.hpp"

namespace {

using llt::Json;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<std::string> format;
  std::optional<std::string> out;
};

Json base_config(const std::string& path, const char* command) {
  Json c = path.empty() ? Json::object() : llt::load_json_file(path);
  if (!c.is_object()) throw llt::InputError("config: top level must be an object");
  if (c.contains("command") && c["command"] != command)
    throw llt::InputError(std::string("config: command does not match the subcommand '") + command + "'");
  c["command"] = command;
  return c;
}

// "0.5,-1" -> [0.5, -1]
Json parse_point(const std::string& s) {
  Json p = Json::array();
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t end = s.find(',', pos);
    const std::string tok = s.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    try {
      std::size_t used = 0;
      p.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw llt::InputError("cannot parse point '" + s + "'");
    }
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return p;
}

struct ModelFlags {
  std::string kind;
  std::optional<int> dim;
  std::optional<double> sigma;

  void add(CLI::App* app) {
    app->add_option("--model", kind, "gaussian | laplace-noise");
    app->add_option("--dim", dim, "dimension of the gaussian model");
    app->add_option("--sigma", sigma, "standard deviation of the gaussian target");
  }
  void apply(Json& c) const {
    if (kind.empty()) return;
    Json m{{"kind", kind}};
    if (dim) m["dim"] = *dim;
    if (sigma) m["sigma"] = *sigma;
    c["model"] = m;
  }
};

int run_config(const Json& config, const Globals& g) {
  llt::RunOptions opts{g.seed, g.replicas, g.format};
  const llt::RunResult res = llt::execute(config, opts);
  const std::string dir = llt::resolve_out_dir(g.out, config);
  llt::write_artifacts(dir, res.files);
  if (!res.console.empty()) std::cout << res.console;
  std::cerr << "wrote " << res.files.size() << " file(s) to " << dir << "\n";
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Log-Laplace transform samplers and verification harness"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "base seed");
  app.add_option("--out", g.out, "output directory (default: LLT_OUT_DIR, then the config, then ./lltctl-out)");
  app.add_option("--replicas", g.replicas, "independent replicas / toy seeds");
  app.add_option("--format", g.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  std::optional<Json> config;
  std::string config_path;

  // llt eval
  auto* llt_cmd = app.add_subcommand("llt", "log-Laplace transform");
  llt_cmd->require_subcommand(1);
  auto* eval = llt_cmd->add_subcommand("eval", "evaluate psi and its derivatives");
  std::string potential_path;
  std::vector<std::string> points;
  std::optional<int> order;
  eval->add_option("--config", config_path, "experiment config");
  eval->add_option("--potential", potential_path, "potential JSON file");
  eval->add_option("--x", points, "evaluation point, comma separated (repeatable)");
  eval->add_option("--order", order, "0: value, 1: gradient, 2: Hessian");
  eval->callback([&] {
    Json c = base_config(config_path, "llt-eval");
    if (!potential_path.empty()) c["potential"] = llt::load_json_file(potential_path);
    if (!points.empty()) {
      c["points"] = Json::array();
      for (const auto& p : points) c["points"].push_back(parse_point(p));
    }
    if (order) c["order"] = *order;
    config = c;
  });

  // localize run
  auto* loc = app.add_subcommand("localize", "stochastic localization")->require_subcommand(1);
  auto* loc_run = loc->add_subcommand("run", "run the sequential localization process");
  ModelFlags loc_model;
  std::optional<int> loc_time;
  bool no_traj = false;
  loc_run->add_option("--config", config_path, "experiment config");
  loc_model.add(loc_run);
  loc_run->add_option("--time", loc_time, "final localization time");
  loc_run->add_flag("--no-trajectory", no_traj, "only write the summary");
  loc_run->callback([&] {
    Json c = base_config(config_path, "localize");
    loc_model.apply(c);
    if (loc_time) c["time"] = *loc_time;
    if (no_traj) c["trajectory"] = false;
    config = c;
  });

  // prox run
  auto* prox = app.add_subcommand("prox", "proximal sampler")->require_subcommand(1);
  auto* prox_run = prox->add_subcommand("run", "run the chain");
  ModelFlags prox_model;
  std::optional<int> prox_tau, prox_iter;
  std::string prox_backend;
  prox_run->add_option("--config", config_path, "experiment config");
  prox_model.add(prox_run);
  prox_run->add_option("--tau", prox_tau, "prox step");
  prox_run->add_option("--iterations", prox_iter, "chain length K");
  prox_run->add_option("--backend", prox_backend, "exact-gaussian | quadrature-1d | grid | rejection");
  prox_run->callback([&] {
    Json c = base_config(config_path, "prox");
    prox_model.apply(c);
    if (prox_tau) c["tau"] = *prox_tau;
    if (prox_iter) c["iterations"] = *prox_iter;
    if (!prox_backend.empty()) c["backend"] = prox_backend;
    config = c;
  });

  // gibbs analyze
  auto* gibbs = app.add_subcommand("gibbs", "discrete two-component Gibbs sampler")->require_subcommand(1);
  auto* analyze = gibbs->add_subcommand("analyze", "spectral report for a joint probability matrix");
  std::string csv_path;
  std::optional<int> functions;
  analyze->add_option("joint", csv_path, "CSV file with the joint matrix")->required();
  analyze->add_option("--functions", functions, "random test functions for the variance check");
  analyze->callback([&] {
    Json c{{"command", "gibbs"}, {"csv", csv_path}};
    if (functions) c["functions"] = *functions;
    config = c;
  });

  // dp plan / dp run-toy
  auto* dp = app.add_subcommand("dp", "private optimization schedules")->require_subcommand(1);
  auto* plan = dp->add_subcommand("plan", "compute the parameter schedule");
  std::string inst_path, const_path, problem;
  plan->add_option("--json", inst_path, "instance JSON file")->required();
  plan->add_option("--constants", const_path, "constants JSON file");
  plan->add_option("--problem", problem, "erm | sco");
  plan->callback([&] {
    Json c{{"command", "dp-plan"}, {"instance", llt::load_json_file(inst_path)}};
    if (!const_path.empty()) c["constants"] = llt::load_json_file(const_path);
    if (!problem.empty()) c["problem"] = problem;
    config = c;
  });
  auto* toy = dp->add_subcommand("run-toy", "toy private ERM run, one row per seed");
  std::string toy_inst, toy_const;
  std::optional<int> toy_iter, toy_grid, toy_tau;
  toy->add_option("--json", toy_inst, "instance JSON file (default: n=200, eps=1, delta=1e-6, d=2)");
  toy->add_option("--constants", toy_const, "constants JSON file");
  toy->add_option("--iterations", toy_iter, "chain length");
  toy->add_option("--grid-nodes", toy_grid, "grid nodes per axis");
  toy->add_option("--tau", toy_tau, "prox step");
  toy->callback([&] {
    Json inst = toy_inst.empty() ? Json{{"n", 200}, {"epsilon", 1.0}, {"delta", 1e-6}, {"d", 2}}
                                 : llt::load_json_file(toy_inst);
    Json c{{"command", "dp-toy"}, {"instance", inst}};
    if (!toy_const.empty()) c["constants"] = llt::load_json_file(toy_const);
    if (toy_iter) c["iterations"] = *toy_iter;
    if (toy_grid) c["grid_nodes"] = *toy_grid;
    if (toy_tau) c["tau"] = *toy_tau;
    config = c;
  });

  // verify
  auto* verify = app.add_subcommand("verify", "run acceptance checks");
  std::string suite = "all";
  verify->add_option("--suite", suite, "gaussian | localization | llt | discrete | appendix | dp | all");
  verify->callback([&] { config = Json{{"command", "verify"}, {"suite", suite}}; });

  // run <config>
  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string run_path;
  run->add_option("config", run_path, "config JSON file")->required();
  run->callback([&] { config = llt::load_json_file(run_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return llt::exit_status(e);
  }

  try {
    return run_config(*config, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return llt::exit_status(e);
  }
}
