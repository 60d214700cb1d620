#include "llt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "llt/acceptance.hpp"
#include "llt/dp_planner.hpp"
#include "llt/gibbs_discrete.hpp"
#include "llt/llt_engine.hpp"
#include "llt/localization.hpp"
#include "llt/prox_sampler.hpp"
#include "llt/rng.hpp"

namespace llt {
namespace {

const std::set<std::string> kCommon = {"command", "seed", "replicas", "out", "format"};

const std::map<std::string, std::set<std::string>> kFields = {
    {"llt-eval", {"potential", "points", "order"}},
    {"localize", {"model", "time", "trajectory", "grid_nodes"}},
    {"prox", {"model", "tau", "iterations", "x0", "init", "backend", "grid_nodes", "delta"}},
    {"gibbs", {"matrix", "csv", "functions"}},
    {"dp-plan", {"instance", "constants", "problem"}},
    {"dp-toy", {"instance", "constants", "iterations", "tau", "grid_nodes", "losses"}},
    {"verify", {"suite"}},
};

[[noreturn]] void schema(const std::string& msg) { throw InputError("config: " + msg); }

const Json& field(const Json& j, const char* key) {
  if (!j.contains(key)) schema(std::string("missing field '") + key + "'");
  return j.at(key);
}

double num(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) schema(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

long long integer(const Json& j, const char* key, long long lo, long long hi) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) schema(std::string("field '") + key + "' must be an integer");
  const long long x = v.get<long long>();
  if (x < lo || x > hi) schema(std::string("field '") + key + "' is out of range");
  return x;
}

std::string text(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) schema(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Vec vector_of(const Json& v, const char* what) {
  if (!v.is_array() || v.empty()) schema(std::string(what) + " must be a non-empty array of numbers");
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) schema(std::string(what) + " must contain numbers only");
    out(i) = v[i].get<double>();
  }
  return out;
}

Mat matrix_of(const Json& v, const char* what) {
  if (!v.is_array() || v.empty()) schema(std::string(what) + " must be a non-empty array of rows");
  const Vec first = vector_of(v[0], what);
  Mat m(v.size(), first.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec r = vector_of(v[i], what);
    if (r.size() != first.size()) schema(std::string(what) + " has rows of different lengths");
    m.row(i) = r.transpose();
  }
  return m;
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) schema(what + " must be an object");
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) schema(what + ": unknown field '" + k + "'");
}

// {"kind": "gaussian", "dim", "sigma"} | {"kind": "laplace-noise"} |
// {"kind": "custom", "target", "noise", "llt_weight"}
JointModel model_of(const Json& m, int tau) {
  check_keys(m, {"kind", "dim", "sigma", "target", "noise", "llt_weight"}, "model");
  const std::string kind = text(m, "kind");
  if (kind == "gaussian") {
    check_keys(m, {"kind", "dim", "sigma"}, "gaussian model");
    const int dim = m.contains("dim") ? int(integer(m, "dim", 1, 3)) : 1;
    const double sigma = m.contains("sigma") ? num(m, "sigma") : 1.0;
    if (!(sigma > 0)) schema("model sigma must be positive");
    return gaussian_model(dim, sigma, tau);
  }
  if (kind == "laplace-noise") {
    check_keys(m, {"kind"}, "laplace-noise model");
    return laplace_noise_model(tau);
  }
  if (kind == "custom") {
    const Potential target = Potential::from_json(field(m, "target"));
    const Potential noise = Potential::from_json(field(m, "noise"));
    if (target.dim() != noise.dim()) schema("model target and noise dimensions differ");
    const double w = m.contains("llt_weight") ? num(m, "llt_weight") : 0.0;
    if (w < 0) schema("model llt_weight must be >= 0");
    Target t{target, w, w > 0 ? std::make_shared<const LltView>(noise) : nullptr};
    return make_joint(std::move(t), noise, tau);
  }
  schema("unknown model kind '" + kind + "'");
}

std::vector<std::string> axis_names(const char* prefix, int d) {
  std::vector<std::string> v;
  for (int i = 0; i < d; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

void append(std::vector<std::string>& row, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) row.push_back(format_number(v(i)));
}

Json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Runs f(0..n-1) on up to hardware_concurrency threads. Each index owns its
// outputs, so results do not depend on scheduling. The first failure by index
// is rethrown.
template <class F>
void for_each_replica(int n, F&& f) {
  const int workers = std::min<int>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Context {
  Json config;
  std::string hash;
  std::uint64_t seed = 0;
  int replicas = 1;
  bool csv = true;
};

Json header(const Context& ctx) {
  Json j;
  j["version"] = kToolkitVersion;
  j["command"] = ctx.config["command"];
  j["config_hash"] = ctx.hash;
  j["seed"] = ctx.seed;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void emit_table(RunResult& out, const Context& ctx, const std::string& stem, const CsvTable& t) {
  if (ctx.csv) {
    out.files.push_back({stem + ".csv", t.str()});
  } else {
    out.files.push_back({stem + ".json", dump(t.to_json())});
  }
}

std::string replica_stem(const char* base, int r, int replicas) {
  return replicas == 1 ? std::string(base) : std::string(base) + "_" + std::to_string(r);
}

RunResult run_llt_eval(const Context& ctx) {
  const Json& c = ctx.config;
  const LltView view(Potential::from_json(field(c, "potential")));
  const int order = c.contains("order") ? int(integer(c, "order", 0, 2)) : 2;
  const Mat pts = matrix_of(field(c, "points"), "points");
  const int d = view.dim();
  if (pts.cols() != d) schema("points must have the dimension of the potential");

  std::vector<std::string> head = {"point"};
  for (auto& s : axis_names("x", d)) head.push_back(s);
  head.push_back("value");
  if (order >= 1)
    for (auto& s : axis_names("grad", d)) head.push_back(s);
  if (order >= 2)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) head.push_back("hess" + std::to_string(i) + std::to_string(j));
  CsvTable table(head);
  for (int r = 0; r < pts.rows(); ++r) {
    const Vec x = pts.row(r).transpose();
    const LltEval e = view.eval(x, order);
    std::vector<std::string> row = {std::to_string(r)};
    append(row, x);
    row.push_back(format_number(e.value));
    if (order >= 1) append(row, e.grad);
    if (order >= 2)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) row.push_back(format_number(e.hess(i, j)));
    table.add_row(std::move(row));
  }
  RunResult out;
  emit_table(out, ctx, "llt_eval", table);
  Json s = header(ctx);
  s["backend"] = std::string(backend_name(view.backend()));
  s["points"] = pts.rows();
  out.summary = s;
  return out;
}

RunResult run_localize(const Context& ctx) {
  const Json& c = ctx.config;
  const JointModel model = model_of(field(c, "model"), 1);
  const int time = int(integer(c, "time", 0, kMaxLocalizationTime));
  const bool traj = c.contains("trajectory") ? field(c, "trajectory").get<bool>() : true;
  BackwardOptions bo;
  if (c.contains("grid_nodes")) bo.grid_nodes = int(integer(c, "grid_nodes", 8, 4096));
  const int d = model.dim();

  std::vector<Localizer::Run> runs(ctx.replicas);
  for_each_replica(ctx.replicas, [&](int r) {
    Rng rng = Rng(ctx.seed).split(r);
    Localizer loc(model, bo);
    runs[r] = loc.run(time, rng, traj);
  });

  RunResult out;
  Json finals = Json::array();
  for (int r = 0; r < ctx.replicas; ++r) {
    if (traj) {
      std::vector<std::string> head = {"step"};
      for (auto& s : axis_names("y", d)) head.push_back(s);
      for (auto& s : axis_names("z", d)) head.push_back(s);
      CsvTable t(head);
      const auto& run = runs[r];
      for (std::size_t k = 0; k <= run.ys.size(); ++k) {
        std::vector<std::string> row = {std::to_string(k)};
        append(row, k < run.ys.size() ? run.ys[k] : run.y);
        append(row, k < run.zs.size() ? run.zs[k] : run.x);
        t.add_row(std::move(row));
      }
      emit_table(out, ctx, replica_stem("trajectory", r, ctx.replicas), t);
    }
    finals.push_back({{"replica", r}, {"y", vec_json(runs[r].y)}, {"x", vec_json(runs[r].x)}});
  }
  Json s = header(ctx);
  s["time"] = time;
  s["replicas"] = ctx.replicas;
  s["final"] = finals;
  out.summary = s;
  return out;
}

RunResult run_prox(const Context& ctx) {
  const Json& c = ctx.config;
  const int tau = c.contains("tau") ? int(integer(c, "tau", 1, 1'000'000)) : 1;
  ProxConfig pc{model_of(field(c, "model"), tau), 10, Vec(), std::nullopt, std::nullopt, BackwardOptions{}, 0.0};
  const int d = pc.model.dim();
  pc.iterations = c.contains("iterations") ? int(integer(c, "iterations", 1, 1'000'000)) : 10;
  pc.x0 = c.contains("x0") ? vector_of(c["x0"], "x0") : Vec::Zero(d);
  if (c.contains("init")) {
    const Json& ini = c["init"];
    check_keys(ini, {"mean", "cov"}, "init");
    pc.init = GaussianLaw{vector_of(field(ini, "mean"), "init mean"), matrix_of(field(ini, "cov"), "init cov")};
  }
  if (c.contains("backend")) pc.backend = parse_backward(text(c, "backend"));
  if (c.contains("grid_nodes")) pc.backward.grid_nodes = int(integer(c, "grid_nodes", 8, 4096));
  if (c.contains("delta")) {
    pc.backward.delta = num(c, "delta");
    if (!(pc.backward.delta > 0 && pc.backward.delta < 1)) schema("delta must lie in (0, 1)");
  }
  pc.validate();

  std::vector<ChainStats> stats(ctx.replicas);
  for_each_replica(ctx.replicas, [&](int r) {
    Rng rng = Rng(ctx.seed).split(r);
    stats[r] = ProxChain(pc).run(rng);
  });

  RunResult out;
  Json finals = Json::array();
  for (int r = 0; r < ctx.replicas; ++r) {
    const auto& st = stats[r];
    CsvTable t({"iteration", "chi2", "kl", "accept_rate"});
    for (int k = 1; k <= pc.iterations; ++k) {
      const bool exact = std::size_t(k) < st.chi2.size();
      t.add_row({std::to_string(k), exact ? format_number(st.chi2[k]) : "", exact ? format_number(st.kl[k]) : "",
                 format_number(st.accept_rate[k - 1])});
    }
    emit_table(out, ctx, replica_stem("chain", r, ctx.replicas), t);
    finals.push_back({{"replica", r},
                      {"x", vec_json(st.xs.back())},
                      {"accept_rate", st.backward.accept_rate()},
                      {"oracle_calls", st.backward.oracle_calls},
                      {"radius_violations", st.backward.radius_violations}});
  }
  Json s = header(ctx);
  s["backend"] = std::string(backward_name(stats[0].backend));
  s["tau"] = tau;
  s["iterations"] = pc.iterations;
  s["replicas"] = ctx.replicas;
  s["final"] = finals;
  out.summary = s;
  return out;
}

RunResult run_gibbs(const Context& ctx) {
  const Json& c = ctx.config;
  if (c.contains("matrix") == c.contains("csv")) schema("gibbs needs exactly one of 'matrix' and 'csv'");
  const DiscreteJoint j =
      c.contains("csv") ? read_joint_csv(text(c, "csv")) : DiscreteJoint::from_matrix(matrix_of(c["matrix"], "matrix"));
  const int functions = c.contains("functions") ? int(integer(c, "functions", 1, 1'000'000)) : 1000;
  Json rep = header(ctx);
  const Json body = gibbs_report(j, ctx.seed, functions);
  for (const auto& [k, v] : body.items()) rep[k] = v;
  RunResult out;
  out.files.push_back({"gibbs_report.json", dump(rep)});
  out.console = dump(rep);
  out.summary = rep;
  return out;
}

DpInstance instance_of(const Json& c) { return DpInstance::from_json(field(c, "instance")); }
DpConstants constants_of(const Json& c) {
  return c.contains("constants") ? DpConstants::from_json(c["constants"]) : DpConstants{};
}

RunResult run_dp_plan(const Context& ctx) {
  const Json& c = ctx.config;
  const DpInstance inst = instance_of(c);
  const DpConstants k = constants_of(c);
  const std::string problem = c.contains("problem") ? text(c, "problem") : "erm";
  if (problem != "erm" && problem != "sco") schema("problem must be 'erm' or 'sco'");
  const DpPlan plan = problem == "erm" ? plan_erm(inst, k) : plan_sco(inst, k);
  Json rep = header(ctx);
  const Json body = plan.to_json(inst);
  for (const auto& [key, v] : body.items()) rep[key] = v;
  RunResult out;
  out.files.push_back({"plan.json", dump(rep)});
  out.console = dump(rep);
  out.summary = rep;
  return out;
}

RunResult run_dp_toy(const Context& ctx) {
  const Json& c = ctx.config;
  ToyConfig cfg;
  cfg.inst = instance_of(c);
  cfg.constants = constants_of(c);
  if (c.contains("iterations")) cfg.iterations = int(integer(c, "iterations", 1, 100000));
  if (c.contains("tau")) cfg.tau = int(integer(c, "tau", 1, 100000));
  if (c.contains("grid_nodes")) cfg.grid_nodes = int(integer(c, "grid_nodes", 8, 4096));
  std::optional<std::vector<Vec>> fixed;
  if (c.contains("losses")) {
    const Mat g = matrix_of(c["losses"], "losses");
    if (double(g.rows()) != cfg.inst.n) schema("losses must have n rows");
    fixed.emplace();
    for (int i = 0; i < g.rows(); ++i) fixed->push_back(g.row(i).transpose());
  } else if (cfg.inst.n > 1e6 || cfg.inst.n != std::floor(cfg.inst.n)) {
    schema("synthetic losses need an integer n <= 1e6");
  }

  std::vector<ToyResult> res(ctx.replicas);
  for_each_replica(ctx.replicas, [&](int r) {
    Rng rng(ctx.seed + r);
    const auto losses = fixed ? *fixed : synthetic_losses(int(cfg.inst.n), cfg.inst.d, cfg.inst.G, cfg.inst.p, rng);
    res[r] = run_toy_erm(cfg, losses, rng);
  });

  CsvTable t({"seed", "excess_risk", "accept_rate", "oracle_calls"});
  double mean = 0.0;
  for (int r = 0; r < ctx.replicas; ++r) {
    t.add_row({std::to_string(ctx.seed + r), format_number(res[r].excess_risk), format_number(res[r].accept_rate),
               std::to_string(res[r].oracle_calls)});
    mean += res[r].excess_risk / ctx.replicas;
  }
  RunResult out;
  emit_table(out, ctx, "toy", t);
  Json s = header(ctx);
  s["seeds"] = ctx.replicas;
  s["mean_excess_risk"] = mean;
  s["excess_risk_scale"] = excess_risk_scale(cfg.inst);
  s["plan"] = res[0].plan.to_json(cfg.inst);
  out.summary = s;
  return out;
}

RunResult run_verify(const Context& ctx) {
  const Suite suite = parse_suite(ctx.config.contains("suite") ? text(ctx.config, "suite") : "all");
  Json rep = header(ctx);
  rep["suite"] = std::string(suite_name(suite));
  Json list = Json::array();
  std::ostringstream console;
  bool all_ok = true;
  for (int i : suite_criteria(suite)) {
    const CheckReport r = run_criterion(i, ctx.seed);
    all_ok = all_ok && r.ok();
    Json jr = r.to_json();
    jr["criterion"] = i;
    list.push_back(jr);
    console << "criterion " << i << " " << r.name << ": " << (r.ok() ? "PASS" : "FAIL") << " (margin "
            << format_number(r.margin) << ")\n";
  }
  rep["criteria"] = list;
  rep["passed"] = all_ok;
  RunResult out;
  out.files.push_back({"verification_report.json", dump(rep)});
  out.console = console.str();
  out.summary = rep;
  out.exit_code = all_ok ? 0 : 1;
  return out;
}

}  // namespace

Json validate_config(const Json& config, const RunOptions& opts) {
  if (!config.is_object()) schema("top level must be an object");
  const std::string command = text(config, "command");
  const auto it = kFields.find(command);
  if (it == kFields.end()) schema("unknown command '" + command + "'");
  for (const auto& [k, _] : config.items())
    if (!kCommon.count(k) && !it->second.count(k)) schema("unknown field '" + k + "' for command '" + command + "'");

  Json eff = config;
  if (opts.seed) eff["seed"] = *opts.seed;
  if (opts.replicas) eff["replicas"] = *opts.replicas;
  if (opts.format) eff["format"] = *opts.format;
  if (eff.contains("seed") && !eff["seed"].is_number_unsigned() &&
      !(eff["seed"].is_number_integer() && eff["seed"].get<long long>() >= 0))
    schema("seed must be a non-negative integer");
  if (eff.contains("replicas")) integer(eff, "replicas", 1, 100000);
  if (eff.contains("format")) {
    const std::string f = text(eff, "format");
    if (f != "csv" && f != "json") schema("format must be 'csv' or 'json'");
  }
  if (eff.contains("out") && !eff["out"].is_string()) schema("out must be a string");
  return eff;
}

RunResult execute(const Json& config, const RunOptions& opts) {
  Context ctx;
  ctx.config = validate_config(config, opts);
  ctx.hash = config_hash(ctx.config);
  ctx.seed = ctx.config.contains("seed") ? ctx.config["seed"].get<std::uint64_t>() : 0;
  const std::string command = ctx.config["command"].get<std::string>();
  ctx.replicas = ctx.config.contains("replicas") ? ctx.config["replicas"].get<int>() : (command == "dp-toy" ? 20 : 1);
  ctx.csv = !ctx.config.contains("format") || ctx.config["format"] == "csv";

  RunResult out;
  if (command == "llt-eval") out = run_llt_eval(ctx);
  else if (command == "localize") out = run_localize(ctx);
  else if (command == "prox") out = run_prox(ctx);
  else if (command == "gibbs") out = run_gibbs(ctx);
  else if (command == "dp-plan") out = run_dp_plan(ctx);
  else if (command == "dp-toy") out = run_dp_toy(ctx);
  else out = run_verify(ctx);

  const bool has_summary = std::any_of(out.files.begin(), out.files.end(), [](const Artifact& a) {
    return a.name == "gibbs_report.json" || a.name == "plan.json" || a.name == "verification_report.json";
  });
  if (!has_summary) out.files.push_back({"summary.json", dump(out.summary)});
  return out;
}

int exit_status(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return 2;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return 2;
  return 3;
}

}  // namespace llt
