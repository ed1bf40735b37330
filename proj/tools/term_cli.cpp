// term_cli: generators, solvers, sweeps and superquantile reports with file outputs.
//
//   term_cli solve         [data source] [--t T] [--tau TAU | --levels L0,L1,..]
//   term_cli sweep         [data source] [--t-grid T0,T1,..] [--taus TAU0,..]
//   term_cli superquantile [data source] [--a A0,..] [--t-grid ..]
//   term_cli experiment <name> [--t T] [--tau TAU] [--noise F] [--n N] [--seed S]
//
// Data source: at most one of --csv PATH, --scenario NAME, --toy (the default,
// 1-D points {0, 1, 4} with the point loss).
//
// Every run writes report.json (config echo, metrics, tilt schedules,
// artifacts) and timing.json into --out (or $TERM_OUT_DIR, or ./term_out).
// Exit status: 0 ok, 1 input error, 2 numerical failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "term/analysis.hpp"
#include "term/datasynth.hpp"
#include "term/error.hpp"
#include "term/experiments.hpp"
#include "term/numfmt.hpp"
#include "term/superquantile.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace term;

namespace {

struct Options {
  std::string command;
  std::string experiment;

  std::string out;
  std::uint64_t seed = 1;

  std::optional<double> t;
  std::optional<double> tau;
  std::string levels;
  std::string t_grid;
  std::string taus;
  std::string thresholds;
  double t_max = 100.0;
  double oracle_resolution = 1e-2;

  // data source
  std::string csv;
  std::string target = "target";
  std::string group_col;
  std::string supergroup_col;
  std::string scenario;
  bool toy = false;
  std::string loss;
  double l2 = -1.0;  // negative: per-source default
  bool save_data = false;

  // scenario knobs
  std::optional<std::size_t> n;
  std::size_t n_test = 0;
  std::size_t dim = 2;
  std::optional<double> noise;
  double imbalance = 1.0;
  double separation = 2.0;
  bool outlier_variance_five = false;
  std::size_t hammers = 2;
  std::size_t spammers = 8;
  std::size_t classes = 2;
  double minority_share = 0.2;
  double label_flip = 0.0;

  // solver
  std::string solver = "batch";
  std::string step_rule = "armijo";
  double step_size = 1.0;
  int max_iters = 5000;
  double grad_tol = 1e-8;
  std::string continuation = "auto";
  int continuation_iters = 0;
  std::size_t minibatch = 1;
  double smoothing = 0.1;
  int record_every = 1;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double v = 0.0;
    if (!parse_number(item, v) || !std::isfinite(v)) {
      throw InputError(flag + ": '" + item + "' is not a finite number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw InputError(flag + ": empty list");
  return out;
}

SolverConfig solver_config(const Options& o) {
  SolverConfig cfg;
  cfg.step_size = o.step_size;
  if (o.step_rule == "armijo") {
    cfg.step_rule = StepRule::Backtracking;
  } else if (o.step_rule == "constant") {
    cfg.step_rule = StepRule::Constant;
  } else {
    throw InputError("--step-rule must be armijo or constant, got '" + o.step_rule + "'");
  }
  cfg.max_iters = o.max_iters;
  cfg.grad_tol = o.grad_tol;
  if (o.continuation == "linear") {
    cfg.continuation = Continuation::Linear;
  } else if (o.continuation == "none") {
    cfg.continuation = Continuation::None;
  } else if (o.continuation != "auto") {
    throw InputError("--continuation must be auto, linear or none, got '" + o.continuation + "'");
  }
  cfg.continuation_iters = o.continuation_iters;
  cfg.minibatch_size = o.minibatch;
  cfg.smoothing = o.smoothing;
  cfg.seed = o.seed;
  cfg.record_every = o.record_every;
  if (o.solver == "stochastic") cfg.step_rule = StepRule::Constant;
  cfg.validate();
  return cfg;
}

struct Loaded {
  TabularDataset data;
  std::optional<TabularDataset> test;
  LossKind loss;
  double l2 = 0.0;
};

Loaded load_data(const Options& o) {
  const int sources = !o.csv.empty() + !o.scenario.empty() + o.toy;
  if (sources > 1) throw InputError("choose one data source: --csv, --scenario or --toy");

  Loaded out{{}, std::nullopt, PointDistanceLoss{}, 0.0};
  if (!o.csv.empty()) {
    CsvSchema schema;
    schema.target = o.target;
    if (!o.group_col.empty()) schema.group = o.group_col;
    if (!o.supergroup_col.empty()) schema.supergroup = o.supergroup_col;
    out.data = load_csv(o.csv, schema);
    out.loss = SquaredLoss{};
  } else if (!o.scenario.empty()) {
    ScenarioSpec spec;
    spec.scenario = parse_scenario(o.scenario);
    spec.n = o.n.value_or(100);
    spec.n_test = o.n_test;
    spec.dim = o.dim;
    spec.noise_fraction = o.noise.value_or(0.0);
    spec.imbalance_ratio = o.imbalance;
    spec.separation = o.separation;
    spec.outlier_variance_five = o.outlier_variance_five;
    spec.hammers = o.hammers;
    spec.spammers = o.spammers;
    spec.classes = o.classes;
    spec.minority_share = o.minority_share;
    spec.seed = o.seed;
    out.data = generate(spec);
    out.test = generate_test(spec);
    switch (spec.scenario) {
      case Scenario::PointEstimation2D: out.loss = PointDistanceLoss{}; break;
      case Scenario::LinearRegression: out.loss = SquaredLoss{}; break;
      case Scenario::LogisticBinary:
      case Scenario::Annotators:
        out.loss = LogisticLoss{};
        out.l2 = 1e-3;
        break;
      case Scenario::FairPcaTwoGroups: out.loss = PcaReconstructionLoss{1}; break;
    }
  } else {
    out.data.features = RowMatrix(3, 1);
    out.data.features << 0.0, 1.0, 4.0;
    out.data.targets.assign(3, 0.0);
    out.data.provenance.source = "toy:0,1,4";
  }
  if (o.label_flip > 0.0) out.data = inject_label_flip(out.data, o.label_flip, o.seed);
  if (!o.loss.empty()) out.loss = parse_loss_kind(o.loss);
  if (o.l2 >= 0.0) out.l2 = o.l2;
  return out;
}

// [t] flat; [t, tau] over groups; [t, t, tau] over supergroup/group; or --levels.
TiltTree build_tree(const Options& o, const EmpiricalProblem& problem) {
  const std::size_t units = problem.num_units();
  const auto& paths = problem.unit_paths();
  const std::size_t depth = paths.empty() ? 0 : paths.front().size();
  std::vector<double> levels;
  if (!o.levels.empty()) {
    if (o.t || o.tau) throw InputError("--levels cannot be combined with --t or --tau");
    levels = parse_list(o.levels, "--levels");
  } else {
    const double t = o.t.value_or(0.0);
    levels.assign(depth, t);
    levels.push_back(o.tau.value_or(depth == 0 ? t : 0.0));
    if (depth == 0 && o.tau) throw InputError("--tau needs grouped data (a group column)");
  }
  if (levels.size() == 1) return TiltTree::flat(units, levels[0]);
  if (levels.size() != depth + 1) {
    throw InputError("data has " + std::to_string(depth) + " group level(s); expected " +
                     std::to_string(depth + 1) + " tilts or a single one, got " +
                     std::to_string(levels.size()));
  }
  return TiltTree(levels, paths);
}

std::string continuation_name(Continuation c) {
  return c == Continuation::Linear ? "linear" : "none";
}

json schedule_json(const std::string& label, const std::vector<double>& levels,
                   Continuation c, int ramp) {
  json s;
  s["label"] = label;
  s["levels"] = levels;
  s["continuation"] = continuation_name(c);
  s["ramp_iters"] = ramp;
  json start = json::array();
  for (double t : levels) start.push_back(c == Continuation::Linear && t < 0.0 ? 0.0 : t);
  s["levels_at_iter_0"] = start;
  s["rule"] = ramp > 0 ? "negative levels use t*min(i/K,1), K = ramp_iters" : "constant";
  return s;
}

class Run {
 public:
  Run(const Options& o, fs::path dir) : opts_(o), dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }

  json& metrics() { return report_["metrics"]; }
  json& report() { return report_; }

  std::string write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name, std::ios::binary) << text;
    report_["artifacts"].push_back(name);
    return name;
  }

  void add_schedule(json s) { report_["tilt_schedule"].push_back(std::move(s)); }

  void finish(double seconds) {
    report_["artifacts"].push_back("report.json");
    report_["artifacts"].push_back("timing.json");
    std::ofstream(dir_ / "report.json", std::ios::binary) << report_.dump(2) << '\n';
    json timing;
    timing["command"] = opts_.command;
    timing["wall_seconds"] = seconds;
    std::ofstream(dir_ / "timing.json", std::ios::binary) << timing.dump(2) << '\n';
  }

 private:
  const Options& opts_;
  fs::path dir_;
  json report_ = {{"config", nullptr},
                  {"metrics", json::object()},
                  {"tilt_schedule", json::array()},
                  {"artifacts", json::array()}};
};

json data_json(const TabularDataset& d, const LossKind& loss, double l2) {
  json j;
  j["source"] = d.provenance.source;
  j["rows"] = d.size();
  j["features"] = d.feature_dim();
  j["groups"] = d.group.empty() ? "none" : (d.supergroup.empty() ? "group" : "supergroup/group");
  j["noisy_rows"] = d.provenance.noisy_indices.size();
  j["provenance_hash"] = std::to_string(provenance_hash(d.provenance));
  j["loss"] = to_string(loss);
  j["l2"] = l2;
  return j;
}

SolverTrace run_solver(const Options& o, const EmpiricalProblem& problem, const TiltTree& tree,
                       SolverConfig& cfg) {
  const auto& lv = tree.levels();
  const bool negative = std::any_of(lv.begin(), lv.end(), [](double t) { return t < 0.0; });
  if (o.continuation == "auto") {
    cfg.continuation = negative && o.solver == "batch" ? Continuation::Linear : Continuation::None;
    if (o.solver == "stochastic") cfg.allow_negative_without_continuation = true;
  }
  if (o.solver == "batch") return batch_solve(problem, tree, cfg);
  if (o.solver == "stochastic") return stochastic_solve(problem, tree, cfg);
  throw InputError("--solver must be batch or stochastic, got '" + o.solver + "'");
}

void linear_metrics(json& m, const std::string& prefix, const TabularDataset& d,
                    const LossKind& loss, std::span<const double> theta) {
  if (std::holds_alternative<SquaredLoss>(loss)) m[prefix + "rmse"] = rmse(d, theta);
  if (std::holds_alternative<LogisticLoss>(loss)) {
    m[prefix + "accuracy"] = accuracy(d, theta);
    for (double y : {-1.0, 1.0}) {
      const double a = accuracy(d, theta, y);
      if (!std::isnan(a)) m[prefix + "accuracy_y=" + format_number(y)] = a;
    }
  }
}

void cmd_solve(const Options& o, Run& run) {
  const Loaded ld = load_data(o);
  const EmpiricalProblem problem(ld.data, ld.loss, ld.l2);
  const TiltTree tree = build_tree(o, problem);
  SolverConfig cfg = solver_config(o);
  const SolverTrace trace = run_solver(o, problem, tree, cfg);

  run.report()["data"] = data_json(ld.data, ld.loss, ld.l2);
  run.add_schedule(schedule_json("solve", tree.levels(), cfg.continuation,
                                 cfg.continuation == Continuation::Linear ? cfg.ramp_length() : 0));
  json& m = run.metrics();
  m["theta"] = trace.theta;
  m["objective"] = trace.objective;
  m["grad_norm"] = trace.grad_norm;
  m["iterations"] = trace.iterations;
  m["termination"] = to_string(trace.reason);
  const LossVector losses = problem.losses(trace.theta);
  const LossStats st = loss_stats(losses, tree.levels().back());
  m["avg_loss"] = st.mean;
  m["min_loss"] = st.min_loss;
  m["max_loss"] = st.max_loss;
  m["loss_variance"] = st.variance;
  if (!ld.data.group.empty() && problem.num_units() == ld.data.size()) {
    json groups = json::object();
    std::map<std::string, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < ld.data.size(); ++i) {
      auto& [sum, count] = acc[ld.data.group[i]];
      sum += losses[i];
      ++count;
    }
    for (const auto& [g, sc] : acc) groups[g] = sc.first / sc.second;
    m["group_avg_loss"] = groups;
  }
  linear_metrics(m, "train_", ld.data, ld.loss, trace.theta);
  if (ld.test && ld.test->size() > 0) linear_metrics(m, "test_", *ld.test, ld.loss, trace.theta);

  std::ostringstream csv;
  write_trace_csv(trace, csv);
  run.write("trace.csv", csv.str());
  if (o.save_data) {
    save_csv(ld.data, (fs::path(o.out) / "data.csv").string());
    run.report()["artifacts"].push_back("data.csv");
    run.report()["artifacts"].push_back("data.csv.provenance");
  }
}

void cmd_sweep(const Options& o, Run& run) {
  const Loaded ld = load_data(o);
  const EmpiricalProblem problem(ld.data, ld.loss, ld.l2);
  const std::vector<double> grid =
      o.t_grid.empty() ? default_t_grid() : parse_list(o.t_grid, "--t-grid");
  const std::vector<double> taus =
      o.taus.empty() ? std::vector<double>{} : parse_list(o.taus, "--taus");
  SolverConfig cfg = solver_config(o);
  if (o.continuation == "none") cfg.allow_negative_without_continuation = true;
  const SweepResult sweep = tradeoff_sweep(problem, grid, cfg, taus);

  run.report()["data"] = data_json(ld.data, ld.loss, ld.l2);
  for (const auto& p : sweep.points) {
    const bool ramp = p.t < 0.0 && o.continuation != "none";
    SolverConfig shown = cfg;
    shown.continuation = ramp ? Continuation::Linear : Continuation::None;
    run.add_schedule(schedule_json("t=" + format_number(p.t), {p.t}, shown.continuation,
                                   ramp ? shown.ramp_length() : 0));
  }
  json& m = run.metrics();
  m["t_grid"] = grid;
  m["points_ok"] = std::count_if(sweep.points.begin(), sweep.points.end(),
                                 [](const SweepPoint& p) { return p.ok; });
  json props = json::object();
  for (const auto& c : check_sweep_properties(sweep)) {
    props[c.name] = {{"passed", c.passed},
                     {"worst_violation", c.worst_violation},
                     {"pairs_checked", c.pairs_checked}};
  }
  m["properties"] = props;
  std::ostringstream csv;
  write_sweep_csv(sweep, csv);
  run.write("sweep.csv", csv.str());
}

std::optional<GridBox> oracle_box(const EmpiricalProblem& problem) {
  if (!std::holds_alternative<PointDistanceLoss>(problem.kind())) return std::nullopt;
  const auto& x = problem.data().features;
  if (x.cols() > 2) return std::nullopt;
  GridBox box;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    box.lo.push_back(x.col(j).minCoeff() - 0.5);
    box.hi.push_back(x.col(j).maxCoeff() + 0.5);
  }
  return box;
}

std::string opt_text(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

void cmd_superquantile(const Options& o, Run& run) {
  const Loaded ld = load_data(o);
  const EmpiricalProblem problem(ld.data, ld.loss, ld.l2);
  const std::vector<double> grid =
      o.t_grid.empty() ? default_t_grid() : parse_list(o.t_grid, "--t-grid");
  SolverConfig cfg = solver_config(o);
  const TiltPath path = solve_tilt_path(problem, grid, o.t_max, cfg);

  std::vector<double> as;
  if (!o.thresholds.empty()) {
    as = parse_list(o.thresholds, "--a");
  } else {
    for (int k = 1; k < 20; ++k) as.push_back(path.f_min + (path.f_max - path.f_min) * k / 20.0);
  }
  const auto box = oracle_box(problem);

  run.report()["data"] = data_json(ld.data, ld.loss, ld.l2);
  for (double t : path.tilts) {
    const bool ramp = t < 0.0;
    SolverConfig shown = cfg;
    shown.continuation = ramp ? Continuation::Linear : Continuation::None;
    run.add_schedule(schedule_json("t=" + format_number(t), {t}, shown.continuation,
                                   ramp ? shown.ramp_length() : 0));
  }
  json& m = run.metrics();
  m["f_min"] = path.f_min;
  m["f_max"] = path.f_max;
  m["t_grid"] = path.tilts;
  m["q0_oracle"] = box ? "grid" : "none";
  json rows = json::array();
  bool chain = true;
  std::ostringstream csv;
  csv << "a,verdict,q0,q1,q2,q3,t_tilde\n";
  for (double a : as) {
    std::optional<double> q0;
    if (box && a > path.f_min && a <= path.f_max) {
      q0 = q_zero_grid_oracle(problem, a, *box, o.oracle_resolution);
    }
    const auto r = q_chain(path, a, q0);
    json row{{"a", a}, {"verdict", to_string(r.verdict)}};
    for (auto [key, v] : {std::pair{"q0", r.q0}, {"q1", r.q1}, {"q2", r.q2}, {"q3", r.q3},
                          {"t_tilde", r.t_tilde}}) {
      row[key] = v ? json(*v) : json(nullptr);
    }
    if (r.verdict == QVerdict::Chain && r.q1 && r.q2 && r.q3) {
      chain = chain && *r.q1 <= *r.q2 + 1e-9 && *r.q2 <= *r.q3 + 1e-9 &&
              (!r.q0 || *r.q0 <= *r.q1 + 1e-9);
    }
    rows.push_back(row);
    csv << format_number(a) << ',' << to_string(r.verdict) << ',' << opt_text(r.q0) << ','
        << opt_text(r.q1) << ',' << opt_text(r.q2) << ',' << opt_text(r.q3) << ','
        << opt_text(r.t_tilde) << '\n';
  }
  m["chain_holds"] = chain;
  m["thresholds"] = rows;
  run.write("superquantile.csv", csv.str());
}

void cmd_experiment(const Options& o, Run& run) {
  if (!o.csv.empty() || !o.scenario.empty() || o.toy) {
    throw InputError("experiment builds its own data; drop --csv/--scenario/--toy");
  }
  ExperimentOptions eo;
  eo.seed = o.seed;
  eo.t = o.t;
  eo.tau = o.tau;
  eo.noise = o.noise;
  eo.n = o.n;
  const ExperimentResult r = run_experiment(o.experiment, eo);

  json settings = json::object();
  for (const auto& [k, v] : r.settings) settings[k] = v;
  run.report()["experiment"] = {{"name", r.name}, {"settings", settings}};
  json& m = run.metrics();
  for (const auto& [k, v] : r.metrics) m[k] = v;
  for (const auto& s : r.solves) {
    run.add_schedule(schedule_json(s.label, s.levels, s.continuation, s.ramp));
    json& solves = run.report()["solves"];
    solves[s.label] = {{"iterations", s.trace.iterations},
                       {"termination", to_string(s.trace.reason)},
                       {"objective", s.trace.objective},
                       {"grad_norm", s.trace.grad_norm}};
    std::ostringstream csv;
    write_trace_csv(s.trace, csv);
    run.write("trace_" + s.label + ".csv", csv.str());
  }
  run.write("metrics.txt", metrics_text(r));
}

json config_echo(const Options& o) {
  json c;
  c["command"] = o.command;
  if (!o.experiment.empty()) c["experiment"] = o.experiment;
  c["seed"] = o.seed;
  if (o.t) c["t"] = *o.t;
  if (o.tau) c["tau"] = *o.tau;
  if (!o.levels.empty()) c["levels"] = o.levels;
  if (!o.t_grid.empty()) c["t_grid"] = o.t_grid;
  if (!o.taus.empty()) c["taus"] = o.taus;
  if (!o.thresholds.empty()) c["a"] = o.thresholds;
  if (o.command == "experiment") {
    if (o.noise) c["noise"] = *o.noise;
    if (o.n) c["n"] = *o.n;
    return c;
  }
  if (!o.csv.empty()) {
    c["csv"] = o.csv;
    c["target"] = o.target;
    if (!o.group_col.empty()) c["group_col"] = o.group_col;
    if (!o.supergroup_col.empty()) c["supergroup_col"] = o.supergroup_col;
  } else if (!o.scenario.empty()) {
    c["scenario"] = o.scenario;
    c["n"] = o.n.value_or(100);
    c["n_test"] = o.n_test;
    c["dim"] = o.dim;
    c["noise"] = o.noise.value_or(0.0);
    c["imbalance"] = o.imbalance;
    c["separation"] = o.separation;
    c["outlier_variance_five"] = o.outlier_variance_five;
    c["hammers"] = o.hammers;
    c["spammers"] = o.spammers;
    c["classes"] = o.classes;
    c["minority_share"] = o.minority_share;
  } else {
    c["toy"] = true;
  }
  if (o.label_flip > 0.0) c["label_flip"] = o.label_flip;
  if (!o.loss.empty()) c["loss"] = o.loss;
  if (o.l2 >= 0.0) c["l2"] = o.l2;
  c["solver"] = {{"kind", o.solver},          {"step_rule", o.step_rule},
                 {"step_size", o.step_size},  {"max_iters", o.max_iters},
                 {"grad_tol", o.grad_tol},    {"continuation", o.continuation},
                 {"continuation_iters", o.continuation_iters},
                 {"minibatch", o.minibatch},  {"smoothing", o.smoothing},
                 {"record_every", o.record_every}};
  if (o.command == "superquantile") {
    c["t_max"] = o.t_max;
    c["oracle_resolution"] = o.oracle_resolution;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Tilted empirical risk minimization: solve, sweep, superquantile, experiment"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key = value file; keys are long option names");
  app.allow_config_extras(false);

  app.add_option("--out", o.out, "output directory (default $TERM_OUT_DIR or ./term_out)");
  app.add_option("--seed", o.seed, "seed for data, label flips and sampling");
  app.add_option("--t", o.t, "tilt (outer levels)");
  app.add_option("--tau", o.tau, "sample-level tilt inside groups");
  app.add_option("--levels", o.levels, "explicit tilts per tree level, outermost first");
  app.add_option("--t-grid", o.t_grid, "comma-separated tilts for sweep/superquantile");
  app.add_option("--taus", o.taus, "sweep: tilts at which weight entropy is reported");
  app.add_option("--a", o.thresholds, "superquantile: comma-separated loss thresholds");
  app.add_option("--t-max", o.t_max, "superquantile: |t| used for the limit estimates");
  app.add_option("--oracle-resolution", o.oracle_resolution, "superquantile: Q0 grid spacing");

  app.add_option("--csv", o.csv, "CSV with header row");
  app.add_option("--target", o.target, "CSV target column");
  app.add_option("--group-col", o.group_col, "CSV group column");
  app.add_option("--supergroup-col", o.supergroup_col, "CSV supergroup column");
  app.add_option("--scenario", o.scenario, "synthetic scenario")
      ->check(CLI::IsMember(scenario_names()));
  app.add_flag("--toy", o.toy, "1-D points {0, 1, 4} (default source)");
  app.add_option("--loss", o.loss, "squared | logistic | point | pca:<rank>");
  app.add_option("--l2", o.l2, "ridge weight");
  app.add_flag("--save-data", o.save_data, "solve: also write data.csv and its provenance");

  app.add_option("--n", o.n, "training rows");
  app.add_option("--n-test", o.n_test, "held-out rows (0 means n)");
  app.add_option("--dim", o.dim, "feature dimension");
  app.add_option("--noise", o.noise, "fraction of corrupted rows");
  app.add_option("--imbalance", o.imbalance, "majority rows per minority row");
  app.add_option("--separation", o.separation, "distance between class means");
  app.add_flag("--outlier-variance-five", o.outlier_variance_five,
               "regression outliers N(5, var 5) instead of std 5");
  app.add_option("--hammers", o.hammers, "reliable annotators");
  app.add_option("--spammers", o.spammers, "random annotators");
  app.add_option("--classes", o.classes, "annotator classes");
  app.add_option("--minority-share", o.minority_share, "fair PCA: share of group B");
  app.add_option("--label-flip", o.label_flip, "fraction of labels redrawn uniformly");

  app.add_option("--solver", o.solver, "batch | stochastic");
  app.add_option("--step-rule", o.step_rule, "armijo | constant");
  app.add_option("--step-size", o.step_size, "constant step or first Armijo trial");
  app.add_option("--max-iters", o.max_iters);
  app.add_option("--grad-tol", o.grad_tol);
  app.add_option("--continuation", o.continuation, "auto | linear | none");
  app.add_option("--continuation-iters", o.continuation_iters, "ramp length (0: max_iters/2)");
  app.add_option("--minibatch", o.minibatch);
  app.add_option("--smoothing", o.smoothing, "running-estimate weight lambda");
  app.add_option("--record-every", o.record_every, "trace cadence");

  auto* solve = app.add_subcommand("solve", "solve one tilted problem");
  auto* sweep = app.add_subcommand("sweep", "solve over a tilt grid and check monotone properties");
  auto* sq = app.add_subcommand("superquantile", "Q0..Q3 chain over loss thresholds");
  auto* exp = app.add_subcommand("experiment", "run a named experiment recipe");
  exp->add_option("name", o.experiment, "experiment name")->required();
  for (auto* sub : {solve, sweep, sq, exp}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  o.command = app.get_subcommands().front()->get_name();
  if (o.out.empty()) {
    const char* env = std::getenv("TERM_OUT_DIR");
    o.out = env && *env ? env : "term_out";
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    Run run(o, o.out);
    run.report()["config"] = config_echo(o);
    if (o.command == "solve") cmd_solve(o, run);
    if (o.command == "sweep") cmd_sweep(o, run);
    if (o.command == "superquantile") cmd_superquantile(o, run);
    if (o.command == "experiment") cmd_experiment(o, run);
    run.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    std::cout << run.metrics().dump(2) << '\n';
    return 0;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
