#include "term/experiments.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "term/error.hpp"
#include "term/hierarchy.hpp"
#include "term/numfmt.hpp"

namespace term {

SolverConfig default_experiment_solver() {
  SolverConfig cfg;
  cfg.step_size = 1.0;
  cfg.step_rule = StepRule::Backtracking;
  cfg.max_iters = 5000;
  cfg.grad_tol = 1e-8;
  return cfg;
}

SolveRecord solve_labeled(const std::string& label, const EmpiricalProblem& problem,
                          const TiltTree& tree, SolverConfig cfg) {
  bool negative = false;
  for (double t : tree.levels()) negative = negative || t < 0.0;
  if (negative && cfg.continuation == Continuation::None) {
    cfg.continuation = Continuation::Linear;
  }
  SolveRecord rec;
  rec.label = label;
  rec.levels = tree.levels();
  rec.continuation = cfg.continuation;
  rec.ramp = cfg.ramp_length();
  rec.trace = batch_solve(problem, tree, cfg);
  return rec;
}

std::vector<double> schedule_at(const SolveRecord& rec, int iter) {
  std::vector<double> out = rec.levels;
  if (rec.ramp == 0 || iter >= rec.ramp) return out;
  for (double& t : out) {
    if (t < 0.0) t *= static_cast<double>(iter) / rec.ramp;
  }
  return out;
}

double ExperimentResult::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics) {
    if (k == key) return v;
  }
  throw InputError("experiment " + name + " has no metric '" + key + "'");
}

std::string metrics_text(const ExperimentResult& result) {
  std::ostringstream out;
  for (const auto& [k, v] : result.metrics) out << k << '=' << format_number(v) << '\n';
  return out.str();
}

namespace {

double score(std::span<const double> x, std::span<const double> theta) {
  if (theta.size() != x.size() + 1) throw InputError("linear model dimension mismatch");
  double s = theta[x.size()];
  for (std::size_t j = 0; j < x.size(); ++j) s += theta[j] * x[j];
  return s;
}

}  // namespace

double rmse(const TabularDataset& data, std::span<const double> theta) {
  double sq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data.targets[i] - score(data.row(i), theta);
    sq += r * r;
  }
  return std::sqrt(sq / static_cast<double>(data.size()));
}

double accuracy(const TabularDataset& data, std::span<const double> theta,
                std::optional<double> only) {
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (only && data.targets[i] != *only) continue;
    const double predicted = score(data.row(i), theta) >= 0.0 ? 1.0 : -1.0;
    ++total;
    if (predicted == data.targets[i]) ++hit;
  }
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(hit) / static_cast<double>(total);
}

namespace {

constexpr double kLogisticRidge = 1e-3;

struct Context {
  const ExperimentOptions& opts;
  ExperimentResult& out;
  SolverConfig cfg;

  void set(const std::string& key, const std::string& value) {
    out.settings.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, format_number(value)); }
  void metric(const std::string& key, double value) { out.metrics.emplace_back(key, value); }

  // By value: later solves grow out.solves.
  SolveRecord solve(const std::string& label, const EmpiricalProblem& problem,
                    const TiltTree& tree) {
    out.solves.push_back(solve_labeled(label, problem, tree, cfg));
    return out.solves.back();
  }
};

ScenarioSpec base_spec(const Context& c, Scenario s, std::size_t n) {
  ScenarioSpec spec;
  spec.scenario = s;
  spec.n = c.opts.n.value_or(n);
  spec.seed = c.opts.seed;
  return spec;
}

void echo_spec(Context& c, const ScenarioSpec& spec) {
  c.set("scenario", to_string(spec.scenario));
  c.set("n", std::to_string(spec.n));
  c.set("n_test", std::to_string(spec.n_test == 0 ? spec.n : spec.n_test));
  c.set("dim", std::to_string(spec.dim));
  c.set("noise_fraction", spec.noise_fraction);
  c.set("seed", std::to_string(*spec.seed));
}

void point_estimation(Context& c) {
  ScenarioSpec spec = base_spec(c, Scenario::PointEstimation2D, 100);
  spec.noise_fraction = c.opts.noise.value_or(0.2);
  const double t = c.opts.t.value_or(-2.0);
  echo_spec(c, spec);
  c.set("t", t);
  const auto data = generate(spec);
  const EmpiricalProblem problem(data, PointDistanceLoss{});
  const auto term = c.solve("term", problem, TiltTree::flat(data.size(), t));
  const auto erm = c.solve("erm", problem, TiltTree::flat(data.size(), 0.0));
  const Eigen::RowVectorXd mean = data.features.colwise().mean();
  auto dist = [](std::span<const double> p, double x, double y) {
    return std::hypot(p[0] - x, p[1] - y);
  };
  c.metric("estimate_x", term.trace.theta[0]);
  c.metric("estimate_y", term.trace.theta[1]);
  c.metric("sample_mean_x", mean(0));
  c.metric("sample_mean_y", mean(1));
  c.metric("estimate_minus_sample_mean", dist(term.trace.theta, mean(0), mean(1)));
  c.metric("term_distance_to_center", dist(term.trace.theta, 1.0, 1.0));
  c.metric("erm_distance_to_center", dist(erm.trace.theta, 1.0, 1.0));
}

void robust_regression(Context& c) {
  ScenarioSpec spec = base_spec(c, Scenario::LinearRegression, 200);
  spec.dim = 5;
  spec.n_test = 1000;
  spec.noise_fraction = c.opts.noise.value_or(0.4);
  const double t = c.opts.t.value_or(-2.0);
  echo_spec(c, spec);
  c.set("t", t);
  const auto train = generate(spec);
  const auto test = generate_test(spec);
  const auto genie_data = train.clean_subset();
  const EmpiricalProblem problem(train, SquaredLoss{});
  const EmpiricalProblem genie_problem(genie_data, SquaredLoss{});
  const auto erm = c.solve("erm", problem, TiltTree::flat(train.size(), 0.0));
  const auto term = c.solve("term", problem, TiltTree::flat(train.size(), t));
  const auto genie = c.solve("genie", genie_problem, TiltTree::flat(genie_data.size(), 0.0));
  c.metric("erm_rmse", rmse(test, erm.trace.theta));
  c.metric("term_rmse", rmse(test, term.trace.theta));
  c.metric("genie_rmse", rmse(test, genie.trace.theta));
}

ScenarioSpec imbalanced_spec(const Context& c) {
  ScenarioSpec spec = base_spec(c, Scenario::LogisticBinary, 420);
  spec.imbalance_ratio = 20.0;
  spec.separation = 4.0;
  spec.n_test = 4200;
  return spec;
}

void report_classifier(Context& c, const std::string& label, const TabularDataset& test,
                       std::span<const double> theta) {
  c.metric(label + "_accuracy", accuracy(test, theta));
  c.metric(label + "_rare_accuracy", accuracy(test, theta, 1.0));
  c.metric(label + "_common_accuracy", accuracy(test, theta, -1.0));
}

void class_imbalance(Context& c) {
  ScenarioSpec spec = imbalanced_spec(c);
  spec.noise_fraction = c.opts.noise.value_or(0.0);
  const double t = c.opts.t.value_or(50.0);
  echo_spec(c, spec);
  c.set("imbalance_ratio", spec.imbalance_ratio);
  c.set("separation", spec.separation);
  c.set("t", t);
  c.set("l2", kLogisticRidge);
  const auto train = label_groups(generate(spec));
  const auto test = generate_test(spec);
  const EmpiricalProblem problem(train, LogisticLoss{}, kLogisticRidge);
  const auto erm = c.solve("erm", problem, TiltTree::flat(train.size(), 0.0));
  const auto term = c.solve("term", problem, TiltTree::grouped(t, 0.0, train.group));
  report_classifier(c, "erm", test, erm.trace.theta);
  report_classifier(c, "term", test, term.trace.theta);
}

void annotators(Context& c) {
  ScenarioSpec spec = base_spec(c, Scenario::Annotators, 400);
  spec.hammers = 2;
  spec.spammers = 8;
  spec.n_test = 2000;
  const double t = c.opts.t.value_or(-2.0);
  echo_spec(c, spec);
  c.set("hammers", std::to_string(spec.hammers));
  c.set("spammers", std::to_string(spec.spammers));
  c.set("t", t);
  c.set("l2", kLogisticRidge);
  const auto train = generate(spec);
  const auto test = generate_test(spec);
  const auto genie_data = train.clean_subset();
  const EmpiricalProblem problem(train, LogisticLoss{}, kLogisticRidge);
  const EmpiricalProblem genie_problem(genie_data, LogisticLoss{}, kLogisticRidge);
  const auto erm = c.solve("erm", problem, TiltTree::flat(train.size(), 0.0));
  const auto term = c.solve("term", problem, TiltTree::grouped(t, 0.0, train.group));
  const auto genie = c.solve("genie", genie_problem, TiltTree::flat(genie_data.size(), 0.0));
  c.metric("erm_accuracy", accuracy(test, erm.trace.theta));
  c.metric("term_accuracy", accuracy(test, term.trace.theta));
  c.metric("genie_accuracy", accuracy(test, genie.trace.theta));
}

void fair_pca(Context& c) {
  ScenarioSpec spec = base_spec(c, Scenario::FairPcaTwoGroups, 500);
  spec.dim = 4;
  const double t = c.opts.t.value_or(10.0);
  const int rank = 1;
  echo_spec(c, spec);
  c.set("rank", std::to_string(rank));
  c.set("t", t);
  const auto data = generate(spec);
  const EmpiricalProblem problem(data, PcaReconstructionLoss{rank});
  const auto erm = c.solve("erm", problem, TiltTree::flat(problem.num_units(), 0.0));
  const auto term = c.solve("term", problem, TiltTree::flat(problem.num_units(), t));
  const auto& names = problem.pca_group_names();
  for (const SolveRecord* rec : {&erm, &term}) {
    const LossVector l = problem.losses(rec->trace.theta);
    for (std::size_t g = 0; g < names.size(); ++g) {
      c.metric(rec->label + "_loss_" + names[g], l[g]);
    }
    c.metric(rec->label + "_max_group_loss", extreme_losses(l).max_loss);
  }
}

void hierarchical(Context& c) {
  ScenarioSpec spec = imbalanced_spec(c);
  const double flip = c.opts.noise.value_or(0.3);
  const double t = c.opts.t.value_or(50.0);
  const double tau = c.opts.tau.value_or(-2.0);
  echo_spec(c, spec);
  c.set("label_flip_fraction", flip);
  c.set("imbalance_ratio", spec.imbalance_ratio);
  c.set("separation", spec.separation);
  c.set("t", t);
  c.set("tau", tau);
  c.set("l2", kLogisticRidge);
  const auto train = label_groups(inject_label_flip(generate(spec), flip, c.opts.seed));
  const auto test = generate_test(spec);
  const EmpiricalProblem problem(train, LogisticLoss{}, kLogisticRidge);
  const auto erm = c.solve("erm", problem, TiltTree::flat(train.size(), 0.0));
  const auto cls = c.solve("class_term", problem, TiltTree::grouped(t, 0.0, train.group));
  const auto both = c.solve("term_sc", problem, TiltTree::grouped(t, tau, train.group));
  report_classifier(c, "erm", test, erm.trace.theta);
  report_classifier(c, "class_term", test, cls.trace.theta);
  report_classifier(c, "term_sc", test, both.trace.theta);
}

struct Recipe {
  const char* name;
  void (*run)(Context&);
};

constexpr Recipe kRecipes[] = {
    {"point-estimation", point_estimation}, {"robust-regression", robust_regression},
    {"class-imbalance", class_imbalance},   {"annotators", annotators},
    {"fair-pca", fair_pca},                 {"hierarchical", hierarchical},
};

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& r : kRecipes) out.emplace_back(r.name);
  return out;
}

ExperimentResult run_experiment(const std::string& name, const ExperimentOptions& opts) {
  for (const auto& r : kRecipes) {
    if (name != r.name) continue;
    ExperimentResult out;
    out.name = name;
    Context c{opts, out, opts.solver.value_or(default_experiment_solver())};
    r.run(c);
    return out;
  }
  std::string names;
  for (const auto& r : kRecipes) names += std::string(names.empty() ? "" : ", ") + r.name;
  throw InputError("unknown experiment '" + name + "' (available: " + names + ")");
}

}  // namespace term
