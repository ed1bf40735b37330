// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [metrics_dir]   (default ./acceptance_metrics)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "term/analysis.hpp"
#include "term/datasynth.hpp"
#include "term/experiments.hpp"
#include "term/hierarchy.hpp"
#include "term/numfmt.hpp"
#include "term/rng.hpp"
#include "term/superquantile.hpp"

namespace fs = std::filesystem;
using namespace term;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::string metrics;  // deterministic text, compared across runs
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

class Metrics {
 public:
  void add(const std::string& key, double v) { out_ << key << '=' << format_number(v) << '\n'; }
  void add(const std::string& key, const std::string& v) { out_ << key << '=' << v << '\n'; }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

TabularDataset points_1d(const std::vector<double>& xs) {
  TabularDataset data;
  data.features = RowMatrix(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) data.features(static_cast<Eigen::Index>(i), 0) = xs[i];
  data.targets.assign(xs.size(), 0.0);
  return data;
}

// N = 200, d = 2, balanced, separation 2, seed 1, ridge 1e-3.
EmpiricalProblem desk_instance() {
  ScenarioSpec spec;
  spec.scenario = Scenario::LogisticBinary;
  spec.n = 200;
  spec.dim = 2;
  spec.seed = 1;
  return EmpiricalProblem(generate(spec), LogisticLoss{}, 1e-3);
}

// 1. Analytic tilted gradients against central differences.
Outcome gradient_oracle() {
  Rng rng(1001);
  double worst = 0.0;
  Metrics m;
  int checked = 0;
  for (int kind = 0; kind < 2; ++kind) {
    for (int inst = 0; inst < 100; ++inst) {
      TabularDataset data;
      data.features = RowMatrix(50, 5);
      for (Eigen::Index i = 0; i < 50; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) data.features(i, j) = rng.normal();
        data.targets.push_back(kind == 0 ? rng.normal() : (rng.below(2) ? 1.0 : -1.0));
      }
      const LossKind lk = kind == 0 ? LossKind{SquaredLoss{}} : LossKind{LogisticLoss{}};
      const EmpiricalProblem problem(data, lk);
      std::vector<double> theta(problem.param_dim());
      for (double& v : theta) v = rng.normal(0.0, 0.5);
      for (double t : {-2.0, -0.5, 0.0, 0.5, 2.0, 10.0}) {
        const TiltTree tree = TiltTree::flat(50, t);
        const auto g = tree_gradient(problem, tree, theta).grad;
        const auto fd = fd_gradient(
            [&](std::span<const double> th) {
              return tilted_objective(problem.losses(th), t);
            },
            theta, 1e-5);
        std::vector<double> diff(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) diff[j] = g[j] - fd[j];
        const double rel = norm(diff) / std::max(norm(fd), 1e-12);
        worst = std::max(worst, rel);
        ++checked;
      }
    }
  }
  m.add("checks", checked);
  m.add("max_relative_error", worst);
  return {worst < 1e-5, "max rel err " + sci(worst) + " over " + std::to_string(checked) +
                            " checks (need < 1e-5)",
          m.str()};
}

double toy_objective(double theta, double t) {
  std::vector<double> f;
  for (double x : {0.0, 1.0, 4.0}) f.push_back((theta - x) * (theta - x));
  return tilted_objective(LossVector(f), t);
}

// 2. Limits on the {0, 1, 4} toy.
Outcome limit_recovery() {
  const EmpiricalProblem toy(points_1d({0, 1, 4}), PointDistanceLoss{});
  SolverConfig cfg;
  cfg.step_size = 0.5;
  cfg.step_rule = StepRule::Backtracking;
  cfg.max_iters = 4000;
  cfg.grad_tol = 1e-10;

  const double zero = batch_solve(toy, TiltTree::flat(3, 0.0), cfg).theta[0];
  const double pos = batch_solve(toy, TiltTree::flat(3, 50.0), cfg).theta[0];
  SolverConfig cont = cfg;
  cont.continuation = Continuation::Linear;
  cont.continuation_iters = 2000;
  const double neg = batch_solve(toy, TiltTree::flat(3, -50.0), cont).theta[0];

  // Grid oracles on [-1, 5], step 1e-5: global min at +50, local minima at -50.
  double best = -1.0, best_v = toy_objective(-1.0, 50.0);
  std::vector<double> minima;
  double p2 = toy_objective(-1.0, -50.0), p1 = toy_objective(-1.0 + 1e-5, -50.0);
  for (int i = 1; i <= 600000; ++i) {
    const double th = -1.0 + i * 1e-5;
    const double v = toy_objective(th, 50.0);
    if (v < best_v) {
      best_v = v;
      best = th;
    }
    if (i >= 2) {
      const double cur = toy_objective(th, -50.0);
      if (p1 < p2 && p1 <= cur) minima.push_back(th - 1e-5);
      p2 = p1;
      p1 = cur;
    }
  }
  double nearest = minima.empty() ? 1e300 : minima[0];
  for (double x : minima) {
    if (std::abs(x - neg) < std::abs(nearest - neg)) nearest = x;
  }
  const double e0 = std::abs(zero - 5.0 / 3.0);
  const double e_pos = std::abs(pos - best);
  const double e_neg = std::abs(neg - nearest);
  const bool ok = e0 < 1e-8 && e_pos < 1e-3 && std::abs(pos - 2.0) < 1e-3 && e_neg < 1e-3 &&
                  std::abs(neg - 1.0) < 1e-3;
  Metrics m;
  m.add("theta_t0", zero);
  m.add("theta_t50", pos);
  m.add("grid_argmin_t50", best);
  m.add("theta_tm50", neg);
  m.add("nearest_local_min_tm50", nearest);
  return {ok,
          "t=0 " + format_number(zero) + ", t=50 " + sci(pos) + " (grid " + sci(best) +
              "), t=-50 " + sci(neg) + " (local min " + sci(nearest) + ")",
          m.str()};
}

// 3. Monotonicity properties at solutions on the desk instance.
Outcome property_suite() {
  const EmpiricalProblem problem = desk_instance();
  SolverConfig cfg = default_experiment_solver();
  cfg.max_iters = 40000;
  cfg.grad_tol = 1e-10;
  const auto sweep =
      tradeoff_sweep(problem, {-10, -2, -0.5, 0, 0.5, 2, 10, 50}, cfg, {-1.0, 1.0});
  const auto checks = check_sweep_properties(sweep, 1e-4);
  Metrics m;
  std::ostringstream failed, info;
  bool ok = true;
  for (const auto& p : sweep.points) {
    m.add("t=" + format_number(p.t) + ".termination", p.ok ? p.termination : "error");
  }
  for (const auto& c : checks) {
    m.add(c.name, c.passed ? "pass" : "fail");
    m.add(c.name + ".worst_violation", c.worst_violation);
    const bool scored = c.name.find("_t_neg") == std::string::npos;
    if (scored && !c.passed) {
      ok = false;
      failed << ' ' << c.name << " (" << sci(c.worst_violation) << ")";
    }
    if (!scored) info << ' ' << c.name << '=' << (c.passed ? "pass" : "fail");
  }
  for (const auto& p : sweep.points) ok = ok && p.ok;
  std::string detail = ok ? "all scored properties hold" : "violated:" + failed.str();
  detail += "; not scored:" + info.str();
  return {ok, detail, m.str()};
}

// 4. Fixed losses: R(t) non-decreasing in t.
Outcome fixed_theta_monotone() {
  Rng rng(1004);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(1 + rng.below(50));
    for (double& x : v) x = rng.uniform(-5.0, 5.0) * (trial % 3 == 0 ? 10.0 : 1.0);
    const LossVector l(v);
    std::vector<double> ts(20);
    for (double& t : ts) t = rng.uniform(-20.0, 20.0);
    std::sort(ts.begin(), ts.end());
    double prev = tilted_objective(l, ts[0]);
    for (std::size_t k = 1; k < ts.size(); ++k) {
      const double cur = tilted_objective(l, ts[k]);
      worst = std::max(worst, prev - cur);
      prev = cur;
    }
  }
  Metrics m;
  m.add("max_decrease", worst);
  return {worst <= 1e-9, "largest decrease " + sci(worst) + " (need <= 1e-9)", m.str()};
}

// 5. Q0 <= Q1 <= Q2 <= Q3 on the 2-D point-estimation toy.
Outcome superquantile_chain() {
  ScenarioSpec spec;
  spec.scenario = Scenario::PointEstimation2D;
  spec.n = 30;
  spec.noise_fraction = 0.2;
  spec.seed = 1;
  const auto data = generate(spec);
  const EmpiricalProblem problem(data, PointDistanceLoss{});
  SolverConfig cfg = default_experiment_solver();
  cfg.step_size = 0.5;
  cfg.max_iters = 4000;
  cfg.grad_tol = 1e-10;
  const TiltPath path = solve_tilt_path(problem, default_t_grid(), 100.0, cfg);

  GridBox box{{0, 0}, {0, 0}};
  for (int j = 0; j < 2; ++j) {
    box.lo[static_cast<std::size_t>(j)] = data.features.col(j).minCoeff() - 0.5;
    box.hi[static_cast<std::size_t>(j)] = data.features.col(j).maxCoeff() + 0.5;
  }
  const double res = 5e-3;
  const double n = static_cast<double>(data.size());
  Metrics m;
  m.add("f_min", path.f_min);
  m.add("f_max", path.f_max);
  bool ok = true;
  double worst_chain = 0.0, worst_gap = 0.0;
  for (int k = 1; k < 20; ++k) {
    const double a = path.f_min + (path.f_max - path.f_min) * k / 20.0;
    const double q0 = q_zero_grid_oracle(problem, a, box, res);
    const auto rep = q_chain(path, a, q0);
    if (rep.verdict != QVerdict::Chain) {
      ok = false;
      continue;
    }
    worst_chain = std::max({worst_chain, *rep.q0 - *rep.q1, *rep.q1 - *rep.q2, *rep.q2 - *rep.q3});
    worst_gap = std::max(worst_gap, *rep.q2 - *rep.q0);
    m.add("a" + std::to_string(k), a);
    m.add("a" + std::to_string(k) + ".q", format_number(*rep.q0) + "," + format_number(*rep.q1) +
                                              "," + format_number(*rep.q2) + "," +
                                              format_number(*rep.q3));
  }
  ok = ok && worst_chain <= 1e-9 && worst_gap <= 1.0 / n + 1e-9;
  return {ok,
          "worst chain inversion " + sci(worst_chain) + " (need <= 1e-9), max Q2-Q0 " +
              sci(worst_gap) + " (need <= 1/N = " + sci(1.0 / n) + ")",
          m.str()};
}

// 6. Equal tilts on every level reduce to sample-level TERM.
Outcome hierarchical_reduction() {
  Rng rng(1006);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    const std::size_t depth = 1 + rng.below(3);
    std::vector<std::vector<std::string>> paths(n);
    for (auto& p : paths) {
      for (std::size_t d = 1; d < depth; ++d) p.push_back("g" + std::to_string(rng.below(4)));
    }
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(0.0, 5.0);
    const double t = trial % 10 == 0 ? 0.0 : rng.uniform(-10.0, 10.0);
    const TiltTree tree(std::vector<double>(depth, t), paths);
    const LossVector l(v);
    worst = std::max(worst, std::abs(tree_tilted_objective(tree, l) - tilted_objective(l, t)));
  }
  Metrics m;
  m.add("max_abs_difference", worst);
  return {worst < 1e-12, "max |J - R| " + sci(worst) + " (need < 1e-12)", m.str()};
}

std::vector<ExperimentResult> seeds(const std::string& name) {
  std::vector<ExperimentResult> out;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    ExperimentOptions o;
    o.seed = s;
    out.push_back(run_experiment(name, o));
  }
  return out;
}

double mean_of(const std::vector<ExperimentResult>& runs, const std::string& key) {
  double s = 0.0;
  for (const auto& r : runs) s += r.metric(key);
  return s / static_cast<double>(runs.size());
}

// 7. Robust regression with 40% N(5,5) targets, t = -2.
Outcome robust_regression() {
  const auto runs = seeds("robust-regression");
  const double erm = mean_of(runs, "erm_rmse");
  const double term = mean_of(runs, "term_rmse");
  const double genie = mean_of(runs, "genie_rmse");
  Metrics m;
  for (const auto& r : runs) m.add("seed", metrics_text(r));
  m.add("mean_erm_rmse", erm);
  m.add("mean_term_rmse", term);
  m.add("mean_genie_rmse", genie);
  const bool ok = term < erm && term <= 1.2 * genie;
  return {ok,
          "mean clean-test RMSE: ERM " + sci(erm) + ", TERM " + sci(term) + ", Genie " +
              sci(genie) + " (TERM/Genie " + sci(term / genie) + ", need <= 1.2)",
          m.str()};
}

// 8. 1:20 logistic task, class-level t = 50.
Outcome class_imbalance() {
  const auto runs = seeds("class-imbalance");
  const double erm_rare = mean_of(runs, "erm_rare_accuracy");
  const double term_rare = mean_of(runs, "term_rare_accuracy");
  const double erm_acc = mean_of(runs, "erm_accuracy");
  const double term_acc = mean_of(runs, "term_accuracy");
  Metrics m;
  for (const auto& r : runs) m.add("seed", metrics_text(r));
  m.add("mean_erm_rare_accuracy", erm_rare);
  m.add("mean_term_rare_accuracy", term_rare);
  m.add("mean_erm_accuracy", erm_acc);
  m.add("mean_term_accuracy", term_acc);
  const double gain = 100.0 * (term_rare - erm_rare);
  const double drop = 100.0 * std::abs(term_acc - erm_acc);
  return {gain >= 5.0 && drop <= 3.0,
          "rare-class gain " + sci(gain) + " points (need >= 5), overall gap " + sci(drop) +
              " points (need <= 3)",
          m.str()};
}

// 9. Stochastic iterates approach the batch solution.
Outcome stochastic_correctness() {
  const EmpiricalProblem problem = desk_instance();
  const double t = 1.0;
  const TiltTree tree = TiltTree::flat(problem.num_units(), t);
  SolverConfig bc = default_experiment_solver();
  bc.max_iters = 100000;
  bc.grad_tol = 1e-12;
  const auto star = batch_solve(problem, tree, bc).theta;
  const double star_norm = norm(star);

  std::vector<int> checkpoints;
  for (int k = 2; k <= 7; ++k) checkpoints.push_back(static_cast<int>(std::lround(std::pow(10.0, k / 2.0))));
  std::vector<std::vector<double>> dist(checkpoints.size());
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SolverConfig cfg;
    cfg.step_size = 0.01;
    cfg.minibatch_size = 50;
    cfg.smoothing = 0.05;
    cfg.seed = seed;
    cfg.max_iters = checkpoints.back();
    cfg.grad_tol = 0.0;
    cfg.record_every = cfg.max_iters;
    cfg.snapshot_iters = checkpoints;
    const auto trace = stochastic_solve(problem, tree, cfg);
    for (std::size_t k = 0; k < trace.snapshots.size() && k < checkpoints.size(); ++k) {
      std::vector<double> d(star.size());
      for (std::size_t j = 0; j < d.size(); ++j) d[j] = trace.snapshots[k].theta[j] - star[j];
      dist[k].push_back(norm(d) / star_norm);
    }
  }
  Metrics m;
  std::ostringstream curve;
  bool monotone = true;
  double prev = 1e300, last = 1e300;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    auto v = dist[k];
    if (v.size() != 5) return {false, "missing snapshots", m.str()};
    std::sort(v.begin(), v.end());
    const double med = v[2];
    m.add("iter=" + std::to_string(checkpoints[k]), med);
    curve << ' ' << checkpoints[k] << ':' << sci(med);
    monotone = monotone && med <= prev;
    prev = med;
    last = med;
  }
  return {monotone && last < 0.05,
          std::string(monotone ? "median distance non-increasing" : "median distance rises") +
              ", final " + sci(last) + " (need < 0.05);" + curve.str(),
          m.str()};
}

// 10. Iterations to tolerance for small positive tilts vs. ERM.
Outcome efficiency() {
  const EmpiricalProblem problem = desk_instance();
  SolverConfig cfg = default_experiment_solver();
  cfg.max_iters = 100000;
  cfg.grad_tol = 1e-8;
  auto iters = [&](double t) {
    const auto tr = batch_solve(problem, TiltTree::flat(problem.num_units(), t), cfg);
    return tr.reason == Termination::GradientTolerance ? tr.iterations : -1;
  };
  const int base = iters(0.0);
  Metrics m;
  m.add("iterations_t=0", base);
  std::ostringstream detail;
  detail << "t=0: " << base;
  bool ok = base > 0;
  for (double t : {0.1, 1.0, 2.0}) {
    const int k = iters(t);
    m.add("iterations_t=" + format_number(t), k);
    detail << ", t=" << format_number(t) << ": " << k;
    ok = ok && k > 0 && k <= 2 * base;
  }
  detail << " (need <= 2x t=0)";
  return {ok, detail.str(), m.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_metrics");
  const std::vector<Criterion> criteria = {
      {1, "gradient oracle", 10, gradient_oracle},
      {2, "limit recovery", 5, limit_recovery},
      {3, "monotone property suite", 60, property_suite},
      {4, "fixed-theta monotonicity", 5, fixed_theta_monotone},
      {5, "superquantile chain", 60, superquantile_chain},
      {6, "hierarchical reduction", 5, hierarchical_reduction},
      {7, "robust regression", 30, robust_regression},
      {8, "class imbalance", 60, class_imbalance},
      {9, "stochastic solver correctness", 60, stochastic_correctness},
      {10, "efficiency", 30, efficiency},
  };

  bool all = true;
  std::vector<std::string> first_run;
  fs::create_directories(dir / "run1");
  fs::create_directories(dir / "run2");
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), ""};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("[%s] %2d %s: %s; %.2f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), o.detail.c_str(), secs, c.budget_s,
                in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
    write_file(dir / "run1" / ("criterion_" + std::to_string(c.id) + ".txt"), o.metrics);
    first_run.push_back(o.metrics);
  }

  // 11. Same seeds again; metric files must match byte for byte.
  std::vector<int> differing;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    std::string again;
    try {
      again = criteria[k].run().metrics;
    } catch (const std::exception& e) {
      again = std::string("exception: ") + e.what();
    }
    const std::string name = "criterion_" + std::to_string(criteria[k].id) + ".txt";
    write_file(dir / "run2" / name, again);
    if (first_run[k].empty() || read_file(dir / "run1" / name) != read_file(dir / "run2" / name)) {
      differing.push_back(criteria[k].id);
    }
  }
  std::ostringstream d;
  if (differing.empty()) {
    d << "metric files of criteria 1-10 identical across two runs";
  } else {
    d << "metric files differ for criteria";
    for (int id : differing) d << ' ' << id;
  }
  std::printf("[%s] 11 determinism: %s (%s)\n", differing.empty() ? "PASS" : "FAIL",
              d.str().c_str(), dir.string().c_str());
  all = all && differing.empty();
  return all ? 0 : 1;
}
