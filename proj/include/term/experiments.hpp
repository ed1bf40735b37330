#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "term/datasynth.hpp"
#include "term/losses.hpp"
#include "term/solvers.hpp"

namespace term {

// Armijo, alpha0 = 1, 5000 iterations, |g| < 1e-8. Negative tilts get linear
// continuation from the caller (see solve_labeled).
SolverConfig default_experiment_solver();

/// One solver run inside an experiment, with the tilt schedule it actually used.
struct SolveRecord {
  std::string label;
  std::vector<double> levels;  // target tilts, outermost first
  Continuation continuation = Continuation::None;
  int ramp = 0;  // iterations of the ramp, 0 without continuation
  SolverTrace trace;
};

// Solves and records. Turns on linear continuation when a level is negative
// and cfg has none.
SolveRecord solve_labeled(const std::string& label, const EmpiricalProblem& problem,
                          const TiltTree& tree, SolverConfig cfg);

// Tilts per level at iteration `iter` of a recorded run (the ramp included).
std::vector<double> schedule_at(const SolveRecord& rec, int iter);

struct ExperimentResult {
  std::string name;
  std::vector<std::pair<std::string, std::string>> settings;  // effective inputs, text
  std::vector<std::pair<std::string, double>> metrics;        // fixed order
  std::vector<SolveRecord> solves;

  double metric(const std::string& key) const;  // InputError when absent
};

struct ExperimentOptions {
  std::uint64_t seed = 1;
  std::optional<double> t;
  std::optional<double> tau;
  std::optional<double> noise;
  std::optional<std::size_t> n;
  std::optional<SolverConfig> solver;
};

std::vector<std::string> experiment_names();

// Throws InputError for an unknown name; the message lists the known ones.
ExperimentResult run_experiment(const std::string& name, const ExperimentOptions& opts);

// "key=value" per metric in order, values in shortest round-trip form.
std::string metrics_text(const ExperimentResult& result);

// Linear models: theta = (w, b).
double rmse(const TabularDataset& data, std::span<const double> theta);
// Sign of w.x + b against labels in {-1, +1}; restricted to rows labeled
// `only` when given. NaN when no row qualifies.
double accuracy(const TabularDataset& data, std::span<const double> theta,
                std::optional<double> only = std::nullopt);

}  // namespace term
