#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "term/hierarchy.hpp"
#include "term/losses.hpp"

namespace term {

enum class StepRule {
  Constant,     // theta -= alpha * g
  Backtracking  // Armijo halving from min(alpha, 2 * previous accepted step)
};

enum class Continuation {
  None,
  Linear  // negative tilts ramp from 0 to their target over the first K steps
};

struct SolverConfig {
  double step_size = 0.1;
  StepRule step_rule = StepRule::Constant;
  int max_iters = 1000;
  double grad_tol = 1e-8;  // batch only; the stochastic solver runs its budget
  Continuation continuation = Continuation::None;
  int continuation_iters = 0;  // K; 0 means max_iters / 2
  // Negative tilts without a ramp are rejected unless this is set.
  bool allow_negative_without_continuation = false;

  // Stochastic solver.
  std::size_t minibatch_size = 1;
  double smoothing = 0.1;  // lambda in (0, 1]
  std::uint64_t seed = 0;

  int record_every = 1;             // trace cadence; 0 keeps no per-iteration records
  std::vector<int> snapshot_iters;  // keep theta after these many steps
  double divergence_threshold = 1e12;
  std::vector<double> initial_theta;  // empty: problem default

  void validate() const;
  int ramp_length() const;
};

struct TraceRecord {
  int iter = 0;
  std::vector<double> tilts;  // per tree level, as used at this iteration
  double objective = 0.0;
  double grad_norm = 0.0;
};

struct Snapshot {
  int iter = 0;
  std::vector<double> theta;
};

enum class Termination { GradientTolerance, MaxIterations, Stalled };
std::string to_string(Termination reason);

struct SolverTrace {
  std::vector<TraceRecord> records;  // state before each recorded step
  std::vector<Snapshot> snapshots;
  std::vector<double> theta;         // final iterate
  double objective = 0.0;            // at the final iterate, target tilts
  double grad_norm = 0.0;
  int iterations = 0;                // steps taken
  Termination reason = Termination::MaxIterations;
  std::vector<double> running_estimates;  // stochastic: final R_g per leaf group
};

// Per-iteration tilt for a single target: t * min(i / K, 1) when t < 0, else t.
// Returns max_iters + 1 entries (iterations 0 .. max_iters).
std::vector<double> continuation_schedule(double t_target, int max_iters, int ramp);

// Tilts of every tree level at iteration i under cfg's continuation setting.
std::vector<double> tilts_at(const std::vector<double>& targets, const SolverConfig& cfg,
                             int iter);

// Full-batch gradient descent on the tree objective. Gradient norm is only
// tested once the continuation ramp has finished.
SolverTrace batch_solve(const EmpiricalProblem& problem, const TiltTree& tree,
                        const SolverConfig& cfg);

// Sampled-group, sampled-minibatch TERM with running tilted-loss estimates.
// The tree must have one level (single group, tilt t used within it) or two
// levels (group tilt t, sample tilt tau). Only the constant step rule applies.
SolverTrace stochastic_solve(const EmpiricalProblem& problem, const TiltTree& tree,
                             const SolverConfig& cfg);

// Tree objective and gradient at theta.
struct TreeGradient {
  double objective = 0.0;
  std::vector<double> grad;
};
TreeGradient tree_gradient(const EmpiricalProblem& problem, const TiltTree& tree,
                           std::span<const double> theta);

// Largest eigenvalue of the tree objective's Hessian at theta, by power
// iteration on central-difference Hessian-vector products.
double estimate_smoothness(const EmpiricalProblem& problem, const TiltTree& tree,
                           std::span<const double> theta, int iterations = 50);

// iter, t_0 .. t_{L-1}, objective, grad_norm
void write_trace_csv(const SolverTrace& trace, std::ostream& out);

}  // namespace term
