#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "term/losses.hpp"
#include "term/solvers.hpp"
#include "term/tilt.hpp"

namespace term {

struct LossStats {
  double mean = 0.0;
  double variance = 0.0;        // population (1/N)
  double cosine_to_ones = 0.0;  // 1 for the zero vector
  double weight_entropy = 0.0;  // nats, of tilt_weights(losses, t)
  double min_loss = 0.0;
  double max_loss = 0.0;
};

LossStats loss_stats(const LossVector& losses, double t);

// Shannon entropy in nats; 0 log 0 = 0.
double entropy(std::span<const double> weights);

struct SweepPoint {
  double t = 0.0;
  bool ok = false;
  std::string error;  // solver failure message when !ok
  std::vector<double> theta;
  LossStats stats;                 // entropy taken at this point's own t
  double objective = 0.0;          // F(t) = R(t; theta(t))
  std::vector<double> entropies;   // H(w(tau_k; theta(t))) for the sweep's taus
  int iterations = 0;
  std::string termination;
};

struct SweepResult {
  std::vector<double> entropy_taus;
  std::vector<SweepPoint> points;  // grid order
};

// Solves flat TERM at every t of a strictly increasing grid. Negative tilts
// get linear continuation when cfg has none. Solver errors are recorded on
// the point and the sweep moves on.
SweepResult tradeoff_sweep(const EmpiricalProblem& problem, const std::vector<double>& t_grid,
                           const SolverConfig& cfg,
                           const std::vector<double>& entropy_taus = {});

struct PropertyCheck {
  std::string name;
  bool passed = true;
  double worst_violation = 0.0;  // largest excess over the tolerance band, 0 if none
  int pairs_checked = 0;
};

// Monotonicity claims over consecutive sweep points. A step from a to b is
// accepted when the change in the wrong direction is at most
// rel_tol * max(|a|, |b|) + abs_floor.
std::vector<PropertyCheck> check_sweep_properties(const SweepResult& sweep,
                                                  double rel_tol = 1e-4,
                                                  double abs_floor = 1e-10);

// t, ok, objective, avg/min/max loss, variance, cosine, entropy,
// H_tau columns, iterations, termination, theta_0.. ; failed points keep empty cells.
void write_sweep_csv(const SweepResult& sweep, std::ostream& out);

}  // namespace term
