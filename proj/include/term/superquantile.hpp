#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "term/losses.hpp"
#include "term/solvers.hpp"
#include "term/tilt.hpp"

namespace term {

// Q(a) = (1/N) #{i : f_i >= a}.
double quantile_exceeding(const LossVector& losses, double a);

// (e^{R t} - e^{f t}) / (e^{a t} - e^{f t}) with R = tilted_objective(losses, t),
// written as expm1((R - f) t) / expm1((a - f) t) and rescaled by e^{(R - a) t}
// for large positive exponents. At t == 0 the limit (mean - f) / (a - f).
// Throws DomainError when a <= f_min.
double q_tilde_bound(const LossVector& losses, double a, double t, double f_min);

// k-th smallest loss, 1 <= k <= N.
double k_loss(const LossVector& losses, std::size_t k);

enum class BoundVerdict { Holds, Violated, Vacuous };
std::string to_string(BoundVerdict v);

struct KLossBound {
  BoundVerdict verdict = BoundVerdict::Vacuous;
  double k_loss = 0.0;
  double bound = 0.0;  // meaningless when vacuous
};

// f_min + (1/t) log((e^{(R - f_min) t} - k/N) / (1 - k/N)) against the k-th
// smallest loss. Requires 1 <= k < N and t > 0; vacuous when the log argument
// is not positive.
KLossBound k_loss_bound_check(const LossVector& losses, std::size_t k, double t,
                              double f_min);

// 16 log-spaced magnitudes in [1e-2, 1e2] on each side of zero, plus zero.
std::vector<double> default_t_grid();

/// Solutions of the flat TERM problem for each tilt of a grid, plus the
/// estimates of the optimal tilted objective's limits.
struct TiltPath {
  std::vector<double> tilts;
  std::vector<std::vector<double>> thetas;
  std::vector<LossVector> losses;
  double t_max = 100.0;
  double f_min = 0.0;  // F(-inf) estimate
  double f_max = 0.0;  // F(+inf) estimate
};

// Solves at every grid tilt and at -t_max, +t_max. Negative tilts get linear
// continuation when cfg has none. f_min is the smallest loss seen on any of
// these solutions (the -t_max one is where it is normally attained); f_max is
// the smallest max-loss seen (normally at +t_max).
TiltPath solve_tilt_path(const EmpiricalProblem& problem, std::vector<double> t_grid,
                         double t_max, const SolverConfig& cfg);

enum class QVerdict { Chain, BelowRange, AboveRange };
std::string to_string(QVerdict v);

struct SuperquantileReport {
  double a = 0.0;
  double f_min = 0.0;
  double f_max = 0.0;
  QVerdict verdict = QVerdict::Chain;
  std::optional<double> q0;
  std::optional<double> q1;
  std::optional<double> q2;
  std::optional<double> q3;
  std::optional<double> t_tilde;
  std::vector<double> t_grid;
};

// Q1..Q3 and t~(a) over the path's grid (the +-t_max solutions are only used
// for the limits). Outside (f_min, f_max] the report carries the range
// verdict and q0 = 1 or 0 instead. q0 inside the range is the caller's oracle
// value, if any. argmin ties go to the smallest |t|.
SuperquantileReport q_chain(const TiltPath& path, double a,
                            std::optional<double> q0 = std::nullopt);

struct GridBox {
  std::vector<double> lo;
  std::vector<double> hi;
};

// min over a regular grid (spacing `resolution`, endpoints included) of
// Q(a; theta). Parameter dimension must be 1 or 2.
double q_zero_grid_oracle(const EmpiricalProblem& problem, double a, const GridBox& box,
                          double resolution);

}  // namespace term
