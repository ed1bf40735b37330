#include "term/superquantile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "term/error.hpp"
#include "term/hierarchy.hpp"

namespace term {

double quantile_exceeding(const LossVector& losses, double a) {
  std::size_t count = 0;
  for (double f : losses.values()) {
    if (f >= a) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(losses.size());
}

double q_tilde_bound(const LossVector& losses, double a, double t, double f_min) {
  if (!std::isfinite(a) || !std::isfinite(f_min)) throw InputError("q_tilde_bound: non-finite input");
  if (!(a > f_min)) {
    std::ostringstream msg;
    msg << "q_tilde_bound: threshold a = " << a << " must exceed f_min = " << f_min;
    throw DomainError(msg.str());
  }
  const double r = tilted_objective(losses, t);
  if (t == 0.0) return (r - f_min) / (a - f_min);
  const double u = (r - f_min) * t;
  const double v = (a - f_min) * t;
  if (t > 0.0 && v > 1.0) return std::exp(u - v) * -std::expm1(-u) / -std::expm1(-v);
  return std::expm1(u) / std::expm1(v);
}

double k_loss(const LossVector& losses, std::size_t k) {
  if (k < 1 || k > losses.size()) {
    std::ostringstream msg;
    msg << "k_loss: k = " << k << " outside [1, " << losses.size() << "]";
    throw InputError(msg.str());
  }
  std::vector<double> v(losses.values().begin(), losses.values().end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
  return v[k - 1];
}

std::string to_string(BoundVerdict v) {
  switch (v) {
    case BoundVerdict::Holds:
      return "holds";
    case BoundVerdict::Violated:
      return "violated";
    case BoundVerdict::Vacuous:
      return "vacuous";
  }
  return "unknown";
}

KLossBound k_loss_bound_check(const LossVector& losses, std::size_t k, double t,
                              double f_min) {
  const std::size_t n = losses.size();
  if (k < 1 || k >= n) throw InputError("k_loss_bound_check: need 1 <= k < N");
  if (!(t > 0.0) || !std::isfinite(t)) throw InputError("k_loss_bound_check: need t > 0");
  KLossBound out;
  out.k_loss = k_loss(losses, k);
  const double q = static_cast<double>(k) / static_cast<double>(n);
  const double x = (tilted_objective(losses, t) - f_min) * t;
  // log(e^x - q) = x + log1p(-q e^-x), positive argument iff q e^-x < 1.
  const double shrink = q * std::exp(-x);
  if (!(shrink < 1.0)) return out;
  out.bound = f_min + (x + std::log1p(-shrink) - std::log1p(-q)) / t;
  const double slack = 1e-12 * std::max(1.0, std::abs(out.bound));
  out.verdict = out.k_loss <= out.bound + slack ? BoundVerdict::Holds : BoundVerdict::Violated;
  return out;
}

std::vector<double> default_t_grid() {
  std::vector<double> mags;
  for (int k = 0; k < 16; ++k) mags.push_back(std::pow(10.0, -2.0 + 4.0 * k / 15.0));
  std::vector<double> grid;
  for (auto it = mags.rbegin(); it != mags.rend(); ++it) grid.push_back(-*it);
  grid.push_back(0.0);
  for (double m : mags) grid.push_back(m);
  return grid;
}

TiltPath solve_tilt_path(const EmpiricalProblem& problem, std::vector<double> t_grid,
                         double t_max, const SolverConfig& cfg) {
  if (t_grid.empty()) throw InputError("tilt grid is empty");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InputError("t_max must be positive");
  for (double t : t_grid) {
    if (!std::isfinite(t)) throw InputError("tilt grid entries must be finite");
  }
  TiltPath path;
  path.t_max = t_max;
  auto solve = [&](double t) {
    SolverConfig c = cfg;
    if (t < 0.0 && c.continuation == Continuation::None) c.continuation = Continuation::Linear;
    const auto trace = batch_solve(problem, TiltTree::flat(problem.num_units(), t), c);
    return trace.theta;
  };
  path.tilts = std::move(t_grid);
  for (double t : path.tilts) {
    path.thetas.push_back(solve(t));
    path.losses.push_back(problem.losses(path.thetas.back()));
  }
  const auto lo = solve(-t_max);
  const auto hi = solve(t_max);
  const LossVector lo_losses = problem.losses(lo);
  const LossVector hi_losses = problem.losses(hi);

  path.f_min = extreme_losses(lo_losses).min_loss;
  path.f_max = extreme_losses(hi_losses).max_loss;
  for (const auto& l : path.losses) {
    const auto ext = extreme_losses(l);
    path.f_min = std::min(path.f_min, ext.min_loss);
    path.f_max = std::min(path.f_max, ext.max_loss);
  }
  path.f_min = std::min(path.f_min, extreme_losses(hi_losses).min_loss);
  return path;
}

std::string to_string(QVerdict v) {
  switch (v) {
    case QVerdict::Chain:
      return "chain";
    case QVerdict::BelowRange:
      return "below_range";
    case QVerdict::AboveRange:
      return "above_range";
  }
  return "unknown";
}

SuperquantileReport q_chain(const TiltPath& path, double a, std::optional<double> q0) {
  if (!std::isfinite(a)) throw InputError("q_chain: threshold must be finite");
  SuperquantileReport rep;
  rep.a = a;
  rep.f_min = path.f_min;
  rep.f_max = path.f_max;
  rep.t_grid = path.tilts;
  if (a <= path.f_min) {
    rep.verdict = QVerdict::BelowRange;
    rep.q0 = 1.0;
    return rep;
  }
  if (a > path.f_max) {
    rep.verdict = QVerdict::AboveRange;
    rep.q0 = 0.0;
    return rep;
  }
  rep.q0 = q0;
  double q1 = 2.0, q3 = 0.0, t_best = 0.0;
  std::size_t best = path.tilts.size();
  for (std::size_t i = 0; i < path.tilts.size(); ++i) {
    const double t = path.tilts[i];
    q1 = std::min(q1, quantile_exceeding(path.losses[i], a));
    const double bound = q_tilde_bound(path.losses[i], a, t, path.f_min);
    if (best == path.tilts.size() || bound < q3 ||
        (bound == q3 && std::abs(t) < std::abs(t_best))) {
      best = i;
      q3 = bound;
      t_best = t;
    }
  }
  rep.q1 = q1;
  rep.q2 = quantile_exceeding(path.losses[best], a);
  rep.q3 = q3;
  rep.t_tilde = t_best;
  return rep;
}

double q_zero_grid_oracle(const EmpiricalProblem& problem, double a, const GridBox& box,
                          double resolution) {
  const std::size_t d = problem.param_dim();
  if (d < 1 || d > 2) throw InputError("grid oracle supports parameter dimension 1 or 2");
  if (box.lo.size() != d || box.hi.size() != d) throw InputError("grid box dimension mismatch");
  if (!(resolution > 0.0)) throw InputError("grid resolution must be positive");
  std::vector<long> steps(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (!(box.hi[j] >= box.lo[j])) throw InputError("grid box bounds reversed");
    steps[j] = static_cast<long>(std::floor((box.hi[j] - box.lo[j]) / resolution + 1e-9));
  }
  double best = 1.0;
  std::vector<double> theta(d);
  const long outer = d == 2 ? steps[1] : 0;
  for (long j = 0; j <= outer; ++j) {
    if (d == 2) theta[1] = box.lo[1] + static_cast<double>(j) * resolution;
    for (long i = 0; i <= steps[0]; ++i) {
      theta[0] = box.lo[0] + static_cast<double>(i) * resolution;
      best = std::min(best, quantile_exceeding(problem.losses(theta), a));
      if (best == 0.0) return 0.0;
    }
  }
  return best;
}

}  // namespace term
