#include "term/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "term/error.hpp"
#include "term/numfmt.hpp"
#include "term/rng.hpp"

namespace term {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool any_negative(const std::vector<double>& v) {
  return std::any_of(v.begin(), v.end(), [](double t) { return t < 0.0; });
}

std::vector<double> starting_point(const EmpiricalProblem& problem, const SolverConfig& cfg) {
  std::vector<double> theta =
      cfg.initial_theta.empty() ? problem.default_initial_theta() : cfg.initial_theta;
  if (theta.size() != problem.param_dim()) {
    std::ostringstream msg;
    msg << "initial theta has " << theta.size() << " entries, the problem needs "
        << problem.param_dim();
    throw InputError(msg.str());
  }
  for (double x : theta) {
    if (!std::isfinite(x)) throw InputError("initial theta must be finite");
  }
  if (problem.needs_retraction()) problem.retract(theta);
  return theta;
}

void require_tree_fits(const EmpiricalProblem& problem, const TiltTree& tree) {
  if (tree.num_samples() != problem.num_units()) {
    std::ostringstream msg;
    msg << "tilt tree covers " << tree.num_samples() << " units but the problem has "
        << problem.num_units();
    throw InputError(msg.str());
  }
}

void require_ramp_or_waiver(const TiltTree& tree, const SolverConfig& cfg) {
  if (any_negative(tree.levels()) && cfg.continuation == Continuation::None &&
      !cfg.allow_negative_without_continuation) {
    throw InputError(
        "negative tilt needs continuation (or allow_negative_without_continuation)");
  }
}

void guard(double objective, const std::vector<double>& theta, const SolverConfig& cfg,
           int iter) {
  if (!std::isfinite(objective) || objective > cfg.divergence_threshold) {
    std::ostringstream msg;
    msg << "objective " << objective << " passed the divergence guard "
        << cfg.divergence_threshold << " at iteration " << iter;
    throw DivergedError(msg.str(), theta, iter);
  }
}

bool wants_snapshot(const SolverConfig& cfg, int steps) {
  return std::find(cfg.snapshot_iters.begin(), cfg.snapshot_iters.end(), steps) !=
         cfg.snapshot_iters.end();
}

bool wants_record(const SolverConfig& cfg, int iter) {
  return cfg.record_every > 0 && iter % cfg.record_every == 0;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw InputError("step size must be positive");
  }
  if (max_iters < 0) throw InputError("max_iters must be >= 0");
  if (!(grad_tol >= 0.0)) throw InputError("grad_tol must be >= 0");
  if (continuation_iters < 0 || continuation_iters > max_iters) {
    throw InputError("continuation length K must satisfy 0 <= K <= max_iters");
  }
  if (!(smoothing > 0.0 && smoothing <= 1.0)) {
    throw InputError("smoothing lambda must lie in (0, 1]");
  }
  if (minibatch_size == 0) throw InputError("minibatch size must be >= 1");
  if (record_every < 0) throw InputError("record_every must be >= 0");
  if (!(divergence_threshold > 0.0)) throw InputError("divergence threshold must be > 0");
}

int SolverConfig::ramp_length() const {
  if (continuation == Continuation::None) return 0;
  const int k = continuation_iters > 0 ? continuation_iters : max_iters / 2;
  return std::max(k, 1);
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::GradientTolerance:
      return "gradient_tolerance";
    case Termination::MaxIterations:
      return "max_iterations";
    case Termination::Stalled:
      return "stalled";
  }
  return "unknown";
}

std::vector<double> continuation_schedule(double t_target, int max_iters, int ramp) {
  if (!std::isfinite(t_target)) throw InputError("continuation target must be finite");
  if (max_iters < 0) throw InputError("max_iters must be >= 0");
  std::vector<double> out(static_cast<std::size_t>(max_iters) + 1, t_target);
  if (t_target >= 0.0) return out;
  if (ramp < 1 || ramp > max_iters) {
    throw InputError("continuation length K must satisfy 1 <= K <= max_iters");
  }
  for (int i = 0; i < ramp; ++i) {
    out[static_cast<std::size_t>(i)] = t_target * (static_cast<double>(i) / ramp);
  }
  return out;
}

std::vector<double> tilts_at(const std::vector<double>& targets, const SolverConfig& cfg,
                             int iter) {
  std::vector<double> out(targets);
  const int k = cfg.ramp_length();
  if (k == 0 || iter >= k) return out;
  for (double& t : out) {
    if (t < 0.0) t *= static_cast<double>(iter) / k;
  }
  return out;
}

TreeGradient tree_gradient(const EmpiricalProblem& problem, const TiltTree& tree,
                           std::span<const double> theta) {
  const auto eval = problem.evaluate(theta);
  const auto hw = tree_tilted_weights(tree, eval.losses);
  TreeGradient out;
  out.objective = tree_tilted_objective(tree, eval.losses);
  out.grad = weighted_row_sum(eval.grads, hw.sample_weights.values());
  return out;
}

SolverTrace batch_solve(const EmpiricalProblem& problem, const TiltTree& tree,
                        const SolverConfig& cfg) {
  cfg.validate();
  require_tree_fits(problem, tree);
  require_ramp_or_waiver(tree, cfg);

  SolverTrace trace;
  std::vector<double> theta = starting_point(problem, cfg);
  const int ramp = cfg.ramp_length();
  double accepted_step = cfg.step_size;
  if (wants_snapshot(cfg, 0)) trace.snapshots.push_back({0, theta});

  for (int it = 0;; ++it) {
    const std::vector<double> tilts = tilts_at(tree.levels(), cfg, it);
    const TiltTree current = tree.with_levels(tilts);
    const TreeGradient tg = tree_gradient(problem, current, theta);
    guard(tg.objective, theta, cfg, it);
    const double gnorm = norm2(tg.grad);

    trace.objective = tg.objective;
    trace.grad_norm = gnorm;
    trace.iterations = it;
    if (gnorm < cfg.grad_tol && it >= ramp) {
      trace.reason = Termination::GradientTolerance;
      break;
    }
    if (it == cfg.max_iters) {
      trace.reason = Termination::MaxIterations;
      break;
    }
    if (wants_record(cfg, it)) trace.records.push_back({it, tilts, tg.objective, gnorm});

    if (cfg.step_rule == StepRule::Constant) {
      for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= cfg.step_size * tg.grad[j];
      if (problem.needs_retraction()) problem.retract(theta);
    } else {
      // Armijo: f(theta - a g) <= f(theta) - 1e-4 a |g|^2, halving a.
      // Once the predicted decrease drowns in rounding, compare slopes
      // instead: accept if the directional derivative at the candidate is
      // at most 0.8 |g|^2 (approximate Wolfe).
      double alpha = std::min(cfg.step_size, 2.0 * accepted_step);
      const double noise = 1e-12 * std::max(1.0, std::abs(tg.objective));
      std::vector<double> candidate(theta.size());
      bool accepted = false;
      while (alpha > 1e-20) {
        for (std::size_t j = 0; j < theta.size(); ++j) {
          candidate[j] = theta[j] - alpha * tg.grad[j];
        }
        if (problem.needs_retraction()) problem.retract(candidate);
        const double value = tree_tilted_objective(current, problem.losses(candidate));
        if (value <= tg.objective - 1e-4 * alpha * gnorm * gnorm) {
          accepted = true;
          break;
        }
        if (candidate != theta && std::abs(value - tg.objective) <= noise) {
          const auto next = tree_gradient(problem, current, candidate).grad;
          double slope = 0.0;
          for (std::size_t j = 0; j < theta.size(); ++j) slope -= next[j] * tg.grad[j];
          if (slope <= 0.8 * gnorm * gnorm) {
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        trace.reason = Termination::Stalled;
        break;
      }
      accepted_step = alpha;
      theta.swap(candidate);
    }
    if (wants_snapshot(cfg, it + 1)) trace.snapshots.push_back({it + 1, theta});
  }
  trace.theta = std::move(theta);
  return trace;
}

SolverTrace stochastic_solve(const EmpiricalProblem& problem, const TiltTree& tree,
                             const SolverConfig& cfg) {
  cfg.validate();
  require_tree_fits(problem, tree);
  require_ramp_or_waiver(tree, cfg);
  if (tree.depth() > 2) {
    throw InputError("stochastic solver supports one- or two-level tilt trees");
  }
  if (cfg.step_rule != StepRule::Constant) {
    throw InputError("stochastic solver uses a constant step size");
  }

  // Groups and their members. A one-level tree is a single group whose
  // samples are tilted with the tree's only tilt.
  std::vector<std::vector<std::size_t>> members;
  if (tree.depth() == 1) {
    members.push_back(tree.nodes()[0].samples);
  } else {
    for (std::size_t g : tree.leaf_groups()) members.push_back(tree.nodes()[g].samples);
  }
  for (std::size_t g = 0; g < members.size(); ++g) {
    if (members[g].size() < cfg.minibatch_size) {
      std::ostringstream msg;
      msg << "group " << g << " has " << members[g].size()
          << " samples, fewer than the minibatch size " << cfg.minibatch_size;
      throw InputError(msg.str());
    }
  }
  std::vector<double> log_size(members.size());
  for (std::size_t g = 0; g < members.size(); ++g) {
    log_size[g] = std::log(static_cast<double>(members[g].size()));
  }

  Rng group_rng = Rng::stream(cfg.seed, "group");
  Rng batch_rng = Rng::stream(cfg.seed, "minibatch");
  SolverTrace trace;
  std::vector<double> theta = starting_point(problem, cfg);
  std::vector<double> running(members.size(), 0.0);
  std::vector<std::size_t> units(cfg.minibatch_size);
  std::vector<double> weights(cfg.minibatch_size);
  const double inv_b = 1.0 / static_cast<double>(cfg.minibatch_size);
  if (wants_snapshot(cfg, 0)) trace.snapshots.push_back({0, theta});

  for (int it = 0; it < cfg.max_iters; ++it) {
    const std::vector<double> tilts = tilts_at(tree.levels(), cfg, it);
    const double t = tilts.front();
    const double tau = tilts.back();

    if (wants_record(cfg, it)) {
      const TreeGradient full = tree_gradient(problem, tree.with_levels(tilts), theta);
      guard(full.objective, theta, cfg, it);
      trace.records.push_back({it, tilts, full.objective, norm2(full.grad)});
    }

    // Gumbel-max draw with logits log|g| + t R_g, i.e. P(g) ~ |g| exp(t R_g).
    std::size_t g = 0;
    if (members.size() > 1) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < members.size(); ++k) {
        const double score = log_size[k] + t * running[k] + group_rng.gumbel();
        if (score > best) {
          best = score;
          g = k;
        }
      }
    }
    const auto picks = batch_rng.sample_without_replacement(members[g].size(),
                                                            cfg.minibatch_size);
    for (std::size_t k = 0; k < picks.size(); ++k) units[k] = members[g][picks[k]];

    const auto eval = problem.evaluate(theta, units);
    const double batch_value = tilted_objective(eval.losses, tau);
    running[g] = tilted_average(running[g], batch_value, cfg.smoothing, tau);
    for (std::size_t k = 0; k < units.size(); ++k) {
      weights[k] = std::exp(tau * (eval.losses[k] - running[g])) * inv_b;
      if (!std::isfinite(weights[k])) {
        throw NumericalError("stochastic solver: sample weight overflow");
      }
    }
    const auto step = weighted_row_sum(eval.grads, weights);
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= cfg.step_size * step[j];
    if (problem.needs_retraction()) problem.retract(theta);
    for (double x : theta) {
      if (!std::isfinite(x)) throw DivergedError("stochastic solver: non-finite iterate", theta, it);
    }
    if (wants_snapshot(cfg, it + 1)) trace.snapshots.push_back({it + 1, theta});
  }

  const TreeGradient final_state = tree_gradient(problem, tree, theta);
  guard(final_state.objective, theta, cfg, cfg.max_iters);
  trace.objective = final_state.objective;
  trace.grad_norm = norm2(final_state.grad);
  trace.iterations = cfg.max_iters;
  trace.reason = Termination::MaxIterations;
  trace.running_estimates = running;
  trace.theta = std::move(theta);
  return trace;
}

double estimate_smoothness(const EmpiricalProblem& problem, const TiltTree& tree,
                           std::span<const double> theta, int iterations) {
  const std::size_t d = theta.size();
  const double h = 1e-5;
  Rng rng(0x5300);
  std::vector<double> v(d);
  for (double& x : v) x = rng.normal();
  double n = norm2(v);
  for (double& x : v) x /= n;

  std::vector<double> up(d), down(d), hv(d);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t j = 0; j < d; ++j) {
      up[j] = theta[j] + h * v[j];
      down[j] = theta[j] - h * v[j];
    }
    const auto gu = tree_gradient(problem, tree, up).grad;
    const auto gd = tree_gradient(problem, tree, down).grad;
    for (std::size_t j = 0; j < d; ++j) hv[j] = (gu[j] - gd[j]) / (2.0 * h);
    lambda = 0.0;
    for (std::size_t j = 0; j < d; ++j) lambda += v[j] * hv[j];
    n = norm2(hv);
    if (n == 0.0) break;
    for (std::size_t j = 0; j < d; ++j) v[j] = hv[j] / n;
  }
  // |H v| for the converged unit v; at least the Rayleigh quotient.
  return std::max(std::abs(lambda), n);
}

void write_trace_csv(const SolverTrace& trace, std::ostream& out) {
  const std::size_t levels = trace.records.empty() ? 0 : trace.records.front().tilts.size();
  out << "iter";
  for (std::size_t k = 0; k < levels; ++k) out << ",t" << k;
  out << ",objective,grad_norm\n";
  for (const auto& r : trace.records) {
    out << r.iter;
    for (double t : r.tilts) out << ',' << format_number(t);
    out << ',' << format_number(r.objective) << ',' << format_number(r.grad_norm) << '\n';
  }
}

}  // namespace term
