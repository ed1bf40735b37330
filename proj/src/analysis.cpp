#include "term/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "term/error.hpp"
#include "term/hierarchy.hpp"
#include "term/numfmt.hpp"

namespace term {

double entropy(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

LossStats loss_stats(const LossVector& losses, double t) {
  const auto v = losses.values();
  const double n = static_cast<double>(v.size());
  const auto ext = extreme_losses(losses);
  LossStats s;
  s.mean = ext.avg_loss;
  s.min_loss = ext.min_loss;
  s.max_loss = ext.max_loss;
  double sq = 0.0, dev = 0.0;
  for (double f : v) {
    sq += f * f;
    dev += (f - s.mean) * (f - s.mean);
  }
  s.variance = dev / n;
  // <f, 1> / (|f| sqrt(N)) = mean / sqrt(mean of squares)
  s.cosine_to_ones = sq > 0.0 ? s.mean / std::sqrt(sq / n) : 1.0;
  const TiltWeights w = tilt_weights(losses, t);
  s.weight_entropy = entropy(w.values());
  return s;
}

SweepResult tradeoff_sweep(const EmpiricalProblem& problem, const std::vector<double>& t_grid,
                           const SolverConfig& cfg, const std::vector<double>& entropy_taus) {
  if (t_grid.empty()) throw InputError("sweep grid is empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!std::isfinite(t_grid[i])) throw InputError("sweep grid entries must be finite");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) {
      throw InputError("sweep grid must be strictly increasing");
    }
  }
  for (double tau : entropy_taus) {
    if (!std::isfinite(tau)) throw InputError("entropy tilts must be finite");
  }
  SweepResult out;
  out.entropy_taus = entropy_taus;
  for (double t : t_grid) {
    SweepPoint p;
    p.t = t;
    SolverConfig c = cfg;
    if (t < 0.0 && c.continuation == Continuation::None) c.continuation = Continuation::Linear;
    try {
      const auto trace = batch_solve(problem, TiltTree::flat(problem.num_units(), t), c);
      const LossVector losses = problem.losses(trace.theta);
      p.theta = trace.theta;
      p.stats = loss_stats(losses, t);
      p.objective = tilted_objective(losses, t);
      for (double tau : entropy_taus) {
        const TiltWeights w = tilt_weights(losses, tau);
        p.entropies.push_back(entropy(w.values()));
      }
      p.iterations = trace.iterations;
      p.termination = to_string(trace.reason);
      p.ok = true;
    } catch (const Error& e) {
      p.error = e.what();
    }
    out.points.push_back(std::move(p));
  }
  return out;
}

namespace {

enum class Direction { Up, Down };

template <class Value, class Keep>
PropertyCheck monotone(const std::string& name, const SweepResult& sweep, Direction dir,
                       Value value, Keep keep, double rel_tol, double abs_floor) {
  PropertyCheck c;
  c.name = name;
  const SweepPoint* prev = nullptr;
  for (const auto& p : sweep.points) {
    if (!keep(p.t)) continue;
    if (!p.ok) {
      // A hole in the sweep leaves the claim unchecked there.
      c.passed = false;
      prev = nullptr;
      continue;
    }
    if (prev != nullptr) {
      const double a = value(*prev);
      const double b = value(p);
      const double wrong = dir == Direction::Up ? a - b : b - a;
      const double band = rel_tol * std::max(std::abs(a), std::abs(b)) + abs_floor;
      ++c.pairs_checked;
      if (wrong > band) {
        c.passed = false;
        c.worst_violation = std::max(c.worst_violation, wrong - band);
      }
    }
    prev = &p;
  }
  return c;
}

}  // namespace

std::vector<PropertyCheck> check_sweep_properties(const SweepResult& sweep, double rel_tol,
                                                  double abs_floor) {
  const auto pos = [](double t) { return t >= 0.0; };
  const auto neg = [](double t) { return t <= 0.0; };
  const auto all = [](double) { return true; };
  const auto avg = [](const SweepPoint& p) { return p.stats.mean; };
  std::vector<PropertyCheck> out;
  out.push_back(monotone("max_loss_nonincreasing_t_pos", sweep, Direction::Down,
                         [](const SweepPoint& p) { return p.stats.max_loss; }, pos, rel_tol,
                         abs_floor));
  out.push_back(
      monotone("avg_loss_nondecreasing_t_pos", sweep, Direction::Up, avg, pos, rel_tol, abs_floor));
  out.push_back(monotone("min_loss_nondecreasing_t_neg", sweep, Direction::Up,
                         [](const SweepPoint& p) { return p.stats.min_loss; }, neg, rel_tol,
                         abs_floor));
  out.push_back(monotone("avg_loss_nonincreasing_t_neg", sweep, Direction::Down, avg, neg,
                         rel_tol, abs_floor));
  out.push_back(monotone("variance_nonincreasing", sweep, Direction::Down,
                         [](const SweepPoint& p) { return p.stats.variance; }, all, rel_tol,
                         abs_floor));
  out.push_back(monotone("cosine_nondecreasing", sweep, Direction::Up,
                         [](const SweepPoint& p) { return p.stats.cosine_to_ones; }, all,
                         rel_tol, abs_floor));
  for (std::size_t k = 0; k < sweep.entropy_taus.size(); ++k) {
    out.push_back(monotone("entropy_nondecreasing_tau=" + format_number(sweep.entropy_taus[k]),
                           sweep, Direction::Up,
                           [k](const SweepPoint& p) { return p.entropies[k]; }, all, rel_tol,
                           abs_floor));
  }
  out.push_back(monotone("objective_nondecreasing", sweep, Direction::Up,
                         [](const SweepPoint& p) { return p.objective; }, all, rel_tol,
                         abs_floor));
  return out;
}

void write_sweep_csv(const SweepResult& sweep, std::ostream& out) {
  std::size_t dim = 0;
  for (const auto& p : sweep.points) dim = std::max(dim, p.theta.size());
  out << "t,ok,objective,avg_loss,min_loss,max_loss,variance,cosine,entropy";
  for (double tau : sweep.entropy_taus) out << ",H_tau=" << format_number(tau);
  out << ",iterations,termination";
  for (std::size_t j = 0; j < dim; ++j) out << ",theta_" << j;
  out << '\n';
  for (const auto& p : sweep.points) {
    out << format_number(p.t) << ',' << (p.ok ? 1 : 0);
    if (p.ok) {
      for (double v : {p.objective, p.stats.mean, p.stats.min_loss, p.stats.max_loss,
                       p.stats.variance, p.stats.cosine_to_ones, p.stats.weight_entropy}) {
        out << ',' << format_number(v);
      }
      for (double h : p.entropies) out << ',' << format_number(h);
      out << ',' << p.iterations << ',' << p.termination;
      for (double v : p.theta) out << ',' << format_number(v);
    } else {
      for (std::size_t k = 0; k < 9 + sweep.entropy_taus.size() + dim; ++k) out << ',';
    }
    out << '\n';
  }
}

}  // namespace term
