#include "term/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "term/error.hpp"
#include "term/rng.hpp"

namespace term {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

void require_linear_layout(std::span<const double> x, std::span<const double> theta,
                           const char* op) {
  if (theta.size() != x.size() + 1) {
    std::ostringstream msg;
    msg << op << ": expected " << x.size() + 1 << " parameters (weights + intercept), got "
        << theta.size();
    throw InputError(msg.str());
  }
}

// log(1 + exp(-m)) without overflow.
double softplus_neg(double m) {
  return m >= 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// d/dm log(1 + exp(-m)) = -1 / (1 + exp(m)).
double softplus_neg_slope(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(m));
}

Eigen::Map<const Eigen::MatrixXd> as_basis(std::span<const double> theta,
                                           Eigen::Index rows, Eigen::Index cols) {
  return {theta.data(), rows, cols};
}

}  // namespace

std::string to_string(const LossKind& kind) {
  return std::visit(
      overloaded{[](const SquaredLoss&) { return std::string("squared"); },
                 [](const LogisticLoss&) { return std::string("logistic"); },
                 [](const PointDistanceLoss&) { return std::string("point"); },
                 [](const PcaReconstructionLoss& p) {
                   return "pca:" + std::to_string(p.rank);
                 }},
      kind);
}

LossKind parse_loss_kind(const std::string& text) {
  if (text == "squared") return SquaredLoss{};
  if (text == "logistic") return LogisticLoss{};
  if (text == "point") return PointDistanceLoss{};
  if (text.rfind("pca:", 0) == 0) {
    try {
      std::size_t used = 0;
      const int rank = std::stoi(text.substr(4), &used);
      if (used == text.size() - 4 && rank >= 1) return PcaReconstructionLoss{rank};
    } catch (const std::exception&) {
    }
  }
  throw InputError("unknown loss kind '" + text +
                   "' (expected squared, logistic, point or pca:<rank>)");
}

LossAndGrad squared_loss(std::span<const double> x, double y,
                         std::span<const double> theta) {
  require_linear_layout(x, theta, "squared_loss");
  const double r = y - dot(x, theta.first(x.size())) - theta[x.size()];
  LossAndGrad out{r * r, std::vector<double>(theta.size())};
  for (std::size_t j = 0; j < x.size(); ++j) out.grad[j] = -2.0 * r * x[j];
  out.grad[x.size()] = -2.0 * r;
  return out;
}

LossAndGrad logistic_loss(std::span<const double> x, double y,
                          std::span<const double> theta) {
  require_linear_layout(x, theta, "logistic_loss");
  if (y != 1.0 && y != -1.0) throw InputError("logistic_loss: label must be -1 or +1");
  const double margin = y * (dot(x, theta.first(x.size())) + theta[x.size()]);
  const double slope = softplus_neg_slope(margin) * y;
  LossAndGrad out{softplus_neg(margin), std::vector<double>(theta.size())};
  for (std::size_t j = 0; j < x.size(); ++j) out.grad[j] = slope * x[j];
  out.grad[x.size()] = slope;
  return out;
}

LossAndGrad point_distance_loss(std::span<const double> x,
                                std::span<const double> theta) {
  if (theta.size() != x.size()) {
    throw InputError("point_distance_loss: parameter and sample dimensions differ");
  }
  LossAndGrad out{0.0, std::vector<double>(theta.size())};
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = theta[j] - x[j];
    out.value += d * d;
    out.grad[j] = 2.0 * d;
  }
  return out;
}

PcaGroup::PcaGroup(Eigen::MatrixXd data, int rank)
    : data_(std::move(data)), rank_(rank), optimal_residual_(0.0) {
  optimal_residual_ = rank_r_approximation(data_, rank_).residual_energy;
}

LossAndGrad pca_loss(const PcaGroup& group, std::span<const double> theta) {
  const auto& X = group.data();
  const Eigen::Index d = X.cols();
  const Eigen::Index r = group.rank();
  if (static_cast<Eigen::Index>(theta.size()) != d * r) {
    std::ostringstream msg;
    msg << "pca_loss: expected " << d * r << " parameters (" << d << " x " << r
        << "), got " << theta.size();
    throw InputError(msg.str());
  }
  const auto U = as_basis(theta, d, r);
  const double n = static_cast<double>(X.rows());
  const Eigen::MatrixXd XU = X * U;
  const Eigen::MatrixXd residual = X - XU * U.transpose();
  LossAndGrad out;
  out.value = (residual.squaredNorm() - group.optimal_residual()) / n;

  // ||X - X U U^T||^2 = ||X||^2 - 2 tr(U^T S U) + tr(U^T S U U^T U), S = X^T X:
  // gradient -4 S U + 2 S U (U^T U) + 2 U (U^T S U).
  const Eigen::MatrixXd SU = X.transpose() * XU;
  const Eigen::MatrixXd grad =
      (-4.0 * SU + 2.0 * SU * (U.transpose() * U) + 2.0 * U * (U.transpose() * SU)) / n;
  out.grad.assign(grad.data(), grad.data() + grad.size());
  return out;
}

std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw InputError("fd_gradient: step must be positive");
  std::vector<double> probe(theta.begin(), theta.end());
  std::vector<double> grad(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    probe[j] = theta[j] + h;
    const double up = f(probe);
    probe[j] = theta[j] - h;
    const double down = f(probe);
    probe[j] = theta[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

LowRankApproximation rank_r_approximation(const Eigen::MatrixXd& data, int rank,
                                          const PowerIterationOptions& options) {
  const Eigen::Index d = data.cols();
  if (rank < 1 || rank >= std::min(data.rows(), d)) {
    std::ostringstream msg;
    msg << "rank_r_approximation: rank " << rank << " must satisfy 1 <= r < min("
        << data.rows() << ", " << d << ")";
    throw InputError(msg.str());
  }
  const Eigen::MatrixXd gram = data.transpose() * data;
  Eigen::MatrixXd basis(d, rank);
  Eigen::VectorXd eigenvalues(rank);
  double scale = 0.0;

  for (int k = 0; k < rank; ++k) {
    Rng rng(0x9CA0 + static_cast<std::uint64_t>(k));
    Eigen::VectorXd v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = rng.normal();
    auto deflate = [&](Eigen::VectorXd& w) {
      for (int j = 0; j < k; ++j) w -= basis.col(j).dot(w) * basis.col(j);
    };
    deflate(v);
    v.normalize();

    double lambda = 0.0;
    double residual = 0.0;
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
      // Deflated operator: S restricted to the complement of earlier directions.
      Eigen::VectorXd w = gram * v;
      deflate(w);
      lambda = v.dot(w);
      const double reference = std::max(k == 0 ? std::abs(lambda) : scale, 1e-300);
      residual = (w - lambda * v).norm() / reference;
      if (residual <= options.tolerance) {
        converged = true;
        break;
      }
      const double norm = w.norm();
      if (norm == 0.0) {
        converged = true;  // v spans part of the null space
        residual = 0.0;
        break;
      }
      v = w / norm;
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "rank_r_approximation: direction " << k << " did not converge after "
          << options.max_iterations << " power iterations (relative residual "
          << residual << ")";
      throw NumericalError(msg.str(), residual);
    }
    if (k == 0) scale = std::abs(lambda);
    basis.col(k) = v;
    eigenvalues(k) = lambda;
  }

  LowRankApproximation out;
  out.approximation = data * basis * basis.transpose();
  out.basis = std::move(basis);
  out.eigenvalues = std::move(eigenvalues);
  out.residual_energy = (data - out.approximation).squaredNorm();
  return out;
}

void orthonormalize_columns(std::span<double> theta, std::size_t rows,
                            std::size_t cols) {
  if (theta.size() != rows * cols) {
    throw InputError("orthonormalize_columns: size mismatch");
  }
  Eigen::Map<Eigen::MatrixXd> U(theta.data(), static_cast<Eigen::Index>(rows),
                                static_cast<Eigen::Index>(cols));
  for (Eigen::Index k = 0; k < U.cols(); ++k) {
    for (Eigen::Index j = 0; j < k; ++j) U.col(k) -= U.col(j).dot(U.col(k)) * U.col(j);
    const double norm = U.col(k).norm();
    if (!(norm > 1e-300)) {
      throw NumericalError("orthonormalize_columns: column collapsed to zero");
    }
    U.col(k) /= norm;
  }
}

EmpiricalProblem::EmpiricalProblem(const TabularDataset& data, LossKind kind, double l2)
    : data_(data), kind_(kind), l2_(l2) {
  data_.validate();
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw InputError("ridge coefficient must be >= 0");
  const std::size_t dx = data_.feature_dim();
  std::visit(
      overloaded{
          [&](const SquaredLoss&) { param_dim_ = dx + 1; },
          [&](const LogisticLoss&) {
            param_dim_ = dx + 1;
            for (std::size_t i = 0; i < data_.size(); ++i) {
              if (data_.targets[i] != 1.0 && data_.targets[i] != -1.0) {
                throw InputError("logistic loss needs labels in {-1, +1}; row " +
                                 std::to_string(i) + " has " +
                                 std::to_string(data_.targets[i]));
              }
            }
          },
          [&](const PointDistanceLoss&) {
            if (dx == 0) throw InputError("point estimation needs at least one feature");
            param_dim_ = dx;
          },
          [&](const PcaReconstructionLoss& p) {
            if (p.rank < 1 || static_cast<std::size_t>(p.rank) >= dx) {
              throw InputError("PCA rank " + std::to_string(p.rank) +
                               " must satisfy 1 <= r < feature dimension " +
                               std::to_string(dx));
            }
            param_dim_ = dx * static_cast<std::size_t>(p.rank);
            // One loss unit per group, in order of first appearance.
            std::vector<std::vector<std::size_t>> members;
            std::unordered_map<std::string, std::size_t> slot;
            for (std::size_t i = 0; i < data_.size(); ++i) {
              const std::string label = data_.group.empty() ? "all" : data_.group[i];
              auto [it, fresh] = slot.emplace(label, members.size());
              if (fresh) {
                members.emplace_back();
                pca_names_.push_back(label);
              }
              members[it->second].push_back(i);
            }
            for (const auto& rows : members) {
              Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                                static_cast<Eigen::Index>(dx));
              for (std::size_t k = 0; k < rows.size(); ++k) {
                X.row(static_cast<Eigen::Index>(k)) =
                    data_.features.row(static_cast<Eigen::Index>(rows[k]));
              }
              pca_groups_.emplace_back(std::move(X), p.rank);
            }
          }},
      kind_);

  if (pca_groups_.empty()) {
    unit_paths_ = data_.group_paths();
  } else {
    unit_paths_.assign(pca_groups_.size(), {});
  }
}

std::size_t EmpiricalProblem::num_units() const noexcept {
  return pca_groups_.empty() ? data_.size() : pca_groups_.size();
}

LossAndGrad EmpiricalProblem::unit_loss(std::size_t unit,
                                        std::span<const double> theta) const {
  if (theta.size() != param_dim_) {
    std::ostringstream msg;
    msg << "parameter vector has " << theta.size() << " entries, expected "
        << param_dim_;
    throw InputError(msg.str());
  }
  LossAndGrad out = std::visit(
      overloaded{[&](const SquaredLoss&) {
                   return squared_loss(data_.row(unit), data_.targets[unit], theta);
                 },
                 [&](const LogisticLoss&) {
                   return logistic_loss(data_.row(unit), data_.targets[unit], theta);
                 },
                 [&](const PointDistanceLoss&) {
                   return point_distance_loss(data_.row(unit), theta);
                 },
                 [&](const PcaReconstructionLoss&) {
                   return pca_loss(pca_groups_[unit], theta);
                 }},
      kind_);
  if (l2_ > 0.0) {
    for (std::size_t j = 0; j < theta.size(); ++j) {
      out.value += 0.5 * l2_ * theta[j] * theta[j];
      out.grad[j] += l2_ * theta[j];
    }
  }
  return out;
}

double EmpiricalProblem::unit_value(std::size_t unit,
                                    std::span<const double> theta) const {
  return unit_loss(unit, theta).value;
}

LossVector EmpiricalProblem::losses(std::span<const double> theta) const {
  std::vector<double> values(num_units());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = unit_value(i, theta);
  return LossVector(std::move(values));
}

EmpiricalProblem::Evaluation EmpiricalProblem::evaluate(
    std::span<const double> theta) const {
  std::vector<std::size_t> all(num_units());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return evaluate(theta, all);
}

EmpiricalProblem::Evaluation EmpiricalProblem::evaluate(
    std::span<const double> theta, std::span<const std::size_t> units) const {
  std::vector<double> values(units.size());
  GradientMatrix grads(units.size(), param_dim_);
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (units[k] >= num_units()) throw InputError("evaluate: unit index out of range");
    LossAndGrad lg = unit_loss(units[k], theta);
    values[k] = lg.value;
    std::copy(lg.grad.begin(), lg.grad.end(), grads.row(k).begin());
  }
  for (std::size_t k = 0; k < units.size(); ++k) {
    for (double g : grads.row(k)) {
      if (!std::isfinite(g)) throw NumericalError("non-finite loss gradient");
    }
  }
  return {LossVector(std::move(values)), std::move(grads)};
}

bool EmpiricalProblem::needs_retraction() const noexcept {
  return std::holds_alternative<PcaReconstructionLoss>(kind_);
}

void EmpiricalProblem::retract(std::span<double> theta) const {
  if (const auto* p = std::get_if<PcaReconstructionLoss>(&kind_)) {
    orthonormalize_columns(theta, data_.feature_dim(), static_cast<std::size_t>(p->rank));
  }
}

std::vector<double> EmpiricalProblem::default_initial_theta() const {
  if (const auto* p = std::get_if<PcaReconstructionLoss>(&kind_)) {
    Eigen::MatrixXd pooled = data_.features;
    const auto approx = rank_r_approximation(pooled, p->rank);
    return {approx.basis.data(), approx.basis.data() + approx.basis.size()};
  }
  return std::vector<double>(param_dim_, 0.0);
}

}  // namespace term
