#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "term/dataset.hpp"
#include "term/tilt.hpp"

namespace term {

// Loss families. Parameter layouts:
//   Squared, Logistic  theta = [w_1 .. w_dx, b]   (weights then intercept)
//   PointDistance      theta = point in R^dx
//   PcaReconstruction  theta = U (dx x rank), column-major
struct SquaredLoss {};      // (y - w.x - b)^2
struct LogisticLoss {};     // log(1 + exp(-y (w.x + b))), y in {-1, +1}
struct PointDistanceLoss {};  // ||x - theta||^2, point estimation
struct PcaReconstructionLoss {
  int rank = 1;
};

using LossKind =
    std::variant<SquaredLoss, LogisticLoss, PointDistanceLoss, PcaReconstructionLoss>;

std::string to_string(const LossKind& kind);
// Accepts "squared", "logistic", "point", "pca:<rank>".
LossKind parse_loss_kind(const std::string& text);

struct LossAndGrad {
  double value = 0.0;
  std::vector<double> grad;
};

LossAndGrad squared_loss(std::span<const double> x, double y,
                         std::span<const double> theta);
LossAndGrad logistic_loss(std::span<const double> x, double y,
                          std::span<const double> theta);
LossAndGrad point_distance_loss(std::span<const double> x,
                                std::span<const double> theta);

/// One group's data for the excess PCA reconstruction loss
///   f(X; U) = (||X - X U U^T||_F^2 - ||X - X_hat||_F^2) / |X|
/// with X_hat the optimal rank-r approximation, computed once at construction.
class PcaGroup {
 public:
  PcaGroup(Eigen::MatrixXd data, int rank);

  const Eigen::MatrixXd& data() const noexcept { return data_; }
  int rank() const noexcept { return rank_; }
  double optimal_residual() const noexcept { return optimal_residual_; }

 private:
  Eigen::MatrixXd data_;
  int rank_;
  double optimal_residual_;
};

LossAndGrad pca_loss(const PcaGroup& group, std::span<const double> theta);

// Central differences (f(theta + h e_j) - f(theta - h e_j)) / (2h).
std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h);

struct PowerIterationOptions {
  double tolerance = 1e-10;  // residual relative to the top eigenvalue
  int max_iterations = 20000;
};

struct LowRankApproximation {
  Eigen::MatrixXd approximation;  // X V V^T
  Eigen::MatrixXd basis;          // d x r, orthonormal columns
  Eigen::VectorXd eigenvalues;    // of X^T X, descending
  double residual_energy = 0.0;   // ||X - X V V^T||_F^2
};

// Top-r right singular directions of X by power iteration with deflation on
// X^T X. Requires 1 <= rank < min(rows, cols). Throws NumericalError (with the
// achieved residual) when a direction fails to converge.
LowRankApproximation rank_r_approximation(const Eigen::MatrixXd& data, int rank,
                                          const PowerIterationOptions& options = {});

// Modified Gram-Schmidt on the columns of a column-major rows x cols block.
void orthonormalize_columns(std::span<double> theta, std::size_t rows,
                            std::size_t cols);

/// A dataset bound to a loss family: the thing solvers minimize.
///
/// Loss units are samples for Squared/Logistic/PointDistance and groups for
/// PcaReconstruction (fair PCA tilts the per-group loss). An optional ridge
/// term (l2/2)||theta||^2 is added to every unit's loss.
class EmpiricalProblem {
 public:
  EmpiricalProblem(const TabularDataset& data, LossKind kind, double l2 = 0.0);

  const TabularDataset& data() const noexcept { return data_; }
  const LossKind& kind() const noexcept { return kind_; }
  std::size_t num_units() const noexcept;
  std::size_t param_dim() const noexcept { return param_dim_; }
  double l2() const noexcept { return l2_; }

  // Group path of every loss unit (outermost first), used to build tilt trees.
  // Empty paths for PCA units.
  const std::vector<std::vector<std::string>>& unit_paths() const noexcept {
    return unit_paths_;
  }
  const std::vector<std::string>& pca_group_names() const noexcept {
    return pca_names_;
  }

  LossAndGrad unit_loss(std::size_t unit, std::span<const double> theta) const;
  double unit_value(std::size_t unit, std::span<const double> theta) const;

  LossVector losses(std::span<const double> theta) const;

  struct Evaluation {
    LossVector losses;
    GradientMatrix grads;
  };
  Evaluation evaluate(std::span<const double> theta) const;
  Evaluation evaluate(std::span<const double> theta,
                      std::span<const std::size_t> units) const;

  bool needs_retraction() const noexcept;
  void retract(std::span<double> theta) const;

  // Zero for GLM-style losses, the pooled PCA basis for PcaReconstruction.
  std::vector<double> default_initial_theta() const;

 private:
  TabularDataset data_;
  LossKind kind_;
  double l2_;
  std::size_t param_dim_ = 0;
  std::vector<PcaGroup> pca_groups_;
  std::vector<std::string> pca_names_;
  std::vector<std::vector<std::string>> unit_paths_;
};

}  // namespace term
