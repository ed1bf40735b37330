#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace term {

/// Per-sample losses f(x_i; theta) at a fixed parameter. Non-empty, finite.
class LossVector {
 public:
  explicit LossVector(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Exponential sample weights; entries in [0, 1] summing to one.
class TiltWeights {
 public:
  explicit TiltWeights(std::vector<double> weights);

  std::span<const double> values() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }

 private:
  std::vector<double> weights_;
};

/// N per-sample gradient rows of a common dimension d, stored row-major.
class GradientMatrix {
 public:
  GradientMatrix(std::size_t rows, std::size_t dim);
  GradientMatrix(std::size_t rows, std::size_t dim, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

 private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<double> data_;
};

struct LossExtremes {
  double min_loss;
  double avg_loss;
  double max_loss;
};

// t-tilted loss (1/t) log((1/N) sum_i exp(t f_i)); the arithmetic mean at
// t == 0 exactly. Evaluated in shifted form around the extreme loss selected
// by sign(t), so no intermediate overflows while |t * f_i| stays within the
// double exponent range (roughly 700).
double tilted_objective(const LossVector& losses, double t);

// Softmax weights w_i = exp(t f_i) / sum_j exp(t f_j); uniform at t == 0.
TiltWeights tilt_weights(const LossVector& losses, double t);

// sum_i w_i(t) * grad_i, accumulated row by row in ascending sample index.
std::vector<double> tilted_gradient(const GradientMatrix& grads,
                                    const LossVector& losses, double t);

// sum_i weights[i] * grads.row(i), ascending index order.
std::vector<double> weighted_row_sum(const GradientMatrix& grads,
                                     std::span<const double> weights);

// Min, mean and max of the entries. With ties the footnote rule (average of
// the tied extreme losses) equals the tied value itself.
LossExtremes extreme_losses(const LossVector& losses);

// Empirical cumulant generating function t * tilted_objective(losses, t).
double cumulant(const LossVector& losses, double t);

// Tilted aggregation with non-uniform probability masses:
//   (1/t) log(sum_i p_i exp(t v_i)),   size-weighted mean at t == 0.
// Masses must be positive and sum to one. Used by tilt trees, where p_i is a
// child's share of its parent's samples.
double tilted_mean(std::span<const double> values,
                   std::span<const double> masses, double t);

// p_i exp(t v_i) / sum_j p_j exp(t v_j); the masses themselves at t == 0.
std::vector<double> tilted_masses(std::span<const double> values,
                                  std::span<const double> masses, double t);

// (1/t) log((1 - lambda) exp(t a) + lambda exp(t b)); linear average at t == 0.
double tilted_average(double current, double update, double lambda, double t);

}  // namespace term
