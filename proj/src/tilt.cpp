#include "term/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "term/error.hpp"

namespace term {

namespace {

void require_finite_tilt(double t, const char* op) {
  if (!std::isfinite(t)) {
    std::ostringstream msg;
    msg << op << ": tilt must be finite, got " << t;
    throw InputError(msg.str());
  }
}

// Index of the entry maximizing t * v (first occurrence).
std::size_t anchor_index(std::span<const double> v, double t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (t > 0.0 ? v[i] > v[best] : v[i] < v[best]) best = i;
  }
  return best;
}

// (1/t) log(sum_i mass(i) exp(t v_i)) for t != 0 and masses summing to one.
//
// With c = argmax t v_i the sum is 1 + sum_i mass(i) expm1(t (v_i - c)) when
// the anchor carries all the mass; in general we evaluate the expm1 sum first
// and fall back to the plain exp sum when it is far from zero. The expm1 route
// keeps full relative accuracy as t -> 0, where the result tends to the
// weighted mean.
template <class Mass>
double shifted_log_mean(std::span<const double> v, Mass mass, double t) {
  const double anchor = v[anchor_index(v, t)];
  double acc_m1 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc_m1 += mass(i) * std::expm1(t * (v[i] - anchor));
  }
  if (acc_m1 > -0.5) return anchor + std::log1p(acc_m1) / t;
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += mass(i) * std::exp(t * (v[i] - anchor));
  }
  return anchor + std::log(acc) / t;
}

template <class Mass>
std::vector<double> shifted_softmax(std::span<const double> v, Mass mass,
                                    double t) {
  const double anchor = v[anchor_index(v, t)];
  std::vector<double> w(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = mass(i) * std::exp(t * (v[i] - anchor));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

void validate_masses(std::span<const double> values,
                     std::span<const double> masses, const char* op) {
  if (values.empty() || values.size() != masses.size()) {
    std::ostringstream msg;
    msg << op << ": need equally sized non-empty values and masses ("
        << values.size() << " vs " << masses.size() << ")";
    throw InputError(msg.str());
  }
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InputError(std::string(op) + ": non-finite value");
    }
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i])) {
      throw InputError(std::string(op) + ": masses must be positive");
    }
    total += masses[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InputError(std::string(op) + ": masses must sum to one");
  }
}

}  // namespace

LossVector::LossVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InputError("LossVector: at least one loss required");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      std::ostringstream msg;
      msg << "LossVector: non-finite loss " << values_[i] << " at index " << i;
      throw InputError(msg.str());
    }
  }
}

TiltWeights::TiltWeights(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw InputError("TiltWeights: empty");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0 && w <= 1.0)) throw InputError("TiltWeights: weight outside [0, 1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("TiltWeights: weights must sum to one");
}

GradientMatrix::GradientMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {
  if (dim == 0) throw InputError("GradientMatrix: dimension must be >= 1");
}

GradientMatrix::GradientMatrix(std::size_t rows, std::size_t dim,
                               std::vector<double> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (dim == 0) throw InputError("GradientMatrix: dimension must be >= 1");
  if (data_.size() != rows * dim) {
    throw InputError("GradientMatrix: data size does not match rows * dim");
  }
  for (double x : data_) {
    if (!std::isfinite(x)) throw InputError("GradientMatrix: non-finite entry");
  }
}

double tilted_objective(const LossVector& losses, double t) {
  require_finite_tilt(t, "tilted_objective");
  const auto v = losses.values();
  const double inv_n = 1.0 / static_cast<double>(v.size());
  if (t == 0.0) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum * inv_n;
  }
  return shifted_log_mean(v, [inv_n](std::size_t) { return inv_n; }, t);
}

TiltWeights tilt_weights(const LossVector& losses, double t) {
  require_finite_tilt(t, "tilt_weights");
  const auto v = losses.values();
  const double inv_n = 1.0 / static_cast<double>(v.size());
  if (t == 0.0) return TiltWeights(std::vector<double>(v.size(), inv_n));
  return TiltWeights(shifted_softmax(v, [](std::size_t) { return 1.0; }, t));
}

std::vector<double> weighted_row_sum(const GradientMatrix& grads,
                                     std::span<const double> weights) {
  if (grads.rows() != weights.size()) {
    std::ostringstream msg;
    msg << "weighted_row_sum: " << grads.rows() << " gradient rows but "
        << weights.size() << " weights";
    throw InputError(msg.str());
  }
  std::vector<double> out(grads.dim(), 0.0);
  for (std::size_t i = 0; i < grads.rows(); ++i) {
    const auto row = grads.row(i);
    const double w = weights[i];
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w * row[j];
  }
  return out;
}

std::vector<double> tilted_gradient(const GradientMatrix& grads,
                                    const LossVector& losses, double t) {
  if (grads.rows() != losses.size()) {
    std::ostringstream msg;
    msg << "tilted_gradient: " << grads.rows() << " gradient rows but "
        << losses.size() << " losses";
    throw InputError(msg.str());
  }
  const TiltWeights w = tilt_weights(losses, t);
  return weighted_row_sum(grads, w.values());
}

LossExtremes extreme_losses(const LossVector& losses) {
  const auto v = losses.values();
  double lo = v[0];
  double hi = v[0];
  double sum = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  return {lo, sum / static_cast<double>(v.size()), hi};
}

double cumulant(const LossVector& losses, double t) {
  if (t == 0.0) return 0.0;
  return t * tilted_objective(losses, t);
}

double tilted_mean(std::span<const double> values,
                   std::span<const double> masses, double t) {
  require_finite_tilt(t, "tilted_mean");
  validate_masses(values, masses, "tilted_mean");
  if (t == 0.0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += masses[i] * values[i];
    return sum;
  }
  return shifted_log_mean(values, [masses](std::size_t i) { return masses[i]; }, t);
}

std::vector<double> tilted_masses(std::span<const double> values,
                                  std::span<const double> masses, double t) {
  require_finite_tilt(t, "tilted_masses");
  validate_masses(values, masses, "tilted_masses");
  if (t == 0.0) return {masses.begin(), masses.end()};
  return shifted_softmax(values, [masses](std::size_t i) { return masses[i]; }, t);
}

double tilted_average(double current, double update, double lambda, double t) {
  require_finite_tilt(t, "tilted_average");
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw InputError("tilted_average: smoothing must lie in (0, 1]");
  }
  if (lambda == 1.0) return update;
  if (t == 0.0) return (1.0 - lambda) * current + lambda * update;
  const double v[2] = {current, update};
  const double m[2] = {1.0 - lambda, lambda};
  return shifted_log_mean(std::span<const double>(v),
                          [&m](std::size_t i) { return m[i]; }, t);
}

}  // namespace term
