#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "term/tilt.hpp"

namespace term {

/// Nested grouping of samples with one tilt per level, outermost first.
///
/// With L levels every sample carries a group path of length L - 1. Level k
/// aggregates the children of each depth-k node with tilt levels[k]; the last
/// level aggregates the samples inside each innermost group. Children are
/// weighted by their share of the parent's samples, so
///   [t]          is sample-level TERM,
///   [t, tau]     is group/sample multi-objective TERM,
///   [m, t, tau]  is the depth-3 form (supergroup, group, sample).
/// A zero tilt at any level is the size-weighted arithmetic mean.
class TiltTree {
 public:
  TiltTree(std::vector<double> levels, const std::vector<std::vector<std::string>>& paths);

  static TiltTree flat(std::size_t num_samples, double t);
  static TiltTree grouped(double t, double tau, const std::vector<std::string>& groups);

  std::size_t num_samples() const noexcept { return num_samples_; }
  std::size_t depth() const noexcept { return levels_.size(); }
  const std::vector<double>& levels() const noexcept { return levels_; }

  // Same partition, different tilts (used by continuation).
  TiltTree with_levels(std::vector<double> levels) const;

  struct Node {
    std::string label;
    std::size_t level = 0;                 // tilt index applied to the children
    std::vector<std::size_t> children;     // node indices, empty for innermost groups
    std::vector<std::size_t> samples;      // ascending, only for innermost groups
    std::size_t size = 0;                  // samples in the subtree
  };

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  // Innermost groups (the nodes whose children are samples), creation order.
  const std::vector<std::size_t>& leaf_groups() const noexcept { return leaf_groups_; }

 private:
  TiltTree() = default;

  std::vector<double> levels_;
  std::vector<Node> nodes_;  // nodes_[0] is the root
  std::vector<std::size_t> leaf_groups_;
  std::size_t num_samples_ = 0;
};

struct HierWeights {
  TiltWeights sample_weights;        // w_{g,x}, sums to one
  std::vector<double> group_weights;  // per leaf group, product of ancestor weights
  std::vector<double> group_values;   // tilted value of each leaf group
};

double tree_tilted_objective(const TiltTree& tree, const LossVector& losses);
HierWeights tree_tilted_weights(const TiltTree& tree, const LossVector& losses);

}  // namespace term
