#include "term/hierarchy.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include "term/error.hpp"

namespace term {

TiltTree::TiltTree(std::vector<double> levels,
                   const std::vector<std::vector<std::string>>& paths)
    : levels_(std::move(levels)), num_samples_(paths.size()) {
  if (levels_.empty()) throw InputError("TiltTree: at least one tilt level required");
  for (double t : levels_) {
    if (!std::isfinite(t)) throw InputError("TiltTree: tilts must be finite");
  }
  if (paths.empty()) throw InputError("TiltTree: no samples");
  const std::size_t path_len = levels_.size() - 1;

  nodes_.push_back(Node{"", 0, {}, {}, 0});
  std::map<std::pair<std::size_t, std::string>, std::size_t> child_of;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& path = paths[i];
    if (path.size() != path_len) {
      std::ostringstream msg;
      msg << "TiltTree: sample " << i << " has a group path of length " << path.size()
          << " but " << levels_.size() << " tilt levels need " << path_len;
      throw InputError(msg.str());
    }
    std::size_t current = 0;
    nodes_[0].size += 1;
    for (std::size_t k = 0; k < path_len; ++k) {
      if (path[k].empty()) {
        throw InputError("TiltTree: empty group label for sample " + std::to_string(i));
      }
      auto [it, fresh] = child_of.emplace(std::make_pair(current, path[k]), nodes_.size());
      if (fresh) {
        nodes_.push_back(Node{path[k], k + 1, {}, {}, 0});
        nodes_[current].children.push_back(it->second);
      }
      current = it->second;
      nodes_[current].size += 1;
    }
    nodes_[current].samples.push_back(i);
  }
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    if (nodes_[n].level == path_len) leaf_groups_.push_back(n);
  }
}

TiltTree TiltTree::flat(std::size_t num_samples, double t) {
  return TiltTree({t}, std::vector<std::vector<std::string>>(num_samples));
}

TiltTree TiltTree::grouped(double t, double tau, const std::vector<std::string>& groups) {
  std::vector<std::vector<std::string>> paths;
  paths.reserve(groups.size());
  for (const auto& g : groups) paths.push_back({g});
  return TiltTree({t, tau}, paths);
}

TiltTree TiltTree::with_levels(std::vector<double> levels) const {
  if (levels.size() != levels_.size()) {
    throw InputError("TiltTree::with_levels: level count must not change");
  }
  for (double t : levels) {
    if (!std::isfinite(t)) throw InputError("TiltTree: tilts must be finite");
  }
  TiltTree copy = *this;
  copy.levels_ = std::move(levels);
  return copy;
}

namespace {

void require_cover(const TiltTree& tree, const LossVector& losses) {
  if (tree.num_samples() != losses.size()) {
    std::ostringstream msg;
    msg << "tilt tree partitions " << tree.num_samples() << " samples but "
        << losses.size() << " losses were given";
    throw InputError(msg.str());
  }
}

struct NodeInputs {
  std::vector<double> values;
  std::vector<double> masses;
};

NodeInputs node_inputs(const TiltTree::Node& node, const std::vector<TiltTree::Node>& nodes,
                       const std::vector<double>& node_values, const LossVector& losses) {
  NodeInputs in;
  const double size = static_cast<double>(node.size);
  if (node.children.empty()) {
    const double mass = 1.0 / size;
    for (std::size_t s : node.samples) {
      in.values.push_back(losses[s]);
      in.masses.push_back(mass);
    }
  } else {
    for (std::size_t c : node.children) {
      in.values.push_back(node_values[c]);
      in.masses.push_back(static_cast<double>(nodes[c].size) / size);
    }
  }
  return in;
}

// Tilted value of every node. Children always have larger indices than their
// parent, so a reverse sweep sees children first.
std::vector<double> node_values(const TiltTree& tree, const LossVector& losses) {
  const auto& nodes = tree.nodes();
  std::vector<double> values(nodes.size(), 0.0);
  for (std::size_t n = nodes.size(); n-- > 0;) {
    const NodeInputs in = node_inputs(nodes[n], nodes, values, losses);
    values[n] = tilted_mean(in.values, in.masses, tree.levels()[nodes[n].level]);
  }
  return values;
}

}  // namespace

double tree_tilted_objective(const TiltTree& tree, const LossVector& losses) {
  require_cover(tree, losses);
  return node_values(tree, losses)[0];
}

HierWeights tree_tilted_weights(const TiltTree& tree, const LossVector& losses) {
  require_cover(tree, losses);
  const auto& nodes = tree.nodes();
  const std::vector<double> values = node_values(tree, losses);
  std::vector<double> node_weight(nodes.size(), 0.0);
  std::vector<double> sample_weight(losses.size(), 0.0);
  node_weight[0] = 1.0;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const auto& node = nodes[n];
    const NodeInputs in = node_inputs(node, nodes, values, losses);
    const std::vector<double> w = tilted_masses(in.values, in.masses, tree.levels()[node.level]);
    if (node.children.empty()) {
      for (std::size_t k = 0; k < node.samples.size(); ++k) {
        sample_weight[node.samples[k]] = node_weight[n] * w[k];
      }
    } else {
      for (std::size_t k = 0; k < node.children.size(); ++k) {
        node_weight[node.children[k]] = node_weight[n] * w[k];
      }
    }
  }
  HierWeights out{TiltWeights(std::move(sample_weight)), {}, {}};
  for (std::size_t g : tree.leaf_groups()) {
    out.group_weights.push_back(node_weight[g]);
    out.group_values.push_back(values[g]);
  }
  return out;
}

}  // namespace term
