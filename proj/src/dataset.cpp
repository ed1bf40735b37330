#include "term/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "term/error.hpp"
#include "term/rng.hpp"

namespace term {

std::string to_text(const Provenance& p) {
  std::ostringstream out;
  out << "source=" << p.source << "\n";
  out << "seed=" << p.seed << "\n";
  for (const auto& [key, value] : p.params) out << "param." << key << "=" << value << "\n";
  auto list = [&out](const char* name, const std::vector<std::size_t>& v) {
    out << name << "=";
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << "\n";
  };
  list("noisy_indices", p.noisy_indices);
  list("flipped_indices", p.flipped_indices);
  return out.str();
}

std::uint64_t provenance_hash(const Provenance& p) { return fnv1a64(to_text(p)); }

void TabularDataset::validate() const {
  const std::size_t n = targets.size();
  if (n == 0) throw InputError("dataset: no rows");
  if (static_cast<std::size_t>(features.rows()) != n) {
    throw InputError("dataset: feature rows do not match target count");
  }
  if (!group.empty() && group.size() != n) {
    throw InputError("dataset: group column length does not match row count");
  }
  if (!supergroup.empty() && supergroup.size() != n) {
    throw InputError("dataset: supergroup column length does not match row count");
  }
  if (!supergroup.empty() && group.empty()) {
    throw InputError("dataset: supergroup column requires a group column");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(targets[i])) {
      throw InputError("dataset: non-finite target at row " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      if (!std::isfinite(features(static_cast<Eigen::Index>(i), j))) {
        throw InputError("dataset: non-finite feature at row " + std::to_string(i));
      }
    }
    if (!group.empty() && group[i].empty()) {
      throw InputError("dataset: empty group label at row " + std::to_string(i));
    }
    if (!supergroup.empty() && supergroup[i].empty()) {
      throw InputError("dataset: empty supergroup label at row " + std::to_string(i));
    }
  }
  for (std::size_t idx : provenance.noisy_indices) {
    if (idx >= n) throw InputError("dataset: noisy index out of range");
  }
}

std::vector<std::vector<std::string>> TabularDataset::group_paths() const {
  std::vector<std::vector<std::string>> paths(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (!supergroup.empty()) paths[i].push_back(supergroup[i]);
    if (!group.empty()) paths[i].push_back(group[i]);
  }
  return paths;
}

TabularDataset TabularDataset::subset(std::span<const std::size_t> indices) const {
  TabularDataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.targets.reserve(indices.size());
  std::unordered_map<std::size_t, std::size_t> remap;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= size()) throw InputError("dataset subset: index out of range");
    out.features.row(static_cast<Eigen::Index>(k)) =
        features.row(static_cast<Eigen::Index>(i));
    out.targets.push_back(targets[i]);
    if (!group.empty()) out.group.push_back(group[i]);
    if (!supergroup.empty()) out.supergroup.push_back(supergroup[i]);
    remap.emplace(i, k);
  }
  out.provenance = provenance;
  auto translate = [&remap](const std::vector<std::size_t>& src) {
    std::vector<std::size_t> dst;
    for (std::size_t i : src) {
      if (auto it = remap.find(i); it != remap.end()) dst.push_back(it->second);
    }
    std::sort(dst.begin(), dst.end());
    return dst;
  };
  out.provenance.noisy_indices = translate(provenance.noisy_indices);
  out.provenance.flipped_indices = translate(provenance.flipped_indices);
  return out;
}

TabularDataset TabularDataset::clean_subset() const {
  std::vector<std::size_t> keep;
  const auto& noisy = provenance.noisy_indices;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!std::binary_search(noisy.begin(), noisy.end(), i)) keep.push_back(i);
  }
  return subset(keep);
}

bool TabularDataset::operator==(const TabularDataset& other) const {
  return features.rows() == other.features.rows() &&
         features.cols() == other.features.cols() && features == other.features &&
         targets == other.targets && group == other.group &&
         supergroup == other.supergroup && provenance == other.provenance;
}

}  // namespace term
