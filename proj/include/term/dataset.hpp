#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace term {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Where a dataset came from and which rows were corrupted.
struct Provenance {
  std::string source;                        // scenario name or "csv:<path>"
  std::uint64_t seed = 0;
  std::map<std::string, std::string> params;  // generator settings, as text
  std::vector<std::size_t> noisy_indices;     // ascending
  std::vector<std::size_t> flipped_indices;   // ascending, label-flip injector

  bool operator==(const Provenance&) const = default;
};

// Text rendering used for hashing and the sidecar file; stable across runs.
std::string to_text(const Provenance& p);
std::uint64_t provenance_hash(const Provenance& p);

/// Feature matrix (N x d_x, row-major), targets, optional group columns.
///
/// Group paths are outermost first: [supergroup, group] when both columns
/// are present, [group] when only the group column is.
struct TabularDataset {
  RowMatrix features;
  std::vector<double> targets;
  std::vector<std::string> group;       // empty or one label per row
  std::vector<std::string> supergroup;  // empty or one label per row
  Provenance provenance;

  std::size_t size() const noexcept { return targets.size(); }
  std::size_t feature_dim() const noexcept {
    return static_cast<std::size_t>(features.cols());
  }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * features.cols(),
            static_cast<std::size_t>(features.cols())};
  }

  // Throws InputError when shapes disagree, entries are non-finite or a group
  // label is empty.
  void validate() const;

  std::vector<std::vector<std::string>> group_paths() const;

  // Rows in `indices` (kept in the given order); provenance indices remapped.
  TabularDataset subset(std::span<const std::size_t> indices) const;

  // Rows not listed in provenance.noisy_indices.
  TabularDataset clean_subset() const;

  bool operator==(const TabularDataset& other) const;
};

}  // namespace term
