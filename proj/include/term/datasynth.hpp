#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "term/dataset.hpp"

namespace term {

enum class Scenario { PointEstimation2D, LinearRegression, LogisticBinary, Annotators, FairPcaTwoGroups };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& text);  // InputError lists the names
std::vector<std::string> scenario_names();

struct ScenarioSpec {
  Scenario scenario = Scenario::PointEstimation2D;
  std::size_t n = 100;
  std::size_t n_test = 0;  // rows from generate_test; 0 means n
  std::size_t dim = 2;     // ignored by PointEstimation2D (always 2)
  double noise_fraction = 0.0;

  // LogisticBinary: majority rows per minority row. Class +1 is the rare one.
  double imbalance_ratio = 1.0;
  // LogisticBinary / Annotators (binary): distance between the class means.
  double separation = 2.0;

  // LinearRegression outliers are N(5, 5): std 5 unless this is set.
  bool outlier_variance_five = false;

  std::size_t hammers = 2;
  std::size_t spammers = 8;
  std::size_t classes = 2;  // labels -1/+1 when 2, else 0..C-1

  double minority_share = 0.2;  // FairPcaTwoGroups: share of group "B"

  std::optional<std::uint64_t> seed;

  void validate() const;
};

// Training data. Pure function of the spec; noisy rows are listed in the
// provenance so clean_subset() gives the genie split.
//
//   PointEstimation2D  clean ~ N((1,1), 0.5^2 I); floor(f N) outliers ~ N((4,4), 0.5^2 I)
//   LinearRegression   x ~ N(0, I), y = w.x + 1 + N(0,1), w ~ N(0, I) from the seed;
//                      floor(f N) targets replaced by N(5, 5) draws
//   LogisticBinary     y = +1 for the rare class; x ~ N(y s/2 u, I), u = 1/sqrt(d);
//                      floor(f N) labels reassigned uniformly
//   Annotators         true class uniform, x around the class mean; rows dealt
//                      round-robin to hammers a0.. then spammers; spammer
//                      labels uniform over the classes; group = annotator
//   FairPcaTwoGroups   group A coordinate stds (2, 1, 0.5, ..), group B (1, 2, 0.5, ..)
TabularDataset generate(const ScenarioSpec& spec);

// Clean held-out rows from the same model (same w, class means, imbalance).
TabularDataset generate_test(const ScenarioSpec& spec);

// Exactly floor(fraction N) rows get a label drawn uniformly from the
// dataset's classes (so some keep their label). Targets must be integral.
// Reassigned rows join both flipped_indices and noisy_indices.
TabularDataset inject_label_flip(const TabularDataset& data, double fraction,
                                 std::uint64_t seed);

// Group column set to the class label "y=<target>". With nest_existing an
// existing group column moves to supergroup (annotator above class);
// otherwise it is replaced and any supergroup dropped.
TabularDataset label_groups(const TabularDataset& data, bool nest_existing = false);

struct CsvSchema {
  std::string target = "target";
  std::optional<std::string> group;
  std::optional<std::string> supergroup;
};

// Header row mandatory. Every column that is not the target or a group column
// is a feature, in file order. Errors carry the line number. A sidecar
// "<path>.provenance" is read back when present.
TabularDataset load_csv(const std::string& path, const CsvSchema& schema = {});

// Columns x0.., target, [group], [supergroup]; numbers in shortest
// round-trip form. Writes the provenance sidecar next to the file.
void save_csv(const TabularDataset& data, const std::string& path);

Provenance parse_provenance(const std::string& text);

}  // namespace term
