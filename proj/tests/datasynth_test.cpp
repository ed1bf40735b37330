#include "term/datasynth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "term/error.hpp"

namespace term {
namespace {

namespace fs = std::filesystem;

ScenarioSpec spec_for(Scenario s, std::size_t n, std::uint64_t seed = 7) {
  ScenarioSpec spec;
  spec.scenario = s;
  spec.n = n;
  spec.seed = seed;
  return spec;
}

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("term_datasynth_" + name)).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  fs::remove(path + ".provenance");
}

TEST(ScenarioSpecTest, Validation) {
  ScenarioSpec spec;
  EXPECT_THROW(generate(spec), InputError);  // no seed
  spec.seed = 1;
  EXPECT_NO_THROW(generate(spec));
  spec.noise_fraction = 1.0;
  EXPECT_THROW(generate(spec), InputError);
  spec.noise_fraction = -0.1;
  EXPECT_THROW(generate(spec), InputError);
  spec.noise_fraction = 0.0;
  spec.n = 0;
  EXPECT_THROW(generate(spec), InputError);
  EXPECT_EQ(parse_scenario("annotators"), Scenario::Annotators);
  try {
    parse_scenario("nope");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("linear-regression"), std::string::npos);
  }
  for (const auto& name : scenario_names()) EXPECT_EQ(to_string(parse_scenario(name)), name);
}

TEST(GenerateTest, Deterministic) {
  for (const auto& name : scenario_names()) {
    ScenarioSpec spec = spec_for(parse_scenario(name), 60);
    spec.noise_fraction = 0.25;
    const auto a = generate(spec);
    const auto b = generate(spec);
    EXPECT_TRUE(a == b) << name;
    EXPECT_EQ(provenance_hash(a.provenance), provenance_hash(b.provenance)) << name;
    spec.seed = 8;
    EXPECT_FALSE(a == generate(spec)) << name;
  }
}

TEST(GenerateTest, PointEstimationCentredAtOneOne) {
  const auto data = generate(spec_for(Scenario::PointEstimation2D, 20000));
  EXPECT_EQ(data.feature_dim(), 2u);
  EXPECT_TRUE(data.provenance.noisy_indices.empty());
  const Eigen::RowVectorXd mean = data.features.colwise().mean();
  // Standard error 0.5 / sqrt(20000) ~ 0.0035.
  EXPECT_NEAR(mean(0), 1.0, 0.02);
  EXPECT_NEAR(mean(1), 1.0, 0.02);
}

TEST(GenerateTest, RegressionOutliersCountedExactly) {
  ScenarioSpec spec = spec_for(Scenario::LinearRegression, 200);
  spec.dim = 3;
  const auto clean = generate(spec);
  spec.noise_fraction = 0.4;
  const auto noisy = generate(spec);
  ASSERT_EQ(noisy.provenance.noisy_indices.size(), 80u);
  EXPECT_TRUE(noisy.features == clean.features);
  std::size_t changed = 0;
  const auto& idx = noisy.provenance.noisy_indices;
  double sum = 0.0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const bool listed = std::binary_search(idx.begin(), idx.end(), i);
    if (!listed) EXPECT_EQ(noisy.targets[i], clean.targets[i]);
    if (noisy.targets[i] != clean.targets[i]) ++changed;
    if (listed) sum += noisy.targets[i];
  }
  EXPECT_EQ(changed, 80u);
  EXPECT_NEAR(sum / 80.0, 5.0, 2.0);  // 5 +- 3 standard errors of N(5, 5^2)
  // Genie split is exactly the complement.
  const auto genie = noisy.clean_subset();
  EXPECT_EQ(genie.size(), 120u);
  EXPECT_TRUE(genie.provenance.noisy_indices.empty());
  for (std::uint64_t n : {7u, 10u, 33u}) {
    spec.n = n;
    spec.noise_fraction = 0.3;
    EXPECT_EQ(generate(spec).provenance.noisy_indices.size(),
              static_cast<std::size_t>(std::floor(0.3 * static_cast<double>(n) + 1e-9)));
  }
}

TEST(GenerateTest, OutlierSpreadFollowsSwitch) {
  ScenarioSpec spec = spec_for(Scenario::LinearRegression, 20000);
  spec.noise_fraction = 0.5;
  auto spread = [&](bool variance_five) {
    spec.outlier_variance_five = variance_five;
    const auto d = generate(spec);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i : d.provenance.noisy_indices) {
      s += d.targets[i];
      s2 += d.targets[i] * d.targets[i];
    }
    const double n = static_cast<double>(d.provenance.noisy_indices.size());
    return s2 / n - (s / n) * (s / n);
  };
  EXPECT_NEAR(spread(false), 25.0, 1.5);
  EXPECT_NEAR(spread(true), 5.0, 0.3);
}

TEST(GenerateTest, LogisticImbalance) {
  ScenarioSpec spec = spec_for(Scenario::LogisticBinary, 420);
  spec.imbalance_ratio = 20.0;
  const auto data = generate(spec);
  std::size_t rare = 0;
  for (double y : data.targets) {
    ASSERT_TRUE(y == 1.0 || y == -1.0);
    if (y == 1.0) ++rare;
  }
  EXPECT_EQ(rare, 20u);
  spec.n_test = 210;
  const auto test = generate_test(spec);
  EXPECT_EQ(test.size(), 210u);
  std::size_t test_rare = 0;
  for (double y : test.targets) test_rare += y == 1.0;
  EXPECT_EQ(test_rare, 10u);
  EXPECT_TRUE(test.provenance.noisy_indices.empty());
}

TEST(GenerateTest, AnnotatorsHammersExactSpammersUniform) {
  ScenarioSpec spec = spec_for(Scenario::Annotators, 20000);
  spec.classes = 4;
  spec.hammers = 2;
  spec.spammers = 8;
  const auto data = generate(spec);
  ScenarioSpec truth_spec = spec;
  truth_spec.hammers = 10;
  truth_spec.spammers = 0;
  const auto truth = generate(truth_spec);
  ASSERT_TRUE(truth.features == data.features);
  std::map<double, int> spam_counts;
  std::size_t spam_rows = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool hammer = i % 10 < 2;
    EXPECT_EQ(data.group[i], "a0" + std::to_string(i % 10));
    if (hammer) {
      EXPECT_EQ(data.targets[i], truth.targets[i]);
    } else {
      ++spam_counts[data.targets[i]];
      ++spam_rows;
    }
  }
  EXPECT_EQ(data.provenance.noisy_indices.size(), spam_rows);
  ASSERT_EQ(spam_counts.size(), 4u);
  for (const auto& [label, count] : spam_counts) {
    // 16000 uniform draws over 4 classes: sd ~ 55.
    EXPECT_NEAR(count, 4000, 300) << "label " << label;
  }
  const auto binary = generate(spec_for(Scenario::Annotators, 50));
  for (double y : binary.targets) EXPECT_TRUE(y == 1.0 || y == -1.0);
}

TEST(GenerateTest, FairPcaGroups) {
  ScenarioSpec spec = spec_for(Scenario::FairPcaTwoGroups, 100);
  spec.dim = 4;
  const auto data = generate(spec);
  EXPECT_EQ(std::count(data.group.begin(), data.group.end(), "B"), 20);
  EXPECT_EQ(data.feature_dim(), 4u);
  spec.dim = 1;
  EXPECT_THROW(generate(spec), InputError);
}

TEST(LabelFlipTest, Examples) {
  ScenarioSpec spec = spec_for(Scenario::LogisticBinary, 100);
  const auto data = generate(spec);
  const auto same = inject_label_flip(data, 0.0, 3);
  EXPECT_TRUE(same == data);
  EXPECT_EQ(provenance_hash(same.provenance), provenance_hash(data.provenance));

  const auto flipped = inject_label_flip(data, 0.3, 3);
  EXPECT_EQ(flipped.provenance.flipped_indices.size(), 30u);
  EXPECT_EQ(flipped.provenance.noisy_indices, flipped.provenance.flipped_indices);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& f = flipped.provenance.flipped_indices;
    if (!std::binary_search(f.begin(), f.end(), i)) EXPECT_EQ(flipped.targets[i], data.targets[i]);
    EXPECT_TRUE(flipped.targets[i] == 1.0 || flipped.targets[i] == -1.0);
  }
  EXPECT_TRUE(inject_label_flip(data, 0.3, 3) == flipped);
  EXPECT_FALSE(inject_label_flip(data, 0.3, 4) == flipped);
  EXPECT_THROW(inject_label_flip(data, 1.0, 3), InputError);
  EXPECT_THROW(inject_label_flip(generate(spec_for(Scenario::LinearRegression, 20)), 0.3, 3),
               InputError);
}

TEST(LabelGroupsTest, NestsAnnotatorAboveClass) {
  const auto data = generate(spec_for(Scenario::Annotators, 20));
  const auto nested = label_groups(data, true);
  EXPECT_EQ(nested.supergroup, data.group);
  EXPECT_EQ(nested.group[0], data.targets[0] > 0 ? "y=1" : "y=-1");
  EXPECT_TRUE(label_groups(data).supergroup.empty());
}

TEST(CsvTest, RoundTrip) {
  for (const auto& name : scenario_names()) {
    ScenarioSpec spec = spec_for(parse_scenario(name), 40);
    spec.noise_fraction = 0.2;
    auto data = generate(spec);
    if (name == "annotators") data = label_groups(data, true);
    const std::string path = temp_path(name + ".csv");
    save_csv(data, path);
    const auto back = load_csv(path);
    EXPECT_TRUE(back == data) << name;
    fs::remove(path);
    fs::remove(path + ".provenance");
  }
}

TEST(CsvTest, Errors) {
  const std::string path = temp_path("bad.csv");
  auto message = [&](const std::string& text, const CsvSchema& schema = {}) {
    write_file(path, text);
    try {
      load_csv(path, schema);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("x0,label\n1,2\n").find("missing target column 'target'"), std::string::npos);
  EXPECT_NE(message("x0,target,group\n1,2,a\n3,4,\n").find(":3: empty label in group"),
            std::string::npos);
  EXPECT_NE(message("x0,target\n1,2\n3\n").find(":3: expected 2 fields, found 1"),
            std::string::npos);
  EXPECT_NE(message("x0,x1,target\n1,abc,2\n").find(":2: non-numeric value 'abc' in column 'x1'"),
            std::string::npos);
  EXPECT_NE(message("").find("header row required"), std::string::npos);
  EXPECT_NE(message("x0,target\n").find("no data rows"), std::string::npos);
  CsvSchema schema;
  schema.group = "annotator";
  EXPECT_NE(message("x0,target\n1,2\n", schema).find("missing group column 'annotator'"),
            std::string::npos);

  // Custom target name, CRLF endings, provenance falls back to the path.
  CsvSchema y;
  y.target = "y";
  write_file(path, "a,y,b\r\n1,0.5,2\r\n3,-1,4\r\n");
  const auto data = load_csv(path, y);
  EXPECT_EQ(data.feature_dim(), 2u);
  EXPECT_EQ(data.features(1, 1), 4.0);
  EXPECT_EQ(data.targets[1], -1.0);
  EXPECT_EQ(data.provenance.source, "csv:" + path);
  fs::remove(path);
}

}  // namespace
}  // namespace term
