#include "term/datasynth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "term/error.hpp"
#include "term/numfmt.hpp"
#include "term/rng.hpp"

namespace term {

namespace {

struct ScenarioName {
  Scenario scenario;
  const char* name;
};

constexpr ScenarioName kScenarios[] = {
    {Scenario::PointEstimation2D, "point-estimation-2d"},
    {Scenario::LinearRegression, "linear-regression"},
    {Scenario::LogisticBinary, "logistic-binary"},
    {Scenario::Annotators, "annotators"},
    {Scenario::FairPcaTwoGroups, "fair-pca-two-groups"},
};

// floor(f n), guarded against f n landing a hair under an integer.
std::size_t noisy_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

std::string num(double x) { return format_number(x); }

std::string annotator_name(std::size_t k) {
  std::string s = std::to_string(k);
  if (s.size() < 2) s = "0" + s;
  return "a" + s;
}

Rng stream(const ScenarioSpec& spec, const std::string& part) {
  return Rng::stream(*spec.seed, to_string(spec.scenario) + "/" + part);
}

// Class means for Annotators (and the binary direction shared with
// LogisticBinary): +-s/2 along the diagonal for two classes, otherwise
// N(0, s^2 I) draws.
std::vector<std::vector<double>> class_means(const ScenarioSpec& spec) {
  const std::size_t d = spec.dim;
  std::vector<std::vector<double>> means(spec.classes, std::vector<double>(d));
  if (spec.classes == 2) {
    const double h = 0.5 * spec.separation / std::sqrt(static_cast<double>(d));
    for (std::size_t j = 0; j < d; ++j) {
      means[0][j] = -h;
      means[1][j] = h;
    }
    return means;
  }
  Rng rng = stream(spec, "centers");
  for (auto& m : means) {
    for (double& v : m) v = rng.normal(0.0, spec.separation);
  }
  return means;
}

double class_label(const ScenarioSpec& spec, std::size_t c) {
  if (spec.classes == 2) return c == 0 ? -1.0 : 1.0;
  return static_cast<double>(c);
}

void base_provenance(const ScenarioSpec& spec, TabularDataset& data, std::size_t rows,
                     bool test) {
  auto& p = data.provenance;
  p.source = to_string(spec.scenario) + (test ? ":test" : "");
  p.seed = *spec.seed;
  p.params["n"] = std::to_string(rows);
  p.params["dim"] = std::to_string(data.feature_dim());
  if (!test) p.params["noise_fraction"] = num(spec.noise_fraction);
}

TabularDataset point_estimation(const ScenarioSpec& spec, std::size_t n, bool test) {
  TabularDataset data;
  data.features = RowMatrix(static_cast<Eigen::Index>(n), 2);
  data.targets.assign(n, 0.0);
  Rng rng = stream(spec, test ? "test/features" : "features");
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      data.features(static_cast<Eigen::Index>(i), j) = rng.normal(1.0, 0.5);
    }
  }
  base_provenance(spec, data, n, test);
  data.provenance.params["clean"] = "N((1,1),0.25 I)";
  if (test) return data;
  data.provenance.params["outliers"] = "N((4,4),0.25 I)";
  Rng pick = stream(spec, "noise/rows");
  Rng draw = stream(spec, "noise/values");
  const auto noisy = pick.sample_without_replacement(n, noisy_count(spec.noise_fraction, n));
  for (std::size_t i : noisy) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      data.features(static_cast<Eigen::Index>(i), j) = draw.normal(4.0, 0.5);
    }
  }
  data.provenance.noisy_indices = noisy;
  return data;
}

TabularDataset linear_regression(const ScenarioSpec& spec, std::size_t n, bool test) {
  const std::size_t d = spec.dim;
  Rng wrng = stream(spec, "weights");
  std::vector<double> w(d);
  for (double& v : w) v = wrng.normal();
  const double intercept = 1.0;

  TabularDataset data;
  data.features = RowMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Rng rng = stream(spec, test ? "test/features" : "features");
  for (std::size_t i = 0; i < n; ++i) {
    double y = intercept;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = rng.normal();
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
      y += w[j] * x;
    }
    data.targets.push_back(y + rng.normal());
  }
  base_provenance(spec, data, n, test);
  data.provenance.params["model"] = "y = w.x + 1 + N(0,1), w ~ N(0,I)";
  if (test) return data;
  const double sd = spec.outlier_variance_five ? std::sqrt(5.0) : 5.0;
  data.provenance.params["outlier_targets"] =
      spec.outlier_variance_five ? "N(5, variance 5)" : "N(5, std 5)";
  Rng pick = stream(spec, "noise/rows");
  Rng draw = stream(spec, "noise/values");
  const auto noisy = pick.sample_without_replacement(n, noisy_count(spec.noise_fraction, n));
  for (std::size_t i : noisy) data.targets[i] = draw.normal(5.0, sd);
  data.provenance.noisy_indices = noisy;
  return data;
}

TabularDataset logistic_binary(const ScenarioSpec& spec, std::size_t n, bool test) {
  const std::size_t d = spec.dim;
  const double r = spec.imbalance_ratio;
  auto rare = static_cast<std::size_t>(std::llround(static_cast<double>(n) / (r + 1.0)));
  rare = std::clamp<std::size_t>(rare, 1, n - 1);
  Rng lrng = stream(spec, test ? "test/labels" : "labels");
  const auto rare_rows = lrng.sample_without_replacement(n, rare);

  TabularDataset data;
  data.features = RowMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.targets.assign(n, -1.0);
  for (std::size_t i : rare_rows) data.targets[i] = 1.0;
  const double h = 0.5 * spec.separation / std::sqrt(static_cast<double>(d));
  Rng rng = stream(spec, test ? "test/features" : "features");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rng.normal(data.targets[i] * h, 1.0);
    }
  }
  base_provenance(spec, data, n, test);
  data.provenance.params["imbalance_ratio"] = num(r);
  data.provenance.params["separation"] = num(spec.separation);
  data.provenance.params["rare_rows"] = std::to_string(rare);
  if (test || spec.noise_fraction == 0.0) return data;
  Rng pick = stream(spec, "noise/rows");
  Rng draw = stream(spec, "noise/values");
  const auto noisy = pick.sample_without_replacement(n, noisy_count(spec.noise_fraction, n));
  for (std::size_t i : noisy) data.targets[i] = draw.below(2) == 0 ? -1.0 : 1.0;
  data.provenance.noisy_indices = noisy;
  data.provenance.flipped_indices = noisy;
  return data;
}

TabularDataset annotators(const ScenarioSpec& spec, std::size_t n, bool test) {
  const std::size_t d = spec.dim;
  const auto means = class_means(spec);
  Rng rng = stream(spec, test ? "test/features" : "features");
  Rng spam = stream(spec, "spam");
  const std::size_t people = spec.hammers + spec.spammers;

  TabularDataset data;
  data.features = RowMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.below(spec.classes);
    for (std::size_t j = 0; j < d; ++j) {
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rng.normal(means[c][j], 1.0);
    }
    if (test) {
      data.targets.push_back(class_label(spec, c));
      continue;
    }
    const std::size_t who = i % people;
    data.group.push_back(annotator_name(who));
    if (who < spec.hammers) {
      data.targets.push_back(class_label(spec, c));
    } else {
      data.targets.push_back(class_label(spec, spam.below(spec.classes)));
      data.provenance.noisy_indices.push_back(i);
    }
  }
  base_provenance(spec, data, n, test);
  data.provenance.params["hammers"] = std::to_string(spec.hammers);
  data.provenance.params["spammers"] = std::to_string(spec.spammers);
  data.provenance.params["classes"] = std::to_string(spec.classes);
  data.provenance.params["separation"] = num(spec.separation);
  return data;
}

TabularDataset fair_pca(const ScenarioSpec& spec, std::size_t n, bool test) {
  const std::size_t d = spec.dim;
  auto b_rows = static_cast<std::size_t>(std::llround(spec.minority_share * static_cast<double>(n)));
  b_rows = std::clamp<std::size_t>(b_rows, 1, n - 1);
  Rng rng = stream(spec, test ? "test/features" : "features");
  TabularDataset data;
  data.features = RowMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.targets.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool b = i >= n - b_rows;
    data.group.push_back(b ? "B" : "A");
    for (std::size_t j = 0; j < d; ++j) {
      double sd = 0.5;
      if (j == 0) sd = b ? 1.0 : 2.0;
      if (j == 1) sd = b ? 2.0 : 1.0;
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rng.normal(0.0, sd);
    }
  }
  base_provenance(spec, data, n, test);
  data.provenance.params["group_B_rows"] = std::to_string(b_rows);
  data.provenance.params["stds"] = "A (2,1,0.5..), B (1,2,0.5..)";
  return data;
}

TabularDataset build(const ScenarioSpec& spec, bool test) {
  spec.validate();
  const std::size_t n = test && spec.n_test > 0 ? spec.n_test : spec.n;
  TabularDataset out;
  switch (spec.scenario) {
    case Scenario::PointEstimation2D:
      out = point_estimation(spec, n, test);
      break;
    case Scenario::LinearRegression:
      out = linear_regression(spec, n, test);
      break;
    case Scenario::LogisticBinary:
      out = logistic_binary(spec, n, test);
      break;
    case Scenario::Annotators:
      out = annotators(spec, n, test);
      break;
    case Scenario::FairPcaTwoGroups:
      out = fair_pca(spec, n, test);
      break;
  }
  out.validate();
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void csv_error(const std::string& path, std::size_t line, const std::string& what) {
  throw InputError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string to_string(Scenario s) {
  for (const auto& e : kScenarios) {
    if (e.scenario == s) return e.name;
  }
  return "unknown";
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> out;
  for (const auto& e : kScenarios) out.emplace_back(e.name);
  return out;
}

Scenario parse_scenario(const std::string& text) {
  for (const auto& e : kScenarios) {
    if (text == e.name) return e.scenario;
  }
  std::string names;
  for (const auto& e : kScenarios) names += std::string(names.empty() ? "" : ", ") + e.name;
  throw InputError("unknown scenario '" + text + "' (known: " + names + ")");
}

void ScenarioSpec::validate() const {
  if (!seed) throw InputError("scenario: seed is required");
  if (n < 1) throw InputError("scenario: n must be >= 1");
  if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) {
    throw InputError("scenario: noise_fraction must lie in [0, 1)");
  }
  if (scenario != Scenario::PointEstimation2D && dim < 1) {
    throw InputError("scenario: dim must be >= 1");
  }
  switch (scenario) {
    case Scenario::PointEstimation2D:
    case Scenario::LinearRegression:
      break;
    case Scenario::LogisticBinary:
      if (n < 2 || (n_test != 0 && n_test < 2)) {
        throw InputError("scenario: logistic data needs at least 2 rows");
      }
      if (!(imbalance_ratio >= 1.0) || !std::isfinite(imbalance_ratio)) {
        throw InputError("scenario: imbalance_ratio must be >= 1");
      }
      if (!std::isfinite(separation)) throw InputError("scenario: separation must be finite");
      break;
    case Scenario::Annotators:
      if (hammers + spammers < 1) throw InputError("scenario: need at least one annotator");
      if (classes < 2) throw InputError("scenario: need at least 2 classes");
      if (!std::isfinite(separation)) throw InputError("scenario: separation must be finite");
      break;
    case Scenario::FairPcaTwoGroups:
      if (dim < 2) throw InputError("scenario: fair PCA needs dim >= 2");
      if (n < 2 || (n_test != 0 && n_test < 2)) {
        throw InputError("scenario: fair PCA needs at least 2 rows");
      }
      if (!(minority_share > 0.0 && minority_share < 1.0)) {
        throw InputError("scenario: minority_share must lie in (0, 1)");
      }
      break;
  }
}

TabularDataset generate(const ScenarioSpec& spec) { return build(spec, false); }

TabularDataset generate_test(const ScenarioSpec& spec) { return build(spec, true); }

TabularDataset inject_label_flip(const TabularDataset& data, double fraction,
                                 std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw InputError("label flip: fraction must lie in [0, 1)");
  }
  std::set<double> classes;
  for (double y : data.targets) {
    if (y != std::floor(y)) {
      throw InputError("label flip: targets are not class labels (regression data?)");
    }
    classes.insert(y);
  }
  if (data.provenance.source.rfind(to_string(Scenario::LinearRegression), 0) == 0) {
    throw InputError("label flip: regression targets are unsupported");
  }
  TabularDataset out = data;
  const std::size_t k = noisy_count(fraction, data.size());
  if (k == 0) return out;
  const std::vector<double> labels(classes.begin(), classes.end());
  Rng pick = Rng::stream(seed, "label_flip/rows");
  Rng draw = Rng::stream(seed, "label_flip/values");
  const auto rows = pick.sample_without_replacement(data.size(), k);
  for (std::size_t i : rows) out.targets[i] = labels[draw.below(labels.size())];

  auto merge = [](std::vector<std::size_t>& into, const std::vector<std::size_t>& more) {
    std::vector<std::size_t> both;
    std::set_union(into.begin(), into.end(), more.begin(), more.end(), std::back_inserter(both));
    into.swap(both);
  };
  merge(out.provenance.flipped_indices, rows);
  merge(out.provenance.noisy_indices, rows);
  out.provenance.params["label_flip_fraction"] = num(fraction);
  out.provenance.params["label_flip_seed"] = std::to_string(seed);
  return out;
}

TabularDataset label_groups(const TabularDataset& data, bool nest_existing) {
  TabularDataset out = data;
  if (nest_existing && !data.group.empty()) {
    out.supergroup = data.group;
  } else {
    out.supergroup.clear();
  }
  out.group.clear();
  for (double y : data.targets) out.group.push_back("y=" + num(y));
  return out;
}

Provenance parse_provenance(const std::string& text) {
  Provenance p;
  std::istringstream in(text);
  std::string line;
  auto indices = [](const std::string& v) {
    std::vector<std::size_t> out;
    if (v.empty()) return out;
    for (const auto& part : split(v, ',')) out.push_back(std::stoull(part));
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("provenance: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "source") {
        p.source = value;
      } else if (key == "seed") {
        p.seed = std::stoull(value);
      } else if (key.rfind("param.", 0) == 0) {
        p.params[key.substr(6)] = value;
      } else if (key == "noisy_indices") {
        p.noisy_indices = indices(value);
      } else if (key == "flipped_indices") {
        p.flipped_indices = indices(value);
      } else {
        throw InputError("provenance: unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw InputError("provenance: bad value in line '" + line + "'");
    }
  }
  return p;
}

void save_csv(const TabularDataset& data, const std::string& path) {
  data.validate();
  for (const auto* col : {&data.group, &data.supergroup}) {
    for (const auto& label : *col) {
      if (label.find_first_of(",\"\r\n") != std::string::npos) {
        throw InputError("save_csv: group label '" + label + "' needs quoting");
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("save_csv: cannot write " + path);
  const std::size_t d = data.feature_dim();
  for (std::size_t j = 0; j < d; ++j) out << 'x' << j << ',';
  out << "target";
  if (!data.group.empty()) out << ",group";
  if (!data.supergroup.empty()) out << ",supergroup";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double x : data.row(i)) out << format_number(x) << ',';
    out << format_number(data.targets[i]);
    if (!data.group.empty()) out << ',' << data.group[i];
    if (!data.supergroup.empty()) out << ',' << data.supergroup[i];
    out << '\n';
  }
  if (!out) throw InputError("save_csv: write failed for " + path);
  std::ofstream side(path + ".provenance", std::ios::binary);
  side << to_text(data.provenance);
  if (!side) throw InputError("save_csv: cannot write provenance for " + path);
}

TabularDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("load_csv: cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next()) csv_error(path, 1, "empty file, header row required");
  const auto header = split(line, ',');

  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    return std::nullopt;
  };
  const auto target_col = find(schema.target);
  if (!target_col) csv_error(path, 1, "missing target column '" + schema.target + "'");
  auto group_col = find(schema.group.value_or("group"));
  if (schema.group && !group_col) csv_error(path, 1, "missing group column '" + *schema.group + "'");
  auto super_col = find(schema.supergroup.value_or("supergroup"));
  if (schema.supergroup && !super_col) {
    csv_error(path, 1, "missing supergroup column '" + *schema.supergroup + "'");
  }
  if (super_col && !group_col) csv_error(path, 1, "supergroup column without a group column");
  std::vector<std::size_t> feature_cols;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k != *target_col && k != group_col && k != super_col) feature_cols.push_back(k);
  }

  std::vector<double> values;
  TabularDataset data;
  std::size_t rows = 0;
  while (next()) {
    if (line.empty()) {
      if (in.peek() == std::ifstream::traits_type::eof()) break;
      csv_error(path, lineno, "blank line inside the data");
    }
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      csv_error(path, lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                  std::to_string(cells.size()));
    }
    for (std::size_t k : feature_cols) {
      double v;
      if (!parse_number(cells[k], v) || !std::isfinite(v)) {
        csv_error(path, lineno, "non-numeric value '" + cells[k] + "' in column '" + header[k] + "'");
      }
      values.push_back(v);
    }
    double y;
    if (!parse_number(cells[*target_col], y) || !std::isfinite(y)) {
      csv_error(path, lineno, "non-numeric target '" + cells[*target_col] + "'");
    }
    data.targets.push_back(y);
    if (group_col) {
      if (cells[*group_col].empty()) {
        csv_error(path, lineno, "empty label in group column '" + header[*group_col] + "'");
      }
      data.group.push_back(cells[*group_col]);
    }
    if (super_col) {
      if (cells[*super_col].empty()) {
        csv_error(path, lineno, "empty label in supergroup column '" + header[*super_col] + "'");
      }
      data.supergroup.push_back(cells[*super_col]);
    }
    ++rows;
  }
  if (rows == 0) csv_error(path, lineno, "no data rows");
  data.features = RowMatrix(static_cast<Eigen::Index>(rows),
                            static_cast<Eigen::Index>(feature_cols.size()));
  std::copy(values.begin(), values.end(), data.features.data());

  const std::string side = path + ".provenance";
  if (std::filesystem::exists(side)) {
    std::ifstream pin(side, std::ios::binary);
    std::ostringstream text;
    text << pin.rdbuf();
    data.provenance = parse_provenance(text.str());
  } else {
    data.provenance.source = "csv:" + path;
  }
  data.validate();
  return data;
}

}  // namespace term
