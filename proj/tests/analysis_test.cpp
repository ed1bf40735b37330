#include "term/analysis.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "term/error.hpp"
#include "term/rng.hpp"

namespace term {
namespace {

// mpmath: -(1/3) log(1/3) - (2/3) log(2/3)
constexpr double kEntropyZeroLn2 = 0.63651416829481281845;

TabularDataset points(const std::vector<double>& xs) {
  TabularDataset data;
  data.features = RowMatrix(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    data.features(static_cast<Eigen::Index>(i), 0) = xs[i];
  }
  data.targets.assign(xs.size(), 0.0);
  return data;
}

TabularDataset logistic_data(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  TabularDataset data;
  data.features = RowMatrix(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = i % 2 == 0 ? -1.0 : 1.0;
    data.features(static_cast<Eigen::Index>(i), 0) = rng.normal(y, 1.0);
    data.features(static_cast<Eigen::Index>(i), 1) = rng.normal(0.5 * y, 1.0);
    data.targets.push_back(y);
  }
  return data;
}

SolverConfig armijo() {
  SolverConfig cfg;
  cfg.step_size = 1.0;
  cfg.step_rule = StepRule::Backtracking;
  cfg.max_iters = 5000;
  cfg.grad_tol = 1e-10;
  return cfg;
}

TEST(LossStatsTest, Examples) {
  const auto s = loss_stats(LossVector({1, 2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_NEAR(s.variance, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.weight_entropy, std::log(3.0), 1e-15);
  EXPECT_EQ(s.min_loss, 1.0);
  EXPECT_EQ(s.max_loss, 3.0);
  EXPECT_NEAR(s.cosine_to_ones, 6.0 / (std::sqrt(14.0) * std::sqrt(3.0)), 1e-15);

  const auto c = loss_stats(LossVector({4, 4, 4, 4}), 2.0);
  EXPECT_EQ(c.variance, 0.0);
  EXPECT_NEAR(c.cosine_to_ones, 1.0, 1e-15);
  EXPECT_NEAR(c.weight_entropy, std::log(4.0), 1e-15);

  EXPECT_EQ(loss_stats(LossVector({0, 0}), 1.0).cosine_to_ones, 1.0);
  EXPECT_NEAR(loss_stats(LossVector({0.0, std::log(2.0)}), 1.0).weight_entropy,
              kEntropyZeroLn2, 1e-15);
}

TEST(LossStatsTest, EntropyBounds) {
  Rng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.below(25));
    for (double& x : v) x = rng.uniform(0, 10);
    const double t = rng.uniform(-30, 30);
    const auto s = loss_stats(LossVector(v), t);
    EXPECT_GE(s.weight_entropy, -1e-15);
    EXPECT_LE(s.weight_entropy, std::log(static_cast<double>(v.size())) + 1e-12);
    EXPECT_GE(s.variance, 0.0);
    EXPECT_LE(s.cosine_to_ones, 1.0 + 1e-15);
  }
  EXPECT_EQ(entropy(std::vector<double>{1.0, 0.0}), 0.0);
}

TEST(SweepTest, RejectsBadGrids) {
  const EmpiricalProblem toy(points({0, 1, 4}), PointDistanceLoss{});
  EXPECT_THROW(tradeoff_sweep(toy, {}, armijo()), InputError);
  EXPECT_THROW(tradeoff_sweep(toy, {0.0, 0.0}, armijo()), InputError);
  EXPECT_THROW(tradeoff_sweep(toy, {1.0, -1.0}, armijo()), InputError);
  EXPECT_THROW(tradeoff_sweep(toy, {0.0, NAN}, armijo()), InputError);
}

bool passed(const std::vector<PropertyCheck>& checks, const std::string& name) {
  for (const auto& c : checks) {
    if (c.name == name) return c.passed;
  }
  ADD_FAILURE() << "no check named " << name;
  return false;
}

TEST(SweepTest, PointToy) {
  const EmpiricalProblem toy(points({0, 1, 4}), PointDistanceLoss{});
  const auto sweep = tradeoff_sweep(toy, {-50, -2, 0, 2, 50}, armijo(), {-1.0, 0.0, 1.0});
  ASSERT_EQ(sweep.points.size(), 5u);
  for (const auto& p : sweep.points) ASSERT_TRUE(p.ok) << p.t << ": " << p.error;
  // ERM at the mean 5/3: average loss is the population variance of {0,1,4}.
  EXPECT_NEAR(sweep.points[2].stats.mean, 26.0 / 9.0, 1e-12);
  for (const auto& p : sweep.points) {
    EXPECT_GE(p.stats.mean, sweep.points[2].stats.mean - 1e-12);
  }
  EXPECT_NEAR(sweep.points[4].theta[0], 2.0, 1e-3);
  const auto checks = check_sweep_properties(sweep);
  EXPECT_TRUE(passed(checks, "max_loss_nonincreasing_t_pos"));
  EXPECT_TRUE(passed(checks, "avg_loss_nondecreasing_t_pos"));
  EXPECT_TRUE(passed(checks, "objective_nondecreasing"));
  // The negative branch is not monotone in variance: at t = -2 the wells at 0
  // and 1 have merged (theta ~ 1/2, losses ~ {1/4, 1/4, 49/4}, variance ~ 32)
  // while t = -50 sits at theta ~ 1 (losses {1, 0, 9}, variance 146/9).
  EXPECT_NEAR(sweep.points[0].stats.variance, 146.0 / 9.0, 1e-6);
  EXPECT_NEAR(sweep.points[1].stats.variance, 32.0, 1e-4);
  EXPECT_FALSE(passed(checks, "variance_nonincreasing"));
}

TEST(SweepTest, LogisticPositiveTilts) {
  const EmpiricalProblem problem(logistic_data(62, 200), LogisticLoss{}, 1e-3);
  const auto sweep = tradeoff_sweep(problem, {0, 0.5, 2, 10, 50}, armijo(), {-1.0, 0.0, 1.0});
  for (const auto& p : sweep.points) {
    ASSERT_TRUE(p.ok) << p.t << ": " << p.error;
    EXPECT_EQ(p.termination, "gradient_tolerance") << p.t;
  }
  for (const auto& c : check_sweep_properties(sweep)) {
    EXPECT_TRUE(c.passed) << c.name << " worst " << c.worst_violation;
  }
}

TEST(SweepTest, FailuresAreRecorded) {
  const EmpiricalProblem toy(points({0, 1, 4}), PointDistanceLoss{});
  SolverConfig cfg;
  cfg.step_size = 10.0;  // diverges at any tilt
  cfg.max_iters = 500;
  const auto sweep = tradeoff_sweep(toy, {0.0, 1.0}, cfg);
  ASSERT_EQ(sweep.points.size(), 2u);
  EXPECT_FALSE(sweep.points[0].ok);
  EXPECT_FALSE(sweep.points[0].error.empty());
  const auto checks = check_sweep_properties(sweep);
  for (const auto& c : checks) EXPECT_FALSE(c.passed) << c.name;
  std::ostringstream csv;
  write_sweep_csv(sweep, csv);
  EXPECT_NE(csv.str().find("\n0,0,"), std::string::npos);
}

TEST(SweepTest, CsvShape) {
  const EmpiricalProblem toy(points({0, 1, 4}), PointDistanceLoss{});
  const auto sweep = tradeoff_sweep(toy, {0.0, 1.0}, armijo(), {0.5});
  std::ostringstream csv;
  write_sweep_csv(sweep, csv);
  std::istringstream in(csv.str());
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header,
            "t,ok,objective,avg_loss,min_loss,max_loss,variance,cosine,entropy,H_tau=0.5,"
            "iterations,termination,theta_0");
  std::getline(in, row);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 12);
  EXPECT_EQ(row.rfind("0,1,", 0), 0u);
}

}  // namespace
}  // namespace term
