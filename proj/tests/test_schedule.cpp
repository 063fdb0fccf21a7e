#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ffprep/schedule.hpp"
#include "ffprep/types.hpp"
#include "oracles.hpp"

using namespace ffprep;

namespace {

double bump(double alpha, double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::exp(-1.0 / std::pow(t * (1.0 - t), 1.0 / alpha));
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(GevreyF, EndpointsAndMidpoint) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    EXPECT_EQ(gevrey_f(alpha, 0.0), 0.0);
    EXPECT_EQ(gevrey_f(alpha, 1.0), 1.0);
    EXPECT_NEAR(gevrey_f(alpha, 0.5), 0.5, 1e-12);
  }
}

TEST(GevreyF, MatchesSimpsonOracle) {
  auto b = [](double t) { return bump(1.0, t); };
  const double num = oracle::simpson(b, 0.0, 0.25, 1'000'000);
  const double den = oracle::simpson(b, 0.0, 1.0, 1'000'000);
  EXPECT_NEAR(gevrey_f(1.0, 0.25), num / den, 1e-10);
  const Schedule sched = Schedule::gevrey(1.0);
  EXPECT_NEAR(sched(0.25), num / den, 1e-10);
  EXPECT_NEAR(sched.normalization(), den, 1e-10);
}

TEST(GevreyF, RejectsBadArguments) {
  EXPECT_THROW(gevrey_f(1.0, -0.1), InvalidInput);
  EXPECT_THROW(gevrey_f(1.0, 1.1), InvalidInput);
  EXPECT_THROW(gevrey_f(0.0, 0.5), InvalidInput);
  EXPECT_THROW(Schedule::gevrey(-1.0), InvalidInput);
}

TEST(GevreyF, QuadratureToleranceIsHonest) {
  for (double s : {0.1, 0.3, 0.7}) {
    const auto coarse = gevrey_f_with_error(1.0, s, 1e-8);
    const auto fine = gevrey_f_with_error(1.0, s, 1e-12);
    EXPECT_LE(std::abs(coarse.value - fine.value), coarse.error + fine.error + 1e-15);
  }
}

TEST(GevreyBump, UnderflowsToExactZero) {
  EXPECT_EQ(gevrey_bump(1.0, 0.0), 0.0);
  EXPECT_EQ(gevrey_bump(1.0, 1e-4), 0.0);
  EXPECT_NEAR(gevrey_bump(1.0, 0.5), std::exp(-4.0), 1e-16);
  EXPECT_NEAR(gevrey_bump(2.0, 0.3), bump(2.0, 0.3), 1e-16);
}

TEST(Schedule, MonotoneAndSymmetric) {
  for (double alpha : {0.7, 1.0, 1.5}) {
    const Schedule sched = Schedule::gevrey(alpha);
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double s = i / 1000.0;
      const double f = sched(s);
      EXPECT_GE(f, prev);
      EXPECT_NEAR(f + sched(1.0 - s), 1.0, 1e-10);
      prev = f;
    }
  }
  const Schedule lin = Schedule::linear();
  EXPECT_EQ(lin(0.37), 0.37);
  EXPECT_THROW(lin(1.5), InvalidInput);
}

TEST(Flatness, LinearScheduleIsNotFlat) {
  const auto q = endpoint_flatness(Schedule::linear(), 1, 0.01);
  EXPECT_NEAR(q[0], 1.0, 1e-9);
  EXPECT_NEAR(q[1], 1.0, 1e-9);
}

TEST(Flatness, GevreyQuotientsDecaySuperPolynomially) {
  const Schedule sched = Schedule::gevrey(1.0);
  for (int k = 1; k <= 4; ++k) {
    const auto coarse = endpoint_flatness(sched, k, 0.05);
    const auto fine = endpoint_flatness(sched, k, 0.025);
    ASSERT_GT(coarse[0], 0.0);
    EXPECT_LT(fine[0] / coarse[0], 0.125) << "order " << k;
    EXPECT_LT(fine[1] / coarse[1], 0.125) << "order " << k;
  }
  double prev = 1.0;
  for (double h : {0.05, 0.04, 0.03, 0.02, 0.01}) {
    const double v = endpoint_flatness(sched, 0, h)[0];
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_THROW(endpoint_flatness(sched, 7, 0.01), InvalidInput);
  EXPECT_THROW(endpoint_flatness(sched, 1, 0.1), InvalidInput);
}

TEST(TableSchedule, InterpolatesAndValidates) {
  const Schedule t = Schedule::table({0.0, 0.5, 1.0}, {0.0, 0.2, 1.0});
  EXPECT_NEAR(t(0.25), 0.1, 1e-15);
  EXPECT_NEAR(t(0.75), 0.6, 1e-15);
  EXPECT_THROW(Schedule::table({0.0, 0.5, 1.0}, {0.0, 0.6, 0.5}), InvalidInput);
  EXPECT_THROW(Schedule::table({0.0, 1.0}, {0.1, 1.0}), InvalidInput);
  EXPECT_THROW(Schedule::table({0.0, 0.5, 0.5, 1.0}, {0.0, 0.1, 0.2, 1.0}), InvalidInput);
}

TEST(TableSchedule, LoadsCsvWithHeader) {
  const auto p = write_temp("ffprep_sched.csv", "s,f\n0,0\n0.5,0.25\n1,1\n");
  const Schedule t = load_schedule_csv(p);
  EXPECT_EQ(t.kind(), ScheduleKind::table);
  EXPECT_NEAR(t(0.5), 0.25, 1e-15);
  const auto bad = write_temp("ffprep_sched_bad.csv", "0,0\n0.5,x\n1,1\n");
  EXPECT_THROW(load_schedule_csv(bad), InvalidInput);
  EXPECT_THROW(load_schedule_csv("/nonexistent/schedule.csv"), InvalidInput);
}
