#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "shaken/critical.hpp"

using namespace shaken;

namespace {

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> q(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) q[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, i / double(points - 1));
  return q;
}

}  // namespace

TEST(ClosedForm, KnownValues) {
  EXPECT_NEAR(jc_closed_form(20.0), 0.4407, 1e-4);
  EXPECT_NEAR(jc_closed_form(20.0), 0.5 * std::log(1.0 + std::sqrt(2.0)), 1e-12);
  EXPECT_GT(jc_closed_form(1e-6), 7.0);
  EXPECT_THROW(jc_closed_form(0.0), std::invalid_argument);
  EXPECT_THROW(jc_closed_form(-1.0), std::invalid_argument);
}

TEST(ClosedForm, FixedPoint) {
  // J_c(q) = q by bisection on the closed form
  double lo = 0.1;
  double hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (jc_closed_form(mid) > mid ? lo : hi) = mid;
  }
  EXPECT_NEAR(lo, 0.6585, 1e-4);
  EXPECT_NEAR(jc_closed_form(0.6585), 0.6585, 1e-4);
  // homogeneous honeycomb: tanh J_c = 1/sqrt(3)
  EXPECT_NEAR(lo, std::atanh(1.0 / std::sqrt(3.0)), 1e-12);
}

TEST(ClosedForm, StrictlyDecreasing) {
  const auto q = log_grid(1e-3, 20.0, 1000);
  // tanh q rounds to 1 past q ~ 18, so strictness is only checked below 10
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] < 10.0)
      EXPECT_LT(jc_closed_form(q[i]), jc_closed_form(q[i - 1]));
    else
      EXPECT_LE(jc_closed_form(q[i]), jc_closed_form(q[i - 1]) + 1e-15);
  }
}

TEST(Residual, VanishesOnTheCurve) {
  for (double q : {0.1, 0.5, 1.0, 2.0, 5.0}) EXPECT_NEAR(critical_residual(jc_closed_form(q), q), 0.0, 1e-12);
  for (double q : log_grid(1e-3, 20.0, 1000)) EXPECT_NEAR(critical_residual(jc_closed_form(q), q), 0.0, 1e-12);
}

TEST(Residual, Limits) {
  EXPECT_NEAR(critical_residual(1e-12, 1.0), -1.0, 1e-11);
  EXPECT_NEAR(critical_residual(40.0, 1.0), 2.0 * std::tanh(1.0), 1e-12);
  for (double J = 0.01; J < 5; J += 0.01) EXPECT_LT(critical_residual(J, 0.7), critical_residual(J + 0.01, 0.7));
}

TEST(SolveJc, MatchesClosedForm) {
  EXPECT_NEAR(solve_jc(1.0), jc_closed_form(1.0), 1e-12);
  EXPECT_NEAR(solve_jc(0.6585), 0.6585, 1e-4);
  EXPECT_NEAR(solve_jc(20.0), 0.4407, 1e-4);
  for (double q : log_grid(1e-3, 20.0, 1000)) EXPECT_NEAR(solve_jc(q), jc_closed_form(q), 1e-12);
  EXPECT_THROW(solve_jc(0.0), std::invalid_argument);
}

TEST(EvenSubgraphs, CellFromGraph) {
  const auto cell = fundamental_cell(HexGraph(build_torus(6)));
  ASSERT_EQ(cell.edges.size(), 3u);
  int q = 0;
  for (const auto& e : cell.edges) q += e.kind == EdgeKind::q;
  EXPECT_EQ(q, 1);
}

TEST(EvenSubgraphs, RederiveCriticalEquation) {
  for (int n : {2, 4, 7}) {
    const auto cell = fundamental_cell(HexGraph(build_torus(n)));
    const auto r = even_subgraph_check(cell, 0.5, 0.7);
    EXPECT_EQ(r.lhs, 1.0);
    EXPECT_NEAR(r.rhs, 2 * std::tanh(0.5) * std::tanh(0.7) + std::pow(std::tanh(0.5), 2), 1e-15);
    EXPECT_EQ(r.even_class_count, 1u);
    EXPECT_EQ(r.odd_class_count, 3u);
    EXPECT_EQ(r.lhs_terms, (std::map<std::pair<int, int>, int>{{{0, 0}, 1}}));
    EXPECT_EQ(r.rhs_terms, (std::map<std::pair<int, int>, int>{{{1, 1}, 2}, {{2, 0}, 1}}));
  }
}

TEST(EvenSubgraphs, EqualityOnTheCurve) {
  const auto cell = fundamental_cell(HexGraph(build_torus(4)));
  for (double q : {0.2, 1.0, 3.0}) {
    const auto r = even_subgraph_check(cell, jc_closed_form(q), q);
    EXPECT_NEAR(r.lhs, r.rhs, 1e-12);
  }
}

TEST(Scan, Validation) {
  ScanConfig cfg;
  EXPECT_THROW(scan_critical(cfg), std::invalid_argument);
  cfg.q_values = {1.0};
  cfg.sizes = {8};
  EXPECT_THROW(scan_critical(cfg), std::invalid_argument);
  cfg.protocol = ScanProtocol::susceptibility_peak;
  cfg.grid_points = 2;
  EXPECT_THROW(scan_critical(cfg), std::invalid_argument);
}

TEST(Scan, CrossingHelpers) {
  const std::vector<double> J{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> d{-2.0, -1.0, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(*detail::locate_crossing(J, d), 1.5);
  EXPECT_FALSE(detail::locate_crossing(J, {1.0, 2.0, 3.0, 4.0}).has_value());
  const std::vector<double> y{0.0, 3.0, 4.0, 3.0};
  EXPECT_DOUBLE_EQ(detail::parabola_vertex(J, y, 2), 2.0);
}

TEST(Scan, OrderedAndDisorderedRegions) {
  const double jc = jc_closed_form(1.0);
  SamplerConfig cfg;
  cfg.kind = SamplerKind::fk;
  cfg.burnin = 300;
  cfg.samples = 1000;
  cfg.thin = 1;
  const TorusGeometry t(32);
  auto abs_m = [&](double J) {
    double s = 0.0;
    run_sampler(t, Params(J, 1.0), cfg, [&](const SpinPair& p, const FkOutcome*) { s += std::abs(magnetization(p.first)); });
    return s / static_cast<double>(cfg.samples);
  };
  EXPECT_GT(abs_m(jc + 0.15) - abs_m(jc - 0.15), 0.3);
}

TEST(Scan, SmallBinderScanNearAnalytic) {
  ScanConfig cfg;
  cfg.q_values = {1.0};
  cfg.sizes = {8, 16};
  cfg.sweeps = 4000;
  cfg.burnin = 200;
  cfg.grid_points = 9;
  cfg.window = 0.2;
  cfg.seed = 3;
  const auto r = scan_critical(cfg);
  ASSERT_EQ(r.size(), 1u);
  ASSERT_TRUE(r[0].jc_numeric.has_value()) << r[0].note;
  EXPECT_NEAR(*r[0].jc_numeric, r[0].jc_analytic, 0.08);
  EXPECT_GT(*r[0].numeric_err, 0.0);
  EXPECT_EQ(r[0].grid.size(), 18u);
}
