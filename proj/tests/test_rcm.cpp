#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace shaken;

namespace {

BondConfig random_bonds(std::size_t edges, double p, std::mt19937_64& gen) {
  std::bernoulli_distribution open(p);
  BondConfig w = BondConfig::all(edges, false);
  for (auto& o : w.open) o = open(gen) ? 1 : 0;
  return w;
}

BondConfig q_only(const HexGraph& g) {
  BondConfig w = BondConfig::all(g.edge_count(), false);
  for (std::size_t e = 0; e < g.edge_count(); ++e) w.open[e] = g.edge(e).kind == EdgeKind::q;
  return w;
}

}  // namespace

TEST(Clusters, Extremes) {
  for (int n : {2, 3, 5}) {
    const HexGraph g(build_torus(n));
    EXPECT_EQ(cluster_partition(BondConfig::all(g.edge_count(), false), g).count, 2u * n * n);
    EXPECT_EQ(cluster_partition(BondConfig::all(g.edge_count(), true), g).count, 1u);
    EXPECT_EQ(cluster_partition(q_only(g), g).count, static_cast<std::size_t>(n * n));
  }
}

TEST(Clusters, MatchBreadthFirstSearch) {
  std::mt19937_64 gen(2024);
  for (int n : {2, 3, 4}) {
    const HexGraph g(build_torus(n));
    for (int k = 0; k < 1000; ++k) {
      const auto w = random_bonds(g.edge_count(), 0.15 + 0.7 * (k % 10) / 10.0, gen);
      std::size_t count = 0;
      const auto ref = oracle::bfs_labels(w, g, &count);
      const auto c = cluster_partition(w, g);
      ASSERT_EQ(c.count, count);
      ASSERT_EQ(c.label, ref);
    }
  }
}

TEST(Clusters, Connected) {
  const HexGraph g(build_torus(3));
  const auto all = BondConfig::all(g.edge_count(), true);
  const auto none = BondConfig::all(g.edge_count(), false);
  const auto q = q_only(g);
  for (std::size_t u = 0; u < g.vertex_count(); ++u) {
    EXPECT_TRUE(connected(all, g, u, (u + 7) % g.vertex_count()));
    EXPECT_FALSE(connected(none, g, u, (u + 1) % g.vertex_count()));
  }
  EXPECT_TRUE(connected(q, g, g.vertex(4, Layer::one), g.vertex(4, Layer::two)));
  EXPECT_FALSE(connected(q, g, g.vertex(4, Layer::one), g.vertex(5, Layer::one)));
}

TEST(RcmWeight, ClosedAndOpen) {
  const HexGraph g(build_torus(2));
  const Params p(0.4, 0.6);
  const double pj = p.p_J();
  const double pq = p.p_q();
  EXPECT_NEAR(rcm_log_weight(BondConfig::all(12, false), p, g),
              std::log(std::pow(1 - pj, 8) * std::pow(1 - pq, 4) * 256.0), 1e-12);
  EXPECT_NEAR(rcm_log_weight(BondConfig::all(12, true), p, g), std::log(std::pow(pj, 8) * std::pow(pq, 4) * 2.0),
              1e-12);
}

TEST(RcmWeight, RejectsDegenerateProbabilities) {
  const HexGraph g(build_torus(2));
  EXPECT_THROW(rcm_log_weight(BondConfig::all(12, false), Params(0.0, 0.5), g), std::domain_error);
  EXPECT_THROW(rcm_log_weight(BondConfig::all(12, false), Params(0.5, 0.0), g), std::domain_error);
}

TEST(RcmWeight, SumsToExactPartitionFunction) {
  const HexGraph g(build_torus(2));
  const Params p(0.4, 0.6);
  double z = 0.0;
  for (std::uint64_t w = 0; w < (1u << 12); ++w) z += std::exp(rcm_log_weight(BondConfig::from_bits(w, 12), p, g));
  const auto phi = enumerate_rcm(2, p);
  EXPECT_NEAR(z, phi.partition(), 1e-10 * z);
}

TEST(BondsGivenSpins, OpenFractionMatchesProbability) {
  const HexGraph g(build_torus(8));
  const Params p(0.35, 0.8);
  const CounterRng rng(77);
  const SpinPair plus = SpinPair::uniform(64, 1);
  double j_open = 0;
  double q_open = 0;
  double j_total = 0;
  double q_total = 0;
  for (std::uint64_t step = 0; step < 1000; ++step) {
    const auto w = bonds_given_spins(plus, p, g, rng, step);
    for (std::size_t e = 0; e < w.size(); ++e) {
      if (g.edge(e).kind == EdgeKind::j) {
        j_open += w.open[e];
        j_total += 1;
      } else {
        q_open += w.open[e];
        q_total += 1;
      }
    }
  }
  // j_total = 128000 > 1e5 draws
  EXPECT_NEAR(j_open / j_total, p.p_J(), 3.0 * std::sqrt(p.p_J() * (1 - p.p_J()) / j_total));
  EXPECT_NEAR(q_open / q_total, p.p_q(), 3.0 * std::sqrt(p.p_q() * (1 - p.p_q()) / q_total));
}

TEST(BondsGivenSpins, NeverOpensDisagreeingEdges) {
  const HexGraph g(build_torus(6));
  const Params p(3.0, 3.0);
  const CounterRng rng(1);
  std::mt19937_64 gen(8);
  for (std::uint64_t step = 0; step < 200; ++step) {
    SpinPair s = SpinPair::uniform(36, 1);
    for (std::size_t x = 0; x < 36; ++x) {
      s.first[x] = (gen() & 1u) ? Spin{1} : Spin{-1};
      s.second[x] = (gen() & 1u) ? Spin{1} : Spin{-1};
    }
    const auto w = bonds_given_spins(s, p, g, rng, step);
    for (std::size_t e = 0; e < w.size(); ++e)
      if (w.open[e]) ASSERT_EQ(s.at_vertex(g.edge(e).first), s.at_vertex(g.edge(e).second));
  }
}

TEST(BondsGivenSpins, CheckerboardClosesQEdges) {
  const HexGraph g(build_torus(4));
  SpinPair s{SpinLayer(16, 1), SpinLayer(16, -1)};
  const auto w = bonds_given_spins(s, Params(5.0, 5.0), g, CounterRng(3), 0);
  for (std::size_t x = 0; x < 16; ++x) EXPECT_EQ(w.open[3 * x], 0);
}

TEST(BondsGivenSpins, ZeroProbabilityClosesAll) {
  const HexGraph g(build_torus(4));
  const auto w = bonds_given_spins(SpinPair::uniform(16, 1), Params(0.0, 0.0), g, CounterRng(3), 0);
  EXPECT_EQ(w, BondConfig::all(g.edge_count(), false));
}

TEST(SpinsGivenBonds, AllOpenGivesGlobalSign) {
  const HexGraph g(build_torus(3));
  const auto all = BondConfig::all(g.edge_count(), true);
  const CounterRng rng(19);
  int plus = 0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    const auto s = spins_given_bonds(all, g, rng, static_cast<std::uint64_t>(k));
    const bool up = s == SpinPair::uniform(9, 1);
    ASSERT_TRUE(up || s == SpinPair::uniform(9, -1));
    plus += up;
  }
  EXPECT_NEAR(plus / double(draws), 0.5, 3.0 * 0.5 / std::sqrt(draws));
}

TEST(SpinsGivenBonds, AllClosedGivesFairCoins) {
  const HexGraph g(build_torus(4));
  const auto none = BondConfig::all(g.edge_count(), false);
  const CounterRng rng(23);
  double sum = 0.0;
  const int draws = 2000;
  for (int k = 0; k < draws; ++k) {
    const auto s = spins_given_bonds(none, g, rng, static_cast<std::uint64_t>(k));
    for (std::size_t v = 0; v < g.vertex_count(); ++v) sum += s.at_vertex(v);
  }
  const double total = draws * 32.0;
  EXPECT_NEAR(sum / total, 0.0, 3.0 / std::sqrt(total));
}

TEST(SpinsGivenBonds, ConstantOnClusters) {
  const HexGraph g(build_torus(5));
  std::mt19937_64 gen(4);
  const CounterRng rng(29);
  for (int k = 0; k < 300; ++k) {
    const auto w = random_bonds(g.edge_count(), 0.5, gen);
    const auto s = spins_given_bonds(w, g, rng, static_cast<std::uint64_t>(k));
    for (std::size_t e = 0; e < w.size(); ++e)
      if (w.open[e]) ASSERT_EQ(s.at_vertex(g.edge(e).first), s.at_vertex(g.edge(e).second));
  }
}

// The exact bond-then-spin kernel fixes pi_2.
TEST(FkSweep, ExactKernelFixesPi2) {
  for (auto [J, q] : std::vector<std::pair<double, double>>{{0.3, 0.4}, {0.9, 0.2}, {0.5, 1.5}}) {
    const Params p(J, q);
    const HexGraph g(build_torus(2));
    const auto pi2 = enumerate_pi2(2, p);
    const auto next = oracle::fk_kernel_apply(pi2.probabilities, g, p);
    EXPECT_LT(oracle::sup_norm(next, pi2.probabilities), 1e-10);
  }
}

TEST(FkSweep, EmpiricalMatchesExactPi2) {
  const Params p(0.3, 0.4);
  FkChain chain(build_torus(2), p, 101);
  std::vector<std::uint64_t> counts(256, 0);
  for (int i = 0; i < 1000000; ++i) {
    chain.sweep();
    ++counts[chain.spins().to_bits()];
  }
  const auto pi2 = enumerate_pi2(2, p);
  EXPECT_LT(oracle::total_variation(oracle::empirical(counts), pi2.probabilities), 0.02);
  // magnetization histogram symmetric within noise
  std::vector<double> hist(9, 0.0);
  for (std::size_t s = 0; s < 256; ++s) hist[static_cast<std::size_t>(std::popcount(s))] += counts[s];
  for (int k = 0; k < 4; ++k) {
    const double a = hist[static_cast<std::size_t>(k)];
    const double b = hist[static_cast<std::size_t>(8 - k)];
    EXPECT_LT(std::abs(a - b), 5.0 * std::sqrt(a + b) + 1.0);
  }
}

TEST(FkSweep, Reproducible) {
  FkChain a(build_torus(6), Params(0.6, 0.6), 5);
  FkChain b(build_torus(6), Params(0.6, 0.6), 5);
  FkChain c(build_torus(6), Params(0.6, 0.6), 6);
  bool differs = false;
  for (int i = 0; i < 50; ++i) {
    a.sweep();
    b.sweep();
    c.sweep();
    ASSERT_EQ(a.spins(), b.spins());
    differs = differs || !(a.spins() == c.spins());
  }
  EXPECT_TRUE(differs);
}

TEST(FkSweep, ThreadCountDoesNotChangeResults) {
  // 96^2 sites span several parallel blocks
  auto run = [](std::size_t threads) {
    set_thread_count(threads);
    FkChain chain(build_torus(96), Params(0.5, 0.7), 31);
    for (int i = 0; i < 5; ++i) chain.sweep();
    return std::make_pair(chain.spins(), chain.last().bonds);
  };
  const auto one = run(1);
  EXPECT_TRUE(run(2) == one);
  EXPECT_TRUE(run(4) == one);
  set_thread_count(1);
}
