#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "shaken/errors.hpp"
#include "shaken/format.hpp"
#include "shaken/lattice.hpp"
#include "shaken/measures.hpp"
#include "shaken/parallel.hpp"
#include "shaken/rcm.hpp"

namespace shaken {

// Hard cap on the number of enumerated bits. Larger requests are refused,
// never truncated.
inline constexpr int kEnumerationBits = 24;

enum class Space { spins, spin_pairs, bonds };

// Exact probability table. Configuration index i is bit-packed: spin tables
// use SpinLayer/SpinPair::from_bits, bond tables BondConfig::from_bits.
struct DistTable {
  Space space = Space::spins;
  int n = 0;
  std::vector<double> probabilities;
  double log_partition = 0.0;

  double partition() const { return std::exp(log_partition); }
  std::size_t size() const noexcept { return probabilities.size(); }
  double operator[](std::size_t i) const noexcept { return probabilities[i]; }

  template <class Observable>
  double expectation(Observable&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i)
      if (probabilities[i] != 0.0) s += probabilities[i] * f(i);
    return s;
  }
};

namespace detail {

inline void check_budget(long long bits, const char* what) {
  if (bits > kEnumerationBits)
    throw EnumerationBudgetExceeded(std::string(what) + ": " + std::to_string(bits) + " bits exceeds the " +
                                    std::to_string(kEnumerationBits) + "-bit enumeration budget");
}

inline DistTable normalize(Space space, int n, std::vector<double> log_weights) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) peak = std::max(peak, lw);
  const double total = deterministic_sum(log_weights.size(), [&](std::size_t i) { return std::exp(log_weights[i] - peak); });
  DistTable t;
  t.space = space;
  t.n = n;
  t.log_partition = peak + std::log(total);
  for (double& lw : log_weights) lw = std::exp(lw - t.log_partition);
  t.probabilities = std::move(log_weights);
  return t;
}

}  // namespace detail

inline DistTable enumerate_pi2(const TorusGeometry& t, const Params& params) {
  const std::size_t sites = t.site_count();
  detail::check_budget(static_cast<long long>(2 * sites), "enumerate_pi2");
  std::vector<double> lw(std::size_t{1} << (2 * sites));
  parallel_for(lw.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) lw[i] = -pair_energy(SpinPair::from_bits(i, sites), t, params);
  });
  return detail::normalize(Space::spin_pairs, t.size(), std::move(lw));
}

inline DistTable enumerate_pi2(int n, const Params& params) { return enumerate_pi2(TorusGeometry(n), params); }

// Marginal on layer 1 of a spin-pair table; keeps the same partition function.
inline DistTable first_layer_marginal(const DistTable& pi2) {
  const std::size_t sites = static_cast<std::size_t>(pi2.n) * static_cast<std::size_t>(pi2.n);
  const std::uint64_t mask = (std::uint64_t{1} << sites) - 1;
  DistTable t;
  t.space = Space::spins;
  t.n = pi2.n;
  t.log_partition = pi2.log_partition;
  t.probabilities.assign(std::size_t{1} << sites, 0.0);
  for (std::size_t i = 0; i < pi2.size(); ++i) t.probabilities[i & mask] += pi2[i];
  return t;
}

inline DistTable enumerate_pi(int n, const Params& params) { return first_layer_marginal(enumerate_pi2(n, params)); }

inline DistTable enumerate_pi_gibbs(int n, double J) {
  const TorusGeometry t(n);
  const std::size_t sites = t.site_count();
  detail::check_budget(static_cast<long long>(sites), "enumerate_pi_gibbs");
  std::vector<double> lw(std::size_t{1} << sites);
  parallel_for(lw.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) lw[i] = -ising_energy(SpinLayer::from_bits(i, sites), t, J);
  });
  return detail::normalize(Space::spins, n, std::move(lw));
}

namespace detail {

// log prod_e p_e^w(e) (1-p_e)^(1-w(e)); -inf where an impossible state occurs.
inline double log_bernoulli_product(std::uint64_t bits, const HexGraph& g, const Params& params) {
  const double p[2] = {params.p_J(), params.p_q()};
  double lw = 0.0;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const double pe = p[static_cast<int>(g.edge(e).kind)];
    lw += ((bits >> e) & 1u) ? std::log(pe) : std::log1p(-pe);
  }
  return lw;
}

}  // namespace detail

inline DistTable enumerate_rcm(int n, const Params& params) {
  const HexGraph g{TorusGeometry(n)};
  detail::check_budget(static_cast<long long>(g.edge_count()), "enumerate_rcm");
  std::vector<double> lw(std::size_t{1} << g.edge_count());
  parallel_for(lw.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto k = cluster_partition(BondConfig::from_bits(i, g.edge_count()), g).count;
      lw[i] = detail::log_bernoulli_product(i, g, params) + static_cast<double>(k) * std::numbers::ln2;
    }
  });
  return detail::normalize(Space::bonds, n, std::move(lw));
}

// Edwards-Sokal coupling checked by full enumeration of (pair, omega).
struct CouplingReport {
  double spin_marginal_error = 0.0;        // sup |mu_1 - pi_2|
  double bond_marginal_error = 0.0;        // sup |mu_2 - Phi|
  double bonds_given_spins_error = 0.0;    // sup |mu(omega | sigma) - product law|
  double spins_given_bonds_error = 0.0;    // sup |mu(sigma | omega) - 2^{-k} on cluster-constant sigma|
  double open_q_edge_mass = 0.0;           // mu-mass of omega with an open q-edge
};

inline CouplingReport exact_coupling_checks(int n, const Params& params) {
  const HexGraph g{TorusGeometry(n)};
  const std::size_t sites = g.site_count();
  const std::size_t edges = g.edge_count();
  detail::check_budget(static_cast<long long>(2 * sites + edges), "exact_coupling_checks");
  const std::size_t n_spin = std::size_t{1} << (2 * sites);
  const std::size_t n_bond = std::size_t{1} << edges;
  const double p[2] = {params.p_J(), params.p_q()};

  std::uint64_t q_mask = 0;
  for (std::size_t e = 0; e < edges; ++e)
    if (g.edge(e).kind == EdgeKind::q) q_mask |= std::uint64_t{1} << e;

  // Per-edge factor of the joint mass, without the agreement indicator.
  std::vector<double> base(n_bond);
  std::vector<std::size_t> clusters(n_bond);
  for (std::size_t w = 0; w < n_bond; ++w) {
    double f = 1.0;
    for (std::size_t e = 0; e < edges; ++e) {
      const double pe = p[static_cast<int>(g.edge(e).kind)];
      f *= ((w >> e) & 1u) ? pe : 1.0 - pe;
    }
    base[w] = f;
    clusters[w] = cluster_partition(BondConfig::from_bits(w, edges), g).count;
  }
  std::vector<std::uint64_t> agree(n_spin);
  for (std::size_t s = 0; s < n_spin; ++s) {
    const SpinPair pair = SpinPair::from_bits(s, sites);
    std::uint64_t a = 0;
    for (std::size_t e = 0; e < edges; ++e)
      if (pair.at_vertex(g.edge(e).first) == pair.at_vertex(g.edge(e).second)) a |= std::uint64_t{1} << e;
    agree[s] = a;
  }

  std::vector<double> mu1(n_spin, 0.0);
  std::vector<double> mu2(n_bond, 0.0);
  double total = 0.0;
  double q_open = 0.0;
  for (std::size_t s = 0; s < n_spin; ++s) {
    for (std::size_t w = 0; w < n_bond; ++w) {
      if (w & ~agree[s]) continue;
      const double m = base[w];
      mu1[s] += m;
      mu2[w] += m;
      total += m;
      if (w & q_mask) q_open += m;
    }
  }

  CouplingReport r;
  r.open_q_edge_mass = q_open / total;
  const DistTable pi2 = enumerate_pi2(g.torus(), params);
  const DistTable phi = enumerate_rcm(n, params);
  for (std::size_t s = 0; s < n_spin; ++s)
    r.spin_marginal_error = std::max(r.spin_marginal_error, std::abs(mu1[s] / total - pi2[s]));
  for (std::size_t w = 0; w < n_bond; ++w)
    r.bond_marginal_error = std::max(r.bond_marginal_error, std::abs(mu2[w] / total - phi[w]));

  for (std::size_t s = 0; s < n_spin; ++s) {
    if (mu1[s] == 0.0) continue;
    for (std::size_t w = 0; w < n_bond; ++w) {
      const double conditional = (w & ~agree[s]) ? 0.0 : base[w] / mu1[s];
      double law = 0.0;
      if (!(w & ~agree[s])) {
        law = 1.0;
        for (std::size_t e = 0; e < edges; ++e) {
          if (!((agree[s] >> e) & 1u)) continue;
          const double pe = p[static_cast<int>(g.edge(e).kind)];
          law *= ((w >> e) & 1u) ? pe : 1.0 - pe;
        }
      }
      r.bonds_given_spins_error = std::max(r.bonds_given_spins_error, std::abs(conditional - law));
    }
  }
  for (std::size_t w = 0; w < n_bond; ++w) {
    if (mu2[w] == 0.0) continue;
    const double law = std::ldexp(1.0, -static_cast<int>(clusters[w]));
    for (std::size_t s = 0; s < n_spin; ++s) {
      const bool compatible = !(w & ~agree[s]);
      const double conditional = compatible ? base[w] / mu2[w] : 0.0;
      r.spins_given_bonds_error = std::max(r.spins_given_bonds_error, std::abs(conditional - (compatible ? law : 0.0)));
    }
  }
  return r;
}

struct TwoPoint {
  double spin_correlation = 0.0;  // pi(sigma_x sigma_y)
  double connectivity = 0.0;      // Phi(x^1 <-> y^1)
};

inline TwoPoint exact_two_point(const DistTable& pi, const DistTable& phi, std::size_t x, std::size_t y) {
  const HexGraph g{TorusGeometry(pi.n)};
  TwoPoint r;
  r.spin_correlation = pi.expectation([&](std::size_t i) {
    const int sx = ((i >> x) & 1u) ? 1 : -1;
    const int sy = ((i >> y) & 1u) ? 1 : -1;
    return static_cast<double>(sx * sy);
  });
  r.connectivity = phi.expectation([&](std::size_t w) {
    const auto c = cluster_partition(BondConfig::from_bits(w, g.edge_count()), g);
    return connected(c, g.vertex(x, Layer::one), g.vertex(y, Layer::one)) ? 1.0 : 0.0;
  });
  return r;
}

inline TwoPoint exact_two_point(int n, const Params& params, std::size_t x, std::size_t y) {
  return exact_two_point(enumerate_pi(n, params), enumerate_rcm(n, params), x, y);
}

struct MagnetizationReport {
  double m = 0.0;   // pi(sum sigma_x / N)
  double m2 = 0.0;  // pi_2(sum over both layers / 2N)
  // Law of sum_x sigma_x, indexed by (M + N) / 2.
  std::vector<double> pi_distribution;
  std::vector<double> pi2_layer1_distribution;
};

inline MagnetizationReport exact_magnetization(int n, const Params& params) {
  const DistTable pi2 = enumerate_pi2(n, params);
  const DistTable pi = first_layer_marginal(pi2);
  const std::size_t sites = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  const std::uint64_t mask = (std::uint64_t{1} << sites) - 1;
  MagnetizationReport r;
  r.pi_distribution.assign(sites + 1, 0.0);
  r.pi2_layer1_distribution.assign(sites + 1, 0.0);
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const auto up = static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(i)));
    r.pi_distribution[up] += pi[i];
    r.m += pi[i] * (2.0 * static_cast<double>(up) - static_cast<double>(sites)) / static_cast<double>(sites);
  }
  for (std::size_t i = 0; i < pi2.size(); ++i) {
    const auto up1 = static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(i) & mask));
    const auto up_all = static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(i)));
    r.pi2_layer1_distribution[up1] += pi2[i];
    r.m2 += pi2[i] * (2.0 * static_cast<double>(up_all) - 2.0 * static_cast<double>(sites)) /
            (2.0 * static_cast<double>(sites));
  }
  return r;
}

// Total variation distance between pi (marginal of pi_2) and the square
// lattice Gibbs measure at the same J. Finite-size trend evidence only.
inline double exact_tv_to_gibbs(int n, const Params& params) {
  const DistTable pi = enumerate_pi(n, params);
  const DistTable gibbs = enumerate_pi_gibbs(n, params.J());
  double tv = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) tv += std::abs(pi[i] - gibbs[i]);
  return 0.5 * tv;
}

// Fixed-boundary variant: an (n+2) x (n+2) box whose outer ring is frozen to
// `sign` on both layers, no wraparound. The frozen vertices form one wired
// boundary vertex for the cluster side.
struct BoundaryReport {
  std::vector<double> spin_side;     // pi^{+-}(sigma_x) for the inner layer-1 sites
  std::vector<double> cluster_side;  // Phi^w(x^1 <-> boundary)
};

inline BoundaryReport exact_boundary_magnetization(int n, const Params& params, int sign) {
  if (n < 1) throw std::invalid_argument("inner box size must be >= 1");
  if (sign != 1 && sign != -1) throw std::invalid_argument("boundary sign must be +1 or -1");
  const int m = n + 2;
  const std::size_t inner = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  const std::size_t boundary = 2 * inner;
  auto vertex = [&](int r, int c, Layer layer) -> std::size_t {
    if (r < 1 || r > n || c < 1 || c > n) return boundary;
    const std::size_t s = static_cast<std::size_t>(r - 1) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c - 1);
    return layer == Layer::one ? s : inner + s;
  };
  struct BoxEdge {
    std::size_t a, b;
    EdgeKind kind;
  };
  std::vector<BoxEdge> edges;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      const std::size_t x1 = vertex(r, c, Layer::one);
      auto add = [&](std::size_t y2, EdgeKind kind) {
        if (x1 == boundary && y2 == boundary) return;
        edges.push_back({x1, y2, kind});
      };
      add(vertex(r, c, Layer::two), EdgeKind::q);
      if (r + 1 < m) add(vertex(r + 1, c, Layer::two), EdgeKind::j);
      if (c + 1 < m) add(vertex(r, c + 1, Layer::two), EdgeKind::j);
    }
  }
  detail::check_budget(static_cast<long long>(2 * inner), "exact_boundary_magnetization (spins)");
  detail::check_budget(static_cast<long long>(edges.size()), "exact_boundary_magnetization (bonds)");

  BoundaryReport r;
  r.spin_side.assign(inner, 0.0);
  r.cluster_side.assign(inner, 0.0);

  // Spin side.
  {
    const std::size_t count = std::size_t{1} << (2 * inner);
    std::vector<double> lw(count);
    for (std::size_t i = 0; i < count; ++i) {
      auto spin = [&](std::size_t v) { return v == boundary ? sign : (((i >> v) & 1u) ? 1 : -1); };
      double h = 0.0;
      for (const auto& e : edges) h -= params.coupling(e.kind) * spin(e.a) * spin(e.b);
      lw[i] = -h;
    }
    const DistTable t = detail::normalize(Space::spin_pairs, n, std::move(lw));
    for (std::size_t x = 0; x < inner; ++x)
      r.spin_side[x] = t.expectation([&](std::size_t i) { return ((i >> x) & 1u) ? 1.0 : -1.0; });
  }
  // Wired random cluster side: 2^{number of clusters not touching the boundary}.
  {
    const std::size_t count = std::size_t{1} << edges.size();
    const double p[2] = {params.p_J(), params.p_q()};
    std::vector<double> lw(count);
    std::vector<std::uint32_t> touching(count);  // bit x set: x^1 connected to boundary
    for (std::size_t w = 0; w < count; ++w) {
      UnionFind uf(boundary + 1);
      double l = 0.0;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const double pe = p[static_cast<int>(edges[e].kind)];
        if ((w >> e) & 1u) {
          l += std::log(pe);
          uf.unite(static_cast<std::uint32_t>(edges[e].a), static_cast<std::uint32_t>(edges[e].b));
        } else {
          l += std::log1p(-pe);
        }
      }
      const std::uint32_t root_b = uf.find(static_cast<std::uint32_t>(boundary));
      std::size_t free_clusters = 0;
      for (std::uint32_t v = 0; v < boundary; ++v)
        if (uf.find(v) == v && v != root_b) ++free_clusters;
      std::uint32_t mask = 0;
      for (std::size_t x = 0; x < inner; ++x)
        if (uf.find(static_cast<std::uint32_t>(x)) == root_b) mask |= 1u << x;
      touching[w] = mask;
      lw[w] = l + static_cast<double>(free_clusters) * std::numbers::ln2;
    }
    const DistTable t = detail::normalize(Space::bonds, n, std::move(lw));
    for (std::size_t x = 0; x < inner; ++x)
      r.cluster_side[x] = t.expectation([&](std::size_t w) { return ((touching[w] >> x) & 1u) ? 1.0 : 0.0; });
  }
  return r;
}

// index,probability rows for offline inspection.
inline void write_csv(const DistTable& t, std::ostream& os) {
  os << "index,probability\n";
  for (std::size_t i = 0; i < t.size(); ++i) os << i << ',' << format_double(t[i]) << '\n';
}

}  // namespace shaken
