#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "shaken/lattice.hpp"
#include "shaken/measures.hpp"
#include "shaken/parallel.hpp"
#include "shaken/rng.hpp"
#include "shaken/union_find.hpp"

namespace shaken {

// omega in {0,1}^E over the edges of a HexGraph.
struct BondConfig {
  std::vector<std::uint8_t> open;

  static BondConfig all(std::size_t edges, bool value) { return {std::vector<std::uint8_t>(edges, value ? 1 : 0)}; }

  static BondConfig from_bits(std::uint64_t bits, std::size_t edges) {
    BondConfig w = all(edges, false);
    for (std::size_t e = 0; e < edges; ++e) w.open[e] = static_cast<std::uint8_t>((bits >> e) & 1u);
    return w;
  }

  std::size_t size() const noexcept { return open.size(); }
  friend bool operator==(const BondConfig&, const BondConfig&) = default;
};

// Open clusters of (V, eta(omega)). A cluster is labelled by its smallest
// vertex index, so labels do not depend on how the partition was computed.
struct ClusterPartition {
  std::vector<std::uint32_t> label;
  std::size_t count = 0;
};

inline ClusterPartition cluster_partition(const BondConfig& w, const HexGraph& g) {
  if (w.size() != g.edge_count()) throw std::invalid_argument("bond configuration does not match graph");
  const std::size_t nv = g.vertex_count();
  UnionFind uf(nv);
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (w.open[e]) uf.unite(static_cast<std::uint32_t>(edges[e].first), static_cast<std::uint32_t>(edges[e].second));

  constexpr std::uint32_t kUnset = 0xFFFFFFFFu;
  std::vector<std::uint32_t> root_label(nv, kUnset);
  ClusterPartition out;
  out.label.resize(nv);
  for (std::uint32_t v = 0; v < nv; ++v) {
    const std::uint32_t r = uf.find(v);
    if (root_label[r] == kUnset) {
      root_label[r] = v;
      ++out.count;
    }
    out.label[v] = root_label[r];
  }
  return out;
}

inline bool connected(const ClusterPartition& c, std::size_t u, std::size_t v) { return c.label[u] == c.label[v]; }

inline bool connected(const BondConfig& w, const HexGraph& g, std::size_t u, std::size_t v) {
  return connected(cluster_partition(w, g), u, v);
}

// log of prod_e p_e^w(e) (1 - p_e)^(1 - w(e)) * 2^k(omega).
inline double rcm_log_weight(const BondConfig& w, const Params& params, const HexGraph& g) {
  const double pj = params.p_J();
  const double pq = params.p_q();
  if (!(pj > 0.0 && pj < 1.0 && pq > 0.0 && pq < 1.0))
    throw std::domain_error("rcm_log_weight requires 0 < p_J, p_q < 1");
  const double log_open[2] = {std::log(pj), std::log(pq)};
  const double log_closed[2] = {std::log1p(-pj), std::log1p(-pq)};
  double lw = 0.0;
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto k = static_cast<int>(edges[e].kind);
    lw += w.open[e] ? log_open[k] : log_closed[k];
  }
  return lw + static_cast<double>(cluster_partition(w, g).count) * std::numbers::ln2;
}

// Conditional law of omega given the spins: disagreeing edges are closed,
// agreeing edges open independently with p_J or p_q. The uniform for edge e
// is addressed by (step, e).
inline BondConfig bonds_given_spins(const SpinPair& p, const Params& params, const HexGraph& g, const CounterRng& rng,
                                    std::uint64_t step) {
  const double prob[2] = {params.p_J(), params.p_q()};
  const auto edges = g.edges();
  BondConfig w = BondConfig::all(edges.size(), false);
  parallel_for(edges.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const HexEdge& edge = edges[e];
      if (p.at_vertex(edge.first) != p.at_vertex(edge.second)) continue;
      w.open[e] = rng.uniform(Stream::bonds, step, e) < prob[static_cast<int>(edge.kind)] ? 1 : 0;
    }
  });
  return w;
}

// Conditional law of the spins given omega: one fair sign per cluster,
// addressed by (step, cluster label).
inline SpinPair spins_given_partition(const ClusterPartition& c, const HexGraph& g, const CounterRng& rng,
                                      std::uint64_t step) {
  const std::size_t n = g.site_count();
  SpinPair p = SpinPair::uniform(n, 1);
  parallel_for(g.vertex_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const Spin s = rng.uniform(Stream::clusters, step, c.label[v]) < 0.5 ? Spin{1} : Spin{-1};
      if (v < n)
        p.first[v] = s;
      else
        p.second[v - n] = s;
    }
  });
  return p;
}

inline SpinPair spins_given_bonds(const BondConfig& w, const HexGraph& g, const CounterRng& rng, std::uint64_t step) {
  return spins_given_partition(cluster_partition(w, g), g, rng, step);
}

struct FkOutcome {
  BondConfig bonds;
  ClusterPartition clusters;
  SpinPair spins;
};

// One Swendsen-Wang style update on the hexagonal graph: bonds given spins,
// then spins given bonds. `bonds` is distributed as the random cluster
// measure whenever the input pair is distributed as pi_2.
inline FkOutcome fk_update(const SpinPair& p, const Params& params, const HexGraph& g, const CounterRng& rng,
                           std::uint64_t step) {
  FkOutcome out;
  out.bonds = bonds_given_spins(p, params, g, rng, step);
  out.clusters = cluster_partition(out.bonds, g);
  out.spins = spins_given_partition(out.clusters, g, rng, step);
  return out;
}

inline SpinPair fk_sweep(const SpinPair& p, const Params& params, const HexGraph& g, const CounterRng& rng,
                         std::uint64_t step) {
  return fk_update(p, params, g, rng, step).spins;
}

// Stateful FK chain; sweep t uses randomness addressed by step t.
class FkChain {
 public:
  FkChain(const TorusGeometry& torus, Params params, std::uint64_t seed)
      : graph_(torus), params_(params), rng_(seed), spins_(SpinPair::uniform(torus.site_count(), 1)) {}

  void sweep() {
    last_ = fk_update(spins_, params_, graph_, rng_, step_++);
    spins_ = last_.spins;
  }

  const HexGraph& graph() const noexcept { return graph_; }
  const SpinPair& spins() const noexcept { return spins_; }
  // Bonds and clusters drawn in the most recent sweep.
  const FkOutcome& last() const noexcept { return last_; }
  std::uint64_t steps() const noexcept { return step_; }

 private:
  HexGraph graph_;
  Params params_;
  CounterRng rng_;
  SpinPair spins_;
  FkOutcome last_;
  std::uint64_t step_ = 0;
};

}  // namespace shaken
