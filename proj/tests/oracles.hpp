#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <queue>
#include <vector>

#include "shaken/shaken.hpp"

namespace oracle {

using namespace shaken;

// Component labels by breadth-first search; label = smallest vertex reached.
inline std::vector<std::uint32_t> bfs_labels(const BondConfig& w, const HexGraph& g, std::size_t* count = nullptr) {
  const std::size_t nv = g.vertex_count();
  std::vector<std::vector<std::size_t>> adj(nv);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    if (!w.open[e]) continue;
    adj[g.edge(e).first].push_back(g.edge(e).second);
    adj[g.edge(e).second].push_back(g.edge(e).first);
  }
  constexpr std::uint32_t unset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> label(nv, unset);
  std::size_t k = 0;
  for (std::size_t s = 0; s < nv; ++s) {
    if (label[s] != unset) continue;
    ++k;
    std::queue<std::size_t> todo;
    todo.push(s);
    label[s] = static_cast<std::uint32_t>(s);
    while (!todo.empty()) {
      const std::size_t v = todo.front();
      todo.pop();
      for (std::size_t u : adj[v])
        if (label[u] == unset) {
          label[u] = static_cast<std::uint32_t>(s);
          todo.push(u);
        }
    }
  }
  if (count) *count = k;
  return label;
}

// Fewest q-edges on any path between two vertices (0-1 BFS).
inline int min_q_edges(const HexGraph& g, std::size_t from, std::size_t to) {
  std::vector<int> dist(g.vertex_count(), std::numeric_limits<int>::max());
  std::deque<std::size_t> dq;
  dist[from] = 0;
  dq.push_back(from);
  while (!dq.empty()) {
    const std::size_t v = dq.front();
    dq.pop_front();
    for (std::size_t e : g.incident(v)) {
      const std::size_t u = g.other_end(e, v);
      const int w = g.edge(e).kind == EdgeKind::q ? 1 : 0;
      if (dist[v] + w < dist[u]) {
        dist[u] = dist[v] + w;
        if (w == 0)
          dq.push_front(u);
        else
          dq.push_back(u);
      }
    }
  }
  return dist[to];
}

// Shortest path by edge count, returned as an edge list.
inline std::vector<std::size_t> shortest_path_edges(const HexGraph& g, std::size_t from, std::size_t to,
                                                    bool j_edges_only) {
  std::vector<std::size_t> via(g.vertex_count(), std::numeric_limits<std::size_t>::max());
  std::vector<bool> seen(g.vertex_count(), false);
  std::queue<std::size_t> todo;
  todo.push(from);
  seen[from] = true;
  while (!todo.empty()) {
    const std::size_t v = todo.front();
    todo.pop();
    if (v == to) break;
    for (std::size_t e : g.incident(v)) {
      if (j_edges_only && g.edge(e).kind == EdgeKind::q) continue;
      const std::size_t u = g.other_end(e, v);
      if (seen[u]) continue;
      seen[u] = true;
      via[u] = e;
      todo.push(u);
    }
  }
  std::vector<std::size_t> path;
  if (!seen[to]) return path;
  for (std::size_t v = to; v != from; v = g.other_end(via[v], v)) path.push_back(via[v]);
  return path;
}

// Heat-bath half-step kernel written from the product formula
// prod_x e^{h_x s'_x} / (2 cosh h_x). Row = current pair, column = next pair.
inline std::vector<double> half_step_matrix(const TorusGeometry& t, const Params& p, Layer layer) {
  const std::size_t sites = t.site_count();
  const std::size_t states = std::size_t{1} << (2 * sites);
  std::vector<double> m(states * states, 0.0);
  for (std::size_t a = 0; a < states; ++a) {
    const SpinPair from = SpinPair::from_bits(a, sites);
    for (std::size_t b = 0; b < states; ++b) {
      const SpinPair to = SpinPair::from_bits(b, sites);
      if (to.layer(layer == Layer::one ? Layer::two : Layer::one) !=
          from.layer(layer == Layer::one ? Layer::two : Layer::one))
        continue;
      double prob = 1.0;
      for (std::size_t x = 0; x < sites; ++x) {
        double h = 0.0;
        if (layer == Layer::one)
          h = p.J() * (from.second[t.up(x)] + from.second[t.right(x)]) + p.q() * from.second[x];
        else
          h = p.J() * (from.first[t.down(x)] + from.first[t.left(x)]) + p.q() * from.first[x];
        const double s = to.layer(layer)[x];
        prob *= std::exp(h * s) / (2.0 * std::cosh(h));
      }
      m[a * states + b] = prob;
    }
  }
  return m;
}

inline std::vector<double> mat_mul(const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
    }
  return c;
}

inline std::vector<double> row_times(const std::vector<double>& v, const std::vector<double>& m) {
  const std::size_t n = v.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += v[i] * m[i * n + j];
  return out;
}

// Swendsen-Wang kernel applied to a distribution over spin pairs, by full
// enumeration of bond outcomes: for each pair, each bond set on agreeing
// edges, then each cluster-constant relabelling.
inline std::vector<double> fk_kernel_apply(const std::vector<double>& dist, const HexGraph& g, const Params& p) {
  const std::size_t sites = g.site_count();
  const std::size_t edges = g.edge_count();
  const std::size_t states = std::size_t{1} << (2 * sites);
  const std::size_t bonds = std::size_t{1} << edges;
  std::vector<std::vector<std::uint32_t>> labels(bonds);
  std::vector<std::size_t> k(bonds);
  for (std::size_t w = 0; w < bonds; ++w) labels[w] = bfs_labels(BondConfig::from_bits(w, edges), g, &k[w]);

  std::vector<double> bond_mass(bonds, 0.0);
  for (std::size_t s = 0; s < states; ++s) {
    if (dist[s] == 0.0) continue;
    const SpinPair pair = SpinPair::from_bits(s, sites);
    for (std::size_t w = 0; w < bonds; ++w) {
      double prob = 1.0;
      for (std::size_t e = 0; e < edges && prob != 0.0; ++e) {
        const bool agree = pair.at_vertex(g.edge(e).first) == pair.at_vertex(g.edge(e).second);
        const bool open = (w >> e) & 1u;
        const double pe = p.open_probability(g.edge(e).kind);
        if (!agree)
          prob *= open ? 0.0 : 1.0;
        else
          prob *= open ? pe : 1.0 - pe;
      }
      bond_mass[w] += dist[s] * prob;
    }
  }
  std::vector<double> out(states, 0.0);
  for (std::size_t w = 0; w < bonds; ++w) {
    if (bond_mass[w] == 0.0) continue;
    const double share = bond_mass[w] * std::ldexp(1.0, -static_cast<int>(k[w]));
    for (std::size_t s = 0; s < states; ++s) {
      const SpinPair pair = SpinPair::from_bits(s, sites);
      bool constant = true;
      for (std::size_t v = 0; v < g.vertex_count() && constant; ++v)
        constant = pair.at_vertex(v) == pair.at_vertex(labels[w][v]);
      if (constant) out[s] += share;
    }
  }
  return out;
}

inline double sup_norm(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

inline std::vector<double> empirical(const std::vector<std::uint64_t>& counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / total;
  return out;
}

}  // namespace oracle
