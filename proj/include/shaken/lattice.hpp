#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shaken {

// Site coordinates on the torus. Row-major indexing, index = row * n + col.
// "up" is row + 1 and "right" is col + 1; the pair interaction is
// asymmetric, so this convention is observable.
struct Site {
  int row = 0;
  int col = 0;
  friend bool operator==(const Site&, const Site&) = default;
};

struct Bond {
  std::size_t a;
  std::size_t b;
};

enum class Direction : std::uint8_t { up = 0, right = 1, down = 2, left = 3 };

// n x n square torus. The bond list is a multiset with exactly 2n^2 entries
// (one up and one right bond per site); at n = 2 the up and down neighbours
// coincide and the corresponding bonds appear twice.
class TorusGeometry {
 public:
  explicit TorusGeometry(int n) : n_(n) {
    if (n < 2) throw std::invalid_argument("torus size must be >= 2, got " + std::to_string(n));
    const std::size_t count = site_count();
    neighbors_.resize(count);
    bonds_.reserve(2 * count);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const std::size_t x = index(r, c);
        neighbors_[x] = {index(r + 1, c), index(r, c + 1), index(r - 1, c), index(r, c - 1)};
      }
    }
    for (std::size_t x = 0; x < count; ++x) {
      bonds_.push_back({x, up(x)});
      bonds_.push_back({x, right(x)});
    }
  }

  int size() const noexcept { return n_; }
  std::size_t site_count() const noexcept { return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_); }

  std::size_t index(int row, int col) const noexcept {
    const int r = ((row % n_) + n_) % n_;
    const int c = ((col % n_) + n_) % n_;
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c);
  }
  std::size_t index(Site s) const noexcept { return index(s.row, s.col); }

  Site site(std::size_t x) const noexcept {
    return {static_cast<int>(x / static_cast<std::size_t>(n_)), static_cast<int>(x % static_cast<std::size_t>(n_))};
  }

  std::size_t neighbor(std::size_t x, Direction d) const noexcept { return neighbors_[x][static_cast<int>(d)]; }
  std::size_t up(std::size_t x) const noexcept { return neighbors_[x][0]; }
  std::size_t right(std::size_t x) const noexcept { return neighbors_[x][1]; }
  std::size_t down(std::size_t x) const noexcept { return neighbors_[x][2]; }
  std::size_t left(std::size_t x) const noexcept { return neighbors_[x][3]; }

  // Site displaced by (drow, dcol) with wraparound.
  std::size_t shifted(std::size_t x, int drow, int dcol) const noexcept {
    const Site s = site(x);
    return index(s.row + drow, s.col + dcol);
  }

  std::span<const Bond> bonds() const noexcept { return bonds_; }

 private:
  int n_;
  std::vector<std::array<std::size_t, 4>> neighbors_;
  std::vector<Bond> bonds_;
};

inline TorusGeometry build_torus(int n) { return TorusGeometry(n); }

enum class EdgeKind : std::uint8_t { j, q };

enum class Layer : std::uint8_t { one, two };

// Edge of the hexagonal graph; `first` is always a layer-1 vertex and
// `second` a layer-2 vertex.
struct HexEdge {
  std::size_t first;
  std::size_t second;
  EdgeKind kind;
};

// Bipartite degree-3 graph on two copies of the torus. Vertex x (< N) is x^1,
// vertex N + x is x^2. Site x owns edges 3x (q-edge x^1 x^2), 3x + 1 (J-edge
// x^1 (x up)^2) and 3x + 2 (J-edge x^1 (x right)^2).
class HexGraph {
 public:
  explicit HexGraph(TorusGeometry torus) : torus_(std::move(torus)) {
    const std::size_t n_sites = torus_.site_count();
    edges_.reserve(3 * n_sites);
    incidence_.assign(2 * n_sites, {});
    std::vector<std::uint8_t> fill(2 * n_sites, 0);
    auto attach = [&](std::size_t v, std::size_t e) {
      if (fill[v] >= 3) throw std::logic_error("hex graph vertex degree exceeds 3");
      incidence_[v][fill[v]++] = e;
    };
    for (std::size_t x = 0; x < n_sites; ++x) {
      const std::array<HexEdge, 3> owned{HexEdge{x, n_sites + x, EdgeKind::q},
                                         HexEdge{x, n_sites + torus_.up(x), EdgeKind::j},
                                         HexEdge{x, n_sites + torus_.right(x), EdgeKind::j}};
      for (const auto& e : owned) {
        attach(e.first, edges_.size());
        attach(e.second, edges_.size());
        edges_.push_back(e);
      }
    }
  }

  const TorusGeometry& torus() const noexcept { return torus_; }
  std::size_t site_count() const noexcept { return torus_.site_count(); }
  std::size_t vertex_count() const noexcept { return 2 * torus_.site_count(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::span<const HexEdge> edges() const noexcept { return edges_; }
  const HexEdge& edge(std::size_t e) const noexcept { return edges_[e]; }
  const std::array<std::size_t, 3>& incident(std::size_t v) const noexcept { return incidence_[v]; }

  std::size_t vertex(std::size_t site, Layer layer) const noexcept {
    return layer == Layer::one ? site : site + site_count();
  }
  Layer layer_of(std::size_t v) const noexcept { return v < site_count() ? Layer::one : Layer::two; }
  std::size_t site_of(std::size_t v) const noexcept { return v < site_count() ? v : v - site_count(); }

  std::size_t other_end(std::size_t e, std::size_t v) const noexcept {
    return edges_[e].first == v ? edges_[e].second : edges_[e].first;
  }

 private:
  TorusGeometry torus_;
  std::vector<HexEdge> edges_;
  std::vector<std::array<std::size_t, 3>> incidence_;
};

inline HexGraph build_hex_graph(const TorusGeometry& torus) { return HexGraph(torus); }

// Anti-diagonal slices of the hexagonal graph. Slice k holds the layer-1
// sites with row + col = k and the layer-2 sites with row + col = k + 1
// (mod n); J-edges stay inside a slice, q-edges join consecutive slices, so
// each slice is a closed 1-d ring of 2n vertices.
inline std::size_t slice_of(const HexGraph& g, std::size_t v) {
  const auto& t = g.torus();
  const Site s = t.site(g.site_of(v));
  const int n = t.size();
  const int offset = g.layer_of(v) == Layer::one ? 0 : n - 1;
  return static_cast<std::size_t>((s.row + s.col + offset) % n);
}

// Geometry of the two correlation experiments at displacement ell, in the
// (horizontal, vertical) coordinates: point (a, b) is the
// site at col a, row b.
struct SliceGeometry {
  int ell = 0;
  std::size_t origin = 0;        // (0, 0)
  std::size_t diagonal_end = 0;  // (ell, ell)
  std::size_t anti_start = 0;    // (0, ell)
  std::size_t anti_end = 0;      // (ell, 0)
  std::vector<std::size_t> path_vertices;   // gamma*, from anti_start^1 to anti_end^1
  std::vector<std::size_t> path_edges;      // 2 ell J-edges
  std::vector<std::size_t> boundary_edges;  // edges touching gamma* but not on it
  // Fewest q-edges any path (0,0)^1 -> (ell,ell)^1 must use on the torus:
  // the circular distance between their slices.
  int min_q_crossings = 0;
};

inline SliceGeometry build_slices(const HexGraph& g, int ell) {
  const auto& t = g.torus();
  const int n = t.size();
  if (ell < 1 || 2 * ell >= n)
    throw std::invalid_argument("slice displacement must satisfy 0 < ell < n/2, got ell=" + std::to_string(ell) +
                                " n=" + std::to_string(n));
  SliceGeometry s;
  s.ell = ell;
  s.origin = t.index(0, 0);
  s.diagonal_end = t.index(ell, ell);
  s.anti_start = t.index(ell, 0);
  s.anti_end = t.index(0, ell);

  // Walk the ring: x^1 -> (x right)^2 -> (x right down)^1.
  std::size_t x = s.anti_start;
  s.path_vertices.push_back(g.vertex(x, Layer::one));
  for (int k = 0; k < ell; ++k) {
    const std::size_t mid = t.right(x);
    const std::size_t next = t.down(mid);
    s.path_edges.push_back(3 * x + 2);
    s.path_vertices.push_back(g.vertex(mid, Layer::two));
    s.path_edges.push_back(3 * next + 1);
    s.path_vertices.push_back(g.vertex(next, Layer::one));
    x = next;
  }
  for (std::size_t v : s.path_vertices) {
    for (std::size_t e : g.incident(v)) {
      if (std::find(s.path_edges.begin(), s.path_edges.end(), e) != s.path_edges.end()) continue;
      if (std::find(s.boundary_edges.begin(), s.boundary_edges.end(), e) != s.boundary_edges.end()) continue;
      s.boundary_edges.push_back(e);
    }
  }
  std::sort(s.boundary_edges.begin(), s.boundary_edges.end());
  s.min_q_crossings = std::min(2 * ell, n - 2 * ell);
  return s;
}

}  // namespace shaken
