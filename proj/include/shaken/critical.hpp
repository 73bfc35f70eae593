#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shaken/estimators.hpp"
#include "shaken/lattice.hpp"
#include "shaken/measures.hpp"

namespace shaken {

// J_c(q) = artanh(-tanh q + sqrt(tanh^2 q + 1)).
inline double jc_closed_form(double q) {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("jc_closed_form requires finite q > 0");
  const double t = std::tanh(q);
  return std::atanh(-t + std::sqrt(t * t + 1.0));
}

// 2 tanh J tanh q + tanh^2 J - 1; zero on the critical curve, increasing in J.
inline double critical_residual(double J, double q) {
  const double tj = std::tanh(J);
  return 2.0 * tj * std::tanh(q) + tj * tj - 1.0;
}

// Root of critical_residual(., q) by bisection on (1e-12, 50].
inline double solve_jc(double q) {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("solve_jc requires finite q > 0");
  double lo = 1e-12;
  double hi = 50.0;
  if (!(critical_residual(lo, q) < 0.0 && critical_residual(hi, q) > 0.0))
    throw std::logic_error("solve_jc: root not bracketed");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (critical_residual(mid, q) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// One edge of the periodic cell: joins the two cell vertices (layer 1 and
// layer 2) and shifts by `winding` (rows, cols) fundamental periods.
struct CellEdge {
  EdgeKind kind;
  std::array<int, 2> winding;
};

struct UnitCell {
  std::vector<CellEdge> edges;
};

// Reads the cell off a built graph: the three edges at layer-1 site (0,0),
// with the displacement of their layer-2 end.
inline UnitCell fundamental_cell(const HexGraph& g) {
  const auto& t = g.torus();
  const std::size_t origin = t.index(0, 0);
  UnitCell cell;
  for (std::size_t e : g.incident(g.vertex(origin, Layer::one))) {
    const Site s = t.site(g.site_of(g.other_end(e, origin)));
    auto wrap = [&](int d) { return d > t.size() / 2 ? d - t.size() : d; };
    cell.edges.push_back({g.edge(e).kind, {wrap(s.row), wrap(s.col)}});
  }
  return cell;
}

// Even subgraphs of the cell glued on a torus, split by winding parity.
// Terms are keyed by (power of tanh J, power of tanh q).
struct EvenSubgraphReport {
  double lhs = 0.0;  // sum over even winding parity
  double rhs = 0.0;  // sum over odd winding parity
  std::size_t even_class_count = 0;
  std::size_t odd_class_count = 0;
  std::map<std::pair<int, int>, int> lhs_terms;
  std::map<std::pair<int, int>, int> rhs_terms;
};

inline EvenSubgraphReport even_subgraph_check(const UnitCell& cell, double J, double q) {
  EvenSubgraphReport r;
  const std::size_t m = cell.edges.size();
  for (std::uint32_t subset = 0; subset < (1u << m); ++subset) {
    // Every edge joins the two cell vertices, so both degrees equal |subset|.
    int degree = 0;
    int wx = 0;
    int wy = 0;
    int pj = 0;
    int pq = 0;
    for (std::size_t e = 0; e < m; ++e) {
      if (!((subset >> e) & 1u)) continue;
      ++degree;
      wx += cell.edges[e].winding[0];
      wy += cell.edges[e].winding[1];
      (cell.edges[e].kind == EdgeKind::j ? pj : pq) += 1;
    }
    if (degree % 2 != 0) continue;
    const double weight = std::pow(std::tanh(J), pj) * std::pow(std::tanh(q), pq);
    // Mod-2 homology class of the subgraph is the sum of edge windings.
    if (wx % 2 == 0 && wy % 2 == 0) {
      r.lhs += weight;
      ++r.even_class_count;
      ++r.lhs_terms[{pj, pq}];
    } else {
      r.rhs += weight;
      ++r.odd_class_count;
      ++r.rhs_terms[{pj, pq}];
    }
  }
  return r;
}

enum class ScanProtocol { binder_crossing, susceptibility_peak };

struct ScanConfig {
  std::vector<double> q_values;
  std::vector<int> sizes;
  // J grid: explicit range, or centred on the analytic value +- window.
  std::optional<std::pair<double, double>> j_range;
  double window = 0.15;
  std::size_t grid_points = 13;
  std::size_t sweeps = 20000;
  std::size_t burnin = 1000;
  std::size_t batches = kMinBatches;
  ScanProtocol protocol = ScanProtocol::binder_crossing;
  SamplerKind sampler = SamplerKind::fk;
  std::uint64_t seed = 1;
};

struct GridPoint {
  int n = 0;
  double J = 0.0;
  Estimate abs_m;
  Estimate binder;
  Estimate chi;
  MagnetizationMoments moments;
  std::vector<MagnetizationMoments> jackknife;
};

struct CriticalPoint {
  double q = 0.0;
  double jc_analytic = 0.0;
  std::optional<double> jc_numeric;
  std::optional<double> numeric_err;
  ScanProtocol protocol = ScanProtocol::binder_crossing;
  std::string note;  // why a scan did not converge
  std::vector<GridPoint> grid;
};

inline GridPoint measure_grid_point(const Params& params, int n, const ScanConfig& cfg, std::uint64_t seed) {
  const TorusGeometry t(n);
  SamplerConfig sc;
  sc.kind = cfg.sampler;
  sc.burnin = cfg.burnin;
  sc.samples = cfg.sweeps;
  sc.thin = 1;
  sc.seed = seed;
  sc.batches = cfg.batches;
  SampleSeries m(cfg.batches);
  m.reserve(cfg.sweeps);
  run_sampler(t, params, sc, [&](const SpinPair& p, const FkOutcome*) { m.push(magnetization(p.first)); });
  GridPoint g;
  g.n = n;
  g.J = params.J();
  g.moments = moments(m);
  g.jackknife = jackknife_moments(m);
  g.binder = binder_cumulant(m);
  g.chi = susceptibility(m, t.site_count());
  std::vector<double> reps;
  for (const auto& mo : g.jackknife) reps.push_back(mo.abs_m);
  g.abs_m = {g.moments.abs_m, jackknife_error(reps)};
  return g;
}

namespace detail {

// Crossing of d from negative to non-negative, linearly interpolated. With
// several sign changes the steepest is taken.
inline std::optional<double> locate_crossing(const std::vector<double>& J, const std::vector<double>& d,
                                             std::optional<std::size_t> bracket = std::nullopt) {
  std::optional<std::size_t> best = bracket;
  if (!best) {
    double steepest = -1.0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      if (d[i] < 0.0 && d[i + 1] >= 0.0 && d[i + 1] - d[i] > steepest) {
        steepest = d[i + 1] - d[i];
        best = i;
      }
    }
  }
  if (!best) return std::nullopt;
  const std::size_t i = *best;
  const double span = d[i + 1] - d[i];
  if (span == 0.0) return J[i];
  return J[i] + (J[i + 1] - J[i]) * (-d[i]) / span;
}

inline std::optional<std::size_t> crossing_bracket(const std::vector<double>& J, const std::vector<double>& d) {
  const auto x = locate_crossing(J, d);
  if (!x) return std::nullopt;
  for (std::size_t i = 0; i + 1 < J.size(); ++i)
    if (*x >= J[i] && *x <= J[i + 1]) return i;
  return std::nullopt;
}

// Vertex of the parabola through three equally spaced points around k.
inline double parabola_vertex(const std::vector<double>& J, const std::vector<double>& y, std::size_t k) {
  const double h = J[k + 1] - J[k];
  const double curvature = y[k + 1] - 2.0 * y[k] + y[k - 1];
  if (curvature >= 0.0) return J[k];
  return J[k] - 0.5 * h * (y[k + 1] - y[k - 1]) / curvature;
}

}  // namespace detail

// Numerical critical coupling for each q from finite-size data on a J grid.
inline std::vector<CriticalPoint> scan_critical(const ScanConfig& cfg) {
  if (cfg.q_values.empty()) throw std::invalid_argument("scan needs at least one q value");
  if (cfg.sizes.empty()) throw std::invalid_argument("scan needs at least one lattice size");
  if (cfg.grid_points < 3) throw std::invalid_argument("scan grid needs at least 3 points");
  if (cfg.protocol == ScanProtocol::binder_crossing && cfg.sizes.size() < 2)
    throw std::invalid_argument("binder-crossing needs two lattice sizes");
  std::vector<int> sizes = cfg.sizes;
  std::sort(sizes.begin(), sizes.end());
  const CounterRng root(cfg.seed);
  std::uint64_t run_index = 0;

  std::vector<CriticalPoint> out;
  for (double q : cfg.q_values) {
    CriticalPoint cp;
    cp.q = q;
    cp.jc_analytic = jc_closed_form(q);
    cp.protocol = cfg.protocol;
    const double lo = cfg.j_range ? cfg.j_range->first : std::max(1e-3, cp.jc_analytic - cfg.window);
    const double hi = cfg.j_range ? cfg.j_range->second : cp.jc_analytic + cfg.window;
    if (!(hi > lo && lo > 0.0)) throw std::invalid_argument("invalid J range for scan");
    std::vector<double> J(cfg.grid_points);
    for (std::size_t i = 0; i < J.size(); ++i)
      J[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(J.size() - 1);
    const double spacing = J[1] - J[0];

    // by_size[s][j]
    std::vector<std::vector<GridPoint>> by_size;
    for (int n : sizes) {
      std::vector<GridPoint> row;
      for (double j : J) row.push_back(measure_grid_point(Params(j, q), n, cfg, root.child(run_index++).seed()));
      by_size.push_back(row);
      cp.grid.insert(cp.grid.end(), row.begin(), row.end());
    }
    const std::size_t batches = cfg.batches;

    if (cfg.protocol == ScanProtocol::binder_crossing) {
      const auto& small = by_size.front();
      const auto& large = by_size.back();
      std::vector<double> d(J.size());
      for (std::size_t i = 0; i < J.size(); ++i) d[i] = large[i].binder.value - small[i].binder.value;
      const auto bracket = detail::crossing_bracket(J, d);
      if (!bracket) {
        cp.note = "no Binder cumulant crossing inside the J grid";
      } else {
        cp.jc_numeric = detail::locate_crossing(J, d, bracket);
        std::vector<double> reps;
        for (std::size_t b = 0; b < batches; ++b) {
          std::vector<double> db(J.size());
          for (std::size_t i = 0; i < J.size(); ++i)
            db[i] = binder_from_moments(large[i].jackknife[b]) - binder_from_moments(small[i].jackknife[b]);
          reps.push_back(*detail::locate_crossing(J, db, bracket));
        }
        cp.numeric_err = std::hypot(jackknife_error(reps), 0.5 * spacing);
      }
    } else {
      const auto& large = by_size.back();
      const std::size_t sites = static_cast<std::size_t>(sizes.back()) * static_cast<std::size_t>(sizes.back());
      std::vector<double> chi(J.size());
      for (std::size_t i = 0; i < J.size(); ++i) chi[i] = large[i].chi.value;
      const auto k = static_cast<std::size_t>(std::max_element(chi.begin(), chi.end()) - chi.begin());
      if (k == 0 || k + 1 == J.size()) {
        cp.note = "susceptibility maximum on the edge of the J grid";
      } else {
        cp.jc_numeric = detail::parabola_vertex(J, chi, k);
        std::vector<double> reps;
        for (std::size_t b = 0; b < batches; ++b) {
          std::vector<double> cb(J.size());
          for (std::size_t i = 0; i < J.size(); ++i) cb[i] = susceptibility_from_moments(large[i].jackknife[b], sites);
          reps.push_back(detail::parabola_vertex(J, cb, k));
        }
        cp.numeric_err = std::hypot(jackknife_error(reps), 0.5 * spacing);
      }
    }
    out.push_back(std::move(cp));
  }
  return out;
}

}  // namespace shaken
