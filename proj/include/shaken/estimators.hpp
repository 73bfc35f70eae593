#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shaken/dynamics.hpp"
#include "shaken/errors.hpp"
#include "shaken/exact.hpp"
#include "shaken/lattice.hpp"
#include "shaken/measures.hpp"
#include "shaken/rcm.hpp"

namespace shaken {

inline constexpr std::size_t kMinBatches = 20;

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

// Scalar observable series with batch-means error bars.
class SampleSeries {
 public:
  explicit SampleSeries(std::size_t batches = kMinBatches) : batches_(batches) {
    if (batches < kMinBatches)
      throw std::invalid_argument("at least " + std::to_string(kMinBatches) + " batches are required");
  }

  void push(double v) { values_.push_back(v); }
  void reserve(std::size_t n) { values_.reserve(n); }

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t batches() const noexcept { return batches_; }
  std::span<const double> values() const noexcept { return values_; }

  // [begin, end) of batch b; the last batch absorbs the remainder.
  std::pair<std::size_t, std::size_t> batch_range(std::size_t b) const {
    require_batches();
    const std::size_t len = values_.size() / batches_;
    return {b * len, b + 1 == batches_ ? values_.size() : (b + 1) * len};
  }

  std::vector<double> batch_means() const {
    std::vector<double> means(batches_);
    for (std::size_t b = 0; b < batches_; ++b) {
      const auto [lo, hi] = batch_range(b);
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += values_[i];
      means[b] = s / static_cast<double>(hi - lo);
    }
    return means;
  }

  Estimate estimate() const {
    const auto means = batch_means();
    double mean = 0.0;
    for (double v : values_) mean += v;
    mean /= static_cast<double>(values_.size());
    double bm = 0.0;
    for (double m : means) bm += m;
    bm /= static_cast<double>(batches_);
    double var = 0.0;
    for (double m : means) var += (m - bm) * (m - bm);
    var /= static_cast<double>(batches_ - 1);
    return {mean, std::sqrt(var / static_cast<double>(batches_))};
  }

  void require_batches() const {
    if (values_.size() < batches_)
      throw InsufficientSamples("need at least " + std::to_string(batches_) + " samples, have " +
                                std::to_string(values_.size()));
  }

 private:
  std::size_t batches_;
  std::vector<double> values_;
};

inline double magnetization(const SpinLayer& s) {
  long long sum = 0;
  for (Spin v : s.values()) sum += v;
  return static_cast<double>(sum) / static_cast<double>(s.size());
}

// <|m|>, <m^2>, <m^4>.
struct MagnetizationMoments {
  double abs_m = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
};

inline double binder_from_moments(const MagnetizationMoments& mo) { return 1.0 - mo.m4 / (3.0 * mo.m2 * mo.m2); }

inline double susceptibility_from_moments(const MagnetizationMoments& mo, std::size_t sites) {
  return static_cast<double>(sites) * (mo.m2 - mo.abs_m * mo.abs_m);
}

namespace detail {

inline MagnetizationMoments accumulate(std::span<const double> m, std::size_t lo, std::size_t hi) {
  MagnetizationMoments mo;
  for (std::size_t i = lo; i < hi; ++i) {
    const double x2 = m[i] * m[i];
    mo.abs_m += std::abs(m[i]);
    mo.m2 += x2;
    mo.m4 += x2 * x2;
  }
  return mo;
}

}  // namespace detail

inline MagnetizationMoments moments(const SampleSeries& m) {
  m.require_batches();
  auto mo = detail::accumulate(m.values(), 0, m.size());
  const auto n = static_cast<double>(m.size());
  return {mo.abs_m / n, mo.m2 / n, mo.m4 / n};
}

// Leave-one-batch-out moments, one entry per batch.
inline std::vector<MagnetizationMoments> jackknife_moments(const SampleSeries& m) {
  m.require_batches();
  const auto total = detail::accumulate(m.values(), 0, m.size());
  std::vector<MagnetizationMoments> out(m.batches());
  for (std::size_t b = 0; b < m.batches(); ++b) {
    const auto [lo, hi] = m.batch_range(b);
    const auto part = detail::accumulate(m.values(), lo, hi);
    const auto n = static_cast<double>(m.size() - (hi - lo));
    out[b] = {(total.abs_m - part.abs_m) / n, (total.m2 - part.m2) / n, (total.m4 - part.m4) / n};
  }
  return out;
}

// Jackknife standard error of replicas around their mean.
inline double jackknife_error(std::span<const double> replicas) {
  const auto b = static_cast<double>(replicas.size());
  double mean = 0.0;
  for (double r : replicas) mean += r;
  mean /= b;
  double var = 0.0;
  for (double r : replicas) var += (r - mean) * (r - mean);
  return std::sqrt((b - 1.0) / b * var);
}

inline Estimate binder_cumulant(const SampleSeries& m) {
  std::vector<double> reps;
  for (const auto& mo : jackknife_moments(m)) reps.push_back(binder_from_moments(mo));
  return {binder_from_moments(moments(m)), jackknife_error(reps)};
}

inline Estimate susceptibility(const SampleSeries& m, std::size_t sites) {
  std::vector<double> reps;
  for (const auto& mo : jackknife_moments(m)) reps.push_back(susceptibility_from_moments(mo, sites));
  return {susceptibility_from_moments(moments(m), sites), jackknife_error(reps)};
}

// Exact moments of the layer magnetization under a spin table.
inline MagnetizationMoments moments(const DistTable& pi) {
  if (pi.space != Space::spins) throw std::invalid_argument("moments need a single-layer spin table");
  const std::size_t sites = static_cast<std::size_t>(pi.n) * static_cast<std::size_t>(pi.n);
  auto m_of = [&](std::size_t i) { return magnetization(SpinLayer::from_bits(i, sites)); };
  return {pi.expectation([&](std::size_t i) { return std::abs(m_of(i)); }),
          pi.expectation([&](std::size_t i) { return std::pow(m_of(i), 2); }),
          pi.expectation([&](std::size_t i) { return std::pow(m_of(i), 4); })};
}

inline Estimate two_point(std::span<const SpinLayer> samples, std::size_t x, std::size_t y,
                          std::size_t batches = kMinBatches) {
  SampleSeries s(batches);
  s.reserve(samples.size());
  for (const auto& sample : samples) s.push(static_cast<double>(sample[x] * sample[y]));
  return s.estimate();
}

// mean over translations z of sigma_{z+a} sigma_{z+b}; displacements in (row, col).
inline double translation_averaged_correlation(const SpinLayer& s, const TorusGeometry& t, Site a, Site b) {
  long long sum = 0;
  for (std::size_t z = 0; z < t.site_count(); ++z) sum += s[t.shifted(z, a.row, a.col)] * s[t.shifted(z, b.row, b.col)];
  return static_cast<double>(sum) / static_cast<double>(t.site_count());
}

enum class SamplerKind { shaken, fk, cftp };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::shaken;
  std::size_t burnin = 1000;
  std::size_t samples = 2000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;
  std::size_t batches = kMinBatches;
  std::uint64_t coalescence_cap = kDefaultCoalescenceCap;
};

// Calls on_sample(pair, fk) for each recorded pi_2 sample; `fk` points at
// the bonds drawn in the last FK sweep, or is null for the other samplers.
template <class OnSample>
void run_sampler(const TorusGeometry& t, const Params& params, const SamplerConfig& cfg, OnSample&& on_sample) {
  if (cfg.thin == 0) throw std::invalid_argument("thinning must be >= 1");
  switch (cfg.kind) {
    case SamplerKind::shaken: {
      ShakenChain chain(t, params, cfg.seed);
      chain.sweep(cfg.burnin);
      for (std::size_t i = 0; i < cfg.samples; ++i) {
        chain.sweep(cfg.thin);
        on_sample(chain.pair(), static_cast<const FkOutcome*>(nullptr));
      }
      return;
    }
    case SamplerKind::fk: {
      FkChain chain(t, params, cfg.seed);
      for (std::size_t i = 0; i < cfg.burnin; ++i) chain.sweep();
      for (std::size_t i = 0; i < cfg.samples; ++i) {
        for (std::size_t k = 0; k < cfg.thin; ++k) chain.sweep();
        on_sample(chain.spins(), &chain.last());
      }
      return;
    }
    case SamplerKind::cftp: {
      const CounterRng root(cfg.seed);
      for (std::size_t i = 0; i < cfg.samples; ++i)
        on_sample(cftp_sample(params, t, root.child(i).seed(), cfg.coalescence_cap).sample,
                  static_cast<const FkOutcome*>(nullptr));
      return;
    }
  }
}

// Small-q bounds on the diagonal and anti-diagonal connectivities.
struct BoundConstants {
  int ell = 0;
  double ratio = 0.0;         // 4 p_q p_J / (1 - p_J)
  std::optional<double> c1;   // defined only when ratio < 1
  double c2 = 0.0;
  bool conditions_met = false;
  bool ordered = false;  // c1 defined and c1 < c2
};

inline BoundConstants bound_constants(const Params& params, int ell) {
  if (ell < 1) throw std::invalid_argument("bound constants need ell >= 1");
  const double pj = params.p_J();
  const double pq = params.p_q();
  const double J = params.J();
  const double q = params.q();
  BoundConstants b;
  b.ell = ell;
  b.ratio = 4.0 * pq * pj / (1.0 - pj);
  if (b.ratio < 1.0) b.c1 = std::pow(b.ratio, 2 * ell) / (1.0 - b.ratio);
  b.c2 = 2.0 * std::exp(-4.0 * J) * std::pow(-std::expm1(-2.0 * J), 2 * ell) * std::exp(-2.0 * q * (2 * ell + 1));
  const bool first = 4.0 * pq / ((1.0 - pq) * (1.0 - pj)) < 0.5;
  const bool second = std::pow(pq / (1.0 - pq), 2) < std::pow(1.0 - pj, 3) * (1.0 - pq) / 16.0;
  b.conditions_met = first && second;
  // The conditions give c1 < c2 for ell >= 2; at ell = 1 and large J they do not.
  b.ordered = b.c1 && *b.c1 < b.c2;
  return b;
}

struct AnisotropyReport {
  int ell = 0;
  Estimate diagonal;      // pi(sigma_(0,0) sigma_(ell,ell))
  Estimate antidiagonal;  // pi(sigma_(0,ell) sigma_(ell,0))
  double gap = 0.0;       // antidiagonal - diagonal
  double gap_sigma = 0.0; // gap in units of the combined error
  std::optional<BoundConstants> bounds;
};

// Both diagonal correlators, averaged over torus translations per sample.
inline AnisotropyReport diag_vs_antidiag(const Params& params, int n, int ell, const SamplerConfig& cfg) {
  const TorusGeometry t(n);
  if (ell < 0 || 2 * ell >= n) throw std::invalid_argument("need 0 <= ell < n/2");
  AnisotropyReport r;
  r.ell = ell;
  if (ell == 0) {
    r.diagonal = {1.0, 0.0};
    r.antidiagonal = {1.0, 0.0};
    return r;
  }
  SampleSeries diag(cfg.batches);
  SampleSeries anti(cfg.batches);
  run_sampler(t, params, cfg, [&](const SpinPair& p, const FkOutcome*) {
    diag.push(translation_averaged_correlation(p.first, t, {0, 0}, {ell, ell}));
    anti.push(translation_averaged_correlation(p.first, t, {ell, 0}, {0, ell}));
  });
  r.diagonal = diag.estimate();
  r.antidiagonal = anti.estimate();
  r.gap = r.antidiagonal.value - r.diagonal.value;
  const double combined = std::hypot(r.diagonal.error, r.antidiagonal.error);
  r.gap_sigma = combined > 0.0 ? r.gap / combined : (r.gap > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  r.bounds = bound_constants(params, ell);
  return r;
}

struct ConnectivityEstimate {
  std::size_t x = 0;
  std::size_t y = 0;
  Estimate value;
};

// Frequency of x^1 <-> y^1 in the bond configurations of an FK chain.
inline std::vector<ConnectivityEstimate> fk_connectivity(const Params& params, int n,
                                                         std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                                         SamplerConfig cfg) {
  cfg.kind = SamplerKind::fk;
  const TorusGeometry t(n);
  std::vector<SampleSeries> series(pairs.size(), SampleSeries(cfg.batches));
  run_sampler(t, params, cfg, [&](const SpinPair&, const FkOutcome* fk) {
    for (std::size_t i = 0; i < pairs.size(); ++i)
      series[i].push(connected(fk->clusters, pairs[i].first, pairs[i].second) ? 1.0 : 0.0);
  });
  std::vector<ConnectivityEstimate> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back({pairs[i].first, pairs[i].second, series[i].estimate()});
  return out;
}

}  // namespace shaken
