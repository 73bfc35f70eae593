#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shaken/errors.hpp"
#include "shaken/lattice.hpp"
#include "shaken/measures.hpp"
#include "shaken/parallel.hpp"
#include "shaken/rng.hpp"

namespace shaken {

// Uniforms u(counter, site) for the heat-bath half-steps. A forward sheet
// addresses the half-step counter directly; a past sheet for an epoch of T
// half-steps maps counter t to absolute time T - t before zero, so every
// coupling-from-the-past epoch reuses the same values for the same times.
class RandomnessSheet {
 public:
  static RandomnessSheet forward(std::uint64_t seed,
                                 std::uint64_t horizon = std::numeric_limits<std::uint64_t>::max()) {
    return RandomnessSheet(CounterRng(seed), Stream::forward_dynamics, horizon, false);
  }

  static RandomnessSheet past(std::uint64_t seed, std::uint64_t epoch_half_steps) {
    return RandomnessSheet(CounterRng(seed), Stream::past_dynamics, epoch_half_steps, true);
  }

  bool covers(std::uint64_t counter) const noexcept { return counter < horizon_; }

  // For past sheets: how many half-steps before time zero this counter is.
  std::uint64_t address(std::uint64_t counter) const {
    if (!covers(counter))
      throw std::out_of_range("randomness sheet does not cover half-step " + std::to_string(counter));
    return past_ ? horizon_ - counter : counter;
  }

  double uniform(std::uint64_t counter, std::size_t site) const { return rng_.uniform(stream_, address(counter), site); }

 private:
  RandomnessSheet(CounterRng rng, Stream stream, std::uint64_t horizon, bool past)
      : rng_(rng), stream_(stream), horizon_(horizon), past_(past) {}

  CounterRng rng_;
  Stream stream_;
  std::uint64_t horizon_;
  bool past_;
};

// Even counter: layer 1 updates next.
struct ChainState {
  SpinPair pair;
  std::uint64_t counter = 0;

  Layer active_layer() const noexcept { return counter % 2 == 0 ? Layer::one : Layer::two; }
};

inline double heat_bath_plus_probability(double h) { return 1.0 / (1.0 + std::exp(-2.0 * h)); }

// Heat-bath probability that `site` of `layer` becomes +1 given the
// opposite layer of `p`.
inline double site_plus_probability(const SpinPair& p, const TorusGeometry& t, std::size_t site, Layer layer,
                                    const Params& params) {
  return heat_bath_plus_probability(local_field(p, t, site, layer, params));
}

namespace detail {

// The local field takes only six values J*a + q*b, a in {-2,0,2}, b in {-1,1}.
class HeatBathTable {
 public:
  explicit HeatBathTable(const Params& params) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 2; ++b)
        prob_[a][b] = heat_bath_plus_probability(params.J() * (2 * a - 2) + params.q() * (2 * b - 1));
  }
  double operator()(int j_sum, int q_spin) const noexcept { return prob_[(j_sum + 2) / 2][(q_spin + 1) / 2]; }

 private:
  double prob_[3][2];
};

inline void advance_active_layer(ChainState& s, const TorusGeometry& t, const HeatBathTable& table,
                                 const RandomnessSheet& sheet) {
  const std::uint64_t counter = s.counter;
  if (!sheet.covers(counter))
    throw std::out_of_range("randomness sheet does not cover half-step " + std::to_string(counter));
  const Layer layer = s.active_layer();
  // The active layer reads only the frozen opposite layer, so the update is
  // in place and order-free.
  if (layer == Layer::one) {
    const SpinLayer& tau = s.pair.second;
    SpinLayer& sigma = s.pair.first;
    parallel_for(t.site_count(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t x = begin; x < end; ++x) {
        const double p = table(tau[t.up(x)] + tau[t.right(x)], tau[x]);
        sigma[x] = sheet.uniform(counter, x) < p ? Spin{1} : Spin{-1};
      }
    });
  } else {
    const SpinLayer& sigma = s.pair.first;
    SpinLayer& tau = s.pair.second;
    parallel_for(t.site_count(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t x = begin; x < end; ++x) {
        const double p = table(sigma[t.down(x)] + sigma[t.left(x)], sigma[x]);
        tau[x] = sheet.uniform(counter, x) < p ? Spin{1} : Spin{-1};
      }
    });
  }
  ++s.counter;
}

}  // namespace detail

// Parallel heat-bath update of every site of the active layer: spin x
// becomes +1 iff u(counter, x) < e^h / (e^h + e^-h).
inline ChainState half_step(ChainState s, const TorusGeometry& t, const Params& params, const RandomnessSheet& sheet) {
  detail::advance_active_layer(s, t, detail::HeatBathTable(params), sheet);
  return s;
}

// Layer 1 then layer 2.
inline ChainState shaken_sweep(ChainState s, const TorusGeometry& t, const Params& params,
                               const RandomnessSheet& sheet) {
  if (s.active_layer() != Layer::one) throw std::logic_error("shaken_sweep must start on layer 1");
  const detail::HeatBathTable table(params);
  detail::advance_active_layer(s, t, table, sheet);
  detail::advance_active_layer(s, t, table, sheet);
  return s;
}

// Grand coupling: every chain takes the same half-step with the same
// uniforms. Preserves the componentwise order between chains.
inline void monotone_coupled_step(std::span<ChainState> states, const TorusGeometry& t, const Params& params,
                                  const RandomnessSheet& sheet) {
  if (states.empty()) return;
  for (const auto& s : states)
    if (s.counter != states.front().counter) throw std::invalid_argument("coupled chains must share a counter");
  const detail::HeatBathTable table(params);
  for (auto& s : states) detail::advance_active_layer(s, t, table, sheet);
}

inline constexpr std::uint64_t kDefaultCoalescenceCap = std::uint64_t{1} << 20;

struct CftpResult {
  SpinPair sample;
  std::uint64_t half_steps = 0;  // length of the successful epoch
  int epochs = 0;
};

// Exact sample from pi_2 by monotone coupling from the past: chains from
// all-plus and all-minus are started T = 2, 4, 8, ... half-steps before
// time zero and driven by the past sheet until they agree at time zero.
inline CftpResult cftp_sample(const Params& params, const TorusGeometry& t, std::uint64_t seed,
                              std::uint64_t cap = kDefaultCoalescenceCap) {
  const detail::HeatBathTable table(params);
  const std::size_t sites = t.site_count();
  CftpResult r;
  for (std::uint64_t epoch = 2; epoch <= cap; epoch *= 2) {
    ++r.epochs;
    const RandomnessSheet sheet = RandomnessSheet::past(seed, epoch);
    ChainState top{SpinPair::uniform(sites, 1), 0};
    ChainState bottom{SpinPair::uniform(sites, -1), 0};
    bool merged = false;
    while (top.counter < epoch) {
      detail::advance_active_layer(top, t, table, sheet);
      if (!merged) {
        detail::advance_active_layer(bottom, t, table, sheet);
        merged = top.pair == bottom.pair;
      }
    }
    if (merged) {
      r.sample = std::move(top.pair);
      r.half_steps = epoch;
      return r;
    }
    if (epoch > cap / 2) break;
  }
  throw CoalescenceTimeout("coupling from the past did not coalesce within " + std::to_string(cap) +
                           " half-steps (J=" + std::to_string(params.J()) + ", q=" + std::to_string(params.q()) + ")");
}

inline CftpResult cftp_sample(const Params& params, int n, std::uint64_t seed,
                              std::uint64_t cap = kDefaultCoalescenceCap) {
  return cftp_sample(params, TorusGeometry(n), seed, cap);
}

// Forward shaken-dynamics chain started from a uniformly random pair.
class ShakenChain {
 public:
  ShakenChain(const TorusGeometry& torus, const Params& params, std::uint64_t seed)
      : torus_(torus), table_(params), sheet_(RandomnessSheet::forward(seed)) {
    const CounterRng init(seed);
    const std::size_t sites = torus_.site_count();
    state_.pair = SpinPair::uniform(sites, 1);
    for (std::size_t v = 0; v < 2 * sites; ++v) {
      const Spin s = init.uniform(Stream::initial_state, 0, v) < 0.5 ? Spin{1} : Spin{-1};
      (v < sites ? state_.pair.first[v] : state_.pair.second[v - sites]) = s;
    }
  }

  void sweep(std::size_t count = 1) {
    for (std::size_t i = 0; i < 2 * count; ++i) detail::advance_active_layer(state_, torus_, table_, sheet_);
  }

  const ChainState& state() const noexcept { return state_; }
  const SpinPair& pair() const noexcept { return state_.pair; }
  const TorusGeometry& torus() const noexcept { return torus_; }

 private:
  TorusGeometry torus_;
  detail::HeatBathTable table_;
  RandomnessSheet sheet_;
  ChainState state_;
};

enum class SampleMode { cftp, burnin };

struct SamplingOptions {
  std::size_t burnin = 1000;
  std::size_t thin = 10;
  std::uint64_t coalescence_cap = kDefaultCoalescenceCap;
};

struct SamplingRun {
  SampleMode mode = SampleMode::burnin;
  std::vector<SpinPair> pairs;
  std::size_t burnin = 0;  // sweeps discarded (burn-in mode)
  std::size_t thin = 0;    // sweeps between recorded samples (burn-in mode)
  std::uint64_t max_half_steps = 0;  // longest CFTP epoch used (cftp mode)

  std::vector<SpinLayer> first_layers() const {
    std::vector<SpinLayer> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.first);
    return out;
  }
};

// Samples of pi_2; sample i in CFTP mode uses the i-th child seed.
inline SamplingRun sample_pi2(const Params& params, int n, std::size_t count, SampleMode mode, std::uint64_t seed,
                              const SamplingOptions& opt = {}) {
  const TorusGeometry t(n);
  SamplingRun run;
  run.mode = mode;
  run.pairs.reserve(count);
  if (mode == SampleMode::cftp) {
    const CounterRng root(seed);
    for (std::size_t i = 0; i < count; ++i) {
      auto r = cftp_sample(params, t, root.child(i).seed(), opt.coalescence_cap);
      run.max_half_steps = std::max(run.max_half_steps, r.half_steps);
      run.pairs.push_back(std::move(r.sample));
    }
    return run;
  }
  if (opt.thin == 0) throw std::invalid_argument("thinning must be >= 1");
  run.burnin = opt.burnin;
  run.thin = opt.thin;
  ShakenChain chain(t, params, seed);
  chain.sweep(opt.burnin);
  for (std::size_t i = 0; i < count; ++i) {
    chain.sweep(opt.thin);
    run.pairs.push_back(chain.pair());
  }
  return run;
}

// Layer-1 projections of pi_2 samples are samples of pi.
inline std::vector<SpinLayer> sample_pi(const Params& params, int n, std::size_t count, SampleMode mode,
                                        std::uint64_t seed, const SamplingOptions& opt = {}) {
  return sample_pi2(params, n, count, mode, seed, opt).first_layers();
}

}  // namespace shaken
