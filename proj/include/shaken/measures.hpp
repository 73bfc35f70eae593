#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shaken/lattice.hpp"

namespace shaken {

// Couplings (J, q) with the derived bond probabilities of the FK coupling.
// Inverse temperature is absorbed into both couplings.
class Params {
 public:
  Params() = default;
  Params(double coupling, double inertia) : J_(coupling), q_(inertia) {
    if (!(std::isfinite(coupling) && coupling >= 0.0))
      throw std::invalid_argument("J must be finite and >= 0, got " + std::to_string(coupling));
    if (!(std::isfinite(inertia) && inertia >= 0.0))
      throw std::invalid_argument("q must be finite and >= 0, got " + std::to_string(inertia));
  }

  double J() const noexcept { return J_; }
  double q() const noexcept { return q_; }
  double p_J() const noexcept { return -std::expm1(-2.0 * J_); }
  double p_q() const noexcept { return -std::expm1(-2.0 * q_); }
  // delta = e^{-2q} = 1 - p_q
  double delta() const noexcept { return std::exp(-2.0 * q_); }

  double coupling(EdgeKind k) const noexcept { return k == EdgeKind::j ? J_ : q_; }
  double open_probability(EdgeKind k) const noexcept { return k == EdgeKind::j ? p_J() : p_q(); }

 private:
  double J_ = 0.0;
  double q_ = 0.0;
};

using Spin = std::int8_t;

class SpinLayer {
 public:
  SpinLayer() = default;
  SpinLayer(std::size_t sites, Spin value) : spins_(sites, value) {
    if (value != 1 && value != -1) throw std::invalid_argument("spin value must be +1 or -1");
  }

  // Bit i set <-> spin i is +1.
  static SpinLayer from_bits(std::uint64_t bits, std::size_t sites) {
    SpinLayer s(sites, -1);
    for (std::size_t i = 0; i < sites; ++i)
      if ((bits >> i) & 1u) s.spins_[i] = 1;
    return s;
  }

  std::uint64_t to_bits() const {
    if (spins_.size() > 64) throw std::length_error("layer too large for a bit index");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < spins_.size(); ++i)
      if (spins_[i] > 0) bits |= std::uint64_t{1} << i;
    return bits;
  }

  std::size_t size() const noexcept { return spins_.size(); }
  Spin operator[](std::size_t i) const noexcept { return spins_[i]; }
  Spin& operator[](std::size_t i) noexcept { return spins_[i]; }
  std::span<const Spin> values() const noexcept { return spins_; }
  std::span<Spin> values() noexcept { return spins_; }

  SpinLayer flipped() const {
    SpinLayer out = *this;
    for (auto& s : out.spins_) s = static_cast<Spin>(-s);
    return out;
  }

  friend bool operator==(const SpinLayer&, const SpinLayer&) = default;

 private:
  std::vector<Spin> spins_;
};

// (sigma^1, sigma^2): a spin field on the hexagonal graph.
struct SpinPair {
  SpinLayer first;
  SpinLayer second;

  static SpinPair uniform(std::size_t sites, Spin value) { return {SpinLayer(sites, value), SpinLayer(sites, value)}; }

  // Layer 1 in bits [0, N), layer 2 in bits [N, 2N).
  static SpinPair from_bits(std::uint64_t bits, std::size_t sites) {
    return {SpinLayer::from_bits(bits, sites), SpinLayer::from_bits(bits >> sites, sites)};
  }
  std::uint64_t to_bits() const { return first.to_bits() | (second.to_bits() << first.size()); }

  const SpinLayer& layer(Layer l) const noexcept { return l == Layer::one ? first : second; }
  SpinLayer& layer(Layer l) noexcept { return l == Layer::one ? first : second; }

  // Spin of a hexagonal-graph vertex.
  Spin at_vertex(std::size_t v) const noexcept { return v < first.size() ? first[v] : second[v - first.size()]; }

  SpinPair flipped() const { return {first.flipped(), second.flipped()}; }

  friend bool operator==(const SpinPair&, const SpinPair&) = default;
};

// Componentwise order: upper >= lower at every vertex.
inline bool dominates(const SpinPair& upper, const SpinPair& lower) {
  for (std::size_t i = 0; i < upper.first.size(); ++i)
    if (upper.first[i] < lower.first[i] || upper.second[i] < lower.second[i]) return false;
  return true;
}

// H(sigma) = -J sum over the bond multiset of sigma_x sigma_y.
inline double ising_energy(const SpinLayer& s, const TorusGeometry& t, double J) {
  long long sum = 0;
  for (const Bond& b : t.bonds()) sum += s[b.a] * s[b.b];
  return -J * static_cast<double>(sum);
}

// H(sigma, tau) in the up/right form.
inline double pair_energy(const SpinPair& p, const TorusGeometry& t, const Params& params) {
  long long j_sum = 0;
  long long q_sum = 0;
  for (std::size_t x = 0; x < t.site_count(); ++x) {
    j_sum += p.first[x] * (p.second[t.up(x)] + p.second[t.right(x)]);
    q_sum += p.first[x] * p.second[x];
  }
  return -(params.J() * static_cast<double>(j_sum) + params.q() * static_cast<double>(q_sum));
}

// The same Hamiltonian written from the layer-2 side (down/left form).
inline double pair_energy_down_left(const SpinPair& p, const TorusGeometry& t, const Params& params) {
  double e = 0.0;
  for (std::size_t x = 0; x < t.site_count(); ++x)
    e -= params.J() * p.second[x] * (p.first[t.down(x)] + p.first[t.left(x)]) + params.q() * p.second[x] * p.first[x];
  return e;
}

// H as a sum over the edges of the hexagonal graph.
inline double pair_energy_edges(const SpinPair& p, const HexGraph& g, const Params& params) {
  double e = 0.0;
  for (const HexEdge& edge : g.edges())
    e -= params.coupling(edge.kind) * p.at_vertex(edge.first) * p.at_vertex(edge.second);
  return e;
}

// Field h on `site` of `layer` from the frozen opposite layer: flipping that
// spin s changes the pair energy by 2 s h.
inline double local_field(const SpinPair& p, const TorusGeometry& t, std::size_t site, Layer layer,
                          const Params& params) {
  if (layer == Layer::one) {
    const auto& tau = p.second;
    return params.J() * (tau[t.up(site)] + tau[t.right(site)]) + params.q() * tau[site];
  }
  const auto& sigma = p.first;
  return params.J() * (sigma[t.down(site)] + sigma[t.left(site)]) + params.q() * sigma[site];
}

}  // namespace shaken
