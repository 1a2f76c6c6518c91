/*
 * CAHAL: physics-informed toolkit for MRI resolution enhancement
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CAHAL_DEGRADE_HPP
#define CAHAL_DEGRADE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cahal/resample.hpp"
#include "cahal/routing.hpp"

namespace cahal {

// The top volume bin is open-ended for classification; sampling within it is
// capped at the thickest protocols seen in practice.
inline constexpr double kVolumeSamplingCap = 10.5;

/// Full provenance of one synthetic acquisition: the resolution triplet in
/// final axis order, the permutation that placed the odd axis, and the seed
/// that produced the draw.
struct DegradationSpec {
  Vec3d triplet{1, 1, 1};
  std::array<int, 3> permutation{0, 1, 2};
  std::uint64_t seed = 0;
  bool has_cell = false;
  BinCoord cell;
};

/// Throws unless r is a valid generator triplet for (V, a_bin): component
/// product equal to V within 1e-6 relative, exactly two components equal,
/// every component >= 1 mm, and min/max inside the bin's interval.
inline void validate_triplet(const Vec3d& r, double V, int a_bin) {
  double prod = r[0] * r[1] * r[2];
  if (std::abs(prod - V) > 1e-6 * std::abs(V))
    throw std::runtime_error("triplet: component product misses target volume");
  bool eq01 = r[0] == r[1], eq02 = r[0] == r[2], eq12 = r[1] == r[2];
  int pairs = (eq01 ? 1 : 0) + (eq02 ? 1 : 0) + (eq12 ? 1 : 0);
  if (pairs != 1)
    throw std::runtime_error("triplet: exactly two components must be equal");
  if (r.minCoeff() < 1.0 - 1e-12)
    throw std::runtime_error("triplet: components must be >= 1 mm");
  double a = r.minCoeff() / r.maxCoeff();
  if (!(a > a_bin_lo(a_bin) - 1e-9) || a > a_bin_hi(a_bin) + 1e-9)
    throw std::runtime_error("triplet: anisotropy outside requested bin");
}

namespace detail {

inline Vec3d draw_triplet(double V, int a_bin, Rng& rng, std::array<int, 3>& perm) {
  if (a_bin < 1 || a_bin > kAnisoBins)
    throw std::runtime_error("generate_triplet: anisotropy bin out of range");
  if (V < 1.0)
    throw std::runtime_error("generate_triplet: voxel volume must be >= 1 mm^3");
  const double lo = a_bin_lo(a_bin);
  const double hi = a_bin_hi(a_bin);

  double p, q;
  if (a_bin == 1) {
    // High anisotropy: in-plane resolution is pinned at 1 mm and the slice
    // axis carries the whole volume, so A = 1/V must itself land in the bin.
    double a = 1.0 / V;
    if (!(a > lo && a <= hi + 1e-12))
      throw std::runtime_error("generate_triplet: no high-anisotropy triplet reaches this bin "
                               "with 1 mm in-plane resolution");
    p = 1.0;
    q = V;
  } else {
    // Equal pair p and odd axis q = p/A with p = (V*A)^(1/3) hits the volume
    // exactly; p >= 1 constrains the attainable anisotropy to A >= 1/V.
    double lo_eff = std::max(lo, 1.0 / V);
    if (!(lo_eff < hi))
      throw std::runtime_error("generate_triplet: cell not reachable for this volume "
                               "(min spacing >= 1 mm forces A >= 1/V)");
    double a;
    do {
      a = hi - uniform01(rng) * (hi - lo_eff);
      p = std::cbrt(V * a);
      if (p < 1.0) p = 1.0;
      q = p / a;
    } while (a >= 1.0 || q == p);
  }

  perm = {0, 1, 2};
  for (int i = 2; i > 0; --i) std::swap(perm[i], perm[uniform_int(rng, i + 1)]);
  Vec3d canonical(p, p, q);
  return Vec3d(canonical[perm[0]], canonical[perm[1]], canonical[perm[2]]);
}

}  // namespace detail

/// Draw a resolution triplet with component product V and anisotropy inside
/// a_bin, odd axis randomly placed. Throws when the cell is unreachable.
inline Vec3d generate_triplet(double V, int a_bin, Rng& rng) {
  std::array<int, 3> perm;
  Vec3d r = detail::draw_triplet(V, a_bin, rng, perm);
  validate_triplet(r, V, a_bin);
  return r;
}

/// Deterministically sample a full spec for a grid cell: V uniform over the
/// reachable part of the volume bin, then a triplet for the anisotropy bin.
inline DegradationSpec sample_cell_spec(BinCoord cell, std::uint64_t seed) {
  if (!is_feasible(cell))
    throw std::runtime_error("sample_cell_spec: cell " + expert_id(cell) + " is infeasible");
  Rng rng(seed);
  double v_lo = std::max(v_bin_lo(cell.v_bin), 1.0 / a_bin_hi(cell.a_bin));
  double v_hi = std::min(v_bin_hi(cell.v_bin), kVolumeSamplingCap);
  double V;
  do {
    V = uniform(rng, v_lo, v_hi);
  } while (cell.a_bin != 1 && V * a_bin_hi(cell.a_bin) <= 1.0);

  DegradationSpec spec;
  spec.triplet = detail::draw_triplet(V, cell.a_bin, rng, spec.permutation);
  spec.seed = seed;
  spec.has_cell = true;
  spec.cell = cell;
  validate_triplet(spec.triplet, V, cell.a_bin);
  return spec;
}

enum class SlicePattern { Isotropic, Axial, Sagittal, Coronal };

/// Piecewise-uniform histogram over scalar draws; weights are normalised.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> weights;
};

/// Empirical acquisition-protocol distribution: slice-pattern frequencies
/// plus magnitude histograms for voxel volume and anisotropy.
struct ProtocolDistribution {
  std::string name;
  std::array<double, 4> pattern_weights{1, 0, 0, 0};  // order: iso, axial, sag, cor
  Histogram volume_hist;
  Histogram aniso_hist;
};

ProtocolDistribution load_protocol(const std::string& path);
ProtocolDistribution volbrain_protocol();
ProtocolDistribution biobank_protocol();

namespace detail {

inline double draw_histogram(const Histogram& h, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  std::size_t bin = h.weights.size() - 1;
  for (std::size_t i = 0; i < h.weights.size(); ++i) {
    acc += h.weights[i];
    if (u < acc) {
      bin = i;
      break;
    }
  }
  return uniform(rng, h.edges[bin], h.edges[bin + 1]);
}

}  // namespace detail

/// Draw an acquisition spacing from a protocol distribution. The slice
/// pattern decides which axis is the odd one; components are clipped to
/// >= 1 mm afterwards.
inline Vec3d sample_protocol(const ProtocolDistribution& dist, Rng& rng) {
  double u = uniform01(rng);
  int pat = 3;
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    acc += dist.pattern_weights[i];
    if (u < acc) {
      pat = i;
      break;
    }
  }

  Vec3d r;
  if (pat == 0) {
    double V = detail::draw_histogram(dist.volume_hist, rng);
    double c = std::cbrt(std::max(V, 0.0));
    r = Vec3d(c, c, c);
  } else {
    double V = std::max(detail::draw_histogram(dist.volume_hist, rng), 1e-6);
    double a = detail::draw_histogram(dist.aniso_hist, rng);
    a = std::min(std::max(a, 1e-6), 1.0 - 1e-9);
    double p = std::cbrt(V * a);
    double q = p / a;
    switch (static_cast<SlicePattern>(pat)) {
      case SlicePattern::Axial: r = Vec3d(p, p, q); break;     // x = y != z
      case SlicePattern::Sagittal: r = Vec3d(q, p, p); break;  // y = z != x
      case SlicePattern::Coronal: r = Vec3d(p, q, p); break;   // x = z != y
      default: r = Vec3d(p, p, q); break;
    }
  }
  return r.cwiseMax(1.0);
}

/// Physics-informed degradation: box-average the 1 mm ground truth down to
/// the acquisition triplet, then interpolate back onto the original 1 mm
/// grid so input and target share a shape. Mirrors the scanner's partial
/// volume averaging followed by conforming resample.
template <typename Scalar>
Volume<Scalar> degrade_volume(const Volume<Scalar>& gt, const DegradationSpec& spec) {
  for (int ax = 0; ax < 3; ++ax) {
    if (std::abs(gt.spacing()[ax] - 1.0) > 1e-3)
      throw std::runtime_error("degrade_volume: ground truth must be on a 1 mm isotropic grid");
  }
  Vec3d triplet = spec.triplet.cwiseMax(1.0);
  Volume<Scalar> low = area_downsample(gt, triplet);
  return detail::resample_to_shape(low, Vec3d(1, 1, 1), gt.shape(), ResampleMethod::Trilinear);
}

/// Source of acquisition specs for training-pair streams.
struct PairSource {
  enum Kind { Grid, Protocol } kind = Grid;
  ProtocolDistribution protocol;
};

template <typename Scalar>
struct TrainingPairT {
  Volume<Scalar> input;
  DegradationSpec spec;
};

using TrainingPair = TrainingPairT<float>;

/// Spec for stream element (base_seed, index); elements are independent, so
/// any element can be regenerated without replaying the stream.
inline DegradationSpec sample_stream_spec(std::uint64_t base_seed, std::uint64_t index,
                                          const PairSource& source) {
  std::uint64_t seed = seed_mix(base_seed, index);
  if (source.kind == PairSource::Grid) {
    Rng rng(seed);
    std::vector<BinCoord> cells = feasible_cells();
    BinCoord cell = cells[static_cast<std::size_t>(uniform_int(rng, static_cast<int>(cells.size())))];
    return sample_cell_spec(cell, rng());
  }
  Rng rng(seed);
  DegradationSpec spec;
  spec.triplet = sample_protocol(source.protocol, rng);
  spec.seed = seed;
  return spec;
}

/// One element of the infinite (input, target) stream; the target is the
/// ground truth itself.
template <typename Scalar>
TrainingPairT<Scalar> make_training_pair(const Volume<Scalar>& gt, std::uint64_t base_seed,
                                         std::uint64_t index, const PairSource& source) {
  DegradationSpec spec = sample_stream_spec(base_seed, index, source);
  return {degrade_volume(gt, spec), spec};
}

std::string degradation_spec_json(const DegradationSpec& spec);

}  // namespace cahal

#endif
