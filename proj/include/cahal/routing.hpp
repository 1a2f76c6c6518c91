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

#ifndef CAHAL_ROUTING_HPP
#define CAHAL_ROUTING_HPP

#include <limits>
#include <string>
#include <vector>

#include "cahal/volume.hpp"

namespace cahal {

// Bivariate expert grid over voxel volume V (mm^3) and anisotropy A.
// Volume bins are half-open [lo, hi); anisotropy bins are (lo, hi], so an A
// exactly on a boundary belongs to the lower-A bin.
inline constexpr int kVolumeBins = 7;
inline constexpr int kAnisoBins = 3;
inline constexpr double kVolumeEdges[kVolumeBins + 1] = {
    1.0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, std::numeric_limits<double>::infinity()};
inline constexpr double kAnisoEdges[kAnisoBins + 1] = {0.0, 0.33, 0.66, 1.0};

/// Grid cell coordinate, 1-based: v_bin in 1..7, a_bin in 1..3.
struct BinCoord {
  int v_bin = 0;
  int a_bin = 0;
  bool operator==(const BinCoord&) const = default;
};

inline std::string expert_id(BinCoord c) {
  return "V" + std::to_string(c.v_bin) + "-A" + std::to_string(c.a_bin);
}

inline double v_bin_lo(int v) { return kVolumeEdges[v - 1]; }
inline double v_bin_hi(int v) { return kVolumeEdges[v]; }
inline double a_bin_lo(int a) { return kAnisoEdges[a - 1]; }
inline double a_bin_hi(int a) { return kAnisoEdges[a]; }

inline BinCoord classify(const AcquisitionDescriptor& d) {
  if (d.voxel_volume_mm3 < 1.0 - 1e-9)
    throw std::runtime_error("classify: voxel volume below 1 mm^3 (clip spacing to >= 1 first)");
  if (!(d.anisotropy > 0.0) || d.anisotropy > 1.0 + 1e-12)
    throw std::runtime_error("classify: anisotropy must lie in (0, 1]");
  BinCoord c;
  c.v_bin = kVolumeBins;
  for (int v = 1; v <= kVolumeBins; ++v) {
    if (d.voxel_volume_mm3 < kVolumeEdges[v]) {
      c.v_bin = v;
      break;
    }
  }
  c.a_bin = kAnisoBins;
  for (int a = 1; a < kAnisoBins; ++a) {
    if (d.anisotropy <= kAnisoEdges[a]) {
      c.a_bin = a;
      break;
    }
  }
  return c;
}

/// Whether any acquisition can land in this cell. A cell is realisable iff
/// some triplet with min spacing >= 1 mm and two equal axes has its volume
/// in the v bin and its ratio in the a bin; with r = (p, p, q), q >= p, that
/// reduces to V*A >= 1 being attainable, i.e. sup(v_bin) * sup(a_bin) > 1.
/// Exactly {V1-A1, V1-A2, V2-A1} fail.
inline bool is_feasible(BinCoord c) {
  if (c.v_bin < 1 || c.v_bin > kVolumeBins || c.a_bin < 1 || c.a_bin > kAnisoBins)
    throw std::runtime_error("is_feasible: bin coordinate out of range");
  if (c.v_bin == kVolumeBins) return true;
  return v_bin_hi(c.v_bin) * a_bin_hi(c.a_bin) > 1.0;
}

/// Feasible cells in deterministic order (v ascending, a ascending).
inline std::vector<BinCoord> feasible_cells() {
  std::vector<BinCoord> cells;
  for (int v = 1; v <= kVolumeBins; ++v)
    for (int a = 1; a <= kAnisoBins; ++a)
      if (is_feasible({v, a})) cells.push_back({v, a});
  return cells;
}

enum class RoutingKind { NoEnhancementNeeded, Enhance };

struct RoutingDecision {
  RoutingKind kind = RoutingKind::NoEnhancementNeeded;
  BinCoord cell;
  std::string expert;
};

/// Dispatch from acquisition spacing alone. Spacings within 1e-3 of 1 mm (or
/// finer) on all axes need no enhancement; otherwise the spacing is clipped
/// to >= 1 mm per axis and the descriptor cell selects the expert.
inline RoutingDecision route_spacing(const Vec3d& spacing) {
  if (!(spacing.array() > 0.0).all())
    throw std::runtime_error("route: spacing components must be positive");
  RoutingDecision d;
  if ((spacing.array() <= 1.0 + 1e-3).all()) {
    d.kind = RoutingKind::NoEnhancementNeeded;
    return d;
  }
  Vec3d clipped = spacing.cwiseMax(1.0);
  AcquisitionDescriptor desc = descriptors(clipped);
  BinCoord cell = classify(desc);
  if (!is_feasible(cell)) {
    std::ostringstream msg;
    msg << "route: descriptor (V = " << desc.voxel_volume_mm3 << " mm^3, A = " << desc.anisotropy
        << ") falls in infeasible cell " << expert_id(cell);
    throw std::runtime_error(msg.str());
  }
  d.kind = RoutingKind::Enhance;
  d.cell = cell;
  d.expert = expert_id(cell);
  return d;
}

/// Routing never inspects voxel data: a volume routes exactly as its header.
template <typename Scalar>
RoutingDecision route(const Volume<Scalar>& v) {
  return route_spacing(v.spacing());
}

enum class TransferKind { Volumetric, Anisotropy };

struct CurriculumStep {
  BinCoord cell;
  bool scratch = false;
  BinCoord parent;        // valid when !scratch
  TransferKind transfer = TransferKind::Volumetric;
};

struct CurriculumPlan {
  std::vector<CurriculumStep> steps;
};

/// Training order over the 18 feasible cells: a spanning in-tree rooted at
/// the near-isotropic, high-resolution corner. The A3 row is chained along
/// increasing volume; each lower-A row is seeded from the cell directly
/// above its first feasible column, then chained along volume as well.
inline CurriculumPlan curriculum() {
  CurriculumPlan plan;
  for (int a = kAnisoBins; a >= 1; --a) {
    int first = 0;
    for (int v = 1; v <= kVolumeBins; ++v) {
      if (!is_feasible({v, a})) continue;
      CurriculumStep s;
      s.cell = {v, a};
      if (first == 0) {
        first = v;
        if (a == kAnisoBins) {
          s.scratch = true;
        } else {
          s.parent = {v, a + 1};
          s.transfer = TransferKind::Anisotropy;
        }
      } else {
        s.parent = {v - 1, a};
        s.transfer = TransferKind::Volumetric;
      }
      plan.steps.push_back(s);
    }
  }
  return plan;
}

std::string curriculum_json(const CurriculumPlan& plan);
std::string curriculum_dot(const CurriculumPlan& plan);

}  // namespace cahal

#endif
