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

#ifndef CAHAL_ENHANCE_HPP
#define CAHAL_ENHANCE_HPP

#include <memory>
#include <string>
#include <vector>

#include "cahal/volume.hpp"

namespace cahal {

/// Neural (or classical) enhancement backend. Implementations must preserve
/// shape and spacing; the substrate never assumes anything about what the
/// voxel values become.
class Enhancer {
 public:
  virtual ~Enhancer() = default;
  virtual VolumeF enhance(const VolumeF& input) const = 0;
  virtual std::string name() const = 0;
  virtual bool deterministic() const { return true; }
  virtual bool thread_safe() const { return true; }
};

std::unique_ptr<Enhancer> baseline_identity();

/// The pass-through arm scored against ground truth: the already-resampled
/// degraded input itself.
std::unique_ptr<Enhancer> baseline_reference();

/// Runs `command <input.nii> <output.nii>` with CAHAL_EXPERT_ID exported in
/// the child environment. Not thread safe (mutates the process environment).
std::unique_ptr<Enhancer> subprocess_enhancer(const std::string& name, const std::string& command,
                                              const std::string& expert);

struct TileBox {
  Index3 start{0, 0, 0};
  Index3 size{0, 0, 0};
};

struct TilePlan {
  Index3 shape{0, 0, 0};
  Index overlap = 0;
  std::vector<TileBox> tiles;
};

enum class BlendMode { UniformAverage, CosineWindow };

/// Cover a volume with overlapping tiles no larger than voxel_budget.
/// A volume within budget is a single tile; otherwise tiles are the largest
/// cube under budget, marched with stride = patch - overlap and the final
/// tile clamped to the boundary, so adjacent tiles overlap by at least
/// `overlap` voxels wherever the volume is large enough.
TilePlan plan_tiles(const Index3& shape, Index voxel_budget, Index overlap = 16);

/// Enhance tile by tile and blend the overlaps. Uniform averaging is
/// order-free: each voxel is the mean of every tile output covering it.
VolumeF run_tiled(const Enhancer& e, const VolumeF& v, const TilePlan& plan,
                  BlendMode blend = BlendMode::UniformAverage);

}  // namespace cahal

#endif
