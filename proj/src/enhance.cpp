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

#include "cahal/enhance.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>

#include "cahal/nifti.hpp"

namespace cahal {

namespace {

class PassThrough : public Enhancer {
 public:
  explicit PassThrough(std::string name) : name_(std::move(name)) {}
  VolumeF enhance(const VolumeF& input) const override { return input; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
};

// Scratch directory removed on scope exit, success or failure.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "cahal-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("enhance: cannot create temp directory");
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class ScopedEnv {
 public:
  ScopedEnv(const char* key, const std::string& value) : key_(key) {
    const char* old = std::getenv(key);
    if (old) {
      had_old_ = true;
      old_ = old;
    }
    setenv(key, value.c_str(), 1);
  }
  ~ScopedEnv() {
    if (had_old_)
      setenv(key_, old_.c_str(), 1);
    else
      unsetenv(key_);
  }

 private:
  const char* key_;
  bool had_old_ = false;
  std::string old_;
};

class Subprocess : public Enhancer {
 public:
  Subprocess(std::string name, std::string command, std::string expert)
      : name_(std::move(name)), command_(std::move(command)), expert_(std::move(expert)) {}

  VolumeF enhance(const VolumeF& input) const override {
    TempDir dir;
    std::string in_path = (dir.path() / "input.nii").string();
    std::string out_path = (dir.path() / "output.nii").string();
    save_nifti(input, in_path);

    ScopedEnv env("CAHAL_EXPERT_ID", expert_);
    std::string cmd = command_ + " '" + in_path + "' '" + out_path + "'";
    int status = std::system(cmd.c_str());
    if (status != 0)
      throw std::runtime_error("enhance: subprocess '" + name_ + "' failed (status " +
                               std::to_string(status) + ")");
    if (!std::filesystem::exists(out_path))
      throw std::runtime_error("enhance: subprocess '" + name_ + "' produced no output");

    VolumeF out = load_nifti(out_path);
    if (out.shape() != input.shape())
      throw std::runtime_error("enhance: subprocess '" + name_ + "' changed the volume shape");
    if ((out.spacing() - input.spacing()).cwiseAbs().maxCoeff() > 1e-4)
      throw std::runtime_error("enhance: subprocess '" + name_ + "' changed the voxel spacing");
    return out;
  }

  std::string name() const override { return name_; }
  bool thread_safe() const override { return false; }

 private:
  std::string name_;
  std::string command_;
  std::string expert_;
};

}  // namespace

std::unique_ptr<Enhancer> baseline_identity() { return std::make_unique<PassThrough>("identity"); }

std::unique_ptr<Enhancer> baseline_reference() {
  return std::make_unique<PassThrough>("reference");
}

std::unique_ptr<Enhancer> subprocess_enhancer(const std::string& name, const std::string& command,
                                              const std::string& expert) {
  return std::make_unique<Subprocess>(name, command, expert);
}

TilePlan plan_tiles(const Index3& shape, Index voxel_budget, Index overlap) {
  if (overlap < 0) throw std::runtime_error("plan_tiles: overlap must be non-negative");
  Index min_patch = 2 * overlap + 1;
  if (voxel_budget < min_patch * min_patch * min_patch)
    throw std::runtime_error("plan_tiles: voxel budget below (2*overlap+1)^3");
  if (shape[0] < 1 || shape[1] < 1 || shape[2] < 1)
    throw std::runtime_error("plan_tiles: shape components must be positive");

  TilePlan plan;
  plan.shape = shape;
  plan.overlap = overlap;

  if (numel(shape) <= voxel_budget) {
    plan.tiles.push_back({{0, 0, 0}, shape});
    return plan;
  }

  Index patch = static_cast<Index>(std::cbrt(static_cast<double>(voxel_budget)));
  while ((patch + 1) * (patch + 1) * (patch + 1) <= voxel_budget) ++patch;
  while (patch * patch * patch > voxel_budget) --patch;

  std::array<std::vector<Index>, 3> starts;
  Index3 sizes;
  for (int ax = 0; ax < 3; ++ax) {
    Index n = shape[ax];
    Index p = std::min(patch, n);
    sizes[ax] = p;
    Index stride = p - overlap;
    if (stride < 1) stride = 1;
    Index s = 0;
    while (s + p < n) {
      starts[ax].push_back(s);
      s += stride;
    }
    starts[ax].push_back(n - p);
  }

  for (Index sz : starts[2])
    for (Index sy : starts[1])
      for (Index sx : starts[0])
        plan.tiles.push_back({{sx, sy, sz}, sizes});
  return plan;
}

namespace {

VolumeF extract_tile(const VolumeF& v, const TileBox& box) {
  VolumeF::Array data(numel(box.size));
  for (Index k = 0; k < box.size[2]; ++k)
    for (Index j = 0; j < box.size[1]; ++j)
      for (Index i = 0; i < box.size[0]; ++i)
        data[i + box.size[0] * (j + box.size[1] * k)] =
            v(box.start[0] + i, box.start[1] + j, box.start[2] + k);
  Vec3d origin = v.origin() + v.direction() * v.spacing().cwiseProduct(
                                  Vec3d(static_cast<double>(box.start[0]),
                                        static_cast<double>(box.start[1]),
                                        static_cast<double>(box.start[2])));
  return VolumeF(box.size, std::move(data), v.spacing(), v.direction(), origin);
}

double window_weight(Index i, Index n) {
  // Hann taper along one axis, floored so single-coverage edges stay finite.
  double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * (static_cast<double>(i) + 0.5) /
                                  static_cast<double>(n));
  return std::max(w, 1e-3);
}

}  // namespace

VolumeF run_tiled(const Enhancer& e, const VolumeF& v, const TilePlan& plan, BlendMode blend) {
  if (plan.shape != v.shape())
    throw std::runtime_error("run_tiled: plan was built for a different shape");
  if (plan.tiles.empty()) throw std::runtime_error("run_tiled: empty tile plan");

  std::vector<double> sum(static_cast<std::size_t>(v.size()), 0.0);
  std::vector<double> weight(static_cast<std::size_t>(v.size()), 0.0);

  for (const TileBox& box : plan.tiles) {
    VolumeF tile = extract_tile(v, box);
    VolumeF out = e.enhance(tile);
    if (out.shape() != box.size)
      throw std::runtime_error("run_tiled: enhancer '" + e.name() + "' changed the tile shape");
    for (Index k = 0; k < box.size[2]; ++k) {
      for (Index j = 0; j < box.size[1]; ++j) {
        for (Index i = 0; i < box.size[0]; ++i) {
          double w = 1.0;
          if (blend == BlendMode::CosineWindow)
            w = window_weight(i, box.size[0]) * window_weight(j, box.size[1]) *
                window_weight(k, box.size[2]);
          std::size_t at = static_cast<std::size_t>(
              v.linear(box.start[0] + i, box.start[1] + j, box.start[2] + k));
          sum[at] += w * static_cast<double>(out(i, j, k));
          weight[at] += w;
        }
      }
    }
  }

  VolumeF::Array data(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    std::size_t at = static_cast<std::size_t>(i);
    if (weight[at] == 0.0) throw std::runtime_error("run_tiled: plan does not cover the volume");
    data[i] = static_cast<float>(sum[at] / weight[at]);
  }
  return v.with_data(std::move(data));
}

}  // namespace cahal
