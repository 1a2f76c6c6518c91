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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <vector>

#include "cahal/enhance.hpp"
#include "cahal/nifti.hpp"
#include "test_support.hpp"

using namespace cahal;

namespace {

void make_executable(const std::string& path) {
  std::filesystem::permissions(path,
                               std::filesystem::perms::owner_exec |
                                   std::filesystem::perms::owner_read |
                                   std::filesystem::perms::owner_write,
                               std::filesystem::perm_options::add);
}

// Deliberately broken backend: returns a volume of the wrong shape.
class WrongShape : public Enhancer {
 public:
  VolumeF enhance(const VolumeF&) const override { return VolumeF::filled({2, 2, 2}, 0.0f); }
  std::string name() const override { return "wrong-shape"; }
};

}  // namespace

TEST_CASE("plan_tiles: documented 200^3 plan with a 128^3 budget") {
  TilePlan plan = plan_tiles({200, 200, 200}, 128 * 128 * 128, 16);
  REQUIRE(plan.tiles.size() == 8);
  for (const TileBox& t : plan.tiles) CHECK(t.size == Index3{128, 128, 128});
  // Stride 112 places per-axis starts at {0, 72} after boundary clamping.
  for (const TileBox& t : plan.tiles)
    for (int ax = 0; ax < 3; ++ax) CHECK((t.start[ax] == 0 || t.start[ax] == 72));
}

TEST_CASE("plan_tiles: a volume within budget is one tile") {
  TilePlan plan = plan_tiles({10, 12, 14}, 10 * 12 * 14, 2);
  REQUIRE(plan.tiles.size() == 1);
  CHECK(plan.tiles[0].start == Index3{0, 0, 0});
  CHECK(plan.tiles[0].size == Index3{10, 12, 14});
}

TEST_CASE("plan_tiles: rejects budgets that cannot fit the overlap") {
  CHECK_THROWS(plan_tiles({100, 100, 100}, 33 * 33 * 33 - 1, 16));
  CHECK_NOTHROW(plan_tiles({100, 100, 100}, 33 * 33 * 33, 16));
  CHECK_THROWS(plan_tiles({100, 100, 100}, 1000, 16));
  CHECK_THROWS(plan_tiles({0, 10, 10}, 4096, 4));
  CHECK_THROWS(plan_tiles({10, 10, 10}, 4096, -1));
}

TEST_CASE("plan_tiles: random plans cover every voxel within bounds and budget") {
  Rng rng(1234);
  for (int rep = 0; rep < 25; ++rep) {
    Index3 shape{20 + uniform_int(rng, 60), 20 + uniform_int(rng, 60), 20 + uniform_int(rng, 60)};
    Index overlap = 2 + uniform_int(rng, 10);
    Index side = 2 * overlap + 1 + uniform_int(rng, 20);
    Index budget = side * side * side;
    TilePlan plan = plan_tiles(shape, budget, overlap);

    std::vector<char> covered(static_cast<std::size_t>(numel(shape)), 0);
    for (const TileBox& t : plan.tiles) {
      CHECK(numel(t.size) <= budget);
      for (int ax = 0; ax < 3; ++ax) {
        CHECK(t.start[ax] >= 0);
        CHECK(t.start[ax] + t.size[ax] <= shape[ax]);
      }
      for (Index k = 0; k < t.size[2]; ++k)
        for (Index j = 0; j < t.size[1]; ++j)
          for (Index i = 0; i < t.size[0]; ++i)
            covered[static_cast<std::size_t>((t.start[0] + i) +
                                             shape[0] * ((t.start[1] + j) +
                                                         shape[1] * (t.start[2] + k)))] = 1;
    }
    bool all = true;
    for (char c : covered) all = all && c;
    CHECK(all);
  }
}

TEST_CASE("run_tiled: identity backend reconstructs the input") {
  auto v = testsupport::noise_phantom<float>({40, 36, 30}, 77);
  TilePlan plan = plan_tiles(v.shape(), 24 * 24 * 24, 8);
  REQUIRE(plan.tiles.size() > 1);
  auto id = baseline_identity();

  VolumeF uniform = run_tiled(*id, v, plan, BlendMode::UniformAverage);
  CHECK((uniform.data() == v.data()).all());  // averaging equal floats is exact

  VolumeF cosine = run_tiled(*id, v, plan, BlendMode::CosineWindow);
  for (Index i = 0; i < v.size(); ++i)
    CHECK(cosine.data()[i] == doctest::Approx(v.data()[i]).epsilon(1e-6));
}

TEST_CASE("run_tiled: guards shape agreement") {
  auto v = testsupport::noise_phantom<float>({12, 12, 12}, 78);
  TilePlan plan = plan_tiles({14, 12, 12}, 4096, 2);
  auto id = baseline_identity();
  CHECK_THROWS(run_tiled(*id, v, plan));

  TilePlan ok = plan_tiles(v.shape(), 4096, 2);
  WrongShape bad;
  CHECK_THROWS(run_tiled(bad, v, ok));
}

TEST_CASE("baselines: both arms pass the volume through unchanged") {
  auto v = testsupport::noise_phantom<float>({9, 8, 7}, 79);
  auto id = baseline_identity();
  auto ref = baseline_reference();
  CHECK(id->name() == "identity");
  CHECK(ref->name() == "reference");
  CHECK(id->thread_safe());
  CHECK((id->enhance(v).data() == v.data()).all());
  CHECK((ref->enhance(v).data() == v.data()).all());
}

TEST_CASE("subprocess enhancer: round trips through a copy command") {
  auto v = testsupport::noise_phantom<float>({10, 9, 8}, 80);
  auto e = subprocess_enhancer("copy", "cp", "V3-A2");
  CHECK(e->name() == "copy");
  CHECK_FALSE(e->thread_safe());
  VolumeF out = e->enhance(v);
  CHECK((out.data() == v.data()).all());
  CHECK(out.shape() == v.shape());
}

TEST_CASE("subprocess enhancer: the expert id reaches the child environment") {
  testsupport::Scratch scratch;
  std::string side = scratch.path("expert.txt");
  std::string script = scratch.path("probe.sh");
  testsupport::write_file(script, "#!/bin/sh\nprintf '%s' \"$CAHAL_EXPERT_ID\" > '" + side +
                                      "'\ncp \"$1\" \"$2\"\n");
  make_executable(script);

  auto v = testsupport::noise_phantom<float>({6, 6, 6}, 81);
  auto e = subprocess_enhancer("probe", script, "V5-A1");
  e->enhance(v);
  CHECK(testsupport::read_file(side) == "V5-A1");
  // The variable does not leak into the parent after the call.
  CHECK(std::getenv("CAHAL_EXPERT_ID") == nullptr);
}

TEST_CASE("subprocess enhancer: failure modes surface as errors") {
  auto v = testsupport::noise_phantom<float>({5, 5, 5}, 82);
  CHECK_THROWS(subprocess_enhancer("fails", "false", "V1-A3")->enhance(v));
  CHECK_THROWS(subprocess_enhancer("silent", "true", "V1-A3")->enhance(v));

  // A command that swaps in a different-shape volume trips the shape guard.
  testsupport::Scratch scratch;
  auto other = testsupport::noise_phantom<float>({3, 3, 3}, 83);
  std::string swap = scratch.path("swap.nii");
  save_nifti(other, swap);
  std::string script = scratch.path("swap.sh");
  testsupport::write_file(script, "#!/bin/sh\ncp '" + swap + "' \"$2\"\n");
  make_executable(script);
  CHECK_THROWS(subprocess_enhancer("swap", script, "V1-A3")->enhance(v));
}
