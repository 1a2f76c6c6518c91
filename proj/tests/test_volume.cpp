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

#include <cmath>
#include <map>
#include <set>

#include "cahal/reorient.hpp"
#include "cahal/volume.hpp"
#include "test_support.hpp"

using namespace cahal;
using testsupport::make_volume;

TEST_CASE("volume: x-fastest linear indexing") {
  auto v = make_volume({3, 4, 5}, [](Index i, Index j, Index k) {
    return static_cast<double>(i + 10 * j + 100 * k);
  });
  CHECK(v.size() == 60);
  CHECK(v.linear(0, 0, 0) == 0);
  CHECK(v.linear(1, 0, 0) == 1);
  CHECK(v.linear(0, 1, 0) == 3);
  CHECK(v.linear(0, 0, 1) == 12);
  CHECK(v(2, 3, 4) == doctest::Approx(2 + 30 + 400));
  for (Index k = 0; k < 5; ++k)
    for (Index j = 0; j < 4; ++j)
      for (Index i = 0; i < 3; ++i)
        CHECK(v.data()[v.linear(i, j, k)] == static_cast<float>(i + 10 * j + 100 * k));
}

TEST_CASE("volume: world coordinates follow origin + direction * diag(spacing)") {
  Mat3d dir;
  dir << 0, -1, 0, 1, 0, 0, 0, 0, 1;  // 90 degree rotation, still orthonormal
  auto v = VolumeF(Index3{2, 2, 2}, VolumeF::Array::Zero(8), Vec3d(2, 3, 4), dir,
                   Vec3d(10, 20, 30));
  Vec3d w = v.world(1, 1, 1);
  // direction * diag(spacing) * (1,1,1) = (-3, 2, 4)
  CHECK(w[0] == doctest::Approx(10 - 3).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(20 + 2).epsilon(1e-12));
  CHECK(w[2] == doctest::Approx(30 + 4).epsilon(1e-12));
}

TEST_CASE("volume: validation rejects malformed inputs") {
  CHECK_THROWS(VolumeF(Index3{0, 2, 2}, VolumeF::Array::Zero(0)));
  CHECK_THROWS(VolumeF(Index3{2, 2, 2}, VolumeF::Array::Zero(7)));
  CHECK_THROWS(VolumeF(Index3{2, 2, 2}, VolumeF::Array::Zero(8), Vec3d(1, 0, 1)));
  CHECK_THROWS(VolumeF(Index3{2, 2, 2}, VolumeF::Array::Zero(8), Vec3d(1, -1, 1)));

  VolumeF::Array bad = VolumeF::Array::Zero(8);
  bad[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS(VolumeF(Index3{2, 2, 2}, bad));

  Mat3d skew = Mat3d::Identity();
  skew(0, 1) = 0.2;  // not orthonormal
  CHECK_THROWS(VolumeF(Index3{2, 2, 2}, VolumeF::Array::Zero(8), Vec3d(1, 1, 1), skew));
}

TEST_CASE("volume: with_data keeps geometry") {
  Mat3d dir;
  dir << 1, 0, 0, 0, 0, 1, 0, -1, 0;
  auto v = VolumeF(Index3{2, 1, 3}, VolumeF::Array::Constant(6, 2.f), Vec3d(1, 2, 3), dir,
                   Vec3d(-5, 0, 5));
  auto w = v.with_data(VolumeF::Array::Constant(6, 9.f));
  CHECK(w.shape() == v.shape());
  CHECK((w.spacing() - v.spacing()).norm() == 0.0);
  CHECK((w.direction() - v.direction()).norm() == 0.0);
  CHECK((w.origin() - v.origin()).norm() == 0.0);
  CHECK(w(0, 0, 0) == 9.f);
}

TEST_CASE("descriptors: voxel volume is the product, anisotropy min over max") {
  auto d = descriptors(Vec3d(1, 1, 4));
  CHECK(d.voxel_volume_mm3 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(d.anisotropy == doctest::Approx(0.25).epsilon(1e-12));

  d = descriptors(Vec3d(2, 2, 2));
  CHECK(d.voxel_volume_mm3 == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(d.anisotropy == doctest::Approx(1.0).epsilon(1e-12));

  d = descriptors(Vec3d(0.5, 1.0, 0.8));
  CHECK(d.voxel_volume_mm3 == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(d.anisotropy == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS(descriptors(Vec3d(1, 0, 1)));
}

// ---------------------------------------------------------------------------
// Canonical reorientation
// ---------------------------------------------------------------------------

namespace {

// All 48 signed axis permutations as direction matrices.
std::vector<Mat3d> signed_permutations() {
  std::vector<Mat3d> out;
  int perm[3] = {0, 1, 2};
  std::sort(perm, perm + 3);
  do {
    for (int sx = -1; sx <= 1; sx += 2)
      for (int sy = -1; sy <= 1; sy += 2)
        for (int sz = -1; sz <= 1; sz += 2) {
          Mat3d m = Mat3d::Zero();
          int sign[3] = {sx, sy, sz};
          for (int a = 0; a < 3; ++a) m(perm[a], a) = sign[a];
          out.push_back(m);
        }
  } while (std::next_permutation(perm, perm + 3));
  return out;
}

}  // namespace

TEST_CASE("reorient: identity input is returned unchanged") {
  auto v = testsupport::noise_phantom<float>({4, 5, 6}, 7);
  auto [canon, rec] = reorient_canonical(v);
  CHECK(rec.is_identity());
  CHECK((canon.data() == v.data()).all());
  CHECK(canon.shape() == v.shape());
}

TEST_CASE("reorient: all 48 signed permutations round-trip bit-exactly") {
  auto base = testsupport::noise_phantom<float>({5, 6, 7}, 3);
  std::multiset<float> base_values(base.data().data(), base.data().data() + base.size());

  for (const Mat3d& dir : signed_permutations()) {
    VolumeF oriented(base.shape(), base.data(), Vec3d(1.0, 1.2, 1.4), dir, Vec3d(3, -2, 8));
    auto [canon, rec] = reorient_canonical(oriented);

    // Canonical form: every world axis is served by exactly one image axis
    // with positive direction cosine.
    for (int w = 0; w < 3; ++w) {
      double colmax = canon.direction().row(w).cwiseAbs().maxCoeff();
      CHECK(colmax == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (int a = 0; a < 3; ++a) {
      Index arg;
      canon.direction().col(a).cwiseAbs().maxCoeff(&arg);
      CHECK(canon.direction()(arg, a) > 0.0);
    }

    // Data is a permutation of the input values.
    std::multiset<float> values(canon.data().data(), canon.data().data() + canon.size());
    CHECK(values == base_values);

    // World position of a probe voxel is preserved by the transform.
    Index3 s = oriented.shape();
    Vec3d before = oriented.world(1, 2, 3);
    bool found = false;
    for (Index k = 0; k < canon.shape()[2] && !found; ++k)
      for (Index j = 0; j < canon.shape()[1] && !found; ++j)
        for (Index i = 0; i < canon.shape()[0] && !found; ++i) {
          if ((canon.world(i, j, k) - before).cwiseAbs().maxCoeff() < 1e-9) {
            CHECK(canon(i, j, k) == oriented(1, 2, 3));
            found = true;
          }
        }
    CHECK(found);

    // Applying the inverse record restores the original exactly.
    VolumeF back = apply_reorientation(canon, invert(rec));
    CHECK(back.shape() == s);
    CHECK((back.data() == oriented.data()).all());
    CHECK((back.direction() - oriented.direction()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.spacing() - oriented.spacing()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.origin() - oriented.origin()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("reorient: oblique and ambiguous directions are rejected") {
  auto v = testsupport::noise_phantom<float>({3, 3, 3}, 11);

  // 25 degrees about z exceeds the 20 degree gate.
  double th = 25.0 * 3.14159265358979 / 180.0;
  Mat3d rot;
  rot << std::cos(th), -std::sin(th), 0, std::sin(th), std::cos(th), 0, 0, 0, 1;
  CHECK_THROWS(reorient_canonical(VolumeF(v.shape(), v.data(), Vec3d(1, 1, 1), rot)));

  // 45 degrees: two world axes tie for the same image axis.
  double q = std::sqrt(0.5);
  Mat3d tie;
  tie << q, -q, 0, q, q, 0, 0, 0, 1;
  CHECK_THROWS(reorient_canonical(VolumeF(v.shape(), v.data(), Vec3d(1, 1, 1), tie)));
}

TEST_CASE("reorient: small tilt under the gate is preserved, not snapped") {
  auto v = testsupport::noise_phantom<float>({3, 4, 5}, 13);
  double th = 10.0 * 3.14159265358979 / 180.0;
  Mat3d rot;
  rot << std::cos(th), -std::sin(th), 0, std::sin(th), std::cos(th), 0, 0, 0, 1;
  // Flip x to force a non-identity canonical map.
  Mat3d dir = rot;
  dir.col(0) *= -1.0;
  VolumeF oriented(v.shape(), v.data(), Vec3d(1, 1, 1), dir, Vec3d(0, 0, 0));
  auto [canon, rec] = reorient_canonical(oriented);
  CHECK(!rec.is_identity());
  // The canonical direction is the permuted/flipped original, so its tilt
  // survives; snapping to identity would destroy the inverse.
  CHECK((canon.direction() - Mat3d::Identity()).cwiseAbs().maxCoeff() ==
        doctest::Approx(std::sin(th)).epsilon(1e-9));
  VolumeF back = apply_reorientation(canon, invert(rec));
  CHECK((back.data() == oriented.data()).all());
  CHECK((back.direction() - oriented.direction()).cwiseAbs().maxCoeff() == 0.0);
}
