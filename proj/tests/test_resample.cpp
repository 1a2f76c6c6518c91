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

#include "cahal/resample.hpp"
#include "test_support.hpp"

using namespace cahal;
using testsupport::make_volume;

TEST_CASE("resampled_length: rounded extent ratio with a floor of one") {
  CHECK(resampled_length(10, 1.0, 3.0) == 3);
  CHECK(resampled_length(5, 1.0, 10.0) == 1);
  CHECK(resampled_length(7, 2.0, 1.0) == 14);
  CHECK(resampled_length(5, 1.0, 2.0) == 3);  // llround(2.5) rounds away from zero
  CHECK(resampled_length(64, 1.0, 1.0) == 64);
  CHECK(resampled_length(1, 1.0, 100.0) == 1);
}

TEST_CASE("trilinear: exact on affine fields away from the clamped border") {
  // f(world) = 2x - 3y + z + 5 sampled at voxel centers.
  Vec3d r(1.0, 1.5, 2.0);
  auto f = [](const Vec3d& w) { return 2.0 * w[0] - 3.0 * w[1] + w[2] + 5.0; };
  auto v = make_volume<double>(
      {12, 10, 8},
      [&](Index i, Index j, Index k) {
        return f(Vec3d((i + 0.5) * 1.0, (j + 0.5) * 1.5, (k + 0.5) * 2.0));
      },
      r);

  Vec3d t(1.7, 2.1, 2.9);
  auto out = resample(v, t, ResampleMethod::Trilinear);
  for (Index k = 1; k + 1 < out.shape()[2]; ++k)
    for (Index j = 1; j + 1 < out.shape()[1]; ++j)
      for (Index i = 1; i + 1 < out.shape()[0]; ++i) {
        Vec3d w((i + 0.5) * t[0], (j + 0.5) * t[1], (k + 0.5) * t[2]);
        CHECK(out(i, j, k) == doctest::Approx(f(w)).epsilon(1e-9));
      }
}

TEST_CASE("trilinear: voxel-center convention places the first center at t/2") {
  // Upsampling a 2-voxel line by 2: centers at 0.25, 0.75, 1.25, 1.75 of the
  // source frame whose centers sit at 0.5 and 1.5.
  auto v = make_volume<double>({2, 1, 1},
                               [](Index i, Index, Index) { return i == 0 ? 0.0 : 4.0; });
  auto out = resample(v, Vec3d(0.5, 1, 1), ResampleMethod::Trilinear);
  REQUIRE(out.shape() == Index3{4, 1, 1});
  CHECK(out(0, 0, 0) == doctest::Approx(0.0));  // clamped left
  CHECK(out(1, 0, 0) == doctest::Approx(1.0));  // 0.75 -> 0.25 of the gap
  CHECK(out(2, 0, 0) == doctest::Approx(3.0));
  CHECK(out(3, 0, 0) == doctest::Approx(4.0));  // clamped right
}

TEST_CASE("cubic b-spline: interpolates the original samples at interior nodes") {
  // At a matching grid the basis stencil at node i touches coefficients
  // i-1..i+1, so every node at least one voxel from a face reproduces the
  // sample exactly; the replicate-clamped faces are only approximate.
  auto v = testsupport::noise_phantom<double>({9, 7, 6}, 17);
  auto out = resample(v, Vec3d(1, 1, 1), ResampleMethod::CubicBSpline);
  REQUIRE(out.shape() == v.shape());
  for (Index k = 1; k + 1 < v.shape()[2]; ++k)
    for (Index j = 1; j + 1 < v.shape()[1]; ++j)
      for (Index i = 1; i + 1 < v.shape()[0]; ++i)
        CHECK(out(i, j, k) == doctest::Approx(v(i, j, k)).epsilon(1e-8));
}

TEST_CASE("cubic b-spline: reproduces affine fields away from the faces") {
  // The prefilter's end conditions perturb coefficients with a transient that
  // decays by |sqrt(3)-2| per voxel; ten voxels in the perturbation is below
  // 1e-6, so the deep interior must match the affine field to 1e-5.
  const Index n = 28;
  Vec3d r(1, 1, 1);
  auto f = [](const Vec3d& w) { return 0.5 * w[0] + 2.0 * w[1] - w[2] + 3.0; };
  auto v = make_volume<double>(
      {n, n, n},
      [&](Index i, Index j, Index k) {
        return f(Vec3d(i + 0.5, j + 0.5, k + 0.5));
      },
      r);
  Vec3d t(0.7, 0.9, 1.3);
  auto out = resample(v, t, ResampleMethod::CubicBSpline);
  int checked = 0;
  for (Index k = 0; k < out.shape()[2]; ++k)
    for (Index j = 0; j < out.shape()[1]; ++j)
      for (Index i = 0; i < out.shape()[0]; ++i) {
        Vec3d u((i + 0.5) * t[0] - 0.5, (j + 0.5) * t[1] - 0.5,
                (k + 0.5) * t[2] - 0.5);
        double depth = u.cwiseMin(Vec3d::Constant(n - 1.0) - u).minCoeff();
        if (depth < 10.0) continue;
        Vec3d w((i + 0.5) * t[0], (j + 0.5) * t[1], (k + 0.5) * t[2]);
        CHECK(std::abs(out(i, j, k) - f(w)) < 1e-5);
        ++checked;
      }
  CHECK(checked > 300);
}

TEST_CASE("area: matches the supersampled box-integration oracle per line") {
  cahal::Rng rng(99);
  for (int rep = 0; rep < 50; ++rep) {
    Index n = 5 + static_cast<Index>(uniform_int(rng, 36));
    double r = 0.5 + uniform01(rng) * 2.0;
    double t = r * (1.1 + uniform01(rng) * 2.9);
    std::vector<double> line(static_cast<std::size_t>(n));
    for (double& x : line) x = uniform01(rng);

    auto v = make_volume<double>(
        {n, 1, 1}, [&](Index i, Index, Index) { return line[static_cast<std::size_t>(i)]; },
        Vec3d(r, 1, 1));
    auto out = area_downsample(v, Vec3d(t, 1, 1));
    std::vector<double> expect = testsupport::area_line_oracle(line, r, t, out.shape()[0]);
    for (Index i = 0; i < out.shape()[0]; ++i)
      CHECK(out(i, 0, 0) == doctest::Approx(expect[static_cast<std::size_t>(i)]).epsilon(1e-10));
  }
}

TEST_CASE("area: 3D output matches direct box integration on a small phantom") {
  auto v = testsupport::noise_phantom<double>({7, 6, 5}, 23);
  Vec3d t(1.6, 2.3, 1.9);
  auto out = area_downsample(v, t);

  // Direct (non-separable) integration over each target box.
  auto overlap = [](double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
  };
  for (Index k = 0; k < out.shape()[2]; ++k)
    for (Index j = 0; j < out.shape()[1]; ++j)
      for (Index i = 0; i < out.shape()[0]; ++i) {
        double acc = 0.0, wsum = 0.0;
        for (Index c = 0; c < v.shape()[2]; ++c)
          for (Index b = 0; b < v.shape()[1]; ++b)
            for (Index a = 0; a < v.shape()[0]; ++a) {
              double w = overlap(i * t[0], (i + 1) * t[0], a * 1.0, a + 1.0) *
                         overlap(j * t[1], (j + 1) * t[1], b * 1.0, b + 1.0) *
                         overlap(k * t[2], (k + 1) * t[2], c * 1.0, c + 1.0);
              acc += w * v(a, b, c);
              wsum += w;
            }
        CHECK(out(i, j, k) == doctest::Approx(acc / wsum).epsilon(1e-10));
      }
}

TEST_CASE("area: mass is conserved when the target extent tiles the source") {
  auto v = testsupport::noise_phantom<double>({12, 8, 6}, 31);
  Vec3d t(2, 2, 3);  // divides 12x8x6 exactly
  auto out = area_downsample(v, t);
  REQUIRE(out.shape() == Index3{6, 4, 2});
  double mass_in = 0.0, mass_out = 0.0;
  for (Index i = 0; i < v.size(); ++i) mass_in += v.data()[i];
  for (Index i = 0; i < out.size(); ++i) mass_out += out.data()[i];
  CHECK(mass_out * (t[0] * t[1] * t[2]) == doctest::Approx(mass_in).epsilon(1e-12));
}

TEST_CASE("area: identity target is bit exact") {
  auto v = testsupport::noise_phantom<float>({6, 5, 4}, 37, Vec3d(1.2, 0.9, 2.0));
  auto out = area_downsample(v, v.spacing());
  CHECK(out.shape() == v.shape());
  CHECK((out.data() == v.data()).all());
}

TEST_CASE("area: upsampling is rejected") {
  auto v = testsupport::noise_phantom<float>({4, 4, 4}, 41);
  CHECK_THROWS(area_downsample(v, Vec3d(0.5, 1, 1)));
}

TEST_CASE("resample: origin shifts by half the spacing difference") {
  Mat3d dir = Mat3d::Identity();
  auto v = testsupport::noise_phantom<double>({8, 8, 8}, 43);
  VolumeD placed(v.shape(), v.data(), Vec3d(1, 1, 1), dir, Vec3d(10, 20, 30));
  auto out = resample(placed, Vec3d(2, 2, 2), ResampleMethod::Trilinear);
  CHECK(out.origin()[0] == doctest::Approx(10.5).epsilon(1e-12));
  CHECK(out.origin()[1] == doctest::Approx(20.5).epsilon(1e-12));
  CHECK(out.origin()[2] == doctest::Approx(30.5).epsilon(1e-12));
  CHECK(out.spacing()[0] == doctest::Approx(2.0));
}

TEST_CASE("resample: direction frame handles the shift, not world axes") {
  Mat3d dir;
  dir << -1, 0, 0, 0, 1, 0, 0, 0, -1;
  auto v = testsupport::noise_phantom<double>({6, 6, 6}, 47);
  VolumeD placed(v.shape(), v.data(), Vec3d(1, 1, 1), dir, Vec3d(0, 0, 0));
  auto out = resample(placed, Vec3d(3, 3, 3), ResampleMethod::Trilinear);
  // shift = direction * (1,1,1) in image frame = (-1, 1, -1) world
  CHECK(out.origin()[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(out.origin()[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.origin()[2] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("resize_to_budget: shrinks over-budget volumes uniformly") {
  auto v = testsupport::noise_phantom<float>({40, 30, 20}, 53);
  auto out = resize_to_budget(v, 3000);
  CHECK(out.size() <= 3000);
  // Aspect ratio preserved within rounding.
  double rx = static_cast<double>(out.shape()[0]) / 40.0;
  double ry = static_cast<double>(out.shape()[1]) / 30.0;
  double rz = static_cast<double>(out.shape()[2]) / 20.0;
  CHECK(std::abs(rx - ry) < 0.15);
  CHECK(std::abs(ry - rz) < 0.15);

  auto same = resize_to_budget(v, v.size());
  CHECK(same.shape() == v.shape());
  CHECK((same.data() == v.data()).all());

  CHECK_THROWS(resize_to_budget(v, 0));
}
