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

#ifndef CAHAL_REORIENT_HPP
#define CAHAL_REORIENT_HPP

#include <cmath>
#include <stdexcept>

#include "cahal/volume.hpp"

namespace cahal {

/// Record of an axis permutation + flips. axis_from[w] is the input axis
/// that output axis w takes its samples from; flip[w] reverses that axis.
/// The record suffices to invert the operation.
struct Reorientation {
  std::array<int, 3> axis_from{0, 1, 2};
  std::array<bool, 3> flip{false, false, false};

  bool is_identity() const {
    return axis_from == std::array<int, 3>{0, 1, 2} &&
           flip == std::array<bool, 3>{false, false, false};
  }
};

inline Reorientation invert(const Reorientation& r) {
  Reorientation inv;
  for (int w = 0; w < 3; ++w) {
    inv.axis_from[r.axis_from[w]] = w;
    inv.flip[r.axis_from[w]] = r.flip[w];
  }
  return inv;
}

namespace detail {

// Largest |cosine| assigns each world axis its image axis. Ambiguous
// assignments (top two candidates within 1e-6) and obliquity beyond 20
// degrees are rejected rather than silently resampled.
inline Reorientation canonical_map(const Mat3d& direction) {
  Reorientation r;
  const double cos20 = std::cos(20.0 * M_PI / 180.0);
  std::array<bool, 3> taken{false, false, false};
  for (int w = 0; w < 3; ++w) {
    double best = -1.0, second = -1.0;
    int arg = -1;
    for (int a = 0; a < 3; ++a) {
      double c = std::abs(direction(w, a));
      if (c > best) {
        second = best;
        best = c;
        arg = a;
      } else if (c > second) {
        second = c;
      }
    }
    if (best - second < 1e-6)
      throw std::runtime_error("reorient_canonical: direction matrix ambiguous (two image axes "
                               "equally close to one world axis)");
    if (best < cos20)
      throw std::runtime_error("reorient_canonical: direction oblique beyond 20 degrees of an "
                               "axis-aligned frame");
    if (taken[arg])
      throw std::runtime_error("reorient_canonical: direction matrix ambiguous (one image axis "
                               "claimed by two world axes)");
    taken[arg] = true;
    r.axis_from[w] = arg;
    r.flip[w] = direction(w, arg) < 0.0;
  }
  return r;
}

}  // namespace detail

/// Apply a permutation + flip record. Pure index shuffle: voxel values are
/// moved, never interpolated, so the data round-trips bit-exactly.
template <typename Scalar>
Volume<Scalar> apply_reorientation(const Volume<Scalar>& v, const Reorientation& r) {
  const Index3& in_shape = v.shape();
  Index3 out_shape;
  Vec3d spacing;
  Mat3d direction;
  for (int w = 0; w < 3; ++w) {
    int a = r.axis_from[w];
    out_shape[w] = in_shape[a];
    spacing[w] = v.spacing()[a];
    direction.col(w) = r.flip[w] ? Vec3d(-v.direction().col(a)) : Vec3d(v.direction().col(a));
  }
  // A flipped axis walks the same world segment from the other end; shift
  // the origin so voxel world positions are preserved.
  Vec3d origin = v.origin();
  for (int w = 0; w < 3; ++w) {
    int a = r.axis_from[w];
    if (r.flip[w])
      origin += v.direction().col(a) * (v.spacing()[a] * static_cast<double>(in_shape[a] - 1));
  }

  typename Volume<Scalar>::Array data(v.size());
  Index3 idx_in;
  for (Index k = 0; k < out_shape[2]; ++k) {
    for (Index j = 0; j < out_shape[1]; ++j) {
      for (Index i = 0; i < out_shape[0]; ++i) {
        Index3 out_idx{i, j, k};
        for (int w = 0; w < 3; ++w) {
          int a = r.axis_from[w];
          idx_in[a] = r.flip[w] ? in_shape[a] - 1 - out_idx[w] : out_idx[w];
        }
        data[i + out_shape[0] * (j + out_shape[1] * k)] =
            v(idx_in[0], idx_in[1], idx_in[2]);
      }
    }
  }
  return Volume<Scalar>(out_shape, std::move(data), spacing, direction, origin);
}

/// Reorient to the nearest axis-aligned RAS frame and return the record
/// needed to undo it. Canonical input comes back unchanged with an identity
/// record.
template <typename Scalar>
std::pair<Volume<Scalar>, Reorientation> reorient_canonical(const Volume<Scalar>& v) {
  Reorientation r = detail::canonical_map(v.direction());
  if (r.is_identity()) return {v, r};
  return {apply_reorientation(v, r), r};
}

}  // namespace cahal

#endif
