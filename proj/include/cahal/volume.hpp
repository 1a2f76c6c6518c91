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

#ifndef CAHAL_VOLUME_HPP
#define CAHAL_VOLUME_HPP

#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include "cahal/core.hpp"

namespace cahal {

/// Dense 3D scalar field with voxel geometry.
///
/// Data is stored x-fastest (canonical NIfTI order): linear index
/// i + nx*(j + ny*k). The direction matrix holds unit column vectors giving
/// the world direction of each image axis; world position of voxel (i,j,k)
/// is origin + direction * diag(spacing) * (i,j,k).
///
/// Volumes are immutable after construction; operations return new volumes.
template <typename Scalar>
class Volume {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Volume() : shape_{0, 0, 0}, spacing_(1, 1, 1), direction_(Mat3d::Identity()), origin_(0, 0, 0) {}

  Volume(Index3 shape, Array data, Vec3d spacing = Vec3d(1, 1, 1),
         Mat3d direction = Mat3d::Identity(), Vec3d origin = Vec3d::Zero())
      : shape_(shape),
        data_(std::move(data)),
        spacing_(std::move(spacing)),
        direction_(std::move(direction)),
        origin_(std::move(origin)) {
    validate();
  }

  static Volume filled(Index3 shape, Scalar value, Vec3d spacing = Vec3d(1, 1, 1),
                       Mat3d direction = Mat3d::Identity(), Vec3d origin = Vec3d::Zero()) {
    return Volume(shape, Array::Constant(numel(shape), value), std::move(spacing),
                  std::move(direction), std::move(origin));
  }

  /// New volume sharing this volume's geometry, with different voxel values.
  Volume with_data(Array data) const {
    return Volume(shape_, std::move(data), spacing_, direction_, origin_);
  }

  const Index3& shape() const { return shape_; }
  const Array& data() const { return data_; }
  const Vec3d& spacing() const { return spacing_; }
  const Mat3d& direction() const { return direction_; }
  const Vec3d& origin() const { return origin_; }

  Index size() const { return data_.size(); }

  Index linear(Index i, Index j, Index k) const {
    return i + shape_[0] * (j + shape_[1] * k);
  }

  Scalar operator()(Index i, Index j, Index k) const { return data_[linear(i, j, k)]; }

  /// World coordinates of a voxel centre.
  Vec3d world(Index i, Index j, Index k) const {
    return origin_ + direction_ * (spacing_.cwiseProduct(Vec3d(static_cast<double>(i),
                                                               static_cast<double>(j),
                                                               static_cast<double>(k))));
  }

 private:
  void validate() const {
    if (shape_[0] < 1 || shape_[1] < 1 || shape_[2] < 1)
      throw std::runtime_error("Volume: shape components must be positive");
    if (data_.size() != numel(shape_)) {
      std::ostringstream msg;
      msg << "Volume: data size " << data_.size() << " does not match shape " << shape_[0] << "x"
          << shape_[1] << "x" << shape_[2];
      throw std::runtime_error(msg.str());
    }
    if (!(spacing_.array() > 0.0).all())
      throw std::runtime_error("Volume: spacing components must be positive");
    if constexpr (std::is_floating_point_v<Scalar>) {
      if (!data_.allFinite()) throw std::runtime_error("Volume: non-finite voxel values");
    }
    Mat3d gram = direction_.transpose() * direction_;
    if ((gram - Mat3d::Identity()).cwiseAbs().maxCoeff() > 1e-4)
      throw std::runtime_error("Volume: direction matrix is not orthonormal within 1e-4");
  }

  Index3 shape_;
  Array data_;
  Vec3d spacing_;
  Mat3d direction_;
  Vec3d origin_;
};

using VolumeF = Volume<float>;
using VolumeD = Volume<double>;
using LabelVolume = Volume<std::int32_t>;

/// Acquisition summary used for routing: voxel volume V = rx*ry*rz in mm^3
/// and anisotropy ratio A = min(r)/max(r), A in (0, 1].
struct AcquisitionDescriptor {
  double voxel_volume_mm3 = 0.0;
  double anisotropy = 0.0;
};

inline AcquisitionDescriptor descriptors(const Vec3d& spacing) {
  if (!(spacing.array() > 0.0).all())
    throw std::runtime_error("descriptors: spacing components must be positive");
  AcquisitionDescriptor d;
  d.voxel_volume_mm3 = spacing[0] * spacing[1] * spacing[2];
  d.anisotropy = spacing.minCoeff() / spacing.maxCoeff();
  return d;
}

template <typename Scalar>
AcquisitionDescriptor descriptors(const Volume<Scalar>& v) {
  return descriptors(v.spacing());
}

}  // namespace cahal

#endif
