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

#ifndef CAHAL_NIFTI_HPP
#define CAHAL_NIFTI_HPP

#include <string>

#include "cahal/volume.hpp"

namespace cahal {

/// Voxel grid geometry without the data payload.
struct VolumeGeometry {
  Index3 shape{0, 0, 0};
  Vec3d spacing{1, 1, 1};
  Mat3d direction = Mat3d::Identity();
  Vec3d origin{0, 0, 0};
};

/// Read a NIfTI-1 volume (.nii or .nii.gz). Values are converted to float
/// with scl_slope/scl_inter applied; geometry comes from the sform when
/// present, else the qform, else pixdim with an identity direction.
VolumeF load_nifti(const std::string& path);

/// Read only the header geometry. Voxel data is never touched.
VolumeGeometry load_nifti_geometry(const std::string& path);

/// Read an integer label volume. Errors if any value is not an integer.
LabelVolume load_nifti_labels(const std::string& path);

/// Write a float32 NIfTI-1 volume; gzip-compressed when path ends in .gz.
/// Identical volumes always produce identical bytes.
void save_nifti(const VolumeF& v, const std::string& path);

/// Write an int32 label volume.
void save_nifti(const LabelVolume& v, const std::string& path);

}  // namespace cahal

#endif
