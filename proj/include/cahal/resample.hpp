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

#ifndef CAHAL_RESAMPLE_HPP
#define CAHAL_RESAMPLE_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cahal/volume.hpp"

namespace cahal {

enum class ResampleMethod { Trilinear, CubicBSpline, Area };

/// Grid convention used by every resampling op in this module.
///
/// Voxel i covers the interval [i*r, (i+1)*r) along its axis, with its
/// centre at (i + 0.5)*r (pixel-area convention). Resampling to spacing t
/// places output centres at (i' + 0.5)*t over the same physical extent, so
/// the first output centre sits half a target spacing from the volume
/// corner. Output length is round(n*r/t), half away from zero, floored at 1.
/// Sampling outside the extent clamps to the edge voxel (replicate).
inline Index resampled_length(Index n, double r, double t) {
  Index out = static_cast<Index>(std::llround(static_cast<double>(n) * r / t));
  return out < 1 ? 1 : out;
}

namespace detail {

// 1D kernels operate on double lines regardless of the volume scalar type;
// each separable pass runs one of these along each grid line.

inline void linear_line(const double* src, Index n_in, double* dst, Index n_out, double r,
                        double t) {
  for (Index i = 0; i < n_out; ++i) {
    double u = (static_cast<double>(i) + 0.5) * t / r - 0.5;
    double fl = std::floor(u);
    Index i0 = static_cast<Index>(fl);
    double w = u - fl;
    Index c0 = i0 < 0 ? 0 : (i0 >= n_in ? n_in - 1 : i0);
    Index i1 = i0 + 1;
    Index c1 = i1 < 0 ? 0 : (i1 >= n_in ? n_in - 1 : i1);
    dst[i] = (1.0 - w) * src[c0] + w * src[c1];
  }
}

// Cubic B-spline prefilter (causal/anticausal recursive filter with pole
// z = sqrt(3) - 2, gain 6, exact mirror initialisation). After this pass the
// line holds interpolation coefficients: evaluating the cubic B-spline basis
// over them reproduces the original samples at the nodes, so smooth fields
// are interpolated rather than blurred.
inline void bspline_prefilter(double* c, Index n) {
  if (n < 2) return;
  const double z = std::sqrt(3.0) - 2.0;
  const double gain = 6.0;
  for (Index i = 0; i < n; ++i) c[i] *= gain;

  double zn = z;
  double iz = 1.0 / z;
  double z2n = std::pow(z, static_cast<double>(n - 1));
  double sum = c[0] + z2n * c[n - 1];
  z2n *= z2n * iz;
  for (Index k = 1; k <= n - 2; ++k) {
    sum += (zn + z2n) * c[k];
    zn *= z;
    z2n *= iz;
  }
  c[0] = sum / (1.0 - zn * zn);

  for (Index k = 1; k < n; ++k) c[k] += z * c[k - 1];
  c[n - 1] = (z / (z * z - 1.0)) * (z * c[n - 2] + c[n - 1]);
  for (Index k = n - 2; k >= 0; --k) c[k] = z * (c[k + 1] - c[k]);
}

inline void cubic_line(const double* src, Index n_in, double* dst, Index n_out, double r,
                       double t, std::vector<double>& coeff) {
  coeff.assign(src, src + n_in);
  bspline_prefilter(coeff.data(), n_in);
  for (Index i = 0; i < n_out; ++i) {
    double u = (static_cast<double>(i) + 0.5) * t / r - 0.5;
    double fl = std::floor(u);
    Index i0 = static_cast<Index>(fl);
    double f = u - fl;
    double f2 = f * f;
    double f3 = f2 * f;
    double w0 = (1.0 - 3.0 * f + 3.0 * f2 - f3) / 6.0;
    double w1 = (4.0 - 6.0 * f2 + 3.0 * f3) / 6.0;
    double w2 = (1.0 + 3.0 * f + 3.0 * f2 - 3.0 * f3) / 6.0;
    double w3 = f3 / 6.0;
    double acc = 0.0;
    const double w[4] = {w0, w1, w2, w3};
    for (int k = 0; k < 4; ++k) {
      Index j = i0 - 1 + k;
      Index cj = j < 0 ? 0 : (j >= n_in ? n_in - 1 : j);
      acc += w[k] * coeff[cj];
    }
    dst[i] = acc;
  }
}

// Adaptive average pooling with exact fractional interval overlaps. Output
// voxel i covers [i*t, (i+1)*t), clipped to the source extent; its value is
// the length-weighted mean of the source voxels it overlaps. Summed against
// the covered lengths this conserves the integral of the piecewise-constant
// source field exactly (up to roundoff).
inline void area_line(const double* src, Index n_in, double* dst, Index n_out, double r,
                      double t) {
  const double extent = static_cast<double>(n_in) * r;
  for (Index i = 0; i < n_out; ++i) {
    double lo = static_cast<double>(i) * t;
    double hi = std::min((static_cast<double>(i) + 1.0) * t, extent);
    Index j0 = static_cast<Index>(std::floor(lo / r));
    if (j0 < 0) j0 = 0;
    if (j0 >= n_in) j0 = n_in - 1;
    double acc = 0.0;
    double cover = 0.0;
    for (Index j = j0; j < n_in; ++j) {
      double a = std::max(lo, static_cast<double>(j) * r);
      double b = std::min(hi, (static_cast<double>(j) + 1.0) * r);
      if (b <= a) {
        if (static_cast<double>(j) * r >= hi) break;
        continue;
      }
      acc += (b - a) * src[j];
      cover += b - a;
    }
    dst[i] = cover > 0.0 ? acc / cover : src[n_in - 1];
  }
}

struct Field {
  Index3 shape;
  std::vector<double> v;
};

enum class LineKind { Linear, Cubic, Area };

inline void axis_pass(Field& f, int ax, Index n_out, double r, double t, LineKind kind) {
  Index3 os = f.shape;
  os[ax] = n_out;
  std::vector<double> out(static_cast<std::size_t>(numel(os)));

  Index3 in_stride{1, f.shape[0], f.shape[0] * f.shape[1]};
  Index3 out_stride{1, os[0], os[0] * os[1]};
  int u = ax == 0 ? 1 : 0;
  int w = ax == 2 ? 1 : 2;

  Index n_in = f.shape[ax];
  std::vector<double> line_in(static_cast<std::size_t>(n_in));
  std::vector<double> line_out(static_cast<std::size_t>(n_out));
  std::vector<double> coeff;

  for (Index c = 0; c < f.shape[w]; ++c) {
    for (Index b = 0; b < f.shape[u]; ++b) {
      Index base_in = b * in_stride[u] + c * in_stride[w];
      Index base_out = b * out_stride[u] + c * out_stride[w];
      for (Index i = 0; i < n_in; ++i) line_in[i] = f.v[base_in + i * in_stride[ax]];
      switch (kind) {
        case LineKind::Linear: linear_line(line_in.data(), n_in, line_out.data(), n_out, r, t); break;
        case LineKind::Cubic: cubic_line(line_in.data(), n_in, line_out.data(), n_out, r, t, coeff); break;
        case LineKind::Area: area_line(line_in.data(), n_in, line_out.data(), n_out, r, t); break;
      }
      for (Index i = 0; i < n_out; ++i) out[base_out + i * out_stride[ax]] = line_out[i];
    }
  }
  f.shape = os;
  f.v = std::move(out);
}

template <typename Scalar>
Volume<Scalar> run_passes(const Volume<Scalar>& v, const Vec3d& target, const Index3& out_shape,
                          LineKind kind) {
  Field f;
  f.shape = v.shape();
  f.v.resize(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) f.v[i] = static_cast<double>(v.data()[i]);

  for (int ax = 0; ax < 3; ++ax)
    axis_pass(f, ax, out_shape[ax], v.spacing()[ax], target[ax], kind);

  typename Volume<Scalar>::Array data(numel(out_shape));
  for (Index i = 0; i < data.size(); ++i) data[i] = static_cast<Scalar>(f.v[i]);

  // Half-voxel bookkeeping: the extent corner stays put, so the first output
  // centre moves by (t - r)/2 along each axis.
  Vec3d origin = v.origin() + v.direction() * (0.5 * (target - v.spacing()));
  return Volume<Scalar>(out_shape, std::move(data), target, v.direction(), origin);
}

/// Resample onto an explicitly forced output shape (the degradation model
/// needs round trips that restore the exact input shape).
template <typename Scalar>
Volume<Scalar> resample_to_shape(const Volume<Scalar>& v, const Vec3d& target,
                                 const Index3& out_shape, ResampleMethod method) {
  if (method == ResampleMethod::Area)
    throw std::runtime_error("resample: use area_downsample for the Area method");
  return run_passes(v, target, out_shape,
                    method == ResampleMethod::Trilinear ? LineKind::Linear : LineKind::Cubic);
}

}  // namespace detail

/// Interpolating resample to a new spacing (Trilinear or CubicBSpline).
template <typename Scalar>
Volume<Scalar> resample(const Volume<Scalar>& v, const Vec3d& target_spacing,
                        ResampleMethod method) {
  if (!(target_spacing.array() > 0.0).all())
    throw std::runtime_error("resample: target spacing components must be positive");
  Index3 out_shape;
  for (int ax = 0; ax < 3; ++ax)
    out_shape[ax] = resampled_length(v.shape()[ax], v.spacing()[ax], target_spacing[ax]);
  return detail::resample_to_shape(v, target_spacing, out_shape, method);
}

/// Box-integration downsample (adaptive average pooling with exact
/// fractional overlap). Models signal acquisition as averaging over the
/// receiving voxel; requires target spacing >= source spacing per axis.
template <typename Scalar>
Volume<Scalar> area_downsample(const Volume<Scalar>& v, const Vec3d& target_spacing) {
  if (!(target_spacing.array() > 0.0).all())
    throw std::runtime_error("area_downsample: target spacing components must be positive");
  for (int ax = 0; ax < 3; ++ax) {
    if (target_spacing[ax] < v.spacing()[ax] * (1.0 - 1e-12))
      throw std::runtime_error(
          "area_downsample: target spacing must be >= source spacing on every axis");
  }
  Index3 out_shape;
  for (int ax = 0; ax < 3; ++ax)
    out_shape[ax] = resampled_length(v.shape()[ax], v.spacing()[ax], target_spacing[ax]);
  return detail::run_passes(v, target_spacing, out_shape, detail::LineKind::Area);
}

/// Uniformly coarsen a volume until it fits a voxel budget. Under-budget
/// input is returned unchanged; otherwise all axes are scaled by the same
/// factor (aspect preserved within rounding) with trilinear interpolation.
template <typename Scalar>
Volume<Scalar> resize_to_budget(const Volume<Scalar>& v, Index max_voxels) {
  if (max_voxels < 1) throw std::runtime_error("resize_to_budget: budget must be positive");
  if (v.size() <= max_voxels) return v;

  double s = std::cbrt(static_cast<double>(max_voxels) / static_cast<double>(v.size()));
  for (int iter = 0; iter < 64; ++iter) {
    Vec3d target = v.spacing() / s;
    Index3 out_shape;
    for (int ax = 0; ax < 3; ++ax)
      out_shape[ax] = resampled_length(v.shape()[ax], v.spacing()[ax], target[ax]);
    if (numel(out_shape) <= max_voxels)
      return detail::resample_to_shape(v, target, out_shape, ResampleMethod::Trilinear);
    // Rounding overshot the budget: shrink a little further and retry.
    s *= std::cbrt(static_cast<double>(max_voxels) / static_cast<double>(numel(out_shape))) *
         (1.0 - 1e-12);
  }
  throw std::runtime_error("resize_to_budget: failed to satisfy budget");
}

}  // namespace cahal

#endif
