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

#include "cahal/nifti.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace cahal {

namespace {

// NIfTI-1 header, 348 bytes. Field offsets follow the reference definition.
#pragma pack(push, 1)
struct NiftiHeader {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must be 348 bytes");

enum NiftiType : std::int16_t {
  DT_UINT8 = 2,
  DT_INT16 = 4,
  DT_INT32 = 8,
  DT_FLOAT32 = 16,
  DT_FLOAT64 = 64,
  DT_INT8 = 256,
  DT_UINT16 = 512,
  DT_UINT32 = 768,
};

template <typename T>
void bswap(T& v) {
  auto* p = reinterpret_cast<unsigned char*>(&v);
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
}

void swap_header(NiftiHeader& h) {
  bswap(h.sizeof_hdr);
  bswap(h.extents);
  bswap(h.session_error);
  for (auto& d : h.dim) bswap(d);
  bswap(h.intent_p1);
  bswap(h.intent_p2);
  bswap(h.intent_p3);
  bswap(h.intent_code);
  bswap(h.datatype);
  bswap(h.bitpix);
  bswap(h.slice_start);
  for (auto& p : h.pixdim) bswap(p);
  bswap(h.vox_offset);
  bswap(h.scl_slope);
  bswap(h.scl_inter);
  bswap(h.slice_end);
  bswap(h.cal_max);
  bswap(h.cal_min);
  bswap(h.slice_duration);
  bswap(h.toffset);
  bswap(h.glmax);
  bswap(h.glmin);
  bswap(h.qform_code);
  bswap(h.sform_code);
  bswap(h.quatern_b);
  bswap(h.quatern_c);
  bswap(h.quatern_d);
  bswap(h.qoffset_x);
  bswap(h.qoffset_y);
  bswap(h.qoffset_z);
  for (auto& s : h.srow_x) bswap(s);
  for (auto& s : h.srow_y) bswap(s);
  for (auto& s : h.srow_z) bswap(s);
}

class GzReader {
 public:
  explicit GzReader(const std::string& path) : path_(path) {
    // zlib reads uncompressed files transparently, so one reader covers
    // both .nii and .nii.gz.
    f_ = gzopen(path.c_str(), "rb");
    if (!f_) throw std::runtime_error("nifti: cannot open '" + path + "' for reading");
  }
  ~GzReader() {
    if (f_) gzclose(f_);
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read(void* dst, std::size_t n) {
    unsigned char* p = static_cast<unsigned char*>(dst);
    while (n > 0) {
      unsigned chunk = n > (1u << 30) ? (1u << 30) : static_cast<unsigned>(n);
      int got = gzread(f_, p, chunk);
      if (got <= 0) throw std::runtime_error("nifti: truncated or corrupt file '" + path_ + "'");
      p += got;
      n -= static_cast<std::size_t>(got);
    }
  }

  void skip(std::size_t n) {
    if (gzseek(f_, static_cast<z_off_t>(n), SEEK_CUR) < 0)
      throw std::runtime_error("nifti: truncated or corrupt file '" + path_ + "'");
  }

 private:
  std::string path_;
  gzFile f_ = nullptr;
};

struct ParsedHeader {
  NiftiHeader h;
  bool swapped = false;
};

ParsedHeader read_header(GzReader& in, const std::string& path) {
  ParsedHeader p;
  in.read(&p.h, sizeof(NiftiHeader));
  if (p.h.sizeof_hdr != 348) {
    swap_header(p.h);
    p.swapped = true;
    if (p.h.sizeof_hdr != 348)
      throw std::runtime_error("nifti: corrupt header in '" + path + "' (sizeof_hdr != 348)");
  }
  if (std::strncmp(p.h.magic, "n+1", 3) != 0) {
    if (std::strncmp(p.h.magic, "ni1", 3) == 0)
      throw std::runtime_error("nifti: two-file NIfTI (.hdr/.img) is not supported: '" + path + "'");
    throw std::runtime_error("nifti: corrupt header in '" + path + "' (bad magic)");
  }
  return p;
}

Index3 parse_shape(const NiftiHeader& h, const std::string& path) {
  if (h.dim[0] < 3)
    throw std::runtime_error("nifti: unsupported dimensionality in '" + path + "' (dim[0] = " +
                             std::to_string(h.dim[0]) + ", expected a 3D volume)");
  for (int d = 4; d <= h.dim[0] && d < 8; ++d) {
    if (h.dim[d] > 1)
      throw std::runtime_error("nifti: unsupported dimensionality in '" + path +
                               "' (4D+ data; only scalar 3D volumes are handled)");
  }
  Index3 shape{h.dim[1], h.dim[2], h.dim[3]};
  if (shape[0] < 1 || shape[1] < 1 || shape[2] < 1)
    throw std::runtime_error("nifti: corrupt header in '" + path + "' (non-positive dim)");
  return shape;
}

VolumeGeometry parse_geometry(const NiftiHeader& h, const std::string& path) {
  VolumeGeometry g;
  g.shape = parse_shape(h, path);

  Eigen::Matrix3d m;
  if (h.sform_code > 0) {
    m << h.srow_x[0], h.srow_x[1], h.srow_x[2],
         h.srow_y[0], h.srow_y[1], h.srow_y[2],
         h.srow_z[0], h.srow_z[1], h.srow_z[2];
    g.origin = Vec3d(h.srow_x[3], h.srow_y[3], h.srow_z[3]);
    for (int c = 0; c < 3; ++c) {
      double norm = m.col(c).norm();
      if (!(norm > 0.0))
        throw std::runtime_error("nifti: corrupt header in '" + path + "' (degenerate sform)");
      g.spacing[c] = norm;
      g.direction.col(c) = m.col(c) / norm;
    }
  } else if (h.qform_code > 0) {
    double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    double a2 = 1.0 - b * b - c * c - d * d;
    double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
    Mat3d r;
    r << a * a + b * b - c * c - d * d, 2 * b * c - 2 * a * d, 2 * b * d + 2 * a * c,
         2 * b * c + 2 * a * d, a * a + c * c - b * b - d * d, 2 * c * d - 2 * a * b,
         2 * b * d - 2 * a * c, 2 * c * d + 2 * a * b, a * a + d * d - c * c - b * b;
    double qfac = h.pixdim[0] < 0.0f ? -1.0 : 1.0;
    r.col(2) *= qfac;
    g.direction = r;
    g.spacing = Vec3d(h.pixdim[1], h.pixdim[2], h.pixdim[3]);
    g.origin = Vec3d(h.qoffset_x, h.qoffset_y, h.qoffset_z);
  } else {
    g.direction = Mat3d::Identity();
    g.spacing = Vec3d(h.pixdim[1], h.pixdim[2], h.pixdim[3]);
    g.origin = Vec3d::Zero();
  }

  if (!(g.spacing.array() > 0.0).all())
    throw std::runtime_error("nifti: corrupt header in '" + path + "' (non-positive spacing)");
  Mat3d gram = g.direction.transpose() * g.direction;
  if ((gram - Mat3d::Identity()).cwiseAbs().maxCoeff() > 1e-4)
    throw std::runtime_error("nifti: non-orthonormal direction beyond tolerance in '" + path + "'");
  return g;
}

template <typename Raw>
void convert_raw(const std::vector<char>& bytes, bool swapped, double slope, double inter,
                 Eigen::ArrayXf& out) {
  const Raw* src = reinterpret_cast<const Raw*>(bytes.data());
  Index n = out.size();
  for (Index i = 0; i < n; ++i) {
    Raw v = src[i];
    if (swapped && sizeof(Raw) > 1) bswap(v);
    out[i] = static_cast<float>(slope * static_cast<double>(v) + inter);
  }
}

Eigen::ArrayXf read_data(GzReader& in, const ParsedHeader& p, const Index3& shape,
                         const std::string& path) {
  const NiftiHeader& h = p.h;
  std::size_t elem = 0;
  switch (h.datatype) {
    case DT_UINT8:
    case DT_INT8: elem = 1; break;
    case DT_INT16:
    case DT_UINT16: elem = 2; break;
    case DT_INT32:
    case DT_UINT32:
    case DT_FLOAT32: elem = 4; break;
    case DT_FLOAT64: elem = 8; break;
    default:
      throw std::runtime_error("nifti: unsupported datatype " + std::to_string(h.datatype) +
                               " in '" + path + "'");
  }

  double offset = static_cast<double>(h.vox_offset);
  if (offset < 348.0)
    throw std::runtime_error("nifti: corrupt header in '" + path + "' (vox_offset < 348)");
  in.skip(static_cast<std::size_t>(offset) - sizeof(NiftiHeader));

  Index n = numel(shape);
  std::vector<char> bytes(static_cast<std::size_t>(n) * elem);
  in.read(bytes.data(), bytes.size());

  // scl_slope == 0 means "no scaling" by convention.
  double slope = h.scl_slope == 0.0f ? 1.0 : static_cast<double>(h.scl_slope);
  double inter = h.scl_slope == 0.0f ? 0.0 : static_cast<double>(h.scl_inter);

  Eigen::ArrayXf out(n);
  switch (h.datatype) {
    case DT_UINT8: convert_raw<std::uint8_t>(bytes, p.swapped, slope, inter, out); break;
    case DT_INT8: convert_raw<std::int8_t>(bytes, p.swapped, slope, inter, out); break;
    case DT_INT16: convert_raw<std::int16_t>(bytes, p.swapped, slope, inter, out); break;
    case DT_UINT16: convert_raw<std::uint16_t>(bytes, p.swapped, slope, inter, out); break;
    case DT_INT32: convert_raw<std::int32_t>(bytes, p.swapped, slope, inter, out); break;
    case DT_UINT32: convert_raw<std::uint32_t>(bytes, p.swapped, slope, inter, out); break;
    case DT_FLOAT32: convert_raw<float>(bytes, p.swapped, slope, inter, out); break;
    case DT_FLOAT64: convert_raw<double>(bytes, p.swapped, slope, inter, out); break;
  }

  for (Index i = 0; i < n; ++i)
    if (std::isnan(out[i]))
      throw std::runtime_error("nifti: NaN voxel values in '" + path + "'");
  return out;
}

NiftiHeader make_header(const VolumeGeometry& g, std::int16_t datatype, std::int16_t bitpix) {
  NiftiHeader h;
  std::memset(&h, 0, sizeof(h));
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  h.dim[1] = static_cast<std::int16_t>(g.shape[0]);
  h.dim[2] = static_cast<std::int16_t>(g.shape[1]);
  h.dim[3] = static_cast<std::int16_t>(g.shape[2]);
  for (int d = 4; d < 8; ++d) h.dim[d] = 1;
  h.datatype = datatype;
  h.bitpix = bitpix;
  h.pixdim[0] = 1.0f;
  for (int c = 0; c < 3; ++c) h.pixdim[c + 1] = static_cast<float>(g.spacing[c]);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // NIFTI_UNITS_MM
  h.sform_code = 1;
  h.qform_code = 0;
  Eigen::Matrix3d m = g.direction * g.spacing.asDiagonal();
  for (int c = 0; c < 3; ++c) {
    h.srow_x[c] = static_cast<float>(m(0, c));
    h.srow_y[c] = static_cast<float>(m(1, c));
    h.srow_z[c] = static_cast<float>(m(2, c));
  }
  h.srow_x[3] = static_cast<float>(g.origin[0]);
  h.srow_y[3] = static_cast<float>(g.origin[1]);
  h.srow_z[3] = static_cast<float>(g.origin[2]);
  std::snprintf(h.descrip, sizeof(h.descrip), "cahal %s", kVersion);
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

bool has_gz_suffix(const std::string& path) {
  return path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

void write_file(const std::string& path, const NiftiHeader& h, const void* data,
                std::size_t nbytes) {
  const char pad[4] = {0, 0, 0, 0};
  if (has_gz_suffix(path)) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("nifti: cannot open '" + path + "' for writing");
    bool ok = gzwrite(f, &h, sizeof(h)) == static_cast<int>(sizeof(h)) &&
              gzwrite(f, pad, 4) == 4 &&
              (nbytes == 0 ||
               gzwrite(f, data, static_cast<unsigned>(nbytes)) == static_cast<int>(nbytes));
    ok = gzclose(f) == Z_OK && ok;
    if (!ok) throw std::runtime_error("nifti: write failed for '" + path + "'");
  } else {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("nifti: cannot open '" + path + "' for writing");
    bool ok = std::fwrite(&h, 1, sizeof(h), f) == sizeof(h) &&
              std::fwrite(pad, 1, 4, f) == 4 &&
              std::fwrite(data, 1, nbytes, f) == nbytes;
    ok = std::fclose(f) == 0 && ok;
    if (!ok) throw std::runtime_error("nifti: write failed for '" + path + "'");
  }
}

}  // namespace

VolumeGeometry load_nifti_geometry(const std::string& path) {
  GzReader in(path);
  ParsedHeader p = read_header(in, path);
  return parse_geometry(p.h, path);
}

VolumeF load_nifti(const std::string& path) {
  GzReader in(path);
  ParsedHeader p = read_header(in, path);
  VolumeGeometry g = parse_geometry(p.h, path);
  Eigen::ArrayXf data = read_data(in, p, g.shape, path);
  return VolumeF(g.shape, std::move(data), g.spacing, g.direction, g.origin);
}

LabelVolume load_nifti_labels(const std::string& path) {
  VolumeF v = load_nifti(path);
  LabelVolume::Array labels(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    float f = v.data()[i];
    float r = std::round(f);
    if (std::abs(f - r) > 1e-4f)
      throw std::runtime_error("nifti: non-integer label value in '" + path + "'");
    labels[i] = static_cast<std::int32_t>(r);
  }
  return LabelVolume(v.shape(), std::move(labels), v.spacing(), v.direction(), v.origin());
}

void save_nifti(const VolumeF& v, const std::string& path) {
  VolumeGeometry g{v.shape(), v.spacing(), v.direction(), v.origin()};
  NiftiHeader h = make_header(g, DT_FLOAT32, 32);
  write_file(path, h, v.data().data(), static_cast<std::size_t>(v.size()) * sizeof(float));
}

void save_nifti(const LabelVolume& v, const std::string& path) {
  VolumeGeometry g{v.shape(), v.spacing(), v.direction(), v.origin()};
  NiftiHeader h = make_header(g, DT_INT32, 32);
  write_file(path, h, v.data().data(), static_cast<std::size_t>(v.size()) * sizeof(std::int32_t));
}

}  // namespace cahal
