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

#ifndef CAHAL_CORE_HPP
#define CAHAL_CORE_HPP

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace cahal {

inline constexpr const char* kVersion = "0.1.0";

using Index = Eigen::Index;
using Index3 = std::array<Index, 3>;
using Vec3d = Eigen::Vector3d;
using Mat3d = Eigen::Matrix3d;

inline Index numel(const Index3& shape) {
  return shape[0] * shape[1] * shape[2];
}

// SplitMix64 finalizer. Used to decorrelate structured seed inputs; any
// two distinct input chains yield unrelated streams for all practical
// purposes.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

template <typename... Rest>
std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return seed_mix(seed_mix(a, b), static_cast<std::uint64_t>(rest)...);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

using Rng = std::mt19937_64;

// Uniform draws are generated from raw engine output rather than
// std::uniform_real_distribution, whose mapping is implementation defined.
// Identical seeds must reproduce identical results on any platform.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline int uniform_int(Rng& rng, int n) {
  int v = static_cast<int>(uniform01(rng) * n);
  return v < n ? v : n - 1;
}

// Neumaier compensated summation. Metric reductions use this fixed scheme so
// that results do not depend on build flags or accumulation order tweaks.
class CompensatedSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace cahal

#endif
