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

#ifndef CAHAL_METRICS_HPP
#define CAHAL_METRICS_HPP

#include <algorithm>
#include <complex>
#include <limits>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "cahal/volume.hpp"

namespace cahal {

/// Loss weights shared across training and evaluation.
struct LossConstants {
  double gamma = 1.0;        // edge-map contrast
  double epsilon = 1e-6;     // edge-map normalisation guard
  double lambda_fft = 2e-6;  // spectral term weight
  double lambda_seg = 0.1;   // segmentation term weight
};

enum class LaplacianKernel { SevenPoint, TwentySevenPoint };

namespace detail {

template <typename A, typename B>
void check_same_shape(const A& a, const B& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::runtime_error(std::string(op) + ": volumes must share a shape");
}

// |Laplacian| with replicate padding, then W = ln(1 + gamma*|L|) normalised
// by its maximum (plus epsilon). Constant fields map to an all-zero W.
template <typename Scalar>
std::vector<double> edge_weights(const Volume<Scalar>& y, const LossConstants& c,
                                 LaplacianKernel kernel) {
  const Index3& s = y.shape();
  std::vector<double> w(static_cast<std::size_t>(y.size()));
  auto clamp = [](Index i, Index n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };

  for (Index k = 0; k < s[2]; ++k) {
    for (Index j = 0; j < s[1]; ++j) {
      for (Index i = 0; i < s[0]; ++i) {
        double centre = static_cast<double>(y(i, j, k));
        // Accumulate neighbour - centre differences rather than subtracting
        // N * centre at the end: every term is exactly zero on a constant
        // field, so W vanishes identically instead of up to roundoff.
        double acc = 0.0;
        if (kernel == LaplacianKernel::SevenPoint) {
          acc += y(clamp(i - 1, s[0]), j, k) - centre;
          acc += y(clamp(i + 1, s[0]), j, k) - centre;
          acc += y(i, clamp(j - 1, s[1]), k) - centre;
          acc += y(i, clamp(j + 1, s[1]), k) - centre;
          acc += y(i, j, clamp(k - 1, s[2])) - centre;
          acc += y(i, j, clamp(k + 1, s[2])) - centre;
        } else {
          for (Index dk = -1; dk <= 1; ++dk)
            for (Index dj = -1; dj <= 1; ++dj)
              for (Index di = -1; di <= 1; ++di) {
                if (di == 0 && dj == 0 && dk == 0) continue;
                acc += y(clamp(i + di, s[0]), clamp(j + dj, s[1]), clamp(k + dk, s[2])) - centre;
              }
        }
        w[static_cast<std::size_t>(y.linear(i, j, k))] = std::log1p(c.gamma * std::abs(acc));
      }
    }
  }
  double m = 0.0;
  for (double v : w) m = std::max(m, v);
  double denom = m + c.epsilon;
  for (double& v : w) v /= denom;
  return w;
}

}  // namespace detail

/// Normalised edge-weight map W(y) in [0, 1).
template <typename Scalar>
Volume<Scalar> edge_weight_map(const Volume<Scalar>& y, const LossConstants& c = {},
                               LaplacianKernel kernel = LaplacianKernel::SevenPoint) {
  std::vector<double> w = detail::edge_weights(y, c, kernel);
  typename Volume<Scalar>::Array data(y.size());
  for (Index i = 0; i < y.size(); ++i) data[i] = static_cast<Scalar>(w[static_cast<std::size_t>(i)]);
  return y.with_data(std::move(data));
}

/// Edge-weighted mean absolute error: mean of (1 + W(y)) * |y - yhat|.
/// Since W is in [0, 1), MAE <= wmae < 2 * MAE; for constant ground truth
/// W vanishes and wmae reduces to plain MAE.
template <typename Scalar>
double wmae(const Volume<Scalar>& y, const Volume<Scalar>& yhat, const LossConstants& c = {},
            LaplacianKernel kernel = LaplacianKernel::SevenPoint) {
  detail::check_same_shape(y, yhat, "wmae");
  std::vector<double> w = detail::edge_weights(y, c, kernel);
  CompensatedSum sum;
  for (Index i = 0; i < y.size(); ++i) {
    double diff = std::abs(static_cast<double>(y.data()[i]) - static_cast<double>(yhat.data()[i]));
    sum.add((1.0 + w[static_cast<std::size_t>(i)]) * diff);
  }
  return sum.value() / static_cast<double>(y.size());
}

/// Mean absolute spectral magnitude difference over the full unnormalised 3D
/// DFT: mean_w |F(y)(w) - F(yhat)(w)|. By linearity this is computed as the
/// transform of the difference field. No padding: shapes must match exactly.
template <typename Scalar>
double spectral_loss(const Volume<Scalar>& y, const Volume<Scalar>& yhat) {
  detail::check_same_shape(y, yhat, "spectral_loss");
  const Index3& s = y.shape();
  std::vector<std::complex<double>> field(static_cast<std::size_t>(y.size()));
  for (Index i = 0; i < y.size(); ++i)
    field[static_cast<std::size_t>(i)] =
        static_cast<double>(y.data()[i]) - static_cast<double>(yhat.data()[i]);

  Eigen::FFT<double> fft;
  Index3 stride{1, s[0], s[0] * s[1]};
  for (int ax = 0; ax < 3; ++ax) {
    int u = ax == 0 ? 1 : 0;
    int w = ax == 2 ? 1 : 2;
    Index n = s[ax];
    std::vector<std::complex<double>> line(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> freq(static_cast<std::size_t>(n));
    for (Index c = 0; c < s[w]; ++c) {
      for (Index b = 0; b < s[u]; ++b) {
        Index base = b * stride[u] + c * stride[w];
        for (Index i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = field[base + i * stride[ax]];
        fft.fwd(freq, line);
        for (Index i = 0; i < n; ++i) field[base + i * stride[ax]] = freq[static_cast<std::size_t>(i)];
      }
    }
  }

  CompensatedSum sum;
  for (const auto& v : field) sum.add(std::abs(v));
  return sum.value() / static_cast<double>(y.size());
}

struct DiceResult {
  std::vector<std::pair<int, double>> per_class;
  double macro = 1.0;
};

/// Hard-label Dice: per class 2|a=c & b=c| / (|a=c| + |b=c|). A class absent
/// from both volumes scores 1.0; the macro average runs over the requested
/// classes present in at least one volume.
inline DiceResult dice(const LabelVolume& a, const LabelVolume& b,
                       const std::vector<int>& classes) {
  detail::check_same_shape(a, b, "dice");
  if (classes.empty()) throw std::runtime_error("dice: class set must be non-empty");

  DiceResult r;
  double macro_sum = 0.0;
  int macro_n = 0;
  for (int c : classes) {
    Index na = 0, nb = 0, ni = 0;
    for (Index i = 0; i < a.size(); ++i) {
      bool ia = a.data()[i] == c;
      bool ib = b.data()[i] == c;
      na += ia;
      nb += ib;
      ni += ia && ib;
    }
    double d;
    if (na + nb == 0) {
      d = 1.0;
    } else {
      d = 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
      macro_sum += d;
      ++macro_n;
    }
    r.per_class.emplace_back(c, d);
  }
  r.macro = macro_n > 0 ? macro_sum / macro_n : 1.0;
  return r;
}

struct CompositeLoss {
  double total = 0.0;
  double wmae = 0.0;      // unweighted edge-weighted MAE term
  double spectral = 0.0;  // lambda_fft-weighted spectral term
  double seg = 0.0;       // lambda_seg-weighted (1 - macro Dice) term
};

/// total = wmae + lambda_fft * spectral + lambda_seg * (1 - macro Dice);
/// the reported components sum to the total exactly.
template <typename Scalar>
CompositeLoss composite_loss(const Volume<Scalar>& y, const Volume<Scalar>& yhat,
                             const LabelVolume& labels_y, const LabelVolume& labels_yhat,
                             const std::vector<int>& classes, const LossConstants& c = {}) {
  CompositeLoss out;
  out.wmae = wmae(y, yhat, c);
  out.spectral = c.lambda_fft * spectral_loss(y, yhat);
  out.seg = c.lambda_seg * (1.0 - dice(labels_y, labels_yhat, classes).macro);
  out.total = out.wmae + out.spectral + out.seg;
  return out;
}

/// Peak signal-to-noise ratio against the ground-truth dynamic range R:
/// 10 * log10(R^2 / MSE). Identical volumes return +infinity; a constant
/// ground truth (R = 0) is an error.
template <typename Scalar>
double psnr(const Volume<Scalar>& gt, const Volume<Scalar>& pred) {
  detail::check_same_shape(gt, pred, "psnr");
  double range = static_cast<double>(gt.data().maxCoeff()) - static_cast<double>(gt.data().minCoeff());
  if (range == 0.0) throw std::runtime_error("psnr: constant ground truth has no dynamic range");
  CompensatedSum sum;
  for (Index i = 0; i < gt.size(); ++i) {
    double d = static_cast<double>(gt.data()[i]) - static_cast<double>(pred.data()[i]);
    sum.add(d * d);
  }
  double mse = sum.value() / static_cast<double>(gt.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(range * range / mse);
}

/// Pearson correlation coefficient; errors when either input is constant.
template <typename Scalar>
double pearson_cc(const Volume<Scalar>& a, const Volume<Scalar>& b) {
  detail::check_same_shape(a, b, "pearson_cc");
  const double n = static_cast<double>(a.size());
  CompensatedSum sa, sb;
  for (Index i = 0; i < a.size(); ++i) {
    sa.add(static_cast<double>(a.data()[i]));
    sb.add(static_cast<double>(b.data()[i]));
  }
  double ma = sa.value() / n;
  double mb = sb.value() / n;
  CompensatedSum cov, va, vb;
  for (Index i = 0; i < a.size(); ++i) {
    double da = static_cast<double>(a.data()[i]) - ma;
    double db = static_cast<double>(b.data()[i]) - mb;
    cov.add(da * db);
    va.add(da * da);
    vb.add(db * db);
  }
  if (va.value() == 0.0 || vb.value() == 0.0)
    throw std::runtime_error("pearson_cc: constant input has undefined correlation");
  return cov.value() / std::sqrt(va.value() * vb.value());
}

/// Rescale so the mean intensity matches the reference (generative outputs
/// are intensity-calibrated before scoring). Zero-mean input is an error.
template <typename Scalar>
Volume<Scalar> mean_normalize(const Volume<Scalar>& v, const Volume<Scalar>& reference) {
  CompensatedSum sv, sr;
  for (Index i = 0; i < v.size(); ++i) sv.add(static_cast<double>(v.data()[i]));
  for (Index i = 0; i < reference.size(); ++i) sr.add(static_cast<double>(reference.data()[i]));
  double mv = sv.value() / static_cast<double>(v.size());
  double mr = sr.value() / static_cast<double>(reference.size());
  if (std::abs(mv) < 1e-30)
    throw std::runtime_error("mean_normalize: zero-mean input cannot be rescaled");
  double scale = mr / mv;
  typename Volume<Scalar>::Array data(v.size());
  for (Index i = 0; i < v.size(); ++i)
    data[i] = static_cast<Scalar>(static_cast<double>(v.data()[i]) * scale);
  return v.with_data(std::move(data));
}

/// Deterministic intensity-quantile labelling (n_classes equal-count bins).
/// Stands in for an external segmenter where one is not configured.
template <typename Scalar>
LabelVolume quantile_labels(const Volume<Scalar>& v, int n_classes) {
  if (n_classes < 2) throw std::runtime_error("quantile_labels: need at least 2 classes");
  std::vector<Scalar> sorted(v.data().data(), v.data().data() + v.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Scalar> thresholds;
  for (int j = 1; j < n_classes; ++j) {
    std::size_t pos = static_cast<std::size_t>(static_cast<double>(j) * static_cast<double>(v.size()) /
                                               n_classes);
    if (pos >= sorted.size()) pos = sorted.size() - 1;
    thresholds.push_back(sorted[pos]);
  }
  LabelVolume::Array labels(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    std::int32_t c = 0;
    for (Scalar t : thresholds) c += v.data()[i] >= t;
    labels[i] = c;
  }
  return LabelVolume(v.shape(), std::move(labels), v.spacing(), v.direction(), v.origin());
}

}  // namespace cahal

#endif
