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

#include "cahal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cahal {

namespace {

void check_samples(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.empty() || y.empty())
    throw std::runtime_error("mann_whitney: samples must be non-empty");
}

double u_of_split(const std::vector<double>& pooled, const std::vector<int>& in_x) {
  double u = 0.0;
  std::size_t n = pooled.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_x[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_x[j]) continue;
      if (pooled[i] > pooled[j])
        u += 1.0;
      else if (pooled[i] == pooled[j])
        u += 0.5;
    }
  }
  return u;
}

}  // namespace

double mann_whitney_u_statistic(const std::vector<double>& x, const std::vector<double>& y) {
  check_samples(x, y);
  double u = 0.0;
  for (double xv : x) {
    for (double yv : y) {
      if (xv > yv)
        u += 1.0;
      else if (xv == yv)
        u += 0.5;
    }
  }
  return u;
}

double mann_whitney_exact_p(const std::vector<double>& x, const std::vector<double>& y) {
  check_samples(x, y);
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  const std::size_t N = n + m;
  const double mu = static_cast<double>(n) * static_cast<double>(m) / 2.0;
  const double dev = std::abs(mann_whitney_u_statistic(x, y) - mu);

  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());

  // Walk all C(N, n) index subsets in lexicographic order.
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::vector<int> in_x(N, 0);

  long long total = 0;
  long long at_least = 0;
  while (true) {
    std::fill(in_x.begin(), in_x.end(), 0);
    for (std::size_t i : idx) in_x[i] = 1;
    double u = u_of_split(pooled, in_x);
    ++total;
    if (std::abs(u - mu) >= dev - 1e-12) ++at_least;

    // next combination
    std::size_t k = n;
    while (k > 0 && idx[k - 1] == N - n + k - 1) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t i = k; i < n; ++i) idx[i] = idx[i - 1] + 1;
  }
  return static_cast<double>(at_least) / static_cast<double>(total);
}

double mann_whitney_approx_p(const std::vector<double>& x, const std::vector<double>& y) {
  check_samples(x, y);
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  const double N = n + m;
  const double u = mann_whitney_u_statistic(x, y);
  const double mu = n * m / 2.0;

  std::map<double, double> tie_counts;
  for (double v : x) tie_counts[v] += 1.0;
  for (double v : y) tie_counts[v] += 1.0;
  double tie_term = 0.0;
  for (const auto& [value, t] : tie_counts) {
    (void)value;
    tie_term += t * t * t - t;
  }
  double var = n * m / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (!(var > 0.0)) return 1.0;  // all values tied

  double z = (std::abs(u - mu) - 0.5) / std::sqrt(var);
  if (z < 0.0) z = 0.0;
  double p = std::erfc(z / std::sqrt(2.0));
  return p > 1.0 ? 1.0 : p;
}

MannWhitneyResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y) {
  check_samples(x, y);
  MannWhitneyResult r;
  r.u = mann_whitney_u_statistic(x, y);
  r.exact = x.size() + y.size() <= 12;
  r.p = r.exact ? mann_whitney_exact_p(x, y) : mann_whitney_approx_p(x, y);
  return r;
}

double bonferroni(double p, int k) {
  if (k < 1) throw std::runtime_error("bonferroni: family size must be >= 1");
  double corrected = p * static_cast<double>(k);
  return corrected > 1.0 ? 1.0 : corrected;
}

}  // namespace cahal
