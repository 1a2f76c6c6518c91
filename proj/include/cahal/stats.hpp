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

#ifndef CAHAL_STATS_HPP
#define CAHAL_STATS_HPP

#include <vector>

namespace cahal {

struct MannWhitneyResult {
  double u = 0.0;
  double p = 1.0;
  bool exact = false;
};

/// U statistic: number of (x, y) pairs with x > y, ties counted 1/2.
/// Complement identity: U(x, y) + U(y, x) = |x| * |y|.
double mann_whitney_u_statistic(const std::vector<double>& x, const std::vector<double>& y);

/// Exact two-sided p by exhausting all C(n+m, n) relabelings of the pooled
/// sample: the fraction of splits at least as far from the null mean nm/2 as
/// the observed U.
double mann_whitney_exact_p(const std::vector<double>& x, const std::vector<double>& y);

/// Tie-corrected normal approximation with continuity correction.
double mann_whitney_approx_p(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided Mann-Whitney test; exact enumeration for n + m <= 12, normal
/// approximation beyond that.
MannWhitneyResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y);

/// Bonferroni correction over a family of k comparisons.
double bonferroni(double p, int k);

}  // namespace cahal

#endif
