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
#include <vector>

#include "cahal/core.hpp"
#include "cahal/stats.hpp"
#include "test_support.hpp"

using namespace cahal;

TEST_CASE("mann-whitney: U statistic hand values and the complement identity") {
  CHECK(mann_whitney_u_statistic({1, 2}, {3, 4}) == 0.0);
  CHECK(mann_whitney_u_statistic({3, 4}, {1, 2}) == 4.0);
  CHECK(mann_whitney_u_statistic({5, 5}, {5, 5}) == 2.0);  // all ties, halves
  CHECK(mann_whitney_u_statistic({1, 3}, {2, 4}) == 1.0);

  Rng rng(91);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> x, y;
    int n = 1 + uniform_int(rng, 8), m = 1 + uniform_int(rng, 8);
    for (int i = 0; i < n; ++i) x.push_back(static_cast<double>(uniform_int(rng, 5)));
    for (int i = 0; i < m; ++i) y.push_back(static_cast<double>(uniform_int(rng, 5)));
    double fwd = mann_whitney_u_statistic(x, y);
    double rev = mann_whitney_u_statistic(y, x);
    CHECK(fwd + rev == doctest::Approx(static_cast<double>(n * m)).epsilon(1e-12));
  }
}

TEST_CASE("mann-whitney: exact two-sided p on textbook cases") {
  // {1,2} vs {3,4}: U = 0, |U - 2| = 2; splits at distance >= 2 are the two
  // extremes of the 6 relabelings, p = 2/6 = 1/3.
  MannWhitneyResult r = mann_whitney_u({1, 2}, {3, 4});
  CHECK(r.exact);
  CHECK(r.u == 0.0);
  CHECK(r.p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // Complete separation at n = m = 6: the two extreme splits of C(12,6) = 924.
  std::vector<double> lo{1, 2, 3, 4, 5, 6}, hi{7, 8, 9, 10, 11, 12};
  MannWhitneyResult sep = mann_whitney_u(lo, hi);
  CHECK(sep.exact);
  CHECK(sep.p == doctest::Approx(2.0 / 924.0).epsilon(1e-12));

  // Identical samples sit exactly at the null mean: every split qualifies.
  MannWhitneyResult same = mann_whitney_u({2, 2, 2}, {2, 2, 2});
  CHECK(same.p == 1.0);
}

TEST_CASE("mann-whitney: exact branch agrees with the enumeration oracle") {
  Rng rng(92);
  for (int rep = 0; rep < 40; ++rep) {
    int n = 1 + uniform_int(rng, 6), m = 1 + uniform_int(rng, 6);
    std::vector<double> x, y;
    // Small integer support forces plenty of ties.
    for (int i = 0; i < n; ++i) x.push_back(static_cast<double>(uniform_int(rng, 4)));
    for (int i = 0; i < m; ++i) y.push_back(static_cast<double>(uniform_int(rng, 4)));
    MannWhitneyResult r = mann_whitney_u(x, y);
    CHECK(r.exact);
    CHECK(r.p == doctest::Approx(testsupport::mw_exact_p_oracle(x, y)).epsilon(1e-12));
    // Two-sidedness: swapping the samples leaves p unchanged.
    CHECK(mann_whitney_u(y, x).p == doctest::Approx(r.p).epsilon(1e-12));
  }
}

TEST_CASE("mann-whitney: large samples switch to the normal approximation") {
  std::vector<double> x, y;
  Rng rng(93);
  for (int i = 0; i < 10; ++i) x.push_back(uniform01(rng));
  for (int i = 0; i < 10; ++i) y.push_back(uniform01(rng) + 2.0);  // clear shift
  MannWhitneyResult r = mann_whitney_u(x, y);
  CHECK_FALSE(r.exact);
  CHECK(r.u == 0.0);
  CHECK(r.p > 0.0);
  CHECK(r.p < 0.01);

  // No shift: p should be comfortably non-significant.
  std::vector<double> z;
  for (int i = 0; i < 10; ++i) z.push_back(uniform01(rng));
  MannWhitneyResult r2 = mann_whitney_u(x, z);
  CHECK_FALSE(r2.exact);
  CHECK(r2.p > 0.05);
  CHECK(r2.p <= 1.0);

  // The approximation is decent even on modest n: compare against the exact
  // enumeration just above the cutover.
  std::vector<double> a{0.1, 0.4, 0.5, 0.9, 1.3, 1.7}, b{0.2, 0.3, 0.8, 1.1, 1.4, 1.9};
  double approx = mann_whitney_approx_p(a, b);
  double exact = mann_whitney_exact_p(a, b);
  CHECK(approx == doctest::Approx(exact).epsilon(0.15));
}

TEST_CASE("mann-whitney: empty samples are rejected") {
  CHECK_THROWS(mann_whitney_u({}, {1.0}));
  CHECK_THROWS(mann_whitney_u({1.0}, {}));
}

TEST_CASE("bonferroni: scales and clamps") {
  CHECK(bonferroni(0.01, 3) == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(bonferroni(0.5, 4) == 1.0);
  CHECK(bonferroni(0.2, 1) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS(bonferroni(0.01, 0));
}
