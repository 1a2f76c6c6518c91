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

#ifndef CAHAL_HARNESS_HPP
#define CAHAL_HARNESS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cahal/config.hpp"
#include "cahal/degrade.hpp"
#include "cahal/routing.hpp"
#include "cahal/volume.hpp"

namespace cahal {

// ---------------------------------------------------------------------------
// Evaluation grid
// ---------------------------------------------------------------------------

struct Subject {
  std::string id;
  VolumeF gt;  // isotropic 1 mm ground truth
};

/// One evaluation unit: a subject degraded into one grid cell, one
/// realization. The degradation spec is frozen at grid-construction time so
/// every method sees the identical input.
struct EvalCase {
  std::string subject;
  BinCoord cell;
  int realization = 0;
  DegradationSpec spec;
};

/// Full cross product subjects x cells x realizations. Seeds are positional:
/// a case's spec depends only on (base_seed, subject id, cell, realization),
/// never on grid size or enumeration order.
std::vector<EvalCase> build_eval_grid(const std::vector<std::string>& subjects,
                                      const std::vector<BinCoord>& cells,
                                      int realizations,
                                      std::uint64_t base_seed);

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

struct MethodSpec {
  enum class Kind { Identity, Reference, Subprocess };
  std::string name;
  Kind kind = Kind::Reference;
  std::string command;         // Subprocess only
  bool normalize_mean = false; // rescale output to the GT mean before scoring
};

/// Parse a methods manifest JSON (array of method objects). Unknown keys are
/// rejected; names must be unique.
std::vector<MethodSpec> load_methods(const std::string& path);

// ---------------------------------------------------------------------------
// Raw results
// ---------------------------------------------------------------------------

/// Long-format scores: one row per (method, case, metric). Failed cases keep
/// their rows (value NaN, status telling why) so failures stay visible in the
/// raw table while being excluded from every aggregate.
struct RawRow {
  std::string method;
  std::string subject;
  int v_bin = 0;
  int a_bin = 0;
  int realization = 0;
  std::string metric;
  double value = 0.0;
  std::string status;  // "ok" or a failure reason
};

struct RawTable {
  std::vector<RawRow> rows;
};

std::string raw_csv(const RawTable& t);

struct EvalOptions {
  RunConfig config;
  std::vector<std::string> metrics = {"psnr", "cc", "wmae", "spectral", "dice"};
  int jobs = 1;
};

/// Score every method on every case. Row order is (case, method, metric)
/// regardless of the number of worker threads.
RawTable evaluate(const std::vector<Subject>& subjects,
                  const std::vector<EvalCase>& cases,
                  const std::vector<MethodSpec>& methods,
                  const EvalOptions& opts);

// ---------------------------------------------------------------------------
// Aggregation and reports
// ---------------------------------------------------------------------------

struct CellStat {
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
};

struct MethodMetricRow {
  std::string method;
  std::array<CellStat, kVolumeBins> per_vbin;
  CellStat overall;
  int failures = 0;
  // Two-sided Mann-Whitney p (Bonferroni corrected) against the best previous
  // method's overall sample; absent for the first method or empty samples.
  bool has_comparison = false;
  double p_corrected = 0.0;
  bool significant = false;
};

struct MetricReport {
  std::string metric;
  bool higher_better = true;
  std::vector<MethodMetricRow> rows;
};

struct Report {
  double alpha = 0.05;
  int bonferroni_family = 0;
  std::vector<MetricReport> metrics;
};

/// True for metrics where larger values win (psnr, cc, dice).
bool metric_higher_better(const std::string& metric);

Report aggregate(const RawTable& t, double alpha);

std::string report_markdown(const Report& r);
std::string report_csv(const Report& r);
std::string report_json(const Report& r);
Report report_from_json(const std::string& text);
Report report_from_csv(const std::string& text);

/// Manifest describing a run: tool version, config (with hash), grid shape,
/// methods, metrics. Contains no timestamps; identical runs produce identical
/// manifests.
std::string run_manifest_json(const RunConfig& config,
                              const std::vector<std::string>& subjects,
                              const std::vector<MethodSpec>& methods,
                              const std::vector<std::string>& metrics,
                              std::size_t n_cases);

// ---------------------------------------------------------------------------
// Serialization helpers (shared by reports and the CLI)
// ---------------------------------------------------------------------------

/// Shortest decimal form that parses back to the same double; non-finite
/// values map to "+inf" / "-inf" / "nan".
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace cahal

#endif
