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

#include "cahal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cahal/enhance.hpp"
#include "cahal/metrics.hpp"
#include "cahal/stats.hpp"

namespace cahal {

namespace {

using json = nlohmann::json;

constexpr const char* kKnownMetrics[] = {"psnr", "cc",   "wmae",
                                         "spectral", "dice", "composite"};

bool known_metric(const std::string& m) {
  for (const char* k : kKnownMetrics)
    if (m == k) return true;
  return false;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Splits one CSV record, honouring double-quote escaping. Embedded newlines
// are not supported; none of our writers emit them.
std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

json encode_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

double decode_num(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  throw std::runtime_error(std::string("report: ") + what + " must be a number");
}

std::string kind_name(MethodSpec::Kind k) {
  switch (k) {
    case MethodSpec::Kind::Identity: return "identity";
    case MethodSpec::Kind::Reference: return "reference";
    case MethodSpec::Kind::Subprocess: return "subprocess";
  }
  throw std::runtime_error("method: unknown kind");
}

CellStat stat_of(const std::vector<double>& samples) {
  CellStat c;
  c.n = static_cast<int>(samples.size());
  if (samples.empty()) {
    c.mean = std::numeric_limits<double>::quiet_NaN();
    c.stddev = std::numeric_limits<double>::quiet_NaN();
    return c;
  }
  CompensatedSum sum;
  for (double v : samples) sum.add(v);
  c.mean = sum.value() / static_cast<double>(c.n);
  if (c.n < 2) {
    c.stddev = 0.0;
    return c;
  }
  CompensatedSum sq;
  for (double v : samples) {
    double d = v - c.mean;
    sq.add(d * d);
  }
  c.stddev = std::sqrt(sq.value() / static_cast<double>(c.n - 1));
  return c;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "+inf" || s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("parse_double: invalid number \"" + s + "\"");
  return v;
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

std::vector<EvalCase> build_eval_grid(const std::vector<std::string>& subjects,
                                      const std::vector<BinCoord>& cells,
                                      int realizations,
                                      std::uint64_t base_seed) {
  if (subjects.empty()) throw std::runtime_error("eval grid: no subjects");
  if (cells.empty()) throw std::runtime_error("eval grid: no cells");
  if (realizations < 1) throw std::runtime_error("eval grid: realizations must be >= 1");
  std::set<std::string> seen(subjects.begin(), subjects.end());
  if (seen.size() != subjects.size())
    throw std::runtime_error("eval grid: duplicate subject id");

  std::vector<EvalCase> out;
  out.reserve(subjects.size() * cells.size() * static_cast<std::size_t>(realizations));
  for (const std::string& s : subjects) {
    for (const BinCoord& cell : cells) {
      for (int r = 0; r < realizations; ++r) {
        EvalCase c;
        c.subject = s;
        c.cell = cell;
        c.realization = r;
        // Positional seed: adding subjects, cells, or realizations elsewhere
        // in the grid never changes this case's degradation.
        std::uint64_t seed = seed_mix(base_seed, fnv1a64(s), fnv1a64(expert_id(cell)),
                                      static_cast<std::uint64_t>(r));
        c.spec = sample_cell_spec(cell, seed);
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Methods manifest
// ---------------------------------------------------------------------------

std::vector<MethodSpec> load_methods(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("methods: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("methods: parse error in " + path + ": " + e.what());
  }
  if (!j.is_array()) throw std::runtime_error("methods: root must be an array");
  std::vector<MethodSpec> out;
  std::set<std::string> names;
  for (const json& m : j) {
    if (!m.is_object()) throw std::runtime_error("methods: entries must be objects");
    for (auto it = m.begin(); it != m.end(); ++it) {
      const std::string& k = it.key();
      if (k != "name" && k != "kind" && k != "command" && k != "normalize_mean")
        throw std::runtime_error("methods: unknown key \"" + k + "\"");
    }
    MethodSpec spec;
    if (!m.contains("name") || !m["name"].is_string())
      throw std::runtime_error("methods: every method needs a string \"name\"");
    spec.name = m["name"].get<std::string>();
    if (spec.name.empty()) throw std::runtime_error("methods: empty method name");
    if (!names.insert(spec.name).second)
      throw std::runtime_error("methods: duplicate method name \"" + spec.name + "\"");
    std::string kind = m.value("kind", std::string("reference"));
    if (kind == "identity") {
      spec.kind = MethodSpec::Kind::Identity;
    } else if (kind == "reference") {
      spec.kind = MethodSpec::Kind::Reference;
    } else if (kind == "subprocess") {
      spec.kind = MethodSpec::Kind::Subprocess;
    } else {
      throw std::runtime_error("methods: unknown kind \"" + kind + "\"");
    }
    if (m.contains("command")) {
      if (!m["command"].is_string())
        throw std::runtime_error("methods: \"command\" must be a string");
      spec.command = m["command"].get<std::string>();
    }
    if (spec.kind == MethodSpec::Kind::Subprocess && spec.command.empty())
      throw std::runtime_error("methods: subprocess method \"" + spec.name +
                               "\" needs a command");
    if (m.contains("normalize_mean")) {
      if (!m["normalize_mean"].is_boolean())
        throw std::runtime_error("methods: \"normalize_mean\" must be a boolean");
      spec.normalize_mean = m["normalize_mean"].get<bool>();
    }
    out.push_back(std::move(spec));
  }
  if (out.empty()) throw std::runtime_error("methods: manifest lists no methods");
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

std::string raw_csv(const RawTable& t) {
  std::ostringstream os;
  os << "method,subject,v_bin,a_bin,realization,metric,value,status\n";
  for (const RawRow& r : t.rows) {
    os << csv_escape(r.method) << ',' << csv_escape(r.subject) << ',' << r.v_bin << ','
       << r.a_bin << ',' << r.realization << ',' << csv_escape(r.metric) << ','
       << format_double(r.value) << ',' << csv_escape(r.status) << '\n';
  }
  return os.str();
}

namespace {

std::vector<RawRow> eval_one_case(const EvalCase& c, const Subject& subj,
                                  const std::vector<MethodSpec>& methods,
                                  const EvalOptions& opts, std::mutex& exclusive,
                                  bool parallel) {
  std::vector<RawRow> rows;
  auto push = [&](const std::string& method, const std::string& metric, double v,
                  const std::string& status) {
    RawRow r;
    r.method = method;
    r.subject = c.subject;
    r.v_bin = c.cell.v_bin;
    r.a_bin = c.cell.a_bin;
    r.realization = c.realization;
    r.metric = metric;
    r.value = v;
    r.status = status;
    rows.push_back(std::move(r));
  };
  auto fail_all = [&](const std::string& method, const std::string& why) {
    for (const std::string& m : opts.metrics)
      push(method, m, std::numeric_limits<double>::quiet_NaN(), why);
  };

  // Degrade once; every method scores against the identical input.
  VolumeF degraded;
  std::string expert = "none";
  std::string case_error;
  try {
    degraded = degrade_volume(subj.gt, c.spec);
    RoutingDecision d = route_spacing(c.spec.triplet);
    if (d.kind == RoutingKind::Enhance) expert = d.expert;
  } catch (const std::exception& e) {
    case_error = std::string("degradation failed: ") + e.what();
  }

  const bool need_labels =
      std::find(opts.metrics.begin(), opts.metrics.end(), "dice") != opts.metrics.end() ||
      std::find(opts.metrics.begin(), opts.metrics.end(), "composite") != opts.metrics.end();
  const int k = opts.config.dice_classes;
  std::vector<int> classes(static_cast<std::size_t>(k));
  std::iota(classes.begin(), classes.end(), 0);
  LabelVolume labels_gt;
  if (case_error.empty() && need_labels) {
    try {
      labels_gt = quantile_labels(subj.gt, k);
    } catch (const std::exception& e) {
      case_error = std::string("labelling failed: ") + e.what();
    }
  }

  for (const MethodSpec& m : methods) {
    if (!case_error.empty()) {
      fail_all(m.name, case_error);
      continue;
    }
    VolumeF out;
    try {
      std::unique_ptr<Enhancer> e;
      switch (m.kind) {
        case MethodSpec::Kind::Identity: e = baseline_identity(); break;
        case MethodSpec::Kind::Reference: e = baseline_reference(); break;
        case MethodSpec::Kind::Subprocess:
          e = subprocess_enhancer(m.name, m.command, expert);
          break;
      }
      TilePlan plan =
          plan_tiles(degraded.shape(), opts.config.voxel_budget, opts.config.overlap);
      if (parallel && !e->thread_safe()) {
        std::lock_guard<std::mutex> lock(exclusive);
        out = run_tiled(*e, degraded, plan);
      } else {
        out = run_tiled(*e, degraded, plan);
      }
      if (m.normalize_mean) out = mean_normalize(out, subj.gt);
    } catch (const std::exception& e) {
      fail_all(m.name, std::string("enhancement failed: ") + e.what());
      continue;
    }

    LabelVolume labels_out;
    bool have_labels_out = false;
    for (const std::string& metric : opts.metrics) {
      try {
        if (need_labels && !have_labels_out &&
            (metric == "dice" || metric == "composite")) {
          labels_out = quantile_labels(out, k);
          have_labels_out = true;
        }
        double v = 0.0;
        if (metric == "psnr") {
          v = psnr(subj.gt, out);
        } else if (metric == "cc") {
          v = pearson_cc(subj.gt, out);
        } else if (metric == "wmae") {
          v = wmae(subj.gt, out, opts.config.loss);
        } else if (metric == "spectral") {
          v = spectral_loss(subj.gt, out);
        } else if (metric == "dice") {
          v = dice(labels_gt, labels_out, classes).macro;
        } else if (metric == "composite") {
          v = composite_loss(subj.gt, out, labels_gt, labels_out, classes,
                             opts.config.loss)
                  .total;
        } else {
          throw std::runtime_error("unknown metric " + metric);
        }
        push(m.name, metric, v, "ok");
      } catch (const std::exception& e) {
        push(m.name, metric, std::numeric_limits<double>::quiet_NaN(),
             std::string("metric failed: ") + e.what());
      }
    }
  }
  return rows;
}

}  // namespace

RawTable evaluate(const std::vector<Subject>& subjects,
                  const std::vector<EvalCase>& cases,
                  const std::vector<MethodSpec>& methods, const EvalOptions& opts) {
  if (methods.empty()) throw std::runtime_error("evaluate: no methods");
  if (opts.metrics.empty()) throw std::runtime_error("evaluate: no metrics requested");
  for (const std::string& m : opts.metrics) {
    if (!known_metric(m)) throw std::runtime_error("evaluate: unknown metric \"" + m + "\"");
  }
  if (opts.jobs < 1) throw std::runtime_error("evaluate: jobs must be >= 1");
  std::map<std::string, const Subject*> by_id;
  for (const Subject& s : subjects) {
    if (!by_id.emplace(s.id, &s).second)
      throw std::runtime_error("evaluate: duplicate subject id \"" + s.id + "\"");
  }
  for (const EvalCase& c : cases) {
    if (!by_id.count(c.subject))
      throw std::runtime_error("evaluate: case references unknown subject \"" +
                               c.subject + "\"");
  }

  // One result slot per case keeps the output order fixed regardless of
  // worker scheduling.
  std::vector<std::vector<RawRow>> slots(cases.size());
  std::mutex exclusive;
  const bool parallel = opts.jobs > 1 && cases.size() > 1;
  if (!parallel) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      slots[i] = eval_one_case(cases[i], *by_id.at(cases[i].subject), methods, opts,
                               exclusive, false);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::string> worker_errors(static_cast<std::size_t>(opts.jobs));
    auto work = [&](std::size_t wid) {
      try {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= cases.size()) break;
          slots[i] = eval_one_case(cases[i], *by_id.at(cases[i].subject), methods,
                                   opts, exclusive, true);
        }
      } catch (const std::exception& e) {
        worker_errors[wid] = e.what();
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < opts.jobs; ++w) pool.emplace_back(work, static_cast<std::size_t>(w));
    for (std::thread& t : pool) t.join();
    for (const std::string& err : worker_errors) {
      if (!err.empty()) throw std::runtime_error("evaluate: worker failed: " + err);
    }
  }

  RawTable table;
  for (std::vector<RawRow>& rows : slots) {
    for (RawRow& r : rows) table.rows.push_back(std::move(r));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

bool metric_higher_better(const std::string& metric) {
  return metric == "psnr" || metric == "cc" || metric == "dice";
}

Report aggregate(const RawTable& t, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::runtime_error("aggregate: alpha must lie in (0, 1)");

  std::vector<std::string> metric_order;
  std::vector<std::string> method_order;
  for (const RawRow& r : t.rows) {
    if (std::find(metric_order.begin(), metric_order.end(), r.metric) == metric_order.end())
      metric_order.push_back(r.metric);
    if (std::find(method_order.begin(), method_order.end(), r.method) == method_order.end())
      method_order.push_back(r.method);
    if (r.v_bin < 1 || r.v_bin > kVolumeBins)
      throw std::runtime_error("aggregate: v_bin out of range");
  }

  Report rep;
  rep.alpha = alpha;
  const int n_methods = static_cast<int>(method_order.size());
  rep.bonferroni_family = n_methods * (n_methods - 1) / 2;

  for (const std::string& metric : metric_order) {
    MetricReport mr;
    mr.metric = metric;
    mr.higher_better = metric_higher_better(metric);

    std::vector<std::vector<double>> overall_samples;
    for (const std::string& method : method_order) {
      MethodMetricRow row;
      row.method = method;
      std::array<std::vector<double>, kVolumeBins> per_vbin;
      std::vector<double> overall;
      for (const RawRow& r : t.rows) {
        if (r.metric != metric || r.method != method) continue;
        if (r.status == "ok") {
          per_vbin[static_cast<std::size_t>(r.v_bin - 1)].push_back(r.value);
          overall.push_back(r.value);
        } else {
          ++row.failures;
        }
      }
      for (int v = 0; v < kVolumeBins; ++v)
        row.per_vbin[static_cast<std::size_t>(v)] =
            stat_of(per_vbin[static_cast<std::size_t>(v)]);
      row.overall = stat_of(overall);
      overall_samples.push_back(std::move(overall));
      mr.rows.push_back(std::move(row));
    }

    // Each method is tested against the best method listed before it, so the
    // table reads as a running record: does the new row beat the incumbent?
    for (std::size_t i = 1; i < mr.rows.size(); ++i) {
      if (overall_samples[i].size() < 1) continue;
      int best = -1;
      for (std::size_t j = 0; j < i; ++j) {
        if (mr.rows[j].overall.n == 0) continue;
        if (best < 0) {
          best = static_cast<int>(j);
          continue;
        }
        double bm = mr.rows[static_cast<std::size_t>(best)].overall.mean;
        double jm = mr.rows[j].overall.mean;
        if (mr.higher_better ? jm > bm : jm < bm) best = static_cast<int>(j);
      }
      if (best < 0) continue;
      const std::vector<double>& cur = overall_samples[i];
      const std::vector<double>& ref = overall_samples[static_cast<std::size_t>(best)];
      if (cur.empty() || ref.empty()) continue;
      MannWhitneyResult mw = mann_whitney_u(cur, ref);
      mr.rows[i].has_comparison = true;
      mr.rows[i].p_corrected = bonferroni(mw.p, rep.bonferroni_family);
      mr.rows[i].significant = mr.rows[i].p_corrected < alpha;
    }

    rep.metrics.push_back(std::move(mr));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

namespace {

std::string fmt_stat(const CellStat& c) {
  if (c.n == 0) return "-";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.3f ± %.3f (%d)", c.mean, c.stddev, c.n);
  return buf;
}

// Index of the winning row for one column, -1 when the column is empty.
int best_row(const MetricReport& mr, int column) {
  int best = -1;
  double best_mean = 0.0;
  for (std::size_t i = 0; i < mr.rows.size(); ++i) {
    const CellStat& c = column < kVolumeBins
                            ? mr.rows[i].per_vbin[static_cast<std::size_t>(column)]
                            : mr.rows[i].overall;
    if (c.n == 0 || std::isnan(c.mean)) continue;
    if (best < 0 || (mr.higher_better ? c.mean > best_mean : c.mean < best_mean)) {
      best = static_cast<int>(i);
      best_mean = c.mean;
    }
  }
  return best;
}

}  // namespace

std::string report_markdown(const Report& r) {
  std::ostringstream os;
  os << "# CAHAL evaluation report\n\n";
  os << "Cells show mean ± std (n) over all scored cases; the best mean per column\n"
        "is bold. The Overall column tests each method against the best method listed\n"
        "above it (two-sided Mann-Whitney U, Bonferroni family "
     << r.bonferroni_family << ", alpha " << format_double(r.alpha)
     << "):\n'*' significant, 'ns' not significant.\n";
  for (const MetricReport& mr : r.metrics) {
    os << "\n## " << mr.metric << " ("
       << (mr.higher_better ? "higher is better" : "lower is better") << ")\n\n";
    os << "| Method |";
    for (int v = 1; v <= kVolumeBins; ++v) os << " V" << v << " |";
    os << " Overall | Failures |\n";
    os << "| :-- |";
    for (int v = 0; v < kVolumeBins + 1; ++v) os << " --: |";
    os << " --: |\n";
    std::array<int, kVolumeBins + 1> best{};
    for (int col = 0; col <= kVolumeBins; ++col) best[static_cast<std::size_t>(col)] = best_row(mr, col);
    for (std::size_t i = 0; i < mr.rows.size(); ++i) {
      const MethodMetricRow& row = mr.rows[i];
      os << "| " << row.method << " |";
      for (int v = 0; v < kVolumeBins; ++v) {
        std::string cell = fmt_stat(row.per_vbin[static_cast<std::size_t>(v)]);
        if (best[static_cast<std::size_t>(v)] == static_cast<int>(i)) cell = "**" + cell + "**";
        os << ' ' << cell << " |";
      }
      std::string cell = fmt_stat(row.overall);
      if (best[kVolumeBins] == static_cast<int>(i)) cell = "**" + cell + "**";
      if (row.has_comparison) cell += row.significant ? " *" : " ns";
      os << ' ' << cell << " | " << row.failures << " |\n";
    }
  }
  return os.str();
}

std::string report_csv(const Report& r) {
  std::ostringstream os;
  os << "metric,method,bin,mean,std,n,failures,p_corrected,significant,alpha,family\n";
  for (const MetricReport& mr : r.metrics) {
    for (const MethodMetricRow& row : mr.rows) {
      auto emit = [&](const std::string& bin, const CellStat& c, bool overall) {
        os << csv_escape(mr.metric) << ',' << csv_escape(row.method) << ',' << bin << ','
           << format_double(c.mean) << ',' << format_double(c.stddev) << ',' << c.n << ',';
        if (overall) os << row.failures;
        os << ',';
        if (overall && row.has_comparison)
          os << format_double(row.p_corrected) << ',' << (row.significant ? 1 : 0);
        else
          os << ',';
        os << ',' << format_double(r.alpha) << ',' << r.bonferroni_family << '\n';
      };
      for (int v = 1; v <= kVolumeBins; ++v)
        emit("V" + std::to_string(v), row.per_vbin[static_cast<std::size_t>(v - 1)], false);
      emit("overall", row.overall, true);
    }
  }
  return os.str();
}

std::string report_json(const Report& r) {
  json j;
  j["alpha"] = r.alpha;
  j["bonferroni_family"] = r.bonferroni_family;
  j["metrics"] = json::array();
  for (const MetricReport& mr : r.metrics) {
    json jm;
    jm["metric"] = mr.metric;
    jm["higher_better"] = mr.higher_better;
    jm["rows"] = json::array();
    for (const MethodMetricRow& row : mr.rows) {
      json jr;
      jr["method"] = row.method;
      jr["per_vbin"] = json::array();
      for (const CellStat& c : row.per_vbin) {
        jr["per_vbin"].push_back(
            {{"mean", encode_num(c.mean)}, {"std", encode_num(c.stddev)}, {"n", c.n}});
      }
      jr["overall"] = {{"mean", encode_num(row.overall.mean)},
                       {"std", encode_num(row.overall.stddev)},
                       {"n", row.overall.n}};
      jr["failures"] = row.failures;
      if (row.has_comparison) {
        jr["p_corrected"] = encode_num(row.p_corrected);
        jr["significant"] = row.significant;
      } else {
        jr["p_corrected"] = nullptr;
        jr["significant"] = nullptr;
      }
      jm["rows"].push_back(std::move(jr));
    }
    j["metrics"].push_back(std::move(jm));
  }
  return j.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("report: JSON parse error: ") + e.what());
  }
  Report r;
  r.alpha = decode_num(j.at("alpha"), "alpha");
  r.bonferroni_family = j.at("bonferroni_family").get<int>();
  for (const json& jm : j.at("metrics")) {
    MetricReport mr;
    mr.metric = jm.at("metric").get<std::string>();
    mr.higher_better = jm.at("higher_better").get<bool>();
    for (const json& jr : jm.at("rows")) {
      MethodMetricRow row;
      row.method = jr.at("method").get<std::string>();
      const json& pv = jr.at("per_vbin");
      if (static_cast<int>(pv.size()) != kVolumeBins)
        throw std::runtime_error("report: per_vbin must have " +
                                 std::to_string(kVolumeBins) + " entries");
      for (int v = 0; v < kVolumeBins; ++v) {
        const json& c = pv[static_cast<std::size_t>(v)];
        row.per_vbin[static_cast<std::size_t>(v)] = {decode_num(c.at("mean"), "mean"),
                                                     decode_num(c.at("std"), "std"),
                                                     c.at("n").get<int>()};
      }
      row.overall = {decode_num(jr.at("overall").at("mean"), "mean"),
                     decode_num(jr.at("overall").at("std"), "std"),
                     jr.at("overall").at("n").get<int>()};
      row.failures = jr.at("failures").get<int>();
      if (jr.contains("p_corrected") && !jr["p_corrected"].is_null()) {
        row.has_comparison = true;
        row.p_corrected = decode_num(jr["p_corrected"], "p_corrected");
        row.significant = jr.at("significant").get<bool>();
      }
      mr.rows.push_back(std::move(row));
    }
    r.metrics.push_back(std::move(mr));
  }
  return r;
}

Report report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("report: empty CSV");
  if (csv_split(line) !=
      std::vector<std::string>{"metric", "method", "bin", "mean", "std", "n", "failures",
                               "p_corrected", "significant", "alpha", "family"})
    throw std::runtime_error("report: unexpected CSV header");

  Report r;
  bool have_meta = false;
  std::vector<std::string> metric_order;
  std::map<std::string, MetricReport> metrics;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = csv_split(line);
    if (f.size() != 11) throw std::runtime_error("report: malformed CSV row");
    const std::string& metric = f[0];
    const std::string& method = f[1];
    const std::string& bin = f[2];
    if (!have_meta) {
      r.alpha = parse_double(f[9]);
      r.bonferroni_family = std::stoi(f[10]);
      have_meta = true;
    }
    if (!metrics.count(metric)) {
      metric_order.push_back(metric);
      MetricReport mr;
      mr.metric = metric;
      mr.higher_better = metric_higher_better(metric);
      metrics.emplace(metric, std::move(mr));
    }
    MetricReport& mr = metrics.at(metric);
    MethodMetricRow* row = nullptr;
    for (MethodMetricRow& existing : mr.rows) {
      if (existing.method == method) {
        row = &existing;
        break;
      }
    }
    if (!row) {
      MethodMetricRow fresh;
      fresh.method = method;
      mr.rows.push_back(std::move(fresh));
      row = &mr.rows.back();
    }
    CellStat c{parse_double(f[3]), parse_double(f[4]), std::stoi(f[5])};
    if (bin == "overall") {
      row->overall = c;
      row->failures = f[6].empty() ? 0 : std::stoi(f[6]);
      if (!f[7].empty()) {
        row->has_comparison = true;
        row->p_corrected = parse_double(f[7]);
        row->significant = f[8] == "1";
      }
    } else {
      if (bin.size() < 2 || bin[0] != 'V')
        throw std::runtime_error("report: bad bin label \"" + bin + "\"");
      int v = std::stoi(bin.substr(1));
      if (v < 1 || v > kVolumeBins)
        throw std::runtime_error("report: bin out of range \"" + bin + "\"");
      row->per_vbin[static_cast<std::size_t>(v - 1)] = c;
    }
  }
  for (const std::string& m : metric_order) r.metrics.push_back(std::move(metrics.at(m)));
  return r;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string run_manifest_json(const RunConfig& config,
                              const std::vector<std::string>& subjects,
                              const std::vector<MethodSpec>& methods,
                              const std::vector<std::string>& metrics,
                              std::size_t n_cases) {
  json j;
  j["tool"] = "cahal";
  j["version"] = kVersion;
  j["config"] = json::parse(run_config_json(config));
  j["config_hash"] = config_hash(config);
  j["subjects"] = subjects;
  j["methods"] = json::array();
  for (const MethodSpec& m : methods) {
    json jm;
    jm["name"] = m.name;
    jm["kind"] = kind_name(m.kind);
    jm["normalize_mean"] = m.normalize_mean;
    if (m.kind == MethodSpec::Kind::Subprocess) jm["command"] = m.command;
    j["methods"].push_back(std::move(jm));
  }
  j["metrics"] = metrics;
  j["cases"] = n_cases;
  const int n_methods = static_cast<int>(methods.size());
  j["bonferroni_family"] = n_methods * (n_methods - 1) / 2;
  return j.dump(2) + "\n";
}

}  // namespace cahal
