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
 *
 * Command line driver. Every output is deterministic: rerunning a command
 * with the same inputs and seed writes byte-identical files.
 */

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cahal/config.hpp"
#include "cahal/degrade.hpp"
#include "cahal/enhance.hpp"
#include "cahal/harness.hpp"
#include "cahal/metrics.hpp"
#include "cahal/nifti.hpp"
#include "cahal/reorient.hpp"
#include "cahal/routing.hpp"

namespace {

using cahal::Vec3d;
using json = nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

Vec3d parse_vec3(const std::string& s, const char* what) {
  Vec3d v;
  std::istringstream in(s);
  std::string tok;
  int i = 0;
  while (std::getline(in, tok, ',')) {
    if (i >= 3) throw std::runtime_error(std::string(what) + ": expected three components");
    v[i++] = cahal::parse_double(tok);
  }
  if (i != 3) throw std::runtime_error(std::string(what) + ": expected three components");
  return v;
}

cahal::BinCoord parse_cell(const std::string& s) {
  // Expert id form: V<digit>-A<digit>.
  if (s.size() != 5 || s[0] != 'V' || s[2] != '-' || s[3] != 'A')
    throw std::runtime_error("cell must look like V3-A2, got \"" + s + "\"");
  cahal::BinCoord c;
  c.v_bin = s[1] - '0';
  c.a_bin = s[4] - '0';
  if (c.v_bin < 1 || c.v_bin > cahal::kVolumeBins || c.a_bin < 1 || c.a_bin > cahal::kAnisoBins)
    throw std::runtime_error("cell out of range: \"" + s + "\"");
  return c;
}

json vec3_json(const Vec3d& v) { return json::array({v[0], v[1], v[2]}); }

cahal::ProtocolDistribution resolve_protocol(const std::string& name) {
  if (name == "volbrain") return cahal::volbrain_protocol();
  if (name == "biobank") return cahal::biobank_protocol();
  return cahal::load_protocol(name);
}

cahal::RunConfig config_from_flag(const std::string& config_path) {
  if (!config_path.empty()) return cahal::load_run_config(config_path);
  if (const char* env = std::getenv("CAHAL_CONFIG"); env && *env)
    return cahal::load_run_config(env);
  return {};
}

// --- subcommand bodies ------------------------------------------------------

int cmd_reorient(const std::string& in_path, const std::string& out_path) {
  cahal::VolumeF v = cahal::load_nifti(in_path);
  auto [canonical, record] = cahal::reorient_canonical(v);
  cahal::save_nifti(canonical, out_path);

  json j;
  j["input"] = in_path;
  j["output"] = out_path;
  j["identity"] = record.is_identity();
  j["axis_from"] = record.axis_from;
  j["flip"] = record.flip;
  write_text(out_path + ".json", j.dump(2) + "\n");
  std::cout << (record.is_identity() ? "already canonical" : "reoriented") << ": "
            << out_path << "\n";
  return 0;
}

int cmd_degrade(const std::string& in_path, const std::string& out_path,
                const std::string& cell, const std::string& triplet,
                const std::string& protocol, std::uint64_t seed) {
  int sources = (!cell.empty()) + (!triplet.empty()) + (!protocol.empty());
  if (sources != 1)
    throw std::runtime_error("degrade: give exactly one of --cell, --triplet, --protocol");

  cahal::DegradationSpec spec;
  if (!cell.empty()) {
    spec = cahal::sample_cell_spec(parse_cell(cell), seed);
  } else if (!triplet.empty()) {
    spec.triplet = parse_vec3(triplet, "--triplet");
    spec.seed = seed;
  } else {
    cahal::Rng rng(seed);
    spec.triplet = cahal::sample_protocol(resolve_protocol(protocol), rng);
    spec.seed = seed;
  }

  cahal::VolumeF gt = cahal::load_nifti(in_path);
  cahal::VolumeF degraded = cahal::degrade_volume(gt, spec);
  cahal::save_nifti(degraded, out_path);
  write_text(out_path + ".json", cahal::degradation_spec_json(spec));
  std::cout << "degraded to [" << spec.triplet[0] << ", " << spec.triplet[1] << ", "
            << spec.triplet[2] << "] mm: " << out_path << "\n";
  return 0;
}

int cmd_route(const std::string& in_path, const std::string& spacing) {
  if (in_path.empty() == spacing.empty())
    throw std::runtime_error("route: give exactly one of INPUT or --spacing");
  Vec3d s;
  if (!spacing.empty()) {
    s = parse_vec3(spacing, "--spacing");
  } else {
    s = cahal::load_nifti_geometry(in_path).spacing;
  }
  cahal::RoutingDecision d = cahal::route_spacing(s);

  json j;
  j["spacing"] = vec3_json(s);
  if (d.kind == cahal::RoutingKind::NoEnhancementNeeded) {
    j["action"] = "none";
  } else {
    j["action"] = "enhance";
    j["expert"] = d.expert;
    j["v_bin"] = d.cell.v_bin;
    j["a_bin"] = d.cell.a_bin;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_curriculum(const std::string& format, const std::string& out_path) {
  cahal::CurriculumPlan plan = cahal::curriculum();
  std::string text;
  if (format == "json") {
    text = cahal::curriculum_json(plan);
  } else if (format == "dot") {
    text = cahal::curriculum_dot(plan);
  } else {
    throw std::runtime_error("curriculum: --format must be json or dot");
  }
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
  return 0;
}

int cmd_metrics(const std::string& gt_path, const std::string& pred_path,
                const std::string& labels_a, const std::string& labels_b,
                const std::string& config_path) {
  cahal::RunConfig cfg = config_from_flag(config_path);
  cahal::VolumeF gt = cahal::load_nifti(gt_path);
  cahal::VolumeF pred = cahal::load_nifti(pred_path);

  cahal::LabelVolume la, lb;
  if (labels_a.empty() != labels_b.empty())
    throw std::runtime_error("metrics: --labels-a and --labels-b go together");
  if (!labels_a.empty()) {
    la = cahal::load_nifti_labels(labels_a);
    lb = cahal::load_nifti_labels(labels_b);
  } else {
    la = cahal::quantile_labels(gt, cfg.dice_classes);
    lb = cahal::quantile_labels(pred, cfg.dice_classes);
  }
  std::set<int> class_set;
  for (cahal::Index i = 0; i < la.size(); ++i) class_set.insert(la.data()[i]);
  for (cahal::Index i = 0; i < lb.size(); ++i) class_set.insert(lb.data()[i]);
  std::vector<int> classes(class_set.begin(), class_set.end());

  cahal::CompositeLoss comp = cahal::composite_loss(gt, pred, la, lb, classes, cfg.loss);
  cahal::DiceResult dr = cahal::dice(la, lb, classes);

  // JSON has no infinity; non-finite scores are emitted as strings.
  auto num = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return cahal::format_double(v);
  };
  json j;
  j["psnr"] = num(cahal::psnr(gt, pred));
  j["cc"] = num(cahal::pearson_cc(gt, pred));
  j["wmae"] = comp.wmae;
  j["spectral"] = cahal::spectral_loss(gt, pred);
  j["dice_macro"] = dr.macro;
  for (const auto& [cls, d] : dr.per_class) j["dice_per_class"][std::to_string(cls)] = d;
  j["composite"] = {{"total", comp.total},
                    {"wmae", comp.wmae},
                    {"spectral", comp.spectral},
                    {"seg", comp.seg}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const std::vector<std::string>& subject_paths,
                 const std::string& methods_path, const std::string& config_path,
                 const std::string& out_dir, const std::string& cells_arg,
                 int realizations, std::uint64_t seed, bool seed_set,
                 const std::vector<std::string>& metric_args, int jobs) {
  cahal::EvalOptions opts;
  opts.config = config_from_flag(config_path);
  if (!out_dir.empty()) opts.config.out_dir = out_dir;
  if (realizations > 0) opts.config.realizations = realizations;
  if (seed_set) opts.config.base_seed = seed;
  if (!metric_args.empty()) opts.metrics = metric_args;
  opts.jobs = jobs;

  std::vector<cahal::MethodSpec> methods;
  if (methods_path.empty()) {
    cahal::MethodSpec ref;
    ref.name = "reference";
    ref.kind = cahal::MethodSpec::Kind::Reference;
    methods.push_back(std::move(ref));
  } else {
    methods = cahal::load_methods(methods_path);
  }

  std::vector<cahal::Subject> subjects;
  std::vector<std::string> subject_ids;
  for (const std::string& p : subject_paths) {
    cahal::Subject s;
    s.id = std::filesystem::path(p).filename().string();
    s.gt = cahal::load_nifti(p);
    subjects.push_back(std::move(s));
    subject_ids.push_back(subjects.back().id);
  }

  std::vector<cahal::BinCoord> cells;
  if (cells_arg.empty() || cells_arg == "all") {
    cells = cahal::feasible_cells();
  } else {
    std::istringstream in(cells_arg);
    std::string tok;
    while (std::getline(in, tok, ',')) cells.push_back(parse_cell(tok));
  }

  std::vector<cahal::EvalCase> grid = cahal::build_eval_grid(
      subject_ids, cells, opts.config.realizations, opts.config.base_seed);
  cahal::RawTable raw = cahal::evaluate(subjects, grid, methods, opts);
  cahal::Report report = cahal::aggregate(raw, opts.config.alpha);

  const std::filesystem::path dir(opts.config.out_dir);
  std::filesystem::create_directories(dir);
  write_text((dir / "raw.csv").string(), cahal::raw_csv(raw));
  write_text((dir / "report.md").string(), cahal::report_markdown(report));
  write_text((dir / "report.csv").string(), cahal::report_csv(report));
  write_text((dir / "report.json").string(), cahal::report_json(report));
  write_text((dir / "manifest.json").string(),
             cahal::run_manifest_json(opts.config, subject_ids, methods, opts.metrics,
                                      grid.size()));
  std::cout << "evaluated " << grid.size() << " cases x " << methods.size()
            << " methods -> " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAHAL: physics-informed MRI resolution enhancement toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("cahal ") + cahal::kVersion);

  // reorient
  std::string re_in, re_out;
  CLI::App* reorient = app.add_subcommand("reorient", "Reorient a volume to canonical RAS");
  reorient->add_option("input", re_in, "input NIfTI")->required();
  reorient->add_option("output", re_out, "output NIfTI")->required();

  // degrade
  std::string dg_in, dg_out, dg_cell, dg_triplet, dg_protocol;
  std::uint64_t dg_seed = 0;
  CLI::App* degrade =
      app.add_subcommand("degrade", "Synthesize a low-resolution acquisition from 1 mm GT");
  degrade->add_option("input", dg_in, "ground-truth NIfTI (1 mm isotropic)")->required();
  degrade->add_option("output", dg_out, "output NIfTI")->required();
  degrade->add_option("--cell", dg_cell, "grid cell to sample, e.g. V3-A2");
  degrade->add_option("--triplet", dg_triplet, "explicit spacing triplet, e.g. 1,1,4");
  degrade->add_option("--protocol", dg_protocol,
                      "protocol distribution: volbrain, biobank, or a JSON path");
  degrade->add_option("--seed", dg_seed, "random seed")->default_val(0);

  // route
  std::string rt_in, rt_spacing;
  CLI::App* route = app.add_subcommand("route", "Pick the expert for an acquisition");
  route->add_option("input", rt_in, "NIfTI whose header spacing is routed");
  route->add_option("--spacing", rt_spacing, "spacing triplet, e.g. 1,1,4");

  // curriculum
  std::string cu_format = "json", cu_out;
  CLI::App* curriculum =
      app.add_subcommand("curriculum", "Emit the expert training curriculum");
  curriculum->add_option("--format", cu_format, "json or dot")->default_val("json");
  curriculum->add_option("--out", cu_out, "write to a file instead of stdout");

  // metrics
  std::string mt_gt, mt_pred, mt_la, mt_lb, mt_config;
  CLI::App* metrics = app.add_subcommand("metrics", "Score a prediction against ground truth");
  metrics->add_option("--gt", mt_gt, "ground-truth NIfTI")->required();
  metrics->add_option("--pred", mt_pred, "prediction NIfTI")->required();
  metrics->add_option("--labels-a", mt_la, "GT label NIfTI (default: intensity quantiles)");
  metrics->add_option("--labels-b", mt_lb, "prediction label NIfTI");
  metrics->add_option("--config", mt_config, "run config JSON");

  // evaluate
  std::vector<std::string> ev_subjects, ev_metrics;
  std::string ev_methods, ev_config, ev_out, ev_cells;
  int ev_realizations = 0, ev_jobs = 1;
  std::uint64_t ev_seed = 0;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Run the full evaluation grid");
  evaluate->add_option("--subjects", ev_subjects, "ground-truth NIfTI paths")
      ->required()
      ->delimiter(',');
  evaluate->add_option("--methods", ev_methods, "methods manifest JSON");
  evaluate->add_option("--config", ev_config, "run config JSON (or $CAHAL_CONFIG)");
  evaluate->add_option("--out", ev_out, "output directory");
  evaluate->add_option("--cells", ev_cells, "'all' or comma list like V3-A2,V4-A3");
  evaluate->add_option("--realizations", ev_realizations, "degradations per (subject, cell)");
  CLI::Option* seed_opt = evaluate->add_option("--seeds", ev_seed, "base seed");
  evaluate->add_option("--metrics", ev_metrics, "metric list")->delimiter(',');
  evaluate->add_option("--jobs", ev_jobs, "worker threads")->default_val(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (reorient->parsed()) return cmd_reorient(re_in, re_out);
    if (degrade->parsed())
      return cmd_degrade(dg_in, dg_out, dg_cell, dg_triplet, dg_protocol, dg_seed);
    if (route->parsed()) return cmd_route(rt_in, rt_spacing);
    if (curriculum->parsed()) return cmd_curriculum(cu_format, cu_out);
    if (metrics->parsed()) return cmd_metrics(mt_gt, mt_pred, mt_la, mt_lb, mt_config);
    if (evaluate->parsed())
      return cmd_evaluate(ev_subjects, ev_methods, ev_config, ev_out, ev_cells,
                          ev_realizations, ev_seed, seed_opt->count() > 0, ev_metrics,
                          ev_jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
