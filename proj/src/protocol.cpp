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

#include "cahal/degrade.hpp"

#include <fstream>

#include <json.hpp>

namespace cahal {

namespace {

void normalize(std::vector<double>& w, const std::string& what) {
  double sum = 0.0;
  for (double v : w) {
    if (v < 0.0) throw std::runtime_error("protocol: negative weight in " + what);
    sum += v;
  }
  if (!(sum > 0.0)) throw std::runtime_error("protocol: " + what + " weights sum to zero");
  for (double& v : w) v /= sum;
}

Histogram parse_histogram(const nlohmann::json& j, const std::string& what, double lo_min,
                          double hi_max) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "edges" && it.key() != "weights")
      throw std::runtime_error("protocol: unknown key '" + it.key() + "' in " + what);
  }
  Histogram h;
  h.edges = j.at("edges").get<std::vector<double>>();
  h.weights = j.at("weights").get<std::vector<double>>();
  if (h.edges.size() < 2 || h.weights.size() + 1 != h.edges.size())
    throw std::runtime_error("protocol: " + what + " needs n+1 edges for n weights");
  for (std::size_t i = 0; i + 1 < h.edges.size(); ++i) {
    if (!(h.edges[i] < h.edges[i + 1]))
      throw std::runtime_error("protocol: " + what + " edges must be strictly ascending");
  }
  if (h.edges.front() < lo_min || h.edges.back() > hi_max)
    throw std::runtime_error("protocol: " + what + " edges out of range");
  normalize(h.weights, what);
  return h;
}

ProtocolDistribution parse_protocol(const nlohmann::json& j, const std::string& context) {
  static const char* known[] = {"name", "note", "pattern_weights", "volume_histogram",
                                "anisotropy_histogram"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw std::runtime_error("protocol: unknown key '" + it.key() + "' in " + context);
  }

  ProtocolDistribution d;
  d.name = j.value("name", std::string("unnamed"));

  const nlohmann::json& pw = j.at("pattern_weights");
  static const char* patterns[] = {"isotropic", "axial", "sagittal", "coronal"};
  for (auto it = pw.begin(); it != pw.end(); ++it) {
    bool ok = false;
    for (const char* k : patterns) ok = ok || it.key() == k;
    if (!ok)
      throw std::runtime_error("protocol: unknown slice pattern '" + it.key() + "' in " + context);
  }
  std::vector<double> w(4, 0.0);
  for (int i = 0; i < 4; ++i) w[i] = pw.value(patterns[i], 0.0);
  normalize(w, "pattern");
  for (int i = 0; i < 4; ++i) d.pattern_weights[i] = w[i];

  d.volume_hist = parse_histogram(j.at("volume_histogram"), "volume_histogram", 0.1, 1e4);
  d.aniso_hist = parse_histogram(j.at("anisotropy_histogram"), "anisotropy_histogram", 0.0, 1.0);
  return d;
}

}  // namespace

ProtocolDistribution load_protocol(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("protocol: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("protocol: parse error in '" + path + "': " + e.what());
  }
  return parse_protocol(j, "'" + path + "'");
}

// Built-in defaults mirror data/protocols/*.json. Pattern weights follow the
// published acquisition statistics of each cohort; the magnitude histograms
// are declared approximations of the corresponding resolution spreads.
ProtocolDistribution volbrain_protocol() {
  nlohmann::json j = {
      {"name", "volbrain"},
      {"pattern_weights",
       {{"isotropic", 58.6}, {"axial", 24.1}, {"sagittal", 15.2}, {"coronal", 2.0}}},
      {"volume_histogram",
       {{"edges", {1.0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 10.5}},
        {"weights", {0.45, 0.20, 0.12, 0.08, 0.06, 0.04, 0.05}}}},
      {"anisotropy_histogram",
       {{"edges", {0.08, 0.33, 0.66, 1.0}}, {"weights", {0.25, 0.15, 0.60}}}},
  };
  return parse_protocol(j, "builtin volbrain");
}

ProtocolDistribution biobank_protocol() {
  nlohmann::json j = {
      {"name", "biobank"},
      {"pattern_weights",
       {{"isotropic", 1.5}, {"axial", 98.5}, {"sagittal", 0.0}, {"coronal", 0.0}}},
      {"volume_histogram",
       {{"edges", {1.0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 10.5}},
        {"weights", {0.30, 0.25, 0.20, 0.10, 0.07, 0.04, 0.04}}}},
      {"anisotropy_histogram",
       {{"edges", {0.08, 0.33, 0.66, 1.0}}, {"weights", {0.45, 0.40, 0.15}}}},
  };
  return parse_protocol(j, "builtin biobank");
}

std::string degradation_spec_json(const DegradationSpec& spec) {
  nlohmann::json j;
  j["triplet"] = {spec.triplet[0], spec.triplet[1], spec.triplet[2]};
  j["permutation"] = {spec.permutation[0], spec.permutation[1], spec.permutation[2]};
  j["seed"] = spec.seed;
  if (spec.has_cell)
    j["cell"] = expert_id(spec.cell);
  else
    j["cell"] = nullptr;
  return j.dump(2) + "\n";
}

}  // namespace cahal
