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

#include "cahal/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cahal {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw std::runtime_error("config: unknown key \"" + it.key() + "\" in " +
                               where);
    }
  }
}

double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw std::runtime_error(std::string("config: \"") + key +
                             "\" must be a number");
  }
  return j[key].get<double>();
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("config: parse error in " + path + ": " +
                             e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: root must be an object");
  reject_unknown(j,
                 {"loss", "protocol", "voxel_budget", "overlap", "base_seed",
                  "realizations", "alpha", "dice_classes", "out_dir"},
                 path);

  RunConfig c;
  if (j.contains("loss")) {
    const json& l = j["loss"];
    if (!l.is_object()) throw std::runtime_error("config: \"loss\" must be an object");
    reject_unknown(l, {"gamma", "epsilon", "lambda_fft", "lambda_seg"},
                   "\"loss\"");
    c.loss.gamma = get_number(l, "gamma", c.loss.gamma);
    c.loss.epsilon = get_number(l, "epsilon", c.loss.epsilon);
    c.loss.lambda_fft = get_number(l, "lambda_fft", c.loss.lambda_fft);
    c.loss.lambda_seg = get_number(l, "lambda_seg", c.loss.lambda_seg);
  }
  if (j.contains("protocol")) {
    if (!j["protocol"].is_string()) {
      throw std::runtime_error("config: \"protocol\" must be a string");
    }
    c.protocol = j["protocol"].get<std::string>();
  }
  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string()) {
      throw std::runtime_error("config: \"out_dir\" must be a string");
    }
    c.out_dir = j["out_dir"].get<std::string>();
  }
  c.voxel_budget =
      static_cast<Index>(get_number(j, "voxel_budget", static_cast<double>(c.voxel_budget)));
  c.overlap = static_cast<Index>(get_number(j, "overlap", static_cast<double>(c.overlap)));
  c.base_seed = static_cast<std::uint64_t>(
      get_number(j, "base_seed", static_cast<double>(c.base_seed)));
  c.realizations =
      static_cast<int>(get_number(j, "realizations", c.realizations));
  c.alpha = get_number(j, "alpha", c.alpha);
  c.dice_classes = static_cast<int>(get_number(j, "dice_classes", c.dice_classes));

  if (c.voxel_budget < 1) throw std::runtime_error("config: voxel_budget must be >= 1");
  if (c.overlap < 0) throw std::runtime_error("config: overlap must be >= 0");
  if (c.realizations < 1) throw std::runtime_error("config: realizations must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    throw std::runtime_error("config: alpha must lie in (0, 1)");
  }
  if (c.dice_classes < 2) throw std::runtime_error("config: dice_classes must be >= 2");
  return c;
}

std::string run_config_json(const RunConfig& c) {
  json j;
  j["loss"]["gamma"] = c.loss.gamma;
  j["loss"]["epsilon"] = c.loss.epsilon;
  j["loss"]["lambda_fft"] = c.loss.lambda_fft;
  j["loss"]["lambda_seg"] = c.loss.lambda_seg;
  j["protocol"] = c.protocol;
  j["voxel_budget"] = static_cast<std::int64_t>(c.voxel_budget);
  j["overlap"] = static_cast<std::int64_t>(c.overlap);
  j["base_seed"] = c.base_seed;
  j["realizations"] = c.realizations;
  j["alpha"] = c.alpha;
  j["dice_classes"] = c.dice_classes;
  j["out_dir"] = c.out_dir;
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& c) {
  const std::uint64_t h = fnv1a64(run_config_json(c));
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace cahal
