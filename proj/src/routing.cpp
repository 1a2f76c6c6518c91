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

#include "cahal/routing.hpp"

#include <sstream>

#include <json.hpp>

namespace cahal {

std::string curriculum_json(const CurriculumPlan& plan) {
  nlohmann::json steps = nlohmann::json::array();
  for (const CurriculumStep& s : plan.steps) {
    nlohmann::json j;
    j["cell"] = expert_id(s.cell);
    if (s.scratch) {
      j["init"] = "scratch";
    } else {
      j["init"] = "transfer";
      j["from"] = expert_id(s.parent);
      j["transfer"] = s.transfer == TransferKind::Volumetric ? "volumetric" : "anisotropy";
    }
    steps.push_back(j);
  }
  nlohmann::json root;
  root["steps"] = steps;
  return root.dump(2) + "\n";
}

std::string curriculum_dot(const CurriculumPlan& plan) {
  std::ostringstream out;
  out << "digraph curriculum {\n";
  out << "  rankdir=LR;\n";
  for (const CurriculumStep& s : plan.steps) {
    out << "  \"" << expert_id(s.cell) << "\"";
    if (s.scratch) out << " [shape=box]";
    out << ";\n";
  }
  for (const CurriculumStep& s : plan.steps) {
    if (s.scratch) continue;
    out << "  \"" << expert_id(s.parent) << "\" -> \"" << expert_id(s.cell) << "\" [label=\""
        << (s.transfer == TransferKind::Volumetric ? "volumetric" : "anisotropy") << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace cahal
