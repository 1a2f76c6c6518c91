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

#ifndef CAHAL_CONFIG_HPP
#define CAHAL_CONFIG_HPP

#include <cstdint>
#include <string>

#include "cahal/metrics.hpp"

namespace cahal {

/// Run-wide knobs. Everything that influences numbers lives here so a run
/// can be reproduced from its manifest alone.
struct RunConfig {
  LossConstants loss;
  std::string protocol;  // path to a protocol JSON, or "volbrain" / "biobank"
  Index voxel_budget = 16777216;  // 256^3
  Index overlap = 16;
  std::uint64_t base_seed = 20270304;
  int realizations = 3;
  double alpha = 0.05;
  int dice_classes = 4;
  std::string out_dir = "cahal-out";
};

/// Parse a config JSON; unknown keys are rejected, absent keys keep their
/// defaults.
RunConfig load_run_config(const std::string& path);

/// Canonical JSON dump (sorted keys, stable formatting).
std::string run_config_json(const RunConfig& c);

/// FNV-1a hash of the canonical dump, as fixed-width hex.
std::string config_hash(const RunConfig& c);

}  // namespace cahal

#endif
