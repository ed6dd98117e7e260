// Copyright 2026 The SHARP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHARP_CONFIG_HPP_
#define SHARP_CONFIG_HPP_

#include <string>

#include "sharp/analytics.hpp"
#include "sharp/factworld.hpp"
#include "sharp/optim.hpp"

namespace sharp {

// Complete description of one run. A persisted config reproduces the run
// bit-exactly on the same build; all defaults are the tuned values
// (alpha 0.9, beta 0.9, gamma 0.1, eps 0.2, delta 1e-6, G 8, lr 1e-5).
struct RunConfig {
  FactWorldSpec env = make_poison_world();
  TrainConfig train;
  CreditEstimator estimator = CreditEstimator::exact;
  std::string output_dir = "out";
  int eval_episodes = 200;
  int jobs = 1;

  void validate() const;
};

// JSON round trip. Parsing rejects unknown keys and reports the offending
// field; serialization is canonical, so config -> text -> config -> text
// is byte-identical.
std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text);
RunConfig load_config_file(const std::string& path);
void save_config_file(const RunConfig& config, const std::string& path);

}  // namespace sharp

#endif  // SHARP_CONFIG_HPP_
