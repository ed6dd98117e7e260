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

#ifndef SHARP_TRAJECTORY_LOG_HPP_
#define SHARP_TRAJECTORY_LOG_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "sharp/factworld.hpp"
#include "sharp/rollout.hpp"

namespace sharp {

// Line-delimited JSON trajectory log. One JSON object per line; fields:
//   query_id, required, planner (context/action/answer triples), workers
//   (per-slot tool-call records with tool, target, success, granted,
//   corrupted, validity), answer, answered, r_acc, stream_key, rng.
// Batch headers are objects with a single "batch" key carrying query_id,
// G, params_version and base_seed. Serialization is canonical (sorted
// keys, shortest-round-trip numbers), so write -> read -> write is
// byte-identical.
std::string trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const std::string& line);

std::string batch_header_json(const GroupBatch& batch);

void write_batch(const GroupBatch& batch, std::ostream& out);

// Reads every trajectory line from a log, skipping batch headers. Throws
// ParseError with the offending line number on schema violations.
std::vector<Trajectory> read_trajectory_log(std::istream& in);
std::vector<Trajectory> read_trajectory_log_file(const std::string& path);

}  // namespace sharp

#endif  // SHARP_TRAJECTORY_LOG_HPP_
