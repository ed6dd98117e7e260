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

#include "sharp/trajectory_log.hpp"

#include <fstream>
#include <json.hpp>

#include "sharp/errors.hpp"

namespace sharp {

namespace {

using nlohmann::json;

json facts_json(FactSet facts) { return json(facts.to_list()); }

FactSet facts_from(const json& value) {
  FactSet out;
  for (int f : value.get<std::vector<int>>()) {
    if (f < 0 || f >= 64) throw std::invalid_argument("fact out of range");
    out = out.with(f);
  }
  return out;
}

}  // namespace

std::string trajectory_to_json(const Trajectory& trajectory) {
  json planner = json::array();
  for (const PlannerActionRecord& record : trajectory.planner_trace) {
    planner.push_back({{"ctx", record.context_bucket},
                       {"a", record.action_id},
                       {"ans", facts_json(record.answer)}});
  }
  json workers = json::array();
  for (const auto& trace : trajectory.worker_traces) {
    json calls = json::array();
    for (const ToolCallRecord& record : trace) {
      calls.push_back({{"step", record.step},
                       {"ctx", record.context_bucket},
                       {"tool", record.tool_id},
                       {"target", facts_json(record.target)},
                       {"success", record.success},
                       {"granted", facts_json(record.granted)},
                       {"corrupted", facts_json(record.corrupted)},
                       {"validity", record.validity}});
    }
    workers.push_back(std::move(calls));
  }
  json line = {{"query_id", trajectory.query.id},
               {"required", facts_json(trajectory.query.required)},
               {"planner", std::move(planner)},
               {"workers", std::move(workers)},
               {"answer", facts_json(trajectory.terminal_answer)},
               {"answered", trajectory.answered},
               {"r_acc", terminal_accuracy(trajectory)},
               {"stream_key", trajectory.stream_key},
               {"rng", trajectory.rng_trace}};
  return line.dump();
}

Trajectory trajectory_from_json(const std::string& text) {
  const json line = json::parse(text);
  Trajectory trajectory;
  trajectory.query.id = line.at("query_id").get<std::uint64_t>();
  trajectory.query.required = facts_from(line.at("required"));
  for (const json& entry : line.at("planner")) {
    PlannerActionRecord record;
    record.context_bucket = entry.at("ctx").get<int>();
    record.action_id = entry.at("a").get<int>();
    record.answer = facts_from(entry.at("ans"));
    trajectory.planner_trace.push_back(record);
  }
  for (const json& trace : line.at("workers")) {
    std::vector<ToolCallRecord> calls;
    int slot = static_cast<int>(trajectory.worker_traces.size()) + 1;
    for (const json& entry : trace) {
      ToolCallRecord record;
      record.slot = slot;
      record.step = entry.at("step").get<int>();
      record.context_bucket = entry.at("ctx").get<int>();
      record.tool_id = entry.at("tool").get<int>();
      record.target = facts_from(entry.at("target"));
      record.success = entry.at("success").get<bool>();
      record.granted = facts_from(entry.at("granted"));
      record.corrupted = facts_from(entry.at("corrupted"));
      record.validity = entry.at("validity").get<double>();
      calls.push_back(record);
    }
    trajectory.worker_traces.push_back(std::move(calls));
  }
  trajectory.terminal_answer = facts_from(line.at("answer"));
  trajectory.answered = line.at("answered").get<bool>();
  trajectory.terminal = true;
  trajectory.stream_key = line.at("stream_key").get<std::uint64_t>();
  trajectory.rng_trace = line.at("rng").get<std::vector<double>>();
  return trajectory;
}

std::string batch_header_json(const GroupBatch& batch) {
  json header = {{"batch",
                  {{"query_id", batch.query.id},
                   {"G", batch.group_size},
                   {"params_version", batch.old_params.version()},
                   {"base_seed", batch.base_seed}}}};
  return header.dump();
}

void write_batch(const GroupBatch& batch, std::ostream& out) {
  out << batch_header_json(batch) << "\n";
  for (const Trajectory& trajectory : batch.trajectories)
    out << trajectory_to_json(trajectory) << "\n";
}

std::vector<Trajectory> read_trajectory_log(std::istream& in) {
  std::vector<Trajectory> trajectories;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json parsed = json::parse(line);
      if (parsed.contains("batch")) continue;  // batch header
      trajectories.push_back(trajectory_from_json(line));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return trajectories;
}

std::vector<Trajectory> read_trajectory_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory log: " + path, 0);
  return read_trajectory_log(in);
}

}  // namespace sharp
