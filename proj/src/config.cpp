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

#include "sharp/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "sharp/errors.hpp"

namespace sharp {

namespace {

using nlohmann::json;

json facts_json(FactSet facts) { return json(facts.to_list()); }

FactSet facts_from(const json& value, const std::string& field) {
  if (!value.is_array()) throw ConfigError(field + " must be a fact array");
  FactSet out;
  for (const json& item : value) {
    if (!item.is_number_integer())
      throw ConfigError(field + " must contain integers");
    int f = item.get<int>();
    if (f < 0 || f >= 64) throw ConfigError(field + " facts must be in [0, 64)");
    out = out.with(f);
  }
  return out;
}

void expect_keys(const json& object, std::initializer_list<const char*> keys,
                 const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (const char* k : keys)
      if (key == k) known = true;
    if (!known) throw ConfigError("unknown key '" + where + key + "'");
  }
}

template <typename T>
T field(const json& object, const char* key, const T& fallback,
        const std::string& where) {
  if (!object.contains(key)) return fallback;
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + where + key + "'");
  }
}

json env_to_json(const FactWorldSpec& spec) {
  json templates = json::array();
  for (const SubtaskTemplate& t : spec.templates)
    templates.push_back({{"target", facts_json(t.target)}});
  json tools = json::array();
  for (const ToolSpec& tool : spec.tools) {
    json entry = {{"name", tool.name}, {"poison", tool.poison}};
    if (tool.poison) {
      entry["corrupt"] = tool.corrupt_prob;
    } else {
      std::vector<double> probs(tool.success_prob.data(),
                                tool.success_prob.data() +
                                    tool.success_prob.size());
      entry["success"] = probs;
    }
    tools.push_back(std::move(entry));
  }
  return {{"n_facts", spec.n_facts},
          {"required_facts", facts_json(spec.required_pool)},
          {"required_choose", spec.required_choose},
          {"templates", std::move(templates)},
          {"tools", std::move(tools)},
          {"planner_turn_budget", spec.planner_turn_budget},
          {"worker_step_budget", spec.worker_step_budget}};
}

FactWorldSpec env_from_json(const json& object) {
  expect_keys(object,
              {"n_facts", "required_facts", "required_choose", "templates",
               "tools", "planner_turn_budget", "worker_step_budget"},
              "env.");
  FactWorldSpec spec;
  spec.n_facts = field(object, "n_facts", 0, "env.");
  spec.required_pool = facts_from(object.value("required_facts", json::array()),
                                  "env.required_facts");
  spec.required_choose = field(object, "required_choose", 0, "env.");
  if (object.contains("templates")) {
    for (const json& entry : object.at("templates")) {
      expect_keys(entry, {"target"}, "env.templates[].");
      SubtaskTemplate t;
      t.target = facts_from(entry.value("target", json::array()),
                            "env.templates[].target");
      spec.templates.push_back(t);
    }
  }
  if (object.contains("tools")) {
    for (const json& entry : object.at("tools")) {
      expect_keys(entry, {"name", "poison", "corrupt", "success"},
                  "env.tools[].");
      ToolSpec tool;
      tool.name = field<std::string>(entry, "name", "", "env.tools[].");
      tool.poison = field(entry, "poison", false, "env.tools[].");
      if (tool.poison) {
        tool.corrupt_prob = field(entry, "corrupt", 0.0, "env.tools[].");
        tool.success_prob = Eigen::VectorXd::Zero(spec.n_facts);
      } else {
        auto probs = field<std::vector<double>>(entry, "success", {},
                                                "env.tools[].");
        tool.success_prob = Eigen::Map<const Eigen::VectorXd>(
            probs.data(), static_cast<Eigen::Index>(probs.size()));
      }
      spec.tools.push_back(std::move(tool));
    }
  }
  spec.planner_turn_budget = field(object, "planner_turn_budget", 1, "env.");
  spec.worker_step_budget = field(object, "worker_step_budget", 1, "env.");
  return spec;
}

const char* optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::adamw ? "adamw" : "ascent";
}

OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "ascent") return OptimizerKind::gradient_ascent;
  if (name == "adamw") return OptimizerKind::adamw;
  throw ConfigError("unknown optimizer '" + name + "' (expected ascent|adamw)");
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  train.validate();
  if (output_dir.empty()) throw ConfigError("output_dir must be nonempty");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

std::string config_to_json(const RunConfig& config) {
  json doc = {
      {"env", env_to_json(config.env)},
      {"reward",
       {{"alpha", config.train.weights.alpha},
        {"beta", config.train.weights.beta},
        {"gamma", config.train.weights.gamma},
        {"lambda_planner", config.train.weights.lambda_planner},
        {"sparsify_p", config.train.weights.sparsify_p}}},
      {"train",
       {{"group_size", config.train.group_size},
        {"epsilon_clip", config.train.epsilon_clip},
        {"delta_stab", config.train.delta_stab},
        {"learning_rate", config.train.learning_rate},
        {"steps", config.train.steps},
        {"seed", config.train.seed},
        {"optimizer", optimizer_name(config.train.optimizer)},
        {"pool_worker_stats", config.train.pool_worker_stats},
        {"divergence_bound", config.train.divergence_bound}}},
      {"estimator", estimator_name(config.estimator)},
      {"output_dir", config.output_dir},
      {"eval_episodes", config.eval_episodes},
      {"jobs", config.jobs}};
  return doc.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  expect_keys(doc,
              {"env", "reward", "train", "estimator", "output_dir",
               "eval_episodes", "jobs"},
              "");

  RunConfig config;
  if (doc.contains("env")) config.env = env_from_json(doc.at("env"));
  if (doc.contains("reward")) {
    const json& reward = doc.at("reward");
    expect_keys(reward,
                {"alpha", "beta", "gamma", "lambda_planner", "sparsify_p"},
                "reward.");
    RewardWeights w;
    w.alpha = field(reward, "alpha", w.alpha, "reward.");
    w.beta = field(reward, "beta", w.beta, "reward.");
    w.gamma = field(reward, "gamma", w.gamma, "reward.");
    w.lambda_planner =
        field(reward, "lambda_planner", w.lambda_planner, "reward.");
    w.sparsify_p = field(reward, "sparsify_p", w.sparsify_p, "reward.");
    config.train.weights = w;
  }
  if (doc.contains("train")) {
    const json& train = doc.at("train");
    expect_keys(train,
                {"group_size", "epsilon_clip", "delta_stab", "learning_rate",
                 "steps", "seed", "optimizer", "pool_worker_stats",
                 "divergence_bound"},
                "train.");
    TrainConfig& t = config.train;
    t.group_size = field(train, "group_size", t.group_size, "train.");
    t.epsilon_clip = field(train, "epsilon_clip", t.epsilon_clip, "train.");
    t.delta_stab = field(train, "delta_stab", t.delta_stab, "train.");
    t.learning_rate =
        field(train, "learning_rate", t.learning_rate, "train.");
    t.steps = field(train, "steps", t.steps, "train.");
    t.seed = field<std::uint64_t>(train, "seed", t.seed, "train.");
    t.optimizer = optimizer_from_name(
        field<std::string>(train, "optimizer", "ascent", "train."));
    t.pool_worker_stats =
        field(train, "pool_worker_stats", t.pool_worker_stats, "train.");
    t.divergence_bound =
        field(train, "divergence_bound", t.divergence_bound, "train.");
  }
  if (doc.contains("estimator"))
    config.estimator = estimator_from_name(
        field<std::string>(doc, "estimator", "exact", ""));
  config.output_dir =
      field<std::string>(doc, "output_dir", config.output_dir, "");
  config.eval_episodes =
      field(doc, "eval_episodes", config.eval_episodes, "");
  config.jobs = field(doc, "jobs", config.jobs, "");
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

void save_config_file(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << config_to_json(config);
}

}  // namespace sharp
