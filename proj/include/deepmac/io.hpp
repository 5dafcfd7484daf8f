#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "deepmac/agent.hpp"
#include "deepmac/catalog.hpp"
#include "deepmac/logic.hpp"
#include "deepmac/sim.hpp"

namespace deepmac {

using Json = nlohmann::json;

inline Json catalog_to_json() {
  Json blocks = Json::array();
  for (const BlockSpec& spec : catalog()) {
    Json deps = Json::array();
    for (BlockId d : spec.dependencies) deps.push_back(std::string(block_name(d)));
    Json dom = Json::array();
    for (std::string_view v : spec.domain) dom.push_back(std::string(v));
    blocks.push_back({{"id", std::string(block_name(spec.id))},
                      {"event", std::string(spec.event)},
                      {"parameter", std::string(spec.parameter)},
                      {"state", std::string(spec.state)},
                      {"function", std::string(spec.function)},
                      {"dependencies", deps},
                      {"domain", dom}});
  }
  return Json{{"blocks", blocks}};
}

inline Json rules_to_json() {
  Json out = Json::array();
  for (const DependencyRule& r : rules()) {
    out.push_back({{"name", std::string(r.name)},
                   {"dependent", std::string(block_name(r.dependent))},
                   {"prerequisite", std::string(block_name(r.prerequisite))},
                   {"kind", r.kind == RuleKind::MutualExclusion ? "mutual_exclusion" : "prerequisite"},
                   {"strength", r.strength == RuleStrength::Strong ? "strong" : "weak"},
                   {"note", std::string(r.note)}});
  }
  return out;
}

inline Json to_json(const SimResult& r) {
  return Json{{"duration_s", r.sim_duration_s},
              {"delivered_payload_bits", r.delivered_payload_bits},
              {"throughput_bps", r.throughput_bps},
              {"attempts", r.attempts},
              {"collisions", r.collisions},
              {"noise_drops", r.noise_drops},
              {"msdu",
               {{"generated", r.msdu_generated},
                {"delivered", r.msdu_delivered},
                {"collided", r.msdu_collided},
                {"noise_dropped", r.msdu_noise_dropped},
                {"retry_exhausted", r.retry_exhaustions},
                {"pending", r.msdu_pending}}}};
}

inline Json to_json(const Genome& g) {
  Json out = Json::object();
  for (std::size_t i = 0; i < kNumBlocks; ++i) {
    const auto& spec = catalog()[i];
    out[std::string(block_name(spec.id))] = std::string(spec.domain[g.values[i]]);
  }
  return out;
}

// Applies one "key=value" override to the parameter set. Durations are in
// seconds, loads and rates in bits per second, frame sizes in bytes.
inline void apply_param_override(SimParams& p, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const double val = std::stod(kv.substr(eq + 1));
  if (key == "slot") p.slot_s = val;
  else if (key == "default_frame") p.default_frame_bytes = static_cast<std::uint32_t>(val);
  else if (key == "channel_capacity") p.channel_capacity_bps = val;
  else if (key == "sifs") p.sifs_s = val;
  else if (key == "difs") p.difs_s = val;
  else if (key == "mac_header") p.mac_header_bytes = static_cast<std::uint32_t>(val);
  else if (key == "ack_frame") p.ack_frame_bytes = static_cast<std::uint32_t>(val);
  else if (key == "rts_frame") p.rts_frame_bytes = static_cast<std::uint32_t>(val);
  else if (key == "cts_frame") p.cts_frame_bytes = static_cast<std::uint32_t>(val);
  else if (key == "ack_timeout") p.ack_timeout_s = val;
  else if (key == "retry_limit") p.retry_limit = static_cast<std::uint32_t>(val);
  else if (key == "bit_error_rate") p.bit_error_rate = val;
  else if (key == "load_low") p.load_low_bps = val;
  else if (key == "load_average") p.load_average_bps = val;
  else if (key == "load_high") p.load_high_bps = val;
  else throw std::invalid_argument("unknown parameter '" + key + "'");
}

inline Json to_json(const SimParams& p) {
  return Json{{"slot", p.slot_s},
              {"default_frame", p.default_frame_bytes},
              {"channel_capacity", p.channel_capacity_bps},
              {"sifs", p.sifs_s},
              {"difs", p.difs_s},
              {"mac_header", p.mac_header_bytes},
              {"ack_frame", p.ack_frame_bytes},
              {"rts_frame", p.rts_frame_bytes},
              {"cts_frame", p.cts_frame_bytes},
              {"ack_timeout", p.ack_timeout_s},
              {"retry_limit", p.retry_limit},
              {"bit_error_rate", p.bit_error_rate},
              {"load_low", p.load_low_bps},
              {"load_average", p.load_average_bps},
              {"load_high", p.load_high_bps}};
}

inline void sim_params_from_json(const Json& j, SimParams& p) {
  for (auto it = j.begin(); it != j.end(); ++it)
    apply_param_override(p, it.key() + "=" + std::to_string(it.value().get<double>()));
}

inline Json to_json(const AgentConfig& c) {
  return Json{{"gamma", c.gamma},
              {"epsilon_start", c.epsilon_start},
              {"epsilon_end", c.epsilon_end},
              {"epsilon_decay_steps", c.epsilon_decay_steps},
              {"replay_capacity", c.replay_capacity},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"grad_clip_norm", c.grad_clip_norm},
              {"target_sync_period", c.target_sync_period},
              {"hidden", c.hidden},
              {"episode_len", c.episode_len},
              {"total_steps", c.total_steps},
              {"eval_duration_s", c.eval_duration_s},
              {"final_eval_seeds", c.final_eval_seeds},
              {"tabular", c.tabular}};
}

inline void agent_config_from_json(const Json& j, AgentConfig& c) {
  if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
  if (j.contains("epsilon_start")) c.epsilon_start = j["epsilon_start"].get<double>();
  if (j.contains("epsilon_end")) c.epsilon_end = j["epsilon_end"].get<double>();
  if (j.contains("epsilon_decay_steps")) c.epsilon_decay_steps = j["epsilon_decay_steps"].get<int>();
  if (j.contains("replay_capacity")) c.replay_capacity = j["replay_capacity"].get<int>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("grad_clip_norm")) c.grad_clip_norm = j["grad_clip_norm"].get<double>();
  if (j.contains("target_sync_period")) c.target_sync_period = j["target_sync_period"].get<int>();
  if (j.contains("hidden")) c.hidden = j["hidden"].get<std::vector<int>>();
  if (j.contains("episode_len")) c.episode_len = j["episode_len"].get<int>();
  if (j.contains("total_steps")) c.total_steps = j["total_steps"].get<int>();
  if (j.contains("eval_duration_s")) c.eval_duration_s = j["eval_duration_s"].get<double>();
  if (j.contains("final_eval_seeds")) c.final_eval_seeds = j["final_eval_seeds"].get<int>();
  if (j.contains("tabular")) c.tabular = j["tabular"].get<bool>();
}

inline Json trace_to_json(const TrainResult& r) {
  Json steps = Json::array();
  for (const StepRecord& s : r.trace)
    steps.push_back({{"step", s.step},
                     {"genome", format_genome(s.genome)},
                     {"action", s.action},
                     {"reward", s.reward},
                     {"loss", s.loss},
                     {"epsilon", s.epsilon}});
  return Json{{"steps", steps},
              {"selected", {{"genome", format_genome(r.selected)},
                            {"blocks", to_json(r.selected)},
                            {"mean_reward", r.selected_reward}}}};
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Json j;
  in >> j;
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace deepmac
