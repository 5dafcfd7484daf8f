// deepmac: compose, validate, simulate and learn 802.11-style MAC
// protocols built from parametric blocks.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "deepmac/harness.hpp"

namespace {

deepmac::SimParams params_with_overrides(const std::vector<std::string>& overrides) {
  deepmac::SimParams p;
  for (const std::string& kv : overrides) deepmac::apply_param_override(p, kv);
  return p;
}

int cmd_catalog(bool with_rules) {
  deepmac::Json out = deepmac::catalog_to_json();
  if (with_rules) out["rules"] = deepmac::rules_to_json();
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_validate(const std::string& genome_str) {
  const deepmac::Genome g = deepmac::parse_genome(genome_str);
  const deepmac::ValidationResult res = deepmac::validate(g);
  for (const auto& v : res.violations) std::cout << v.message << "\n";
  for (const auto& w : res.warnings) std::cout << "warning: " << w << "\n";
  if (res.valid) std::cout << "valid: " << deepmac::format_genome(g) << "\n";
  return res.valid ? 0 : 1;
}

int cmd_simulate(const std::string& genome_str, int scenario_id, std::uint64_t seed,
                 double duration_s, const std::vector<std::string>& overrides) {
  const deepmac::SimParams params = params_with_overrides(overrides);
  const deepmac::Genome g = deepmac::parse_genome(genome_str);
  const deepmac::ProtocolGraph graph = deepmac::wire(g);
  const deepmac::SimResult res =
      deepmac::run(graph, deepmac::scenario_by_id(scenario_id), params, seed, duration_s);
  std::cout << deepmac::to_json(res).dump(2) << "\n";
  return 0;
}

int cmd_train(int scenario_id, std::uint64_t seed, bool tabular, int steps,
              const std::vector<int>& hidden, double eval_duration_s,
              const std::string& out_path, const std::string& weights_path,
              const std::vector<std::string>& overrides) {
  const deepmac::SimParams params = params_with_overrides(overrides);
  deepmac::AgentConfig cfg;
  cfg.tabular = tabular;
  if (steps > 0) cfg.total_steps = steps;
  if (!hidden.empty()) cfg.hidden = hidden;
  if (eval_duration_s > 0) cfg.eval_duration_s = eval_duration_s;

  deepmac::SimEnvironment env(deepmac::scenario_by_id(scenario_id), params, cfg.eval_duration_s);
  const deepmac::TrainResult result = deepmac::train(env, cfg, seed);

  const deepmac::Json trace = deepmac::trace_to_json(result);
  if (out_path.empty()) {
    std::cout << trace.dump(2) << "\n";
  } else {
    deepmac::write_text_file(out_path, trace.dump(2) + "\n");
    std::cout << trace["selected"].dump(2) << "\n";
  }
  if (!weights_path.empty() && !tabular) result.net.save(weights_path);
  return 0;
}

int cmd_brute(int scenario_id, double duration_s, int seeds, bool coarse, unsigned threads,
              const std::vector<std::string>& overrides) {
  const deepmac::SimParams params = params_with_overrides(overrides);
  deepmac::BruteBudget budget;
  budget.eval_duration_s = duration_s;
  budget.seeds = seeds;
  budget.coarse = coarse;
  budget.threads = threads;
  const deepmac::BruteResult res =
      deepmac::brute_force_best(deepmac::scenario_by_id(scenario_id), params, budget);
  deepmac::Json out = {{"scenario", scenario_id},
                       {"genome", deepmac::format_genome(res.best)},
                       {"blocks", deepmac::to_json(res.best)},
                       {"mean_throughput_bps", res.mean_throughput_bps},
                       {"genomes_evaluated", res.evaluated}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_run(const std::string& config_path) {
  const deepmac::ExperimentConfig cfg =
      deepmac::experiment_config_from_json(deepmac::load_json_file(config_path));
  const deepmac::SelectedBlocksReport report = deepmac::run_experiment(cfg);
  deepmac::emit_report(report, cfg.output_dir);
  std::cout << deepmac::report_markdown(report);
  std::cout << "report written to " << cfg.output_dir << "/report.{csv,md}\n";
  return 0;
}

int cmd_verify_trends(const std::string& config_path) {
  deepmac::ExperimentConfig cfg =
      deepmac::experiment_config_from_json(deepmac::load_json_file(config_path));
  cfg.run_brute = false;  // trends only need the agent's selections
  const deepmac::SelectedBlocksReport report = deepmac::run_experiment(cfg);
  const auto verdicts = deepmac::evaluate_trends(report);
  bool all = true;
  for (const auto& v : verdicts) {
    std::printf("%s  %-60s %d/%d seeds\n", v.pass ? "PASS" : "FAIL", v.name.c_str(), v.passes,
                v.total);
    all = all && v.pass;
  }
  std::filesystem::create_directories(cfg.output_dir);
  deepmac::write_text_file(cfg.output_dir + "/trends.json",
                           deepmac::trends_to_json(verdicts).dump(2) + "\n");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAC protocol composition, simulation and block-selection learning"};
  app.require_subcommand(1);

  bool with_rules = false;
  auto* cat = app.add_subcommand("catalog", "dump the block catalog as JSON");
  cat->add_flag("--rules", with_rules, "include the dependency rule set");

  std::string genome_str;
  auto* val = app.add_subcommand("validate", "check a genome against the dependency rules");
  val->add_option("genome", genome_str, "8 comma-separated variant labels, e.g. BEB,ACK,off,off,off,15,on,54")
      ->required();

  int scenario_id = 1;
  std::uint64_t seed = 1;
  double duration_s = 10.0;
  std::vector<std::string> overrides;
  auto* sim = app.add_subcommand("simulate", "run one seeded simulation, JSON result on stdout");
  sim->add_option("--genome", genome_str)->required();
  sim->add_option("--scenario", scenario_id, "scenario id 1..8")->required();
  sim->add_option("--seed", seed)->capture_default_str();
  sim->add_option("--duration-s", duration_s)->capture_default_str();
  sim->add_option("--param", overrides, "simulation parameter override key=value");

  bool tabular = false;
  int steps = 0;
  std::vector<int> hidden;
  double eval_duration_s = 0.0;
  std::string out_path, weights_path;
  auto* trn = app.add_subcommand("train", "train the agent on one scenario");
  trn->add_option("--scenario", scenario_id)->required();
  trn->add_option("--seed", seed)->capture_default_str();
  trn->add_flag("--tabular", tabular, "tabular Q-learning instead of the neural network");
  trn->add_option("--steps", steps, "total training steps");
  trn->add_option("--hidden", hidden, "hidden layer widths")->delimiter(',');
  trn->add_option("--eval-duration-s", eval_duration_s, "simulated seconds per reward evaluation");
  trn->add_option("--out", out_path, "write the JSON trace here instead of stdout");
  trn->add_option("--save-weights", weights_path, "write trained weights (binary)");
  trn->add_option("--param", overrides);

  double bf_duration = 2.0;
  int bf_seeds = 2;
  bool coarse = false;
  unsigned threads = 0;
  auto* bf = app.add_subcommand("brute-force", "search all valid genomes for the best throughput");
  bf->add_option("--scenario", scenario_id)->required();
  bf->add_option("--duration-s", bf_duration)->capture_default_str();
  bf->add_option("--seeds", bf_seeds)->capture_default_str();
  bf->add_flag("--coarse", coarse, "stride-sample ~1/12 of the valid genomes");
  bf->add_option("--threads", threads, "worker threads (0 = all cores)");
  bf->add_option("--param", overrides);

  std::string config_path;
  auto* runc = app.add_subcommand("run", "run the full experiment from a JSON config");
  runc->add_option("--config", config_path)->required();

  auto* vt = app.add_subcommand("verify-trends", "train per scenario and check the block-selection trends");
  vt->add_option("--config", config_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cat->parsed()) return cmd_catalog(with_rules);
    if (val->parsed()) return cmd_validate(genome_str);
    if (sim->parsed()) return cmd_simulate(genome_str, scenario_id, seed, duration_s, overrides);
    if (trn->parsed())
      return cmd_train(scenario_id, seed, tabular, steps, hidden, eval_duration_s, out_path,
                       weights_path, overrides);
    if (bf->parsed()) return cmd_brute(scenario_id, bf_duration, bf_seeds, coarse, threads, overrides);
    if (runc->parsed()) return cmd_run(config_path);
    if (vt->parsed()) return cmd_verify_trends(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
