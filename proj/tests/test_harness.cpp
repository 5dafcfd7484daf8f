#include <catch2/catch_amalgamated.hpp>

#include "deepmac/harness.hpp"

using namespace deepmac;

TEST_CASE("the eight scenarios match the evaluation table") {
  const auto& rows = scenarios();
  REQUIRE(rows.size() == 8);
  const int nodes[] = {5, 5, 15, 15, 20, 20, 50, 50};
  const LoadClass loads[] = {LoadClass::Low, LoadClass::Low, LoadClass::Average,
                             LoadClass::Average, LoadClass::High, LoadClass::High,
                             LoadClass::Saturated, LoadClass::Saturated};
  for (int i = 0; i < 8; ++i) {
    CHECK(rows[i].id == i + 1);
    CHECK(rows[i].nodes == nodes[i]);
    CHECK(rows[i].load == loads[i]);
    CHECK(rows[i].noise == (i % 2 == 1));
  }
  CHECK(rows[0].nodes == 5);
  CHECK_FALSE(rows[0].noise);
  CHECK(rows[7].nodes == 50);
  CHECK(rows[7].load == LoadClass::Saturated);
  CHECK(rows[7].noise);
  CHECK_THROWS_AS(scenario_by_id(0), std::invalid_argument);
  CHECK_THROWS_AS(scenario_by_id(9), std::invalid_argument);
}

TEST_CASE("parallel_for covers every index and propagates exceptions") {
  std::vector<int> hits(200, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] = static_cast<int>(i) + 1; });
  for (std::size_t i = 0; i < hits.size(); ++i) REQUIRE(hits[i] == static_cast<int>(i) + 1);

  CHECK_THROWS_AS(parallel_for(8, 3,
                               [](std::size_t i) {
                                 if (i == 5) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("restricted brute force matches a hand enumeration") {
  const Scenario sc = scenario_by_id(1);
  const SimParams params;
  BruteBudget budget;
  budget.eval_duration_s = 1.0;
  budget.seeds = 2;
  budget.restrict_blocks = std::vector<BlockId>{BlockId::Ack, BlockId::Aggregation};

  // oracle: enumerate the 4 reachable genomes directly and evaluate them
  // with the same paired seeds
  std::vector<Genome> space;
  for (std::uint8_t ack : {0, 1}) {
    for (std::uint8_t agg : {0, 1}) {
      Genome g;
      g[BlockId::Ack] = ack;
      g[BlockId::Aggregation] = agg;
      space.push_back(g);
    }
  }
  Genome best_by_hand;
  double best_mean = -1.0;
  for (const Genome& g : space) {
    double sum = 0.0;
    for (int k = 0; k < budget.seeds; ++k)
      sum += run(wire(g), sc, params, derive_seed(budget.base_seed, static_cast<std::uint64_t>(k)),
                 budget.eval_duration_s)
                 .throughput_bps;
    const double mean = sum / budget.seeds;
    if (mean > best_mean) {
      best_mean = mean;
      best_by_hand = g;
    }
  }

  const BruteResult res = brute_force_best(sc, params, budget);
  CHECK(res.evaluated == 4);
  CHECK(res.best == best_by_hand);
  CHECK(res.mean_throughput_bps == Catch::Approx(best_mean));
}

TEST_CASE("brute force returns a valid genome and coarse mode subsamples") {
  const SimParams params;
  BruteBudget budget;
  budget.eval_duration_s = 0.2;
  budget.seeds = 1;
  budget.coarse = true;
  const BruteResult res = brute_force_best(scenario_by_id(3), params, budget);
  CHECK(validate(res.best).valid);
  CHECK(res.evaluated >= 1000);
  CHECK(res.evaluated <= 1200);
  CHECK(res.mean_throughput_bps > 0.0);
}

namespace {

SelectedBlocksReport tiny_report() {
  ExperimentConfig cfg;
  cfg.scenario_ids = {1};
  cfg.train_seeds = {1, 2};
  cfg.agent.total_steps = 12;
  cfg.agent.episode_len = 6;
  cfg.agent.hidden = {8, 8};
  cfg.agent.batch_size = 4;
  cfg.agent.eval_duration_s = 0.2;
  cfg.agent.final_eval_seeds = 1;
  cfg.eval_duration_s = 0.3;
  cfg.eval_seeds = 2;
  cfg.run_brute = false;
  cfg.write_traces = false;
  return run_experiment(cfg);
}

}  // namespace

TEST_CASE("run_experiment fills every requested cell deterministically") {
  const SelectedBlocksReport a = tiny_report();
  REQUIRE(a.rows.size() == 1);
  REQUIRE(a.rows[0].cells.size() == 2);
  for (const CellResult& c : a.rows[0].cells) {
    REQUIRE(c.ok);
    CHECK(validate(c.selected).valid);
    CHECK(c.agent_mean_bps > 0.0);
  }

  const SelectedBlocksReport b = tiny_report();
  CHECK(report_csv(a) == report_csv(b));
}

TEST_CASE("csv schema") {
  SECTION("header-only for an empty report") {
    const SelectedBlocksReport empty;
    CHECK(report_csv(empty) ==
          "scenario,seed,backoff,ack,frag,agg,rtscts,cw,cs,dr,agent_tput,best_tput,gap\n");
  }

  SECTION("one row per cell with block labels") {
    SelectedBlocksReport rep;
    ScenarioReport row;
    row.scenario = scenario_by_id(2);
    CellResult cell;
    cell.scenario_id = 2;
    cell.seed = 9;
    cell.ok = true;
    cell.selected = parse_genome("BEB,ACK,off,off,off,15,on,54");
    cell.agent_mean_bps = 5e6;
    row.brute_ok = true;
    row.brute.best = cell.selected;
    row.brute.mean_throughput_bps = 1e7;
    row.cells.push_back(cell);
    rep.rows.push_back(row);

    const std::string csv = report_csv(rep);
    CHECK(csv.find("2,9,BEB,ACK,off,off,off,15,on,54,5000000.000000,10000000.000000,0.500000\n") !=
          std::string::npos);
  }
}

TEST_CASE("markdown table renders excluded blocks as an em dash") {
  SelectedBlocksReport rep;
  ScenarioReport row;
  row.scenario = scenario_by_id(1);
  CellResult cell;
  cell.ok = true;
  cell.selected = parse_genome("off,ACK,off,off,off,off,on,54");
  cell.agent_mean_bps = 4e6;
  row.cells.push_back(cell);
  rep.rows.push_back(row);

  const std::string md = report_markdown(rep);
  CHECK(md.find("| Backoff | — |") != std::string::npos);
  CHECK(md.find("| Ack | ACK |") != std::string::npos);
  CHECK(md.find("| DataRate | 54 |") != std::string::npos);
}

TEST_CASE("experiment config parsing") {
  const Json j = Json::parse(R"({
    "version": 1,
    "scenarios": [1, 5],
    "train_seeds": [3, 4],
    "agent": {"total_steps": 99, "hidden": [8, 8], "tabular": true},
    "params": {"bit_error_rate": 1e-4, "load_low": 5e6},
    "brute": {"eval_duration_s": 0.5, "seeds": 3, "coarse": true},
    "eval_seeds": 2,
    "output_dir": "x"
  })");
  const ExperimentConfig cfg = experiment_config_from_json(j);
  CHECK(cfg.scenario_ids == std::vector<int>{1, 5});
  CHECK(cfg.train_seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(cfg.agent.total_steps == 99);
  CHECK(cfg.agent.tabular);
  CHECK(cfg.params.bit_error_rate == 1e-4);
  CHECK(cfg.params.load_low_bps == 5e6);
  CHECK(cfg.brute.seeds == 3);
  CHECK(cfg.brute.coarse);
  CHECK(cfg.eval_seeds == 2);
  CHECK(cfg.output_dir == "x");

  CHECK_THROWS_AS(experiment_config_from_json(Json::parse(R"({"version": 2})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(experiment_config_from_json(Json::parse(R"({"scenarios": [12]})")),
                  std::invalid_argument);
}

TEST_CASE("trend verdicts count seed majorities per finding") {
  SelectedBlocksReport rep;
  ScenarioReport s1;
  s1.scenario = scenario_by_id(1);
  for (int i = 0; i < 5; ++i) {
    CellResult c;
    c.ok = true;
    // three of five drop ACK/RTS and aggregate; two keep ACK
    c.selected = i < 3 ? parse_genome("off,off,off,2000,off,off,on,54")
                       : parse_genome("off,ACK,off,off,off,off,on,54");
    s1.cells.push_back(c);
  }
  rep.rows.push_back(s1);

  const auto verdicts = evaluate_trends(rep);
  bool found = false;
  for (const TrendVerdict& v : verdicts) {
    if (v.scenario_id != 1) {
      CHECK(v.total == 0);  // no cells for other scenarios
      CHECK_FALSE(v.pass);
      continue;
    }
    found = true;
    CHECK(v.total == 5);
    CHECK(v.passes == 3);
    CHECK(v.pass);
  }
  CHECK(found);
}

TEST_CASE("emit_report writes both files") {
  const SelectedBlocksReport rep = tiny_report();
  const std::string dir =
      (std::filesystem::temp_directory_path() / "dm_report_test").string();
  emit_report(rep, dir);
  CHECK(std::filesystem::exists(dir + "/report.csv"));
  CHECK(std::filesystem::exists(dir + "/report.md"));
  std::filesystem::remove_all(dir);
}
