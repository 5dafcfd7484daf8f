#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

#include "deepmac/io.hpp"

namespace deepmac {

// The eight evaluation scenarios.
inline const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> rows = {
      {1, 5, LoadClass::Low, false},      {2, 5, LoadClass::Low, true},
      {3, 15, LoadClass::Average, false}, {4, 15, LoadClass::Average, true},
      {5, 20, LoadClass::High, false},    {6, 20, LoadClass::High, true},
      {7, 50, LoadClass::Saturated, false}, {8, 50, LoadClass::Saturated, true},
  };
  return rows;
}

inline const Scenario& scenario_by_id(int id) {
  for (const Scenario& s : scenarios())
    if (s.id == id) return s;
  throw std::invalid_argument("scenario id must be in 1..8, got " + std::to_string(id));
}

// Runs fn(0..n-1) on a small worker pool; results must be written to
// per-index slots so the outcome is independent of scheduling.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

struct BruteBudget {
  double eval_duration_s = 2.0;
  int seeds = 2;
  bool coarse = false;  // stride-sample ~1/12 of the valid genomes
  std::uint64_t base_seed = 7777;
  // when set, only genomes whose other blocks stay excluded are searched
  std::optional<std::vector<BlockId>> restrict_blocks;
  unsigned threads = 0;
};

struct BruteResult {
  Genome best;
  double mean_throughput_bps = 0.0;
  std::size_t evaluated = 0;
};

// Exhaustive (or stride-sampled) search over the valid genomes for the
// highest mean throughput. Seeds are shared across genomes, so the
// comparison is paired and the result is deterministic.
inline BruteResult brute_force_best(const Scenario& scenario, const SimParams& params,
                                    const BruteBudget& budget) {
  if (!(budget.eval_duration_s > 0.0))
    throw std::invalid_argument("brute-force evaluation duration must be positive");
  if (budget.seeds < 1) throw std::invalid_argument("brute force needs at least one seed");

  std::vector<Genome> pool;
  for (const Genome& g : enumerate_genomes()) {
    if (budget.restrict_blocks) {
      bool ok = true;
      for (std::size_t i = 0; i < kNumBlocks; ++i) {
        const BlockId b = static_cast<BlockId>(i);
        if (g.values[i] != 0 &&
            std::find(budget.restrict_blocks->begin(), budget.restrict_blocks->end(), b) ==
                budget.restrict_blocks->end())
          ok = false;
      }
      if (!ok) continue;
    }
    if (validate(g).valid) pool.push_back(g);
  }
  if (budget.coarse) {
    // stratified subsample: every k-th valid genome, targeting ~1024
    const std::size_t stride = std::max<std::size_t>(1, pool.size() / 1024);
    std::vector<Genome> sampled;
    for (std::size_t i = 0; i < pool.size(); i += stride) sampled.push_back(pool[i]);
    pool = std::move(sampled);
  }

  std::vector<double> mean(pool.size(), 0.0);
  parallel_for(pool.size(), budget.threads, [&](std::size_t i) {
    const ProtocolGraph graph = wire(pool[i]);
    double sum = 0.0;
    for (int k = 0; k < budget.seeds; ++k)
      sum += run(graph, scenario, params, derive_seed(budget.base_seed, static_cast<std::uint64_t>(k)),
                 budget.eval_duration_s)
                 .throughput_bps;
    mean[i] = sum / budget.seeds;
  });

  BruteResult out;
  out.evaluated = pool.size();
  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i)
    if (mean[i] > mean[best]) best = i;
  out.best = pool[best];
  out.mean_throughput_bps = mean[best];
  return out;
}

// ---- experiment pipeline ----------------------------------------------

struct ExperimentConfig {
  std::vector<int> scenario_ids = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<std::uint64_t> train_seeds = {1, 2, 3, 4, 5};
  AgentConfig agent;
  SimParams params;
  BruteBudget brute;
  double eval_duration_s = 10.0;  // measurement of the selected genome
  int eval_seeds = 5;
  std::uint64_t eval_base_seed = 424242;
  std::string output_dir = "deepmac-out";
  bool run_brute = true;
  bool write_traces = true;
  unsigned threads = 0;
};

struct CellResult {
  int scenario_id = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Genome selected;
  double agent_mean_bps = 0.0;
  double agent_std_bps = 0.0;
};

struct ScenarioReport {
  Scenario scenario;
  bool brute_ok = false;
  BruteResult brute;
  std::vector<CellResult> cells;
};

struct SelectedBlocksReport {
  std::vector<ScenarioReport> rows;
};

// Measures a genome's throughput over the config's evaluation seeds.
inline std::pair<double, double> measure_genome(const Genome& g, const Scenario& sc,
                                                const ExperimentConfig& cfg) {
  const ProtocolGraph graph = wire(g);
  std::vector<double> xs;
  for (int k = 0; k < cfg.eval_seeds; ++k)
    xs.push_back(run(graph, sc, cfg.params,
                     derive_seed(cfg.eval_base_seed, static_cast<std::uint64_t>(k)),
                     cfg.eval_duration_s)
                     .throughput_bps);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double stddev = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
  return {mean, stddev};
}

inline CellResult run_cell(const Scenario& sc, std::uint64_t seed, const ExperimentConfig& cfg,
                           TrainResult* trace_out = nullptr) {
  CellResult cell;
  cell.scenario_id = sc.id;
  cell.seed = seed;
  try {
    SimEnvironment env(sc, cfg.params, cfg.agent.eval_duration_s);
    TrainResult tr = train(env, cfg.agent, seed);
    cell.selected = tr.selected;
    const auto [mean, stddev] = measure_genome(tr.selected, sc, cfg);
    cell.agent_mean_bps = mean;
    cell.agent_std_bps = stddev;
    cell.ok = true;
    if (trace_out) *trace_out = std::move(tr);
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

// Trains and evaluates every (scenario, seed) cell, computes the
// brute-force reference per scenario, and writes the report files.
// A failing cell is recorded and the experiment continues.
inline SelectedBlocksReport run_experiment(const ExperimentConfig& cfg) {
  SelectedBlocksReport report;
  for (int id : cfg.scenario_ids) report.rows.push_back({scenario_by_id(id), false, {}, {}});

  if (cfg.write_traces) std::filesystem::create_directories(cfg.output_dir);

  for (ScenarioReport& row : report.rows) {
    row.cells.resize(cfg.train_seeds.size());
    std::vector<TrainResult> traces(cfg.train_seeds.size());
    parallel_for(cfg.train_seeds.size(), cfg.threads, [&](std::size_t i) {
      row.cells[i] = run_cell(row.scenario, cfg.train_seeds[i], cfg,
                              cfg.write_traces ? &traces[i] : nullptr);
    });
    if (cfg.write_traces) {
      for (std::size_t i = 0; i < traces.size(); ++i) {
        if (!row.cells[i].ok) continue;
        const std::string path = cfg.output_dir + "/trace-s" + std::to_string(row.scenario.id) +
                                 "-seed" + std::to_string(cfg.train_seeds[i]) + ".json";
        write_text_file(path, trace_to_json(traces[i]).dump(2) + "\n");
      }
    }
    if (cfg.run_brute) {
      try {
        BruteBudget b = cfg.brute;
        b.threads = cfg.threads;
        row.brute = brute_force_best(row.scenario, cfg.params, b);
        row.brute_ok = true;
      } catch (const std::exception& e) {
        row.brute_ok = false;
        for (CellResult& c : row.cells)
          if (c.error.empty() && !c.ok) c.error = e.what();
      }
    }
  }
  return report;
}

// ---- report files -------------------------------------------------------

inline std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string report_csv(const SelectedBlocksReport& report) {
  std::string out = "scenario,seed,backoff,ack,frag,agg,rtscts,cw,cs,dr,agent_tput,best_tput,gap\n";
  for (const ScenarioReport& row : report.rows) {
    for (const CellResult& cell : row.cells) {
      out += std::to_string(row.scenario.id) + "," + std::to_string(cell.seed);
      if (cell.ok) {
        for (std::size_t b = 0; b < kNumBlocks; ++b) {
          out += ",";
          out += catalog()[b].domain[cell.selected.values[b]];
        }
        out += "," + format_fixed(cell.agent_mean_bps);
        if (row.brute_ok) {
          const double best = row.brute.mean_throughput_bps;
          out += "," + format_fixed(best);
          out += "," + format_fixed(best > 0.0 ? (best - cell.agent_mean_bps) / best : 0.0);
        } else {
          out += ",,";
        }
      } else {
        out += ",,,,,,,,,,,";
      }
      out += "\n";
    }
  }
  return out;
}

// Markdown table in the selected-blocks layout: one row per block, one
// column per scenario, "—" for an excluded block. Each scenario column
// shows the best-measured seed's selection.
inline std::string report_markdown(const SelectedBlocksReport& report) {
  std::vector<const CellResult*> best_cell(report.rows.size(), nullptr);
  for (std::size_t r = 0; r < report.rows.size(); ++r)
    for (const CellResult& c : report.rows[r].cells)
      if (c.ok && (!best_cell[r] || c.agent_mean_bps > best_cell[r]->agent_mean_bps))
        best_cell[r] = &c;

  std::string out = "| Block |";
  for (const ScenarioReport& row : report.rows)
    out += " S" + std::to_string(row.scenario.id) + " |";
  out += "\n|---|";
  for (std::size_t r = 0; r < report.rows.size(); ++r) out += "---|";
  out += "\n";
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    out += "| ";
    out += block_name(static_cast<BlockId>(b));
    out += " |";
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
      if (!best_cell[r]) {
        out += " ? |";
      } else {
        const std::uint8_t v = best_cell[r]->selected.values[b];
        out += " ";
        out += v == 0 ? std::string("—") : std::string(catalog()[b].domain[v]);
        out += " |";
      }
    }
    out += "\n";
  }
  out += "| agent throughput (Mbps) |";
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    char buf[32];
    if (best_cell[r]) {
      std::snprintf(buf, sizeof(buf), " %.3f |", best_cell[r]->agent_mean_bps / 1e6);
      out += buf;
    } else {
      out += " ? |";
    }
  }
  out += "\n| search best (Mbps) |";
  for (const ScenarioReport& row : report.rows) {
    char buf[32];
    if (row.brute_ok) {
      std::snprintf(buf, sizeof(buf), " %.3f |", row.brute.mean_throughput_bps / 1e6);
      out += buf;
    } else {
      out += " ? |";
    }
  }
  out += "\n";
  return out;
}

inline void emit_report(const SelectedBlocksReport& report, const std::string& output_dir) {
  std::filesystem::create_directories(output_dir);
  write_text_file(output_dir + "/report.csv", report_csv(report));
  write_text_file(output_dir + "/report.md", report_markdown(report));
}

// Experiment config file, schema version 1. Absent keys keep defaults.
inline ExperimentConfig experiment_config_from_json(const Json& j) {
  if (j.contains("version") && j["version"].get<int>() != 1)
    throw std::invalid_argument("unsupported experiment config version");
  ExperimentConfig cfg;
  if (j.contains("scenarios")) cfg.scenario_ids = j["scenarios"].get<std::vector<int>>();
  if (j.contains("train_seeds"))
    cfg.train_seeds = j["train_seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("agent")) agent_config_from_json(j["agent"], cfg.agent);
  if (j.contains("params")) sim_params_from_json(j["params"], cfg.params);
  if (j.contains("brute")) {
    const Json& b = j["brute"];
    if (b.contains("eval_duration_s")) cfg.brute.eval_duration_s = b["eval_duration_s"].get<double>();
    if (b.contains("seeds")) cfg.brute.seeds = b["seeds"].get<int>();
    if (b.contains("coarse")) cfg.brute.coarse = b["coarse"].get<bool>();
    if (b.contains("base_seed")) cfg.brute.base_seed = b["base_seed"].get<std::uint64_t>();
  }
  if (j.contains("eval_duration_s")) cfg.eval_duration_s = j["eval_duration_s"].get<double>();
  if (j.contains("eval_seeds")) cfg.eval_seeds = j["eval_seeds"].get<int>();
  if (j.contains("eval_base_seed")) cfg.eval_base_seed = j["eval_base_seed"].get<std::uint64_t>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("run_brute")) cfg.run_brute = j["run_brute"].get<bool>();
  if (j.contains("write_traces")) cfg.write_traces = j["write_traces"].get<bool>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<unsigned>();
  if (cfg.train_seeds.empty()) throw std::invalid_argument("need at least one training seed");
  for (int id : cfg.scenario_ids) scenario_by_id(id);  // range check
  return cfg;
}

// ---- block-selection trends ---------------------------------------------

struct TrendFinding {
  std::string name;
  int scenario_id;
  std::function<bool(const Genome&)> pred;
};

inline std::vector<TrendFinding> trend_findings() {
  const auto ack = [](const Genome& g) { return g.active(BlockId::Ack); };
  std::vector<TrendFinding> out;
  out.push_back({"scenario 1: no ACK, no RTS/CTS, aggregation selected", 1, [](const Genome& g) {
                   return !g.active(BlockId::Ack) && !g.active(BlockId::RtsCts) &&
                          g.active(BlockId::Aggregation);
                 }});
  out.push_back({"scenario 2: carrier sense selected", 2,
                 [](const Genome& g) { return g.active(BlockId::CarrierSense); }});
  for (int id : {5, 6, 7, 8})
    out.push_back({"scenario " + std::to_string(id) + ": ACK selected", id, ack});
  out.push_back({"scenario 6: fragmentation selected", 6,
                 [](const Genome& g) { return g.active(BlockId::Fragmentation); }});
  for (int id : {7, 8})
    out.push_back({"scenario " + std::to_string(id) +
                       ": RTS/CTS with smaller frames or a lower rate",
                   id, [](const Genome& g) {
                     const bool smaller = g.active(BlockId::Fragmentation);
                     const int rate = kVariantValues[static_cast<std::size_t>(BlockId::DataRate)]
                                                    [g[BlockId::DataRate]];
                     const bool slower = g.active(BlockId::DataRate) && rate < 54;
                     return g.active(BlockId::RtsCts) && (smaller || slower);
                   }});
  return out;
}

struct TrendVerdict {
  std::string name;
  int scenario_id = 0;
  int passes = 0;
  int total = 0;
  bool pass = false;  // strict majority of the evaluated seeds
};

inline std::vector<TrendVerdict> evaluate_trends(const SelectedBlocksReport& report) {
  std::vector<TrendVerdict> out;
  for (const TrendFinding& f : trend_findings()) {
    TrendVerdict v;
    v.name = f.name;
    v.scenario_id = f.scenario_id;
    for (const ScenarioReport& row : report.rows) {
      if (row.scenario.id != f.scenario_id) continue;
      for (const CellResult& cell : row.cells) {
        if (!cell.ok) continue;
        ++v.total;
        if (f.pred(cell.selected)) ++v.passes;
      }
    }
    v.pass = v.total > 0 && 2 * v.passes > v.total;
    out.push_back(std::move(v));
  }
  return out;
}

inline Json trends_to_json(const std::vector<TrendVerdict>& verdicts) {
  Json out = Json::array();
  for (const TrendVerdict& v : verdicts)
    out.push_back({{"finding", v.name},
                   {"scenario", v.scenario_id},
                   {"passes", v.passes},
                   {"seeds", v.total},
                   {"pass", v.pass}});
  return out;
}

}  // namespace deepmac
