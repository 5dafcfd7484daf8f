#include <catch2/catch_amalgamated.hpp>

#include "deepmac/harness.hpp"
#include "deepmac/sim.hpp"

using namespace deepmac;

namespace {

Genome dcf_genome() {
  Genome g;
  g[BlockId::Backoff] = 1;
  g[BlockId::Ack] = 1;
  g[BlockId::ContentionWindow] = 1;
  g[BlockId::CarrierSense] = 1;
  g[BlockId::DataRate] = 7;
  return g;
}

bool conserved(const SimResult& r) {
  return r.msdu_generated == r.msdu_delivered + r.msdu_collided + r.msdu_noise_dropped +
                                 r.retry_exhaustions + r.msdu_pending;
}

// Closed-form saturated single-sender cycle: DIFS + mean backoff + data +
// SIFS + ACK, all at the genome's rates.
double single_sender_oracle_bps(const SimParams& p, const ProtocolGraph& g) {
  const double data_rate = g.params.data_rate_bps > 0 ? g.params.data_rate_bps : p.channel_capacity_bps;
  const double t_data = frame_airtime_s(p.default_frame_bytes, p.mac_header_bytes, data_rate);
  const double t_ack = frame_airtime_s(p.ack_frame_bytes, 0, p.channel_capacity_bps);
  const double mean_backoff = g.params.cw_min / 2.0 * p.slot_s;
  const double cycle = p.difs_s + mean_backoff + t_data + p.sifs_s + t_ack;
  return 8.0 * p.default_frame_bytes / cycle;
}

}  // namespace

TEST_CASE("frame airtime") {
  CHECK(frame_airtime_s(1500, 0, 10e6) == Catch::Approx(1.2e-3).epsilon(1e-12));
  CHECK(frame_airtime_s(0, 34, 10e6) == Catch::Approx(27.2e-6).epsilon(1e-12));
  // linear in 1/rate
  CHECK(frame_airtime_s(1234, 34, 10e6) / frame_airtime_s(1234, 34, 54e6) ==
        Catch::Approx(5.4).epsilon(1e-12));
  CHECK_THROWS_AS(frame_airtime_s(100, 0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(frame_airtime_s(100, 0, -5.0), std::invalid_argument);
}

TEST_CASE("frame error probability") {
  CHECK(frame_error_prob(0.0, 12000) == 0.0);
  CHECK(frame_error_prob(1e-4, 0) == 0.0);
  // frozen reference value, computed independently at high precision
  CHECK(frame_error_prob(1e-5, 12000) ==
        Catch::Approx(0.11308009543849258).epsilon(1e-12));
  // monotone non-decreasing in the frame length
  double prev = 0.0;
  for (std::uint64_t bits : {0ull, 100ull, 1000ull, 10000ull, 100000ull}) {
    const double p = frame_error_prob(1e-5, bits);
    CHECK(p >= prev);
    prev = p;
  }
  CHECK_THROWS_AS(frame_error_prob(1.0, 10), std::invalid_argument);
}

TEST_CASE("single saturated sender matches the cycle-time oracle") {
  const SimParams params;
  const ProtocolGraph graph = wire(dcf_genome());
  const Scenario sc{7, 1, LoadClass::Saturated, false};
  const SimResult res = run(graph, sc, params, 17, 10.0);
  const double oracle = single_sender_oracle_bps(params, graph);
  CHECK(std::abs(res.throughput_bps - oracle) / oracle < 0.02);
  CHECK(conserved(res));
  CHECK(res.collisions == 0);
  CHECK(res.noise_drops == 0);
  CHECK(res.retry_exhaustions == 0);
}

TEST_CASE("single saturated sender at the base rate matches the oracle too") {
  const SimParams params;
  Genome g = dcf_genome();
  g[BlockId::DataRate] = 0;  // base 10 Mbps
  const ProtocolGraph graph = wire(g);
  const SimResult res = run(graph, {7, 1, LoadClass::Saturated, false}, params, 3, 10.0);
  const double oracle = single_sender_oracle_bps(params, graph);
  CHECK(std::abs(res.throughput_bps - oracle) / oracle < 0.02);
}

TEST_CASE("two always-transmitting nodes without sensing or backoff collide forever") {
  Genome g;
  g[BlockId::DataRate] = 7;
  const ProtocolGraph graph = wire(g);
  const SimResult res = run(graph, {7, 2, LoadClass::Saturated, false}, SimParams{}, 5, 2.0);
  CHECK(res.throughput_bps == 0.0);
  CHECK(res.msdu_delivered == 0);
  CHECK(res.collisions > 0);
  CHECK(conserved(res));
}

TEST_CASE("dropping ACK helps when the load is light and clean") {
  const SimParams params;
  Genome no_ack;
  no_ack[BlockId::CarrierSense] = 1;
  no_ack[BlockId::DataRate] = 7;
  Genome with_ack = no_ack;
  with_ack[BlockId::Ack] = 1;

  const Scenario sc{1, 5, LoadClass::Low, false};
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double a = run(wire(no_ack), sc, params, seed, 8.0).throughput_bps;
    const double b = run(wire(with_ack), sc, params, seed, 8.0).throughput_bps;
    if (a > b) ++wins;
  }
  CHECK(wins >= 3);
}

TEST_CASE("reruns are bit-identical and conservation holds over random runs") {
  const std::vector<Genome> all = enumerate_genomes();
  Rng rng(2024);
  const SimParams params;
  int checked = 0;
  while (checked < 12) {
    const Genome& g = all[rng.uniform_int(0, all.size() - 1)];
    if (!validate(g).valid) continue;
    ++checked;
    const Scenario& sc = scenarios()[rng.uniform_int(0, scenarios().size() - 1)];
    const std::uint64_t seed = rng.next_u64();
    const ProtocolGraph graph = wire(g);
    const SimResult a = run(graph, sc, params, seed, 0.5);
    const SimResult b = run(graph, sc, params, seed, 0.5);
    REQUIRE(a.throughput_bps == b.throughput_bps);
    REQUIRE(a.delivered_payload_bits == b.delivered_payload_bits);
    REQUIRE(a.attempts == b.attempts);
    REQUIRE(a.collisions == b.collisions);
    REQUIRE(a.noise_drops == b.noise_drops);
    REQUIRE(a.msdu_generated == b.msdu_generated);
    REQUIRE(a.msdu_pending == b.msdu_pending);
    REQUIRE(conserved(a));
    REQUIRE(a.collisions <= a.attempts);
    REQUIRE(a.throughput_bps ==
            static_cast<double>(a.delivered_payload_bits) / a.sim_duration_s);
  }
}

TEST_CASE("no noise means no noise drops") {
  const SimResult res =
      run(wire(dcf_genome()), {5, 20, LoadClass::High, false}, SimParams{}, 9, 2.0);
  CHECK(res.noise_drops == 0);
  CHECK(res.msdu_noise_dropped == 0);
}

TEST_CASE("throughput is monotone non-increasing in the bit error rate") {
  const Genome g = dcf_genome();
  const ProtocolGraph graph = wire(g);
  const Scenario sc{8, 5, LoadClass::Saturated, true};
  double prev = std::numeric_limits<double>::infinity();
  for (double ber : {0.0, 1e-6, 1e-5, 1e-4}) {
    SimParams params;
    params.bit_error_rate = ber;
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
      mean += run(graph, sc, params, seed, 3.0).throughput_bps;
    mean /= 5;
    CHECK(mean <= prev);
    prev = mean;
  }
}

TEST_CASE("at heavy noise, 500 B fragments beat whole 1500 B frames") {
  SimParams params;
  params.bit_error_rate = 1e-4;
  Genome frag = dcf_genome();
  frag[BlockId::Fragmentation] = 2;  // 500 B
  const Genome whole = dcf_genome();
  const Scenario sc{8, 2, LoadClass::Saturated, true};
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double f = run(wire(frag), sc, params, seed, 4.0).throughput_bps;
    const double w = run(wire(whole), sc, params, seed, 4.0).throughput_bps;
    if (f > w) ++wins;
  }
  CHECK(wins >= 3);
}

TEST_CASE("throughput respects the physical and offered-load bounds") {
  const SimParams params;
  SECTION("saturated: below the active data rate") {
    for (std::uint8_t rate_idx : {std::uint8_t{0}, std::uint8_t{7}}) {
      Genome g = dcf_genome();
      g[BlockId::DataRate] = rate_idx;
      const ProtocolGraph graph = wire(g);
      const double rate = graph.params.data_rate_bps > 0 ? graph.params.data_rate_bps
                                                         : params.channel_capacity_bps;
      const SimResult res = run(graph, {7, 3, LoadClass::Saturated, false}, params, 4, 3.0);
      CHECK(res.throughput_bps < rate);
    }
  }

  SECTION("non-saturated: below offered load plus sampling noise") {
    const Scenario sc{1, 5, LoadClass::Low, false};
    const double offered = offered_load_bps(params, sc.load);
    const double duration = 5.0;
    const double msdu_bits = 8.0 * params.default_frame_bytes;
    const double sigma = std::sqrt(offered * duration / msdu_bits) * msdu_bits / duration;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const SimResult res = run(wire(dcf_genome()), sc, params, seed, duration);
      CHECK(res.throughput_bps <= offered + 3.0 * sigma);
    }
  }
}

TEST_CASE("rts/cts protects data frames under contention") {
  Genome g = dcf_genome();
  g[BlockId::RtsCts] = 1;
  const ProtocolGraph graph = wire(g);
  REQUIRE(graph.params.rts_cts);
  const SimResult res = run(graph, {7, 10, LoadClass::Saturated, false}, SimParams{}, 11, 3.0);
  CHECK(res.throughput_bps > 0.0);
  CHECK(conserved(res));
  // every loss is recovered or exhausted through retries, never a silent
  // data-frame collision: ACK is mandatory with RTS
  CHECK(res.msdu_collided == 0);
  CHECK(res.msdu_noise_dropped == 0);
}

TEST_CASE("invalid run inputs are rejected") {
  const ProtocolGraph graph = wire(dcf_genome());
  CHECK_THROWS_AS(run(graph, {1, 5, LoadClass::Low, false}, SimParams{}, 1, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(run(graph, {1, 5, LoadClass::Low, false}, SimParams{}, 1, -2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(run(graph, {1, 0, LoadClass::Low, false}, SimParams{}, 1, 1.0),
                  std::invalid_argument);
  SimParams bad;
  bad.difs_s = bad.sifs_s;  // need difs > sifs
  CHECK_THROWS_AS(run(graph, {1, 5, LoadClass::Low, false}, bad, 1, 1.0), std::invalid_argument);
}
