#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "deepmac/logic.hpp"
#include "deepmac/rng.hpp"

namespace deepmac {

// Airtime of one PHY frame.
inline double frame_airtime_s(std::uint64_t payload_bytes, std::uint64_t header_bytes, double rate_bps) {
  if (!(rate_bps > 0.0)) throw std::invalid_argument("frame airtime needs a positive rate");
  return 8.0 * static_cast<double>(payload_bytes + header_bytes) / rate_bps;
}

// Probability that a frame of the given length is corrupted: 1 - (1-p)^L.
inline double frame_error_prob(double bit_error_rate, std::uint64_t frame_bits) {
  if (!(bit_error_rate >= 0.0 && bit_error_rate < 1.0))
    throw std::invalid_argument("bit error rate outside [0, 1)");
  if (bit_error_rate == 0.0 || frame_bits == 0) return 0.0;
  return -std::expm1(static_cast<double>(frame_bits) * std::log1p(-bit_error_rate));
}

enum class LoadClass : std::uint8_t { Low, Average, High, Saturated };

inline std::string_view load_name(LoadClass c) {
  switch (c) {
    case LoadClass::Low: return "Low";
    case LoadClass::Average: return "Average";
    case LoadClass::High: return "High";
    case LoadClass::Saturated: return "Saturated";
  }
  return "?";
}

struct Scenario {
  int id = 0;  // 1..8
  int nodes = 0;
  LoadClass load = LoadClass::Low;
  bool noise = false;
};

// Fixed timing and framing parameters. The base channel rate carries all
// control frames and any data frames sent without an active DataRate
// block. difs and ack_timeout are stored explicitly so they can be
// overridden; the defaults satisfy difs = sifs + 2*slot and
// ack_timeout = sifs + ack airtime at the base rate + one slot.
struct SimParams {
  double slot_s = 2.0e-4;
  std::uint32_t default_frame_bytes = 1500;
  double channel_capacity_bps = 10e6;
  double sifs_s = 5.0e-5;
  double difs_s = 4.5e-4;
  std::uint32_t mac_header_bytes = 34;
  std::uint32_t ack_frame_bytes = 14;
  std::uint32_t rts_frame_bytes = 20;
  std::uint32_t cts_frame_bytes = 14;
  double ack_timeout_s = 2.612e-4;
  std::uint32_t retry_limit = 7;
  // BER applied when the scenario enables noise; noise-off runs use 0.
  double bit_error_rate = 1e-5;
  // Aggregate Poisson offered load per class, split evenly across nodes.
  double load_low_bps = 8e6;
  double load_average_bps = 14e6;
  double load_high_bps = 27e6;
};

inline double offered_load_bps(const SimParams& p, LoadClass c) {
  switch (c) {
    case LoadClass::Low: return p.load_low_bps;
    case LoadClass::Average: return p.load_average_bps;
    case LoadClass::High: return p.load_high_bps;
    case LoadClass::Saturated: return 0.0;  // backlogged, not rate-driven
  }
  return 0.0;
}

// Divisor that maps throughput onto [0, 1] for rewards and history
// samples: the largest rate any genome can transmit at.
inline double reward_normalizer(const SimParams& p) {
  double best = p.channel_capacity_bps;
  for (int v : kVariantValues[static_cast<std::size_t>(BlockId::DataRate)])
    best = std::max(best, 1e6 * static_cast<double>(v));
  return best;
}

struct SimResult {
  double sim_duration_s = 0.0;
  std::uint64_t delivered_payload_bits = 0;
  double throughput_bps = 0.0;
  // frame-level counters (attempts = data and RTS frames started)
  std::uint64_t attempts = 0;
  std::uint64_t collisions = 0;
  std::uint64_t noise_drops = 0;
  // MSDU-level buckets; generated = delivered + collided + noise_dropped
  //                               + retry_exhaustions + pending
  std::uint64_t msdu_generated = 0;
  std::uint64_t msdu_delivered = 0;
  std::uint64_t msdu_collided = 0;
  std::uint64_t msdu_noise_dropped = 0;
  std::uint64_t retry_exhaustions = 0;
  std::uint64_t msdu_pending = 0;
};

namespace detail {

enum class EvKind : std::uint8_t { Arrival, Fire, TxEnd, RespStart, Timeout, FragStart };

struct Event {
  double t;
  std::uint64_t seq;
  EvKind kind;
  std::int32_t node;
  std::uint64_t a;
};

struct EventLater {
  bool operator()(const Event& x, const Event& y) const {
    if (x.t != y.t) return x.t > y.t;
    return x.seq > y.seq;
  }
};

enum class FrameKind : std::uint8_t { Data, Rts, Cts, Ack };

struct ActiveTx {
  std::int32_t owner = -1;  // -1: response from the (virtual) receiver
  std::int32_t exchange = -1;
  FrameKind kind = FrameKind::Data;
  double end = 0.0;
  bool collided = false;
  bool corrupted = false;
  bool live = false;
};

enum class LossCause : std::uint8_t { None, Collision, Noise, RetryLimit };

struct MsduRecord {
  std::uint32_t total = 0;
  std::uint32_t delivered = 0;
  LossCause cause = LossCause::None;
  bool finalized = false;
};

struct Segment {
  std::uint64_t msdu;
  std::uint32_t bytes;
};

struct Frame {
  std::vector<Segment> segs;
  std::uint32_t payload = 0;
};

struct TxUnit {
  std::vector<Frame> frames;
  std::size_t next = 0;
  std::uint32_t retry = 0;
};

struct QueuedMsdu {
  std::uint64_t id;
  std::uint32_t bytes;
};

enum class Phase : std::uint8_t { Idle, WaitIdle, Armed, Sending, AwaitCts, AwaitAck, Gap };

struct NodeRt {
  // runtime protocol state
  std::deque<QueuedMsdu> queue;
  std::uint64_t queue_bytes = 0;
  std::optional<TxUnit> unit;
  Phase phase = Phase::Idle;
  double armed_at = 0.0;
  double difs_end = 0.0;
  double fire_at = 0.0;
  double frozen_at = -1.0;
  int counter = -1;  // backoff slots remaining; -1 = not drawn
  std::uint32_t cw = 15;
  double nav_until = 0.0;
  std::uint64_t epoch = 0;
  Rng rng{0};
};

class Simulator {
 public:
  Simulator(const ProtocolGraph& graph, const Scenario& sc, const SimParams& p,
            std::uint64_t seed, double duration_s)
      : prm_(p), proto_(graph.params), sc_(sc), duration_(duration_s),
        noise_rng_(derive_seed(seed, 0xC0FFEEULL)) {
    if (!(duration_s > 0.0)) throw std::invalid_argument("simulation duration must be positive");
    if (sc.nodes <= 0) throw std::invalid_argument("scenario needs at least one node");
    if (!(p.slot_s > 0.0)) throw std::invalid_argument("slot must be positive");
    if (!(p.difs_s > p.sifs_s && p.sifs_s > 0.0))
      throw std::invalid_argument("need difs > sifs > 0");
    if (!(p.bit_error_rate >= 0.0 && p.bit_error_rate < 1.0))
      throw std::invalid_argument("bit error rate outside [0, 1)");

    ber_ = sc.noise ? p.bit_error_rate : 0.0;
    data_rate_ = proto_.data_rate_bps > 0.0 ? proto_.data_rate_bps : p.channel_capacity_bps;
    ack_air_ = frame_airtime_s(p.ack_frame_bytes, 0, p.channel_capacity_bps);
    cts_air_ = frame_airtime_s(p.cts_frame_bytes, 0, p.channel_capacity_bps);
    saturated_ = sc.load == LoadClass::Saturated;
    if (!saturated_) {
      const double load = offered_load_bps(p, sc.load);
      if (!(load > 0.0)) throw std::invalid_argument("offered load must be positive");
      arrival_rate_ = load / (8.0 * p.default_frame_bytes) / sc.nodes;
    }

    nodes_.resize(static_cast<std::size_t>(sc.nodes));
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      nodes_[i].cw = proto_.cw_min;
      nodes_[i].rng = Rng(derive_seed(seed, i + 1));
    }
  }

  SimResult run() {
    for (std::int32_t n = 0; n < sc_.nodes; ++n) {
      if (saturated_) {
        node_kick(n, 0.0);
      } else {
        schedule(nodes_[n].rng.exponential(arrival_rate_), EvKind::Arrival, n, 0);
      }
    }
    while (!events_.empty()) {
      Event ev = events_.top();
      if (ev.t > duration_) break;
      events_.pop();
      now_ = ev.t;
      dispatch(ev);
    }
    SimResult res;
    res.sim_duration_s = duration_;
    res.delivered_payload_bits = delivered_bits_;
    res.throughput_bps = static_cast<double>(delivered_bits_) / duration_;
    res.attempts = attempts_;
    res.collisions = collisions_;
    res.noise_drops = noise_drops_;
    res.msdu_generated = records_.size();
    res.msdu_delivered = delivered_msdus_;
    res.msdu_collided = collided_msdus_;
    res.msdu_noise_dropped = noise_msdus_;
    res.retry_exhaustions = exhausted_msdus_;
    for (const auto& r : records_)
      if (!r.finalized) ++res.msdu_pending;
    return res;
  }

 private:
  // ---- event plumbing ----
  void schedule(double t, EvKind kind, std::int32_t node, std::uint64_t a) {
    events_.push(Event{t, seq_++, kind, node, a});
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EvKind::Arrival: on_arrival(ev.node); break;
      case EvKind::Fire: on_fire(ev.node, ev.a); break;
      case EvKind::TxEnd: on_tx_end(static_cast<std::size_t>(ev.a)); break;
      case EvKind::RespStart: on_resp_start(ev.node, static_cast<FrameKind>(ev.a)); break;
      case EvKind::Timeout: on_timeout(ev.node, ev.a); break;
      case EvKind::FragStart: on_frag_start(ev.node, ev.a); break;
    }
  }

  // ---- traffic ----
  std::uint64_t generate_msdu() {
    records_.push_back(MsduRecord{prm_.default_frame_bytes, 0, LossCause::None, false});
    return records_.size() - 1;
  }

  void on_arrival(std::int32_t n) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    const std::uint64_t id = generate_msdu();
    node.queue.push_back({id, prm_.default_frame_bytes});
    node.queue_bytes += prm_.default_frame_bytes;
    schedule(now_ + node.rng.exponential(arrival_rate_), EvKind::Arrival, n, 0);
    if (node.phase == Phase::Idle && !node.unit) node_kick(n, now_);
  }

  // Pulls the next transmission unit from the queue and starts contending.
  void node_kick(std::int32_t n, double t) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    if (node.unit) return;
    if (!build_unit(node)) {
      node.phase = Phase::Idle;
      return;
    }
    enter_contention(n, t);
  }

  bool build_unit(NodeRt& node) {
    if (saturated_) {
      const std::uint64_t need = proto_.aggregate_bytes > 0 ? proto_.aggregate_bytes : 1;
      while (node.queue_bytes < need) {
        const std::uint64_t id = generate_msdu();
        node.queue.push_back({id, prm_.default_frame_bytes});
        node.queue_bytes += prm_.default_frame_bytes;
      }
    }
    if (node.queue.empty()) return false;

    TxUnit unit;
    if (proto_.aggregate_bytes > 0) {
      // one frame packing queued payload FIFO, splitting MSDUs as needed
      Frame f;
      std::uint64_t want = std::min<std::uint64_t>(proto_.aggregate_bytes, node.queue_bytes);
      while (want > 0) {
        QueuedMsdu& head = node.queue.front();
        const std::uint32_t take = static_cast<std::uint32_t>(std::min<std::uint64_t>(head.bytes, want));
        f.segs.push_back({head.id, take});
        f.payload += take;
        head.bytes -= take;
        node.queue_bytes -= take;
        want -= take;
        if (head.bytes == 0) node.queue.pop_front();
      }
      unit.frames.push_back(std::move(f));
    } else {
      QueuedMsdu head = node.queue.front();
      node.queue.pop_front();
      node.queue_bytes -= head.bytes;
      if (proto_.fragment_bytes > 0) {
        std::uint32_t left = head.bytes;
        while (left > 0) {
          const std::uint32_t take = std::min(left, proto_.fragment_bytes);
          Frame f;
          f.segs.push_back({head.id, take});
          f.payload = take;
          unit.frames.push_back(std::move(f));
          left -= take;
        }
      } else {
        Frame f;
        f.segs.push_back({head.id, head.bytes});
        f.payload = head.bytes;
        unit.frames.push_back(std::move(f));
      }
    }
    node.unit = std::move(unit);
    return true;
  }

  // ---- contention ----
  void enter_contention(std::int32_t n, double t) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    ++node.epoch;
    node.counter = -1;
    node.frozen_at = -1.0;
    if (proto_.carrier_sense) {
      if (busy_) {
        node.phase = Phase::WaitIdle;
      } else {
        arm(n, std::max(t, node.nav_until));
      }
    } else if (proto_.backoff != BackoffAlgo::None) {
      node.counter = static_cast<int>(node.rng.uniform_int(0, node.cw));
      node.fire_at = t + node.counter * prm_.slot_s;
      node.phase = Phase::Armed;
      schedule(node.fire_at, EvKind::Fire, n, node.epoch);
    } else {
      begin_transmission(n);
    }
  }

  // Arms the DIFS + backoff countdown from an (effective) idle start.
  void arm(std::int32_t n, double idle_from) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    ++node.epoch;  // invalidate any Fire left over from an earlier arm
    node.armed_at = idle_from;
    node.difs_end = idle_from + prm_.difs_s;
    if (proto_.backoff != BackoffAlgo::None && node.counter < 0)
      node.counter = static_cast<int>(node.rng.uniform_int(0, node.cw));
    node.fire_at = node.difs_end +
                   (proto_.backoff != BackoffAlgo::None ? node.counter * prm_.slot_s : 0.0);
    node.frozen_at = -1.0;
    node.phase = Phase::Armed;
    schedule(node.fire_at, EvKind::Fire, n, node.epoch);
  }

  void busy_started(double t) {
    if (!proto_.carrier_sense) return;
    for (auto& node : nodes_) {
      if (node.phase != Phase::Armed) continue;
      if (proto_.backoff != BackoffAlgo::None && t > node.difs_end) {
        // whole idle slots elapsed since DIFS completion; partial slot lost
        int k = static_cast<int>(std::floor((t - node.difs_end) / prm_.slot_s + 1e-9));
        node.counter -= std::min(node.counter, k);
      }
      node.frozen_at = t;
      node.phase = Phase::WaitIdle;
    }
  }

  void idle_started(double t) {
    if (!proto_.carrier_sense) return;
    for (std::int32_t n = 0; n < sc_.nodes; ++n) {
      NodeRt& node = nodes_[static_cast<std::size_t>(n)];
      if (node.phase == Phase::WaitIdle)
        arm(n, std::max(t, node.nav_until));
    }
  }

  void on_fire(std::int32_t n, std::uint64_t epoch) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    if (epoch != node.epoch || now_ != node.fire_at) return;
    // A countdown frozen at this exact instant is still committed: carrier
    // sensing cannot see a transmission that starts on the same boundary.
    const bool valid = node.phase == Phase::Armed ||
                       (node.phase == Phase::WaitIdle && node.frozen_at == now_);
    if (!valid) return;
    begin_transmission(n);
  }

  // ---- transmissions ----
  std::size_t alloc_tx() {
    if (!free_tx_.empty()) {
      const std::size_t id = free_tx_.back();
      free_tx_.pop_back();
      return id;
    }
    txs_.push_back(ActiveTx{});
    return txs_.size() - 1;
  }

  void start_tx(std::int32_t owner, std::int32_t exchange, FrameKind kind, std::uint64_t bits,
                double rate) {
    const double dur = static_cast<double>(bits) / rate;
    const std::size_t id = alloc_tx();
    ActiveTx& tx = txs_[id];
    tx.owner = owner;
    tx.exchange = exchange;
    tx.kind = kind;
    tx.end = now_ + dur;
    tx.corrupted = ber_ > 0.0 && noise_rng_.bernoulli(frame_error_prob(ber_, bits));
    tx.collided = false;
    tx.live = true;
    // overlap with anything still in the air collides both ways
    for (std::size_t other : ongoing_) {
      if (txs_[other].end > now_) {
        txs_[other].collided = true;
        tx.collided = true;
      }
    }
    ongoing_.push_back(id);
    if (owner >= 0 && (kind == FrameKind::Data || kind == FrameKind::Rts)) ++attempts_;
    if (!busy_) {
      busy_ = true;
      busy_started(now_);
    }
    schedule(tx.end, EvKind::TxEnd, owner, id);
  }

  void begin_transmission(std::int32_t n) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    node.phase = Phase::Sending;
    if (proto_.rts_cts) {
      start_tx(n, n, FrameKind::Rts, 8ull * prm_.rts_frame_bytes, prm_.channel_capacity_bps);
    } else {
      start_data_frame(n);
    }
  }

  void start_data_frame(std::int32_t n) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    const Frame& f = node.unit->frames[node.unit->next];
    node.phase = Phase::Sending;
    start_tx(n, n, FrameKind::Data, 8ull * (f.payload + prm_.mac_header_bytes), data_rate_);
  }

  void on_tx_end(std::size_t id) {
    ActiveTx tx = txs_[id];
    txs_[id].live = false;
    ongoing_.erase(std::find(ongoing_.begin(), ongoing_.end(), id));
    free_tx_.push_back(id);

    bool still_busy = false;
    for (std::size_t other : ongoing_)
      if (txs_[other].end > now_) still_busy = true;
    if (busy_ && !still_busy) {
      busy_ = false;
      idle_started(now_);
    }

    const bool ok = !tx.collided && !tx.corrupted;
    if (tx.kind == FrameKind::Data || tx.kind == FrameKind::Rts) {
      if (tx.collided) ++collisions_;
      else if (tx.corrupted) ++noise_drops_;
    } else if (!tx.collided && tx.corrupted) {
      ++noise_drops_;
    }

    switch (tx.kind) {
      case FrameKind::Data: on_data_end(tx.exchange, ok, tx); break;
      case FrameKind::Rts: on_rts_end(tx.exchange, ok); break;
      case FrameKind::Cts: on_cts_end(tx.exchange, ok); break;
      case FrameKind::Ack: on_ack_end(tx.exchange, ok); break;
    }
  }

  void on_data_end(std::int32_t n, bool ok, const ActiveTx& tx) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    if (proto_.ack) {
      if (ok) schedule(now_ + prm_.sifs_s, EvKind::RespStart, n, static_cast<std::uint64_t>(FrameKind::Ack));
      schedule(now_ + prm_.ack_timeout_s, EvKind::Timeout, n, node.epoch);
      node.phase = Phase::AwaitAck;
    } else {
      // fire-and-forget: the sender assumes success; losses are terminal
      apply_frame_outcome(node, node.unit->frames[node.unit->next], ok,
                          tx.collided ? LossCause::Collision : LossCause::Noise);
      advance_after_frame(n);
    }
  }

  void on_rts_end(std::int32_t n, bool ok) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    if (ok) {
      const double announced = now_ + prm_.sifs_s + cts_air_ + remaining_exchange_s(node);
      for (std::int32_t m = 0; m < sc_.nodes; ++m)
        if (m != n) nodes_[static_cast<std::size_t>(m)].nav_until =
            std::max(nodes_[static_cast<std::size_t>(m)].nav_until, announced);
      schedule(now_ + prm_.sifs_s, EvKind::RespStart, n, static_cast<std::uint64_t>(FrameKind::Cts));
    }
    schedule(now_ + prm_.sifs_s + cts_air_ + prm_.slot_s, EvKind::Timeout, n, node.epoch);
    node.phase = Phase::AwaitCts;
  }

  // Airtime of the rest of the unit's exchange, from just after the CTS.
  double remaining_exchange_s(const NodeRt& node) const {
    double t = 0.0;
    for (std::size_t i = node.unit->next; i < node.unit->frames.size(); ++i) {
      t += prm_.sifs_s +
           frame_airtime_s(node.unit->frames[i].payload, prm_.mac_header_bytes, data_rate_);
      if (proto_.ack) t += prm_.sifs_s + ack_air_;
    }
    return t;
  }

  void on_resp_start(std::int32_t exchange, FrameKind kind) {
    const std::uint64_t bytes = kind == FrameKind::Ack ? prm_.ack_frame_bytes : prm_.cts_frame_bytes;
    start_tx(-1, exchange, kind, 8ull * bytes, prm_.channel_capacity_bps);
  }

  void on_cts_end(std::int32_t n, bool ok) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    if (node.phase != Phase::AwaitCts) return;
    if (!ok) return;  // the pending timeout recovers
    ++node.epoch;     // cancel the CTS timeout
    node.phase = Phase::Gap;
    schedule(now_ + prm_.sifs_s, EvKind::FragStart, n, node.epoch);
  }

  void on_ack_end(std::int32_t n, bool ok) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    if (node.phase != Phase::AwaitAck) return;
    if (!ok) return;  // the pending timeout recovers
    ++node.epoch;     // cancel the ACK timeout
    success_cw_update(node);
    apply_frame_outcome(node, node.unit->frames[node.unit->next], true, LossCause::None);
    advance_after_frame(n);
  }

  void on_timeout(std::int32_t n, std::uint64_t epoch) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    if (epoch != node.epoch) return;
    if (node.phase != Phase::AwaitAck && node.phase != Phase::AwaitCts) return;
    failure_path(n);
  }

  void on_frag_start(std::int32_t n, std::uint64_t epoch) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    if (epoch != node.epoch || node.phase != Phase::Gap) return;
    start_data_frame(n);
  }

  // ---- outcomes ----
  void success_cw_update(NodeRt& node) {
    switch (proto_.backoff) {
      case BackoffAlgo::Beb: node.cw = proto_.cw_min; break;
      case BackoffAlgo::Eied:
        node.cw = std::max((node.cw + 1) / 2 - 1, proto_.cw_min);
        break;
      case BackoffAlgo::None: break;
    }
  }

  void failure_cw_update(NodeRt& node) {
    if (proto_.backoff == BackoffAlgo::None) return;
    node.cw = std::min(2 * (node.cw + 1) - 1, 1023u);
  }

  void failure_path(std::int32_t n) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    failure_cw_update(node);
    ++node.unit->retry;
    if (node.unit->retry > prm_.retry_limit) {
      exhaust_unit(node);
      node.cw = proto_.cw_min;
      node.unit.reset();
      node_kick(n, now_);
    } else {
      enter_contention(n, now_);
    }
  }

  void advance_after_frame(std::int32_t n) {
    NodeRt& node = nodes_[static_cast<std::size_t>(n)];
    ++node.unit->next;
    node.unit->retry = 0;
    if (node.unit->next < node.unit->frames.size()) {
      node.phase = Phase::Gap;
      schedule(now_ + prm_.sifs_s, EvKind::FragStart, n, node.epoch);
    } else {
      node.unit.reset();
      node_kick(n, now_);
    }
  }

  void apply_frame_outcome(NodeRt&, const Frame& f, bool ok, LossCause cause) {
    for (const Segment& seg : f.segs) {
      MsduRecord& rec = records_[seg.msdu];
      if (ok) {
        rec.delivered += seg.bytes;
        delivered_bits_ += 8ull * seg.bytes;
        if (!rec.finalized && rec.delivered == rec.total) {
          rec.finalized = true;
          ++delivered_msdus_;
        }
      } else if (!rec.finalized) {
        rec.finalized = true;
        rec.cause = cause;
        if (cause == LossCause::Collision) ++collided_msdus_;
        else ++noise_msdus_;
      }
    }
  }

  void exhaust_unit(NodeRt& node) {
    for (const Frame& f : node.unit->frames) {
      for (const Segment& seg : f.segs) {
        MsduRecord& rec = records_[seg.msdu];
        if (rec.finalized) continue;
        rec.finalized = true;
        rec.cause = LossCause::RetryLimit;
        ++exhausted_msdus_;
      }
    }
    // drop queued remnants of MSDUs the unit just abandoned (split tails)
    for (auto it = node.queue.begin(); it != node.queue.end();) {
      if (records_[it->id].finalized) {
        node.queue_bytes -= it->bytes;
        it = node.queue.erase(it);
      } else {
        ++it;
      }
    }
  }

  // ---- members ----
  SimParams prm_;
  ResolvedParams proto_;
  Scenario sc_;
  double duration_;
  Rng noise_rng_;
  double ber_ = 0.0;
  double data_rate_ = 0.0;
  double ack_air_ = 0.0;
  double cts_air_ = 0.0;
  bool saturated_ = false;
  double arrival_rate_ = 0.0;  // MSDUs per second per node

  std::vector<NodeRt> nodes_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;

  std::vector<ActiveTx> txs_;
  std::vector<std::size_t> free_tx_;
  std::vector<std::size_t> ongoing_;
  bool busy_ = false;

  std::vector<MsduRecord> records_;
  std::uint64_t delivered_bits_ = 0;
  std::uint64_t attempts_ = 0;
  std::uint64_t collisions_ = 0;
  std::uint64_t noise_drops_ = 0;
  std::uint64_t delivered_msdus_ = 0;
  std::uint64_t collided_msdus_ = 0;
  std::uint64_t noise_msdus_ = 0;
  std::uint64_t exhausted_msdus_ = 0;
};

}  // namespace detail

// Runs one seeded simulation of the wired protocol. Identical inputs give
// bit-identical results.
inline SimResult run(const ProtocolGraph& graph, const Scenario& scenario, const SimParams& params,
                     std::uint64_t seed, double duration_s) {
  detail::Simulator sim(graph, scenario, params, seed, duration_s);
  return sim.run();
}

}  // namespace deepmac
