#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deepmac/catalog.hpp"

namespace deepmac {

enum class RuleStrength : std::uint8_t { Strong, Weak };
enum class RuleKind : std::uint8_t { Prerequisite, MutualExclusion };

// One inter-block rule. Prerequisite rules are uni-directional: the rule
// (dependent -> prerequisite) never implies the reverse. Strong rules are
// hard constraints; weak rules only produce warnings.
struct DependencyRule {
  std::string_view name;
  BlockId dependent;     // for MutualExclusion: first block of the pair
  BlockId prerequisite;  // for MutualExclusion: second block of the pair
  RuleKind kind;
  RuleStrength strength;
  std::string_view note;
};

// The fixed rule set the validator enforces. R1 reflects the backoff
// trigger itself (retransmission is signaled by an ACK timeout, so there
// is no backoff without ACK); the others encode standard 802.11
// interactions this toolkit treats as composition constraints.
inline const std::vector<DependencyRule>& rules() {
  static const std::vector<DependencyRule> r = {
      {"R1", BlockId::Backoff, BlockId::Ack, RuleKind::Prerequisite, RuleStrength::Strong,
       "backoff retransmission is triggered by ACK timeout; no ACK, no timeout"},
      {"R2", BlockId::ContentionWindow, BlockId::Backoff, RuleKind::Prerequisite, RuleStrength::Strong,
       "CW parameterizes the backoff ladder and has no meaning without it"},
      {"R3", BlockId::RtsCts, BlockId::Ack, RuleKind::Prerequisite, RuleStrength::Strong,
       "the four-way exchange completes with an ACK"},
      {"R4", BlockId::RtsCts, BlockId::CarrierSense, RuleKind::Prerequisite, RuleStrength::Strong,
       "NAV-based virtual reservation needs the sensing machinery"},
      {"R5", BlockId::Fragmentation, BlockId::Aggregation, RuleKind::MutualExclusion, RuleStrength::Strong,
       "splitting and merging the same MSDU stream at once is contradictory"},
      {"R6", BlockId::Backoff, BlockId::CarrierSense, RuleKind::Prerequisite, RuleStrength::Weak,
       "slotted backoff without sensing is permitted but unusual (ALOHA-style)"},
  };
  return r;
}

struct Violation {
  DependencyRule rule;
  std::string message;
};

struct ValidationResult {
  bool valid = true;
  std::vector<Violation> violations;
  std::vector<std::string> warnings;
};

inline std::string describe_rule(const DependencyRule& rule, const Genome& g) {
  std::string msg(rule.name);
  if (rule.kind == RuleKind::MutualExclusion) {
    msg += ": ";
    msg += block_name(rule.dependent);
    msg += " and ";
    msg += block_name(rule.prerequisite);
    msg += " are mutually exclusive, both active";
  } else {
    msg += ": ";
    msg += block_name(rule.dependent);
    msg += " requires ";
    msg += block_name(rule.prerequisite);
    msg += " (";
    msg += block_name(rule.dependent);
    msg += "=";
    msg += catalog()[static_cast<std::size_t>(rule.dependent)].domain[g[rule.dependent]];
    msg += ", ";
    msg += block_name(rule.prerequisite);
    msg += "=off)";
  }
  return msg;
}

// Checks a genome against the rule set. Invalid genomes are a normal
// result, not an error.
inline ValidationResult validate(const Genome& g) {
  check_genome(g);
  ValidationResult out;
  for (const auto& rule : rules()) {
    const bool hit = rule.kind == RuleKind::MutualExclusion
                         ? g.active(rule.dependent) && g.active(rule.prerequisite)
                         : g.active(rule.dependent) && !g.active(rule.prerequisite);
    if (!hit) continue;
    if (rule.strength == RuleStrength::Strong) {
      out.violations.push_back({rule, describe_rule(rule, g)});
    } else {
      out.warnings.push_back(describe_rule(rule, g));
    }
  }
  out.valid = out.violations.empty();
  return out;
}

// Applies a single-block assignment; the genome itself is not validated.
inline Genome apply_action(const Genome& g, int action) {
  const Action a = action_at(action);
  Genome out = g;
  out[a.block] = a.variant;
  return out;
}

// Actions whose successor genome is valid, ascending. Never empty for a
// valid input: keeping a block at its current value is always legal.
inline std::vector<int> legal_actions(const Genome& g) {
  if (!validate(g).valid) throw std::invalid_argument("legal_actions requires a valid genome");
  std::vector<int> out;
  out.reserve(kActionCount);
  for (int a = 0; a < static_cast<int>(kActionCount); ++a)
    if (validate(apply_action(g, a)).valid) out.push_back(a);
  return out;
}

// ---- protocol graph ----------------------------------------------------

enum class BackoffAlgo : std::uint8_t { None, Beb, Eied };

// Block parameters resolved to executable values. Zero-valued byte fields
// mean the mechanism is off; data_rate_bps 0 means "use the channel's base
// rate".
struct ResolvedParams {
  BackoffAlgo backoff = BackoffAlgo::None;
  bool ack = false;
  std::uint32_t fragment_bytes = 0;
  std::uint32_t aggregate_bytes = 0;
  bool rts_cts = false;
  std::uint32_t cw_min = 15;  // backoff default when the CW block is off
  bool carrier_sense = false;
  double data_rate_bps = 0.0;
};

enum class Stage : std::uint8_t { CarrierSense, Backoff, RtsCts, Transmit, AckWait };

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::CarrierSense: return "carrier_sense";
    case Stage::Backoff: return "backoff";
    case Stage::RtsCts: return "rts_cts";
    case Stage::Transmit: return "transmit";
    case Stage::AckWait: return "ack_wait";
  }
  return "?";
}

struct GraphEdge {
  Stage from;
  Stage to;
  std::string_view label;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

// Executable wiring of the active blocks: the stage chain each node's MAC
// walks per transmission unit, plus the retry edge when ACK is active.
struct ProtocolGraph {
  Genome genome;
  ResolvedParams params;
  std::vector<Stage> stages;
  std::vector<GraphEdge> edges;

  bool has_stage(Stage s) const {
    for (Stage t : stages)
      if (t == s) return true;
    return false;
  }
};

struct WireError : std::runtime_error {
  ValidationResult result;
  explicit WireError(ValidationResult r)
      : std::runtime_error(r.violations.empty() ? "wiring refused"
                                                : "wiring refused: " + r.violations.front().message),
        result(std::move(r)) {}
};

// Wires a valid genome into its protocol graph. Deterministic; refuses
// invalid genomes with the validation result attached.
inline ProtocolGraph wire(const Genome& g) {
  ValidationResult v = validate(g);
  if (!v.valid) throw WireError(std::move(v));

  ProtocolGraph graph;
  graph.genome = g;

  ResolvedParams& p = graph.params;
  switch (g[BlockId::Backoff]) {
    case 1: p.backoff = BackoffAlgo::Beb; break;
    case 2: p.backoff = BackoffAlgo::Eied; break;
    default: p.backoff = BackoffAlgo::None; break;
  }
  p.ack = g.active(BlockId::Ack);
  p.fragment_bytes = static_cast<std::uint32_t>(
      kVariantValues[static_cast<std::size_t>(BlockId::Fragmentation)][g[BlockId::Fragmentation]]);
  p.aggregate_bytes = static_cast<std::uint32_t>(
      kVariantValues[static_cast<std::size_t>(BlockId::Aggregation)][g[BlockId::Aggregation]]);
  p.rts_cts = g.active(BlockId::RtsCts);
  if (g.active(BlockId::ContentionWindow))
    p.cw_min = static_cast<std::uint32_t>(
        kVariantValues[static_cast<std::size_t>(BlockId::ContentionWindow)][g[BlockId::ContentionWindow]]);
  p.carrier_sense = g.active(BlockId::CarrierSense);
  if (g.active(BlockId::DataRate))
    p.data_rate_bps = 1e6 * kVariantValues[static_cast<std::size_t>(BlockId::DataRate)][g[BlockId::DataRate]];

  // Canonical stage chain: sense -> backoff -> handshake -> transmit -> ack.
  if (p.carrier_sense) graph.stages.push_back(Stage::CarrierSense);
  if (p.backoff != BackoffAlgo::None) graph.stages.push_back(Stage::Backoff);
  if (p.rts_cts) graph.stages.push_back(Stage::RtsCts);
  graph.stages.push_back(Stage::Transmit);
  if (p.ack) graph.stages.push_back(Stage::AckWait);

  static constexpr std::string_view kForwardLabel[] = {"idle", "expired", "cts", "sent"};
  for (std::size_t i = 0; i + 1 < graph.stages.size(); ++i) {
    const Stage from = graph.stages[i];
    std::string_view label = "next";
    switch (from) {
      case Stage::CarrierSense: label = kForwardLabel[0]; break;
      case Stage::Backoff: label = kForwardLabel[1]; break;
      case Stage::RtsCts: label = kForwardLabel[2]; break;
      case Stage::Transmit: label = kForwardLabel[3]; break;
      default: break;
    }
    graph.edges.push_back({from, graph.stages[i + 1], label});
  }
  if (p.ack) {
    const Stage retry_to = p.backoff != BackoffAlgo::None ? Stage::Backoff : graph.stages.front();
    graph.edges.push_back({Stage::AckWait, retry_to, "timeout"});
  }
  return graph;
}

}  // namespace deepmac
