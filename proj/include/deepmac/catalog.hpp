#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace deepmac {

// The eight MAC building blocks. The enumerator order is the catalog order
// and fixes every vector index (genome slots, one-hot segments, actions).
enum class BlockId : std::uint8_t {
  Backoff = 0,
  Ack,
  Fragmentation,
  Aggregation,
  RtsCts,
  ContentionWindow,
  CarrierSense,
  DataRate,
};

inline constexpr std::size_t kNumBlocks = 8;

inline constexpr std::array<std::size_t, kNumBlocks> kDomainSizes = {3, 2, 4, 2, 2, 8, 2, 8};

namespace detail {
constexpr std::array<std::size_t, kNumBlocks + 1> make_offsets() {
  std::array<std::size_t, kNumBlocks + 1> out{};
  for (std::size_t i = 0; i < kNumBlocks; ++i) out[i + 1] = out[i] + kDomainSizes[i];
  return out;
}
}  // namespace detail

// Prefix sums of the domain sizes; segment b of the one-hot vector spans
// [kDomainOffsets[b], kDomainOffsets[b+1]).
inline constexpr std::array<std::size_t, kNumBlocks + 1> kDomainOffsets = detail::make_offsets();

inline constexpr std::size_t kOneHotWidth = kDomainOffsets[kNumBlocks];
inline constexpr std::size_t kHistoryLen = 15;
inline constexpr std::size_t kStateWidth = kOneHotWidth + kHistoryLen;
inline constexpr std::size_t kActionCount = kOneHotWidth;

static_assert(kOneHotWidth == 31, "domain sizes must sum to 31");
static_assert(kStateWidth == 46, "state vector is 31 one-hot + 15 history");

inline constexpr std::size_t kGenomeCount = [] {
  std::size_t n = 1;
  for (std::size_t d : kDomainSizes) n *= d;
  return n;
}();
static_assert(kGenomeCount == 12288);

// One building block: trigger event, tunable parameter, internal state and
// functional role are descriptive; the value domain and the prerequisite
// list are what the rest of the toolkit interprets.
struct BlockSpec {
  BlockId id;
  std::string_view event;
  std::string_view parameter;
  std::string_view state;
  std::string_view function;
  std::vector<BlockId> dependencies;
  std::vector<std::string_view> domain;  // index 0 is always "off"
};

inline std::string_view block_name(BlockId id) {
  static constexpr std::array<std::string_view, kNumBlocks> names = {
      "Backoff", "Ack", "Fragmentation", "Aggregation",
      "RtsCts",  "ContentionWindow", "CarrierSense", "DataRate"};
  return names[static_cast<std::size_t>(id)];
}

// The block catalog. Immutable; built once.
inline const std::array<BlockSpec, kNumBlocks>& catalog() {
  static const std::array<BlockSpec, kNumBlocks> specs = {{
      {BlockId::Backoff,
       "ack_timeout", "CW", "freeze/countdown", "avoid collision",
       {BlockId::Ack},
       {"off", "BEB", "EIED"}},
      {BlockId::Ack,
       "frame_received", "ack_policy", "awaiting_ack", "confirm delivery",
       {},
       {"off", "ACK"}},
      {BlockId::Fragmentation,
       "msdu_enqueued", "fragment_bytes", "burst_progress", "split MSDU",
       {},
       {"off", "200", "500", "1000"}},
      {BlockId::Aggregation,
       "msdu_enqueued", "aggregate_bytes", "fill_level", "merge MSDUs",
       {},
       {"off", "2000"}},
      {BlockId::RtsCts,
       "channel_acquired", "handshake", "awaiting_cts", "reserve medium",
       {BlockId::Ack, BlockId::CarrierSense},
       {"off", "on"}},
      {BlockId::ContentionWindow,
       "backoff_reset", "cw_min", "current_cw", "scale backoff range",
       {BlockId::Backoff},
       {"off", "15", "31", "63", "127", "255", "511", "1023"}},
      {BlockId::CarrierSense,
       "medium_activity", "sensing", "busy/idle", "defer while busy",
       {},
       {"off", "on"}},
      {BlockId::DataRate,
       "tx_start", "rate_mbps", "current_rate", "set PHY rate",
       {},
       {"off", "6", "9", "12", "24", "36", "48", "54"}},
  }};
  return specs;
}

// Numeric value behind an active variant, where the label is a number
// (fragment bytes, aggregate bytes, CW floor, rate in Mbps). 0 for "off".
inline constexpr std::array<std::array<int, 8>, kNumBlocks> kVariantValues = {{
    {0, 0, 0, 0, 0, 0, 0, 0},                  // Backoff (algorithms, not numbers)
    {0, 1, 0, 0, 0, 0, 0, 0},                  // Ack
    {0, 200, 500, 1000, 0, 0, 0, 0},           // Fragmentation
    {0, 2000, 0, 0, 0, 0, 0, 0},               // Aggregation
    {0, 1, 0, 0, 0, 0, 0, 0},                  // RtsCts
    {0, 15, 31, 63, 127, 255, 511, 1023},      // ContentionWindow
    {0, 1, 0, 0, 0, 0, 0, 0},                  // CarrierSense
    {0, 6, 9, 12, 24, 36, 48, 54},             // DataRate
}};

// One variant index per block; 0 means the block is excluded.
struct Genome {
  std::array<std::uint8_t, kNumBlocks> values{};

  std::uint8_t operator[](BlockId b) const { return values[static_cast<std::size_t>(b)]; }
  std::uint8_t& operator[](BlockId b) { return values[static_cast<std::size_t>(b)]; }
  bool active(BlockId b) const { return (*this)[b] != 0; }

  friend bool operator==(const Genome&, const Genome&) = default;

  // Packs the genome into one integer (mixed-radix over the domains);
  // bijective with the enumeration below.
  std::uint32_t key() const {
    std::uint32_t k = 0;
    for (std::size_t i = 0; i < kNumBlocks; ++i)
      k = k * static_cast<std::uint32_t>(kDomainSizes[i]) + values[i];
    return k;
  }
};

inline void check_genome(const Genome& g) {
  for (std::size_t i = 0; i < kNumBlocks; ++i) {
    if (g.values[i] >= kDomainSizes[i])
      throw std::out_of_range("genome entry " + std::string(block_name(static_cast<BlockId>(i))) +
                              " = " + std::to_string(g.values[i]) + " exceeds domain size " +
                              std::to_string(kDomainSizes[i]));
  }
}

// Agent input: one-hot genome segments followed by the normalized
// throughput history, newest sample last, zero-padded at the front.
struct StateVector {
  std::array<double, kOneHotWidth> genome_onehot{};
  std::array<double, kHistoryLen> history{};

  std::array<double, kStateWidth> flat() const {
    std::array<double, kStateWidth> out{};
    std::copy(genome_onehot.begin(), genome_onehot.end(), out.begin());
    std::copy(history.begin(), history.end(), out.begin() + kOneHotWidth);
    return out;
  }
};

inline StateVector encode(const Genome& g, std::span<const double> history) {
  check_genome(g);
  StateVector s;
  for (std::size_t i = 0; i < kNumBlocks; ++i)
    s.genome_onehot[kDomainOffsets[i] + g.values[i]] = 1.0;
  const std::size_t n = history.size() > kHistoryLen ? kHistoryLen : history.size();
  const std::size_t skip = history.size() - n;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = history[skip + i];
    if (!(v >= 0.0 && v <= 1.0))
      throw std::out_of_range("history sample " + std::to_string(v) + " outside [0, 1]");
    s.history[kHistoryLen - n + i] = v;
  }
  return s;
}

inline Genome decode(std::span<const double> onehot) {
  if (onehot.size() != kOneHotWidth)
    throw std::invalid_argument("one-hot vector must have width " + std::to_string(kOneHotWidth));
  Genome g;
  for (std::size_t i = 0; i < kNumBlocks; ++i) {
    int hot = -1;
    for (std::size_t j = 0; j < kDomainSizes[i]; ++j) {
      if (onehot[kDomainOffsets[i] + j] != 0.0) {
        if (hot >= 0)
          throw std::invalid_argument("multiple hot bits in segment " +
                                      std::string(block_name(static_cast<BlockId>(i))));
        hot = static_cast<int>(j);
      }
    }
    if (hot < 0)
      throw std::invalid_argument("no hot bit in segment " +
                                  std::string(block_name(static_cast<BlockId>(i))));
    g.values[i] = static_cast<std::uint8_t>(hot);
  }
  return g;
}

// Every genome in the design space, lexicographic, all-zeros first.
inline std::vector<Genome> enumerate_genomes() {
  std::vector<Genome> out;
  out.reserve(kGenomeCount);
  Genome g;
  while (true) {
    out.push_back(g);
    std::size_t i = kNumBlocks;
    while (i > 0) {
      --i;
      if (++g.values[i] < kDomainSizes[i]) break;
      g.values[i] = 0;
      if (i == 0) return out;
    }
  }
}

// ---- actions ---------------------------------------------------------
// An action assigns one block to one variant (assigning the current value
// is a legal no-op). Flattened to [0, 31) by the domain prefix sums.

struct Action {
  BlockId block;
  std::uint8_t variant;
};

inline int action_index(BlockId block, std::uint8_t variant) {
  const auto b = static_cast<std::size_t>(block);
  if (variant >= kDomainSizes[b]) throw std::out_of_range("variant outside block domain");
  return static_cast<int>(kDomainOffsets[b] + variant);
}

inline Action action_at(int index) {
  if (index < 0 || index >= static_cast<int>(kActionCount))
    throw std::out_of_range("action index outside [0, 31)");
  std::size_t b = 0;
  while (static_cast<std::size_t>(index) >= kDomainOffsets[b + 1]) ++b;
  return Action{static_cast<BlockId>(b),
                static_cast<std::uint8_t>(index - kDomainOffsets[b])};
}

// ---- genome strings --------------------------------------------------
// Text form used by the CLI: 8 comma-separated variant labels in catalog
// order, e.g. "BEB,ACK,off,off,off,15,on,54".

inline std::string format_genome(const Genome& g) {
  std::string out;
  for (std::size_t i = 0; i < kNumBlocks; ++i) {
    if (i) out += ',';
    out += catalog()[i].domain[g.values[i]];
  }
  return out;
}

namespace detail {
inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}
}  // namespace detail

inline Genome parse_genome(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      tokens.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  tokens.push_back(cur);
  if (tokens.size() != kNumBlocks)
    throw std::invalid_argument("genome string needs " + std::to_string(kNumBlocks) +
                                " comma-separated labels, got " + std::to_string(tokens.size()));
  Genome g;
  for (std::size_t i = 0; i < kNumBlocks; ++i) {
    const std::string tok = detail::lower(tokens[i]);
    const auto& dom = catalog()[i].domain;
    int match = -1;
    if (tok == "off" || tok == "excluded" || tok == "none") match = 0;
    for (std::size_t j = 0; match < 0 && j < dom.size(); ++j)
      if (tok == detail::lower(dom[j])) match = static_cast<int>(j);
    if (match < 0)
      throw std::invalid_argument("unknown variant '" + tokens[i] + "' for block " +
                                  std::string(block_name(static_cast<BlockId>(i))));
    g.values[i] = static_cast<std::uint8_t>(match);
  }
  return g;
}

}  // namespace deepmac
