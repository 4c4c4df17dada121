#pragma once

// Monte Carlo engine: random deployment, neighbor discovery, protocol runs
// over every neighbor pair, mobility with re-keying, node capture, and the
// seeded multi-trial experiment driver.
//
// Within a trial node ids equal their index in the node vector.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "keysim/analytics.hpp"
#include "keysim/crypto.hpp"
#include "keysim/domain.hpp"
#include "keysim/protocol.hpp"
#include "keysim/setup.hpp"

namespace keysim {

/// n nodes at uniform i.i.d. in-field positions; rings left empty.
std::vector<NodeState> deploy(std::uint32_t n, const Field& field, Rng& rng);

/// Symmetric neighbor lists indexed like the node vector; each list is
/// ascending.
struct Adjacency {
  std::vector<std::vector<NodeId>> neighbors;

  std::size_t pair_count() const;
  bool adjacent(NodeId a, NodeId b) const;
  /// Calls f(u, v) for every pair with u < v, in ascending order.
  void for_each_pair(const std::function<void(NodeId, NodeId)>& f) const;

  friend bool operator==(const Adjacency&, const Adjacency&) = default;
};

/// Nodes u, v are adjacent iff their distance is <= d_r (closed ball).
/// Uses a uniform grid of cell size d_r.
Adjacency find_neighbors(std::span<const NodeState> nodes, double d_r);

struct StepMetrics {
  std::uint32_t step = 0;
  std::uint64_t adjacent_pairs = 0;
  std::uint64_t key_neighbor_pairs = 0;   // non-empty high-priority intersection
  std::uint64_t confirmed_links = 0;
  std::uint64_t puzzle_mismatches = 0;
  std::uint64_t interior_pairs = 0;       // both ends >= d_r from the border
  std::uint64_t interior_key_pairs = 0;
  double measured_p = 0.0;
  double interior_measured_p = 0.0;
  double compromised_link_fraction = 0.0;
  double per_key_compromise = 0.0;
  std::uint32_t overflow_count = 0;       // nodes holding more than d link keys
  std::uint64_t handshakes = 0;           // run during this step
  std::uint64_t moved_nodes = 0;
};

struct CaptureMetrics {
  std::vector<NodeId> captured;
  std::uint64_t attacker_units = 0;
  std::uint64_t eligible_links = 0;       // confirmed links between non-captured nodes
  std::uint64_t compromised_links = 0;
  double compromised_link_fraction = 0.0;
  double per_key_compromise = 0.0;
  // Split by shared-set size: q == 1 versus q >= 2.
  std::uint64_t single_key_links = 0;
  std::uint64_t single_key_compromised = 0;
  std::uint64_t multi_key_links = 0;
  std::uint64_t multi_key_compromised = 0;
};

struct TrialMetrics {
  double measured_p = 0.0;
  double interior_measured_p = 0.0;
  double compromised_link_fraction = 0.0;
  double per_key_compromise = 0.0;
  std::uint32_t overflow_count = 0;
  std::uint64_t puzzle_mismatches = 0;
  std::vector<StepMetrics> series;  // step 0 = bootstrap
};

/// Attacker knowledge: union of captured rings (whole rings, or only the
/// high-priority units when low-priority units were deleted and capture
/// happened after prioritization).
std::vector<UnitId> attacker_key_set(std::span<const NodeState> nodes, std::span<const NodeId> captured,
                                     CaptureTiming timing, bool delete_low_priority);

/// One independent trial.  Owns its pool, nodes, adjacency and RNG stream.
class Trial {
 public:
  Trial(SimConfig config, std::uint64_t trial_seed);

  /// Pool generation, ring pre-distribution and deployment.  With
  /// `disjoint_rings` node i gets units [i*m, (i+1)*m) (needs M >= n*m).
  void setup(bool disjoint_rings = false);

  /// Prioritizes every node at its address and handshakes every adjacent
  /// pair.
  StepMetrics bootstrap();

  /// Selects N_c captured nodes.  Under before_prioritization timing, call
  /// before bootstrap() so the attacker copies the unprioritized rings.
  void capture();
  /// Link compromise over the current links; zero when nothing captured.
  CaptureMetrics capture_metrics() const;

  /// One mobility step; moved nodes re-prioritize, drop their keys, and
  /// every pair touching a moved node handshakes again.  Returns the moved
  /// node ids.
  std::vector<NodeId> step_mobility();
  /// Metrics after the latest step.
  const StepMetrics& last_step() const { return last_step_; }

  /// Late deployment: provision, place uniformly, prioritize, handshake
  /// with physical neighbors.  Returns the new id.
  NodeId add_node();

  /// setup, optional capture, bootstrap, then the configured mobility steps.
  TrialMetrics run();

  StepMetrics snapshot() const;

  const SimConfig& config() const { return config_; }
  const PoolHandle& pool() const { return pool_; }
  std::vector<NodeState>& nodes() { return nodes_; }
  const std::vector<NodeState>& nodes() const { return nodes_; }
  const Adjacency& adjacency() const { return adjacency_; }
  const CryptoSuite& suite() const { return suite_; }
  Rng& rng() { return rng_; }

  /// Record every handshake message exchanged between this pair.
  void trace_pair(NodeId a, NodeId b) { traced_ = std::pair<NodeId, NodeId>(std::minmax(a, b)); }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }

 private:
  HandshakeResult handshake(NodeId a, NodeId b);
  void rekey_pairs(const std::vector<char>& touched, StepMetrics& step);
  void move_node(NodeId id, const Location& to);
  void finish_step(StepMetrics& step) const;

  struct Waypoint {
    Location target;
    double speed = 0.0;
    double pause_left = 0.0;
  };
  Waypoint fresh_waypoint();

  SimConfig config_;
  CryptoSuite suite_;
  std::uint64_t seed_ = 0;
  Rng rng_;  // puzzles
  Rng mobility_rng_;
  PoolHandle pool_;
  std::vector<NodeState> nodes_;
  Adjacency adjacency_;
  std::vector<Waypoint> waypoints_;
  std::vector<NodeId> captured_;
  std::vector<UnitId> attacker_units_;
  bool captured_set_ = false;
  std::uint32_t step_index_ = 0;
  StepMetrics last_step_;
  std::optional<std::pair<NodeId, NodeId>> traced_;
  std::vector<TranscriptEntry> transcript_;
};

/// Seed of trial `index` under `master`: splitmix64 of both.  Every sweep
/// point reuses the same trial seeds.
std::uint64_t trial_seed(std::uint64_t master, std::uint32_t index);

/// A named SimConfig field and the values it takes.  Fields: memory_pct,
/// m, c, M, n, d_r, d, N_c, teleport_probability, steps.
struct Sweep {
  std::string field = "memory_pct";
  std::vector<double> values{0.0};
};

/// Applies one sweep value to a config copy.  Throws InvalidConfig on an
/// unknown field.
SimConfig apply_sweep(const SimConfig& base, const std::string& field, double value);
bool is_sweep_field(const std::string& field);

struct SweepRow {
  std::string field;
  double value = 0.0;
  std::uint32_t trials = 0;
  std::uint32_t ring_size = 0;
  double p_mean = 0.0;
  double p_std = 0.0;
  double p_interior_mean = 0.0;
  double p_analytic = 0.0;
  double per_key_mean = 0.0;
  double per_key_std = 0.0;
  double per_key_analytic = 0.0;
  double link_compromise_mean = 0.0;
  double link_compromise_std = 0.0;
  double overflow_mean = 0.0;
};

/// Worker threads: KEYSIM_THREADS when set, otherwise the hardware count.
unsigned worker_threads();

/// Runs `config.trials` seeded trials for each sweep value.  Results do not
/// depend on the thread count.  `on_row` fires after each sweep point.
std::vector<SweepRow> run_experiment(const SimConfig& config, const Sweep& sweep,
                                     const std::function<void(const SweepRow&)>& on_row = {},
                                     unsigned threads = 0);

/// Runs trials [0, trials) of one config in parallel; index-ordered output.
std::vector<TrialMetrics> run_trials(const SimConfig& config, unsigned threads = 0);

}  // namespace keysim
