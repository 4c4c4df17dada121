#include "keysim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace keysim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent streams inside one trial, so that e.g. the capture set does
// not depend on how many puzzles were drawn before it.
enum Stream : std::uint64_t { kSetup = 1, kProtocol = 2, kMobility = 3, kAdversary = 4 };

Rng stream(std::uint64_t trial_seed, Stream s) { return Rng(splitmix64(trial_seed ^ splitmix64(s))); }

Location uniform_location(const Field& field, Rng& rng) {
  std::uniform_real_distribution<double> ux(0.0, field.width);
  std::uniform_real_distribution<double> uy(0.0, field.height);
  const double x = ux(rng);
  return {x, uy(rng)};
}

bool interior(const Location& p, const Field& field, double margin) {
  return p.x >= margin && p.y >= margin && field.width - p.x >= margin && field.height - p.y >= margin;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, std::uint32_t index) {
  return splitmix64(splitmix64(master) ^ (static_cast<std::uint64_t>(index) + 1) * 0xd1342543de82ef95ULL);
}

std::vector<NodeState> deploy(std::uint32_t n, const Field& field, Rng& rng) {
  if (field.degenerate()) throw InvalidConfig("field: width and height must be positive");
  std::vector<NodeState> nodes(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    nodes[i].node_id = i;
    nodes[i].public_address = uniform_location(field, rng);
  }
  return nodes;
}

// ---------------------------------------------------------------------------
// Adjacency
// ---------------------------------------------------------------------------

std::size_t Adjacency::pair_count() const {
  std::size_t total = 0;
  for (const auto& list : neighbors) total += list.size();
  return total / 2;
}

bool Adjacency::adjacent(NodeId a, NodeId b) const {
  if (a >= neighbors.size()) return false;
  return std::binary_search(neighbors[a].begin(), neighbors[a].end(), b);
}

void Adjacency::for_each_pair(const std::function<void(NodeId, NodeId)>& f) const {
  for (NodeId u = 0; u < neighbors.size(); ++u) {
    for (NodeId v : neighbors[u]) {
      if (u < v) f(u, v);
    }
  }
}

Adjacency find_neighbors(std::span<const NodeState> nodes, double d_r) {
  Adjacency adj;
  adj.neighbors.resize(nodes.size());
  if (nodes.empty()) return adj;
  if (!(d_r > 0)) throw InvalidConfig("d_r: must be > 0");

  double max_x = 0.0;
  double max_y = 0.0;
  for (const auto& node : nodes) {
    max_x = std::max(max_x, node.public_address.x);
    max_y = std::max(max_y, node.public_address.y);
  }
  const auto cols = static_cast<std::size_t>(max_x / d_r) + 1;
  const auto rows = static_cast<std::size_t>(max_y / d_r) + 1;
  auto cell_of = [&](const Location& p) {
    const auto cx = std::min(static_cast<std::size_t>(std::max(p.x, 0.0) / d_r), cols - 1);
    const auto cy = std::min(static_cast<std::size_t>(std::max(p.y, 0.0) / d_r), rows - 1);
    return std::pair{cx, cy};
  };

  // Counting sort of node indices by cell.
  std::vector<std::size_t> start(cols * rows + 1, 0);
  for (const auto& node : nodes) {
    auto [cx, cy] = cell_of(node.public_address);
    ++start[cy * cols + cx + 1];
  }
  for (std::size_t i = 1; i < start.size(); ++i) start[i] += start[i - 1];
  std::vector<NodeId> bucket(nodes.size());
  {
    auto fill = start;
    for (NodeId i = 0; i < nodes.size(); ++i) {
      auto [cx, cy] = cell_of(nodes[i].public_address);
      bucket[fill[cy * cols + cx]++] = i;
    }
  }

  for (NodeId u = 0; u < nodes.size(); ++u) {
    const auto& pu = nodes[u].public_address;
    auto [cx, cy] = cell_of(pu);
    auto& list = adj.neighbors[u];
    for (std::size_t y = cy == 0 ? 0 : cy - 1; y <= std::min(cy + 1, rows - 1); ++y) {
      for (std::size_t x = cx == 0 ? 0 : cx - 1; x <= std::min(cx + 1, cols - 1); ++x) {
        const auto cell = y * cols + x;
        for (std::size_t k = start[cell]; k < start[cell + 1]; ++k) {
          const NodeId v = bucket[k];
          if (v != u && euclidean_distance(pu, nodes[v].public_address) <= d_r) list.push_back(v);
        }
      }
    }
    std::sort(list.begin(), list.end());
  }
  return adj;
}

// ---------------------------------------------------------------------------
// Adversary
// ---------------------------------------------------------------------------

std::vector<UnitId> attacker_key_set(std::span<const NodeState> nodes, std::span<const NodeId> captured,
                                     CaptureTiming timing, bool delete_low_priority) {
  const bool high_only = timing == CaptureTiming::AfterPrioritization && delete_low_priority;
  std::vector<UnitId> units;
  for (NodeId id : captured) {
    const auto& ring = nodes[id].ring;
    const auto ids = high_only ? ring.high_priority_by_id() : ring.unit_ids();
    units.insert(units.end(), ids.begin(), ids.end());
  }
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  return units;
}

// ---------------------------------------------------------------------------
// Trial
// ---------------------------------------------------------------------------

Trial::Trial(SimConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed), rng_(stream(seed, kProtocol)), mobility_rng_(stream(seed, kMobility)) {
  config_.validate();
  suite_ = CryptoSuite::from_config(config_);
}

void Trial::setup(bool disjoint_rings) {
  Rng rng = stream(seed_, kSetup);
  pool_ = std::make_shared<const KeyPool>(
      generate_key_pool(config_.pool_size, config_.field, rng, config_.key_length));
  auto rings = disjoint_rings ? predistribute_disjoint(pool_, config_.n, config_.ring_size)
                              : predistribute(pool_, config_.n, config_.ring_size, rng);
  nodes_ = deploy(config_.n, config_.field, rng);
  for (std::size_t i = 0; i < nodes_.size(); ++i) nodes_[i].ring = std::move(rings[i]);
  adjacency_ = find_neighbors(nodes_, config_.d_r);

  mobility_rng_ = stream(seed_, kMobility);
  waypoints_.assign(nodes_.size(), Waypoint{});
  if (config_.mobility.model == MobilityModel::RandomWaypoint) {
    for (auto& w : waypoints_) w = fresh_waypoint();
  }
  captured_.clear();
  attacker_units_.clear();
  captured_set_ = false;
  step_index_ = 0;
}

Trial::Waypoint Trial::fresh_waypoint() {
  Waypoint w;
  w.target = uniform_location(config_.field, mobility_rng_);
  std::uniform_real_distribution<double> speed(config_.mobility.speed_min, config_.mobility.speed_max);
  w.speed = config_.mobility.speed_min == config_.mobility.speed_max ? config_.mobility.speed_min : speed(mobility_rng_);
  return w;
}

HandshakeResult Trial::handshake(NodeId a, NodeId b) {
  const bool trace = traced_ && *traced_ == std::pair<NodeId, NodeId>(std::minmax(a, b));
  return run_handshake(nodes_[a], nodes_[b], suite_, rng_, trace ? &transcript_ : nullptr);
}

StepMetrics Trial::bootstrap() {
  for (auto& node : nodes_) {
    node.ring = prioritize(node.ring, node.public_address, config_.high_priority, config_.delete_low_priority);
    node.link_keys.clear();
  }
  StepMetrics step;
  rekey_pairs(std::vector<char>(nodes_.size(), 1), step);
  step.step = step_index_;
  finish_step(step);
  last_step_ = step;
  return step;
}

void Trial::rekey_pairs(const std::vector<char>& touched, StepMetrics& step) {
  adjacency_.for_each_pair([&](NodeId u, NodeId v) {
    if (!touched[u] && !touched[v]) return;
    const auto result = handshake(u, v);
    ++step.handshakes;
    if (result.outcome == HandshakeOutcome::PuzzleMismatch) ++step.puzzle_mismatches;
  });
}

void Trial::capture() {
  if (config_.adversary.captured > nodes_.size()) {
    throw InvalidConfig("captured: N_c exceeds the number of deployed nodes");
  }
  Rng rng = stream(seed_, kAdversary);
  SubsetSampler sampler(static_cast<std::uint32_t>(nodes_.size()));
  captured_ = sampler.draw(config_.adversary.captured, rng);
  std::sort(captured_.begin(), captured_.end());
  for (auto& node : nodes_) node.captured = false;
  for (NodeId id : captured_) nodes_[id].captured = true;
  attacker_units_ =
      attacker_key_set(nodes_, captured_, config_.adversary.timing, config_.delete_low_priority);
  captured_set_ = true;
}

CaptureMetrics Trial::capture_metrics() const {
  CaptureMetrics out;
  out.captured = captured_;
  out.attacker_units = attacker_units_.size();
  out.per_key_compromise = pool_ ? static_cast<double>(attacker_units_.size()) / pool_->size() : 0.0;

  std::vector<char> known(pool_ ? pool_->size() : 0, 0);
  for (UnitId id : attacker_units_) known[id] = 1;

  for (const auto& node : nodes_) {
    if (node.captured) continue;
    for (const auto& [peer, link] : node.link_keys) {
      if (peer < node.node_id || nodes_[peer].captured || !link.confirmed) continue;
      const bool broken = std::all_of(link.shared_unit_ids.begin(), link.shared_unit_ids.end(),
                                      [&](UnitId id) { return known[id] != 0; });
      ++out.eligible_links;
      out.compromised_links += broken;
      if (link.shared_unit_ids.size() == 1) {
        ++out.single_key_links;
        out.single_key_compromised += broken;
      } else {
        ++out.multi_key_links;
        out.multi_key_compromised += broken;
      }
    }
  }
  out.compromised_link_fraction =
      out.eligible_links ? static_cast<double>(out.compromised_links) / out.eligible_links : 0.0;
  return out;
}

StepMetrics Trial::snapshot() const {
  StepMetrics s;
  s.step = step_index_;
  const double margin = config_.d_r;
  adjacency_.for_each_pair([&](NodeId u, NodeId v) {
    ++s.adjacent_pairs;
    const bool linked = nodes_[u].link_keys.contains(v);
    s.confirmed_links += linked;
    if (interior(nodes_[u].public_address, config_.field, margin) &&
        interior(nodes_[v].public_address, config_.field, margin)) {
      ++s.interior_pairs;
      s.interior_key_pairs += linked;
    }
  });
  s.key_neighbor_pairs = s.confirmed_links;
  s.measured_p = s.adjacent_pairs ? static_cast<double>(s.confirmed_links) / s.adjacent_pairs : 0.0;
  s.interior_measured_p = s.interior_pairs ? static_cast<double>(s.interior_key_pairs) / s.interior_pairs : 0.0;
  const auto limit = static_cast<std::size_t>(std::floor(config_.d));
  for (const auto& node : nodes_) s.overflow_count += node.link_keys.size() > limit;
  if (captured_set_) {
    const auto cm = capture_metrics();
    s.compromised_link_fraction = cm.compromised_link_fraction;
    s.per_key_compromise = cm.per_key_compromise;
  }
  return s;
}

void Trial::finish_step(StepMetrics& step) const {
  const auto snap = snapshot();
  const auto handshakes = step.handshakes;
  const auto mismatches = step.puzzle_mismatches;
  const auto moved = step.moved_nodes;
  step = snap;
  step.handshakes = handshakes;
  step.puzzle_mismatches = mismatches;
  step.moved_nodes = moved;
  // A mismatching pair still shares units; count it as key neighbors.
  step.key_neighbor_pairs = snap.confirmed_links + mismatches;
}

void Trial::move_node(NodeId id, const Location& to) {
  auto& node = nodes_[id];
  for (const auto& [peer, link] : node.link_keys) nodes_[peer].link_keys.erase(id);
  on_move(node, to, config_.high_priority, config_.delete_low_priority);
}

std::vector<NodeId> Trial::step_mobility() {
  const auto& mob = config_.mobility;
  std::vector<std::pair<NodeId, Location>> moves;

  switch (mob.model) {
    case MobilityModel::Static:
      break;
    case MobilityModel::RandomTeleport: {
      std::bernoulli_distribution jump(mob.teleport_probability);
      for (auto& node : nodes_) {
        if (jump(mobility_rng_)) moves.emplace_back(node.node_id, uniform_location(config_.field, mobility_rng_));
      }
      break;
    }
    case MobilityModel::RandomWaypoint: {
      for (auto& node : nodes_) {
        auto& w = waypoints_[node.node_id];
        Location pos = node.public_address;
        double left = mob.step_duration;
        while (left > 0.0) {
          if (w.pause_left > 0.0) {
            const double wait = std::min(w.pause_left, left);
            w.pause_left -= wait;
            left -= wait;
            continue;
          }
          if (w.speed <= 0.0) break;
          const double dist = euclidean_distance(pos, w.target);
          const double reach = w.speed * left;
          if (reach < dist) {
            pos.x += (w.target.x - pos.x) * reach / dist;
            pos.y += (w.target.y - pos.y) * reach / dist;
            left = 0.0;
          } else {
            left -= dist / w.speed;
            pos = w.target;
            const double pause = mob.pause;
            w = fresh_waypoint();
            w.pause_left = pause;
          }
        }
        pos.x = std::clamp(pos.x, 0.0, config_.field.width);
        pos.y = std::clamp(pos.y, 0.0, config_.field.height);
        if (pos != node.public_address) moves.emplace_back(node.node_id, pos);
      }
      break;
    }
  }

  ++step_index_;
  StepMetrics step;
  std::vector<char> touched(nodes_.size(), 0);
  std::vector<NodeId> moved;
  moved.reserve(moves.size());
  for (const auto& [id, to] : moves) {
    move_node(id, to);
    touched[id] = 1;
    moved.push_back(id);
  }
  step.moved_nodes = moved.size();
  if (!moved.empty()) {
    adjacency_ = find_neighbors(nodes_, config_.d_r);
    rekey_pairs(touched, step);
  }
  step.step = step_index_;
  finish_step(step);
  last_step_ = step;
  return moved;
}

NodeId Trial::add_node() {
  if (!pool_) throw InvalidConfig("add_node needs a pool; call setup() first");
  const auto id = static_cast<NodeId>(nodes_.size());
  std::vector<NodeId> used(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) used[i] = nodes_[i].node_id;

  Rng rng = stream(seed_ ^ splitmix64(id), kSetup);
  NodeState node = provision_new_node(pool_, id, config_.ring_size, rng, used);
  node.public_address = uniform_location(config_.field, rng);
  node.ring = prioritize(node.ring, node.public_address, config_.high_priority, config_.delete_low_priority);
  nodes_.push_back(std::move(node));

  std::vector<NodeId> near;
  for (NodeId v = 0; v < id; ++v) {
    if (euclidean_distance(nodes_[id].public_address, nodes_[v].public_address) <= config_.d_r) {
      near.push_back(v);
      adjacency_.neighbors[v].push_back(id);  // id is the largest, order kept
    }
  }
  adjacency_.neighbors.push_back(near);
  waypoints_.push_back(config_.mobility.model == MobilityModel::RandomWaypoint ? fresh_waypoint() : Waypoint{});

  StepMetrics step;
  for (NodeId v : near) {
    const auto result = handshake(id, v);
    ++step.handshakes;
    if (result.outcome == HandshakeOutcome::PuzzleMismatch) ++step.puzzle_mismatches;
  }
  step.step = step_index_;
  finish_step(step);
  last_step_ = step;
  return id;
}

TrialMetrics Trial::run() {
  setup();
  const bool attack = config_.adversary.captured > 0;
  if (attack && config_.adversary.timing == CaptureTiming::BeforePrioritization) capture();
  TrialMetrics out;
  out.series.push_back(bootstrap());
  if (attack && config_.adversary.timing == CaptureTiming::AfterPrioritization) {
    capture();
    finish_step(last_step_);
    out.series.back() = last_step_;
  }
  for (std::uint32_t s = 0; s < config_.mobility.steps; ++s) {
    step_mobility();
    out.series.push_back(last_step_);
  }

  // Trial-level values average the bootstrap and every mobility step.
  for (const auto& s : out.series) {
    out.measured_p += s.measured_p;
    out.interior_measured_p += s.interior_measured_p;
    out.compromised_link_fraction += s.compromised_link_fraction;
    out.per_key_compromise += s.per_key_compromise;
    out.overflow_count = std::max(out.overflow_count, s.overflow_count);
    out.puzzle_mismatches += s.puzzle_mismatches;
  }
  const auto count = static_cast<double>(out.series.size());
  out.measured_p /= count;
  out.interior_measured_p /= count;
  out.compromised_link_fraction /= count;
  out.per_key_compromise /= count;
  return out;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

std::uint32_t as_count(const std::string& field, double value) {
  if (!(value >= 0) || std::floor(value) != value || value > 4294967295.0) {
    throw InvalidConfig(field + ": sweep value must be a non-negative integer");
  }
  return static_cast<std::uint32_t>(value);
}

const std::vector<std::string>& sweep_fields() {
  static const std::vector<std::string> fields{"memory_pct", "m", "c", "M", "n", "d_r", "d",
                                               "N_c", "teleport_probability", "steps"};
  return fields;
}

}  // namespace

bool is_sweep_field(const std::string& field) {
  const auto& f = sweep_fields();
  return std::find(f.begin(), f.end(), field) != f.end();
}

SimConfig apply_sweep(const SimConfig& base, const std::string& field, double value) {
  SimConfig c = base;
  if (field == "memory_pct") {
    if (!(value >= 0)) throw InvalidConfig("memory_pct: must be >= 0");
    c.ring_size = ring_size_for_memory(c.high_priority, value);
  } else if (field == "m") {
    c.ring_size = as_count(field, value);
  } else if (field == "c") {
    c.high_priority = as_count(field, value);
  } else if (field == "M") {
    c.pool_size = as_count(field, value);
  } else if (field == "n") {
    c.n = as_count(field, value);
  } else if (field == "d_r") {
    c.d_r = value;
  } else if (field == "d") {
    c.d = value;
  } else if (field == "N_c") {
    c.adversary.captured = as_count(field, value);
  } else if (field == "teleport_probability") {
    c.mobility.teleport_probability = value;
  } else if (field == "steps") {
    c.mobility.steps = as_count(field, value);
  } else {
    throw InvalidConfig("sweep: unknown field '" + field + "'");
  }
  return c;
}

unsigned worker_threads() {
  if (const char* env = std::getenv("KEYSIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<TrialMetrics> run_trials(const SimConfig& config, unsigned threads) {
  config.validate();
  if (threads == 0) threads = worker_threads();
  threads = std::min<unsigned>(threads, config.trials);

  std::vector<TrialMetrics> results(config.trials);
  std::atomic<std::uint32_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;

  auto work = [&] {
    for (;;) {
      const auto index = next.fetch_add(1);
      if (index >= config.trials) return;
      try {
        Trial trial(config, trial_seed(config.seed, index));
        results[index] = trial.run();
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
        next = config.trials;
      }
    }
  };

  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<SweepRow> run_experiment(const SimConfig& config, const Sweep& sweep,
                                     const std::function<void(const SweepRow&)>& on_row, unsigned threads) {
  if (!is_sweep_field(sweep.field)) throw InvalidConfig("sweep: unknown field '" + sweep.field + "'");
  std::vector<SweepRow> rows;
  for (double value : sweep.values) {
    const SimConfig point = apply_sweep(config, sweep.field, value);
    point.validate();
    const auto trials = run_trials(point, threads);

    auto mean_std = [&](auto get) {
      double sum = 0.0;
      for (const auto& t : trials) sum += get(t);
      const double mean = sum / trials.size();
      double ss = 0.0;
      for (const auto& t : trials) ss += (get(t) - mean) * (get(t) - mean);
      const double sd = trials.size() > 1 ? std::sqrt(ss / (trials.size() - 1)) : 0.0;
      return std::pair{mean, sd};
    };

    SweepRow row;
    row.field = sweep.field;
    row.value = value;
    row.trials = point.trials;
    row.ring_size = point.ring_size;
    std::tie(row.p_mean, row.p_std) = mean_std([](const TrialMetrics& t) { return t.measured_p; });
    row.p_interior_mean = mean_std([](const TrialMetrics& t) { return t.interior_measured_p; }).first;
    row.p_analytic = average_connectivity(AnalyticParams::from_config(point));
    std::tie(row.per_key_mean, row.per_key_std) =
        mean_std([](const TrialMetrics& t) { return t.per_key_compromise; });
    row.per_key_analytic = resilience(point.ring_size, point.pool_size, point.adversary.captured);
    std::tie(row.link_compromise_mean, row.link_compromise_std) =
        mean_std([](const TrialMetrics& t) { return t.compromised_link_fraction; });
    row.overflow_mean = mean_std([](const TrialMetrics& t) { return static_cast<double>(t.overflow_count); }).first;
    if (on_row) on_row(row);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace keysim
