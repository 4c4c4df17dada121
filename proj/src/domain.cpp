#include "keysim/domain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "keysim/crypto.hpp"

namespace keysim {

double euclidean_distance(const Location& a, const Location& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// ---------------------------------------------------------------------------
// KeyPool
// ---------------------------------------------------------------------------

KeyPool::KeyPool(std::vector<KeyUnit> units, Field field) : units_(std::move(units)), field_(field) {
  if (units_.empty()) throw InvalidConfig("key pool must hold at least one unit");
  if (field_.degenerate()) throw InvalidConfig("key pool field must have positive width and height");

  std::sort(units_.begin(), units_.end(),
            [](const KeyUnit& a, const KeyUnit& b) { return a.unit_id < b.unit_id; });
  for (std::size_t i = 1; i < units_.size(); ++i) {
    if (units_[i].unit_id == units_[i - 1].unit_id) {
      throw InvalidConfig("duplicate unit_id " + std::to_string(units_[i].unit_id) + " in key pool");
    }
  }
  for (const auto& u : units_) {
    if (!field_.contains(u.location)) {
      throw InvalidConfig("unit " + std::to_string(u.unit_id) + " lies outside the field");
    }
  }

  // Distinctness on the exact bit pattern of the coordinates.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> bits;
  bits.reserve(units_.size());
  for (const auto& u : units_) {
    bits.emplace_back(std::bit_cast<std::uint64_t>(u.location.x + 0.0),
                      std::bit_cast<std::uint64_t>(u.location.y + 0.0));
  }
  std::sort(bits.begin(), bits.end());
  if (std::adjacent_find(bits.begin(), bits.end()) != bits.end()) {
    throw InvalidConfig("duplicate key unit location in key pool");
  }

  dense_ = true;
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].unit_id != i) {
      dense_ = false;
      break;
    }
  }
}

bool KeyPool::contains(UnitId id) const {
  if (dense_) return id < units_.size();
  auto it = std::lower_bound(units_.begin(), units_.end(), id,
                             [](const KeyUnit& u, UnitId v) { return u.unit_id < v; });
  return it != units_.end() && it->unit_id == id;
}

const KeyUnit& KeyPool::unit(UnitId id) const {
  if (dense_) {
    if (id >= units_.size()) throw std::out_of_range("unknown unit id " + std::to_string(id));
    return units_[id];
  }
  auto it = std::lower_bound(units_.begin(), units_.end(), id,
                             [](const KeyUnit& u, UnitId v) { return u.unit_id < v; });
  if (it == units_.end() || it->unit_id != id) {
    throw std::out_of_range("unknown unit id " + std::to_string(id));
  }
  return *it;
}

KeyPool KeyPool::with_material(UnitId id, Bytes material) const {
  KeyPool copy = *this;
  const auto& target = unit(id);
  const auto index = static_cast<std::size_t>(&target - units_.data());
  copy.units_[index].key_material = std::move(material);
  return copy;
}

// ---------------------------------------------------------------------------
// KeyRing
// ---------------------------------------------------------------------------

namespace {

void check_ring_ids(const KeyPool& pool, const std::vector<UnitId>& sorted_ids) {
  for (std::size_t i = 0; i < sorted_ids.size(); ++i) {
    if (i > 0 && sorted_ids[i] == sorted_ids[i - 1]) {
      throw InvalidConfig("key ring holds unit " + std::to_string(sorted_ids[i]) + " twice");
    }
    if (!pool.contains(sorted_ids[i])) {
      throw InvalidConfig("key ring references unit " + std::to_string(sorted_ids[i]) +
                          " that is not in the pool");
    }
  }
}

}  // namespace

KeyRing::KeyRing(PoolHandle pool, std::vector<UnitId> unit_ids)
    : pool_(std::move(pool)), unit_ids_(std::move(unit_ids)) {
  if (!pool_) throw InvalidConfig("key ring needs a pool");
  std::sort(unit_ids_.begin(), unit_ids_.end());
  check_ring_ids(*pool_, unit_ids_);
  offer_ = std::make_shared<const std::vector<OfferedUnit>>();
}

KeyRing::KeyRing(PoolHandle pool, std::vector<UnitId> unit_ids, std::vector<UnitId> high_priority)
    : KeyRing(std::move(pool), std::move(unit_ids)) {
  high_priority_ = std::move(high_priority);
  high_priority_sorted_ = high_priority_;
  std::sort(high_priority_sorted_.begin(), high_priority_sorted_.end());
  if (std::adjacent_find(high_priority_sorted_.begin(), high_priority_sorted_.end()) !=
      high_priority_sorted_.end()) {
    throw InvalidConfig("high-priority list repeats a unit");
  }
  if (!std::includes(unit_ids_.begin(), unit_ids_.end(), high_priority_sorted_.begin(),
                     high_priority_sorted_.end())) {
    throw InvalidConfig("high-priority list is not a subset of the ring");
  }
  prioritized_ = true;

  std::vector<OfferedUnit> offered;
  offered.reserve(high_priority_sorted_.size());
  for (UnitId id : high_priority_sorted_) offered.push_back({id, pool_->unit(id).location});
  offer_ = std::make_shared<const std::vector<OfferedUnit>>(std::move(offered));
}

bool KeyRing::contains(UnitId id) const {
  return std::binary_search(unit_ids_.begin(), unit_ids_.end(), id);
}

// ---------------------------------------------------------------------------
// LinkKey
// ---------------------------------------------------------------------------

LinkKey LinkKey::make(NodeId a, NodeId b, Bytes key, std::vector<UnitId> shared,
                      std::size_t digest_length, bool confirmed) {
  if (shared.empty()) throw EmptySharedSet();
  if (a == b) throw InvalidConfig("link key peers must differ");
  if (key.size() != digest_length) throw InvalidConfig("link key length differs from digest length");
  std::sort(shared.begin(), shared.end());
  LinkKey out;
  out.low = std::min(a, b);
  out.high = std::max(a, b);
  out.key = std::move(key);
  out.shared_unit_ids = std::move(shared);
  out.confirmed = confirmed;
  return out;
}

// ---------------------------------------------------------------------------
// SimConfig
// ---------------------------------------------------------------------------

std::vector<std::string> SimConfig::violations() const {
  std::vector<std::string> out;
  auto fail = [&out](std::string field, std::string what) {
    out.push_back(std::move(field) + ": " + std::move(what));
  };

  if (n == 0) fail("n", "must be > 0");
  if (!(field.width > 0.0)) fail("field_width", "must be > 0");
  if (!(field.height > 0.0)) fail("field_height", "must be > 0");
  if (!(d_r > 0.0)) fail("d_r", "must be > 0");
  if (!(d >= 0.0)) fail("d", "must be >= 0");
  if (pool_size == 0) fail("M", "must be >= 1");
  if (ring_size == 0) fail("m", "must be >= 1");
  if (high_priority > ring_size) {
    std::ostringstream s;
    s << "c ≤ m violated (c=" << high_priority << ", m=" << ring_size << ")";
    fail("c", s.str());
  }
  if (ring_size > pool_size) {
    std::ostringstream s;
    s << "m ≤ M violated (m=" << ring_size << ", M=" << pool_size << ")";
    fail("m", s.str());
  }
  if (simpson_intervals == 0 || simpson_intervals % 2 != 0) {
    fail("simpson_intervals", "must be a positive even integer (got " + std::to_string(simpson_intervals) + ")");
  }
  if (trials == 0) fail("trials", "must be >= 1");
  if (key_length == 0) fail("key_length", "must be >= 1");
  if (puzzle_length == 0) fail("puzzle_length", "must be >= 1");

  const auto& mob = mobility;
  if (!(mob.teleport_probability >= 0.0 && mob.teleport_probability <= 1.0)) {
    fail("teleport_probability", "must lie in [0, 1]");
  }
  if (!(mob.speed_min >= 0.0)) fail("speed_min", "must be >= 0");
  if (!(mob.speed_min <= mob.speed_max)) fail("speed_max", "speed_min ≤ speed_max violated");
  if (!(mob.pause >= 0.0)) fail("pause", "must be >= 0");
  if (!(mob.step_duration > 0.0)) fail("step_duration", "must be > 0");

  if (adversary.captured > n) {
    fail("N_c", "N_c ≤ n violated (N_c=" + std::to_string(adversary.captured) +
                         ", n=" + std::to_string(n) + ")");
  }

  const bool hash_known = has_hash(hash);
  const bool cipher_known = has_cipher(cipher);
  if (!hash_known) fail("hash", "unknown hash function '" + hash + "'");
  if (!cipher_known) fail("cipher", "unknown cipher '" + cipher + "'");
  if (hash_known && cipher_known && make_hash(hash)->digest_length() < make_cipher(cipher)->key_length()) {
    fail("cipher", "key length exceeds the digest length of '" + hash + "'");
  }
  return out;
}

void SimConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& line : v) msg += "\n  " + line;
  throw InvalidConfig(msg);
}

std::string to_string(MobilityModel model) {
  switch (model) {
    case MobilityModel::Static: return "static";
    case MobilityModel::RandomTeleport: return "random_teleport";
    case MobilityModel::RandomWaypoint: return "random_waypoint";
  }
  return "static";
}

std::string to_string(CaptureTiming timing) {
  return timing == CaptureTiming::BeforePrioritization ? "before_prioritization" : "after_prioritization";
}

std::string to_string(CaptureSelection) { return "uniform_random"; }

std::optional<MobilityModel> parse_mobility_model(const std::string& text) {
  if (text == "static") return MobilityModel::Static;
  if (text == "random_teleport") return MobilityModel::RandomTeleport;
  if (text == "random_waypoint") return MobilityModel::RandomWaypoint;
  return std::nullopt;
}

std::optional<CaptureTiming> parse_capture_timing(const std::string& text) {
  if (text == "before_prioritization") return CaptureTiming::BeforePrioritization;
  if (text == "after_prioritization") return CaptureTiming::AfterPrioritization;
  return std::nullopt;
}

std::optional<CaptureSelection> parse_capture_selection(const std::string& text) {
  if (text == "uniform_random") return CaptureSelection::UniformRandom;
  return std::nullopt;
}

}  // namespace keysim
