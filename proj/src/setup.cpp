#include "keysim/setup.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "keysim/crypto.hpp"
#include "keysim/csv.hpp"

namespace keysim {

namespace {

struct LocationBitsHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
    return std::hash<std::uint64_t>{}(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
  }
};

}  // namespace

KeyPool generate_key_pool(std::uint32_t pool_size, const Field& field, Rng& rng, std::size_t key_length) {
  if (pool_size == 0) throw InvalidConfig("M: key pool size must be >= 1");
  if (field.degenerate()) throw InvalidConfig("field: width and height must be positive");
  if (key_length == 0) throw InvalidConfig("key_length: must be >= 1");

  std::uniform_real_distribution<double> ux(0.0, field.width);
  std::uniform_real_distribution<double> uy(0.0, field.height);
  std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, LocationBitsHash> seen;
  seen.reserve(pool_size);

  std::vector<KeyUnit> units;
  units.reserve(pool_size);
  for (std::uint32_t i = 0; i < pool_size; ++i) {
    KeyUnit unit;
    unit.unit_id = i;
    unit.key_material = make_puzzle(rng, key_length);
    for (;;) {
      Location p{ux(rng), uy(rng)};
      if (seen.emplace(std::bit_cast<std::uint64_t>(p.x), std::bit_cast<std::uint64_t>(p.y)).second) {
        unit.location = p;
        break;
      }
    }
    units.push_back(std::move(unit));
  }
  return KeyPool(std::move(units), field);
}

SubsetSampler::SubsetSampler(std::uint32_t pool_size) : perm_(pool_size) {
  std::iota(perm_.begin(), perm_.end(), UnitId{0});
}

std::vector<UnitId> SubsetSampler::draw(std::uint32_t m, Rng& rng) {
  if (m > perm_.size()) throw InvalidConfig("m: ring size exceeds pool size");
  const auto size = static_cast<std::uint32_t>(perm_.size());
  for (std::uint32_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::uint32_t> pick(i, size - 1);
    std::swap(perm_[i], perm_[pick(rng)]);
  }
  return {perm_.begin(), perm_.begin() + m};
}

std::vector<KeyRing> predistribute(const PoolHandle& pool, std::uint32_t n, std::uint32_t m, Rng& rng) {
  if (!pool) throw InvalidConfig("predistribute needs a pool");
  if (m > pool->size()) throw InvalidConfig("m: ring size exceeds pool size");
  if (m == 0) throw InvalidConfig("m: ring size must be >= 1");
  SubsetSampler sampler(static_cast<std::uint32_t>(pool->size()));
  std::vector<KeyRing> rings;
  rings.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) rings.emplace_back(pool, sampler.draw(m, rng));
  return rings;
}

std::vector<KeyRing> predistribute_disjoint(const PoolHandle& pool, std::uint32_t n, std::uint32_t m) {
  if (!pool) throw InvalidConfig("predistribute needs a pool");
  if (m == 0) throw InvalidConfig("m: ring size must be >= 1");
  if (static_cast<std::uint64_t>(n) * m > pool->size()) {
    throw InvalidConfig("disjoint rings need M >= n*m");
  }
  const auto ids = pool->units();
  std::vector<KeyRing> rings;
  rings.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<UnitId> ring;
    ring.reserve(m);
    for (std::uint32_t j = 0; j < m; ++j) ring.push_back(ids[static_cast<std::size_t>(i) * m + j].unit_id);
    rings.emplace_back(pool, std::move(ring));
  }
  return rings;
}

NodeState provision_new_node(const PoolHandle& pool, NodeId next_id, std::uint32_t m, Rng& rng,
                             std::span<const NodeId> used_ids) {
  if (std::find(used_ids.begin(), used_ids.end(), next_id) != used_ids.end()) {
    throw DuplicateId("node id " + std::to_string(next_id) + " is already deployed");
  }
  if (!pool) throw InvalidConfig("provisioning needs a pool");
  if (m == 0) throw InvalidConfig("m: ring size must be >= 1");
  if (m > pool->size()) throw InvalidConfig("m: ring size exceeds pool size");

  // A fresh sampler draws from the same uniform subset law as the initial
  // deployment.
  SubsetSampler sampler(static_cast<std::uint32_t>(pool->size()));
  NodeState node;
  node.node_id = next_id;
  node.ring = KeyRing(pool, sampler.draw(m, rng));
  return node;
}

void write_pool_csv(std::ostream& out, const KeyPool& pool) {
  CsvWriter csv(out);
  csv.row("unit_id", "key_hex", "x", "y");
  for (const auto& u : pool.units()) csv.row(u.unit_id, to_hex(u.key_material), u.location.x, u.location.y);
}

void write_rings_csv(std::ostream& out, std::span<const NodeState> nodes) {
  CsvWriter csv(out);
  csv.row("node_id", "unit_id", "high_priority_rank");
  for (const auto& node : nodes) {
    const auto hp = node.ring.high_priority();
    for (UnitId id : node.ring.unit_ids()) {
      auto it = std::find(hp.begin(), hp.end(), id);
      const long rank = it == hp.end() ? -1L : static_cast<long>(it - hp.begin());
      csv.row(node.node_id, id, rank);
    }
  }
}

}  // namespace keysim
