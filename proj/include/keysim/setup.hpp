#pragma once

// Key setup server: pool generation and pre-deployment ring assignment.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "keysim/domain.hpp"

namespace keysim {

using Rng = std::mt19937_64;

/// M units with uniform random key material and uniform i.i.d. in-field
/// locations (resampled on exact collision).  Unit ids are 0..M-1.
KeyPool generate_key_pool(std::uint32_t pool_size, const Field& field, Rng& rng,
                          std::size_t key_length = kDefaultKeyLength);

/// Draws uniform m-subsets of a pool without replacement.
///
/// Keeps a permutation of the pool ids; each draw is a partial
/// Fisher-Yates shuffle over its head.  Any starting permutation gives a
/// uniform subset, so the permutation is never reset between draws.
class SubsetSampler {
 public:
  explicit SubsetSampler(std::uint32_t pool_size);
  std::vector<UnitId> draw(std::uint32_t m, Rng& rng);

 private:
  std::vector<UnitId> perm_;
};

/// n independent uniform m-subsets; rings come back unprioritized.
std::vector<KeyRing> predistribute(const PoolHandle& pool, std::uint32_t n, std::uint32_t m, Rng& rng);

/// Test mode: node i gets units [i*m, (i+1)*m).  Needs M >= n*m.
std::vector<KeyRing> predistribute_disjoint(const PoolHandle& pool, std::uint32_t n, std::uint32_t m);

/// A fresh node for late deployment.  Throws DuplicateId if `next_id` is in
/// `used_ids`, InvalidConfig if m is 0 or exceeds the pool.
NodeState provision_new_node(const PoolHandle& pool, NodeId next_id, std::uint32_t m, Rng& rng,
                             std::span<const NodeId> used_ids = {});

/// Audit dumps.  Pool: `unit_id,key_hex,x,y`.  Rings:
/// `node_id,unit_id,high_priority_rank` with rank -1 for low-priority units.
void write_pool_csv(std::ostream& out, const KeyPool& pool);
void write_rings_csv(std::ostream& out, std::span<const NodeState> nodes);

}  // namespace keysim
