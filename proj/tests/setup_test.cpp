#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "keysim/setup.hpp"
#include "keysim/wire.hpp"
#include "oracles.hpp"

using namespace keysim;

namespace {

PoolHandle make_pool(std::uint32_t M, std::uint64_t seed, Field f = {}) {
  Rng rng(seed);
  return std::make_shared<const KeyPool>(generate_key_pool(M, f, rng));
}

}  // namespace

TEST(Pool, ReferenceSizeInFieldDistinct) {
  const auto pool = make_pool(100000, 1);
  ASSERT_EQ(pool->size(), 100000u);
  std::set<std::pair<double, double>> seen;
  std::array<int, 4> quadrant{};
  for (std::uint32_t i = 0; i < pool->size(); ++i) {
    const auto& u = pool->units()[i];
    EXPECT_EQ(u.unit_id, i);
    EXPECT_EQ(u.key_material.size(), 16u);
    EXPECT_TRUE(pool->field().contains(u.location));
    seen.emplace(u.location.x, u.location.y);
    ++quadrant[(u.location.x >= 500) + 2 * (u.location.y >= 500)];
  }
  EXPECT_EQ(seen.size(), pool->size());
  const double bound = 4 * std::sqrt(100000 * 0.25 * 0.75);
  for (int q : quadrant) EXPECT_NEAR(q, 25000, bound);
}

TEST(Pool, MinimalAndInvalid) {
  EXPECT_EQ(make_pool(1, 2)->size(), 1u);
  Rng rng(3);
  EXPECT_THROW(generate_key_pool(0, Field{}, rng), InvalidConfig);
  EXPECT_THROW(generate_key_pool(5, Field{0, 1}, rng), InvalidConfig);
}

TEST(Pool, Deterministic) {
  EXPECT_EQ(encode(*make_pool(500, 77)), encode(*make_pool(500, 77)));
  EXPECT_NE(encode(*make_pool(500, 77)), encode(*make_pool(500, 78)));
}

TEST(Predistribute, ReferenceRings) {
  const auto pool = make_pool(100000, 4);
  Rng rng(5);
  const auto rings = predistribute(pool, 18000, 200, rng);
  ASSERT_EQ(rings.size(), 18000u);
  for (const auto& r : rings) {
    ASSERT_EQ(r.size(), 200u);
    EXPECT_TRUE(std::adjacent_find(r.unit_ids().begin(), r.unit_ids().end()) == r.unit_ids().end());
    EXPECT_FALSE(r.prioritized());
    EXPECT_LT(r.unit_ids().back(), 100000u);
  }
}

TEST(Predistribute, FullPoolAndTooLarge) {
  const auto pool = make_pool(30, 6);
  Rng rng(7);
  for (const auto& r : predistribute(pool, 5, 30, rng)) EXPECT_EQ(r.size(), 30u);
  EXPECT_THROW(predistribute(pool, 1, 31, rng), InvalidConfig);
}

TEST(Predistribute, PairwiseOverlapMatchesHypergeometricMean) {
  const auto pool = make_pool(100000, 8);
  SubsetSampler sampler(100000);
  Rng rng(9);
  double total = 0;
  const int pairs = 100000;
  for (int i = 0; i < pairs; ++i) {
    auto a = sampler.draw(200, rng);
    auto b = sampler.draw(200, rng);
    total += static_cast<double>(oracle::intersect(a, b).size());
  }
  EXPECT_NEAR(total / pairs, 200.0 * 200.0 / 100000.0, 0.05);
}

TEST(Predistribute, AllSubsetsUniform) {
  // M=10, m=5: C(10,5) = 252 equally likely subsets.
  SubsetSampler sampler(10);
  Rng rng(10);
  std::map<std::vector<UnitId>, int> counts;
  const int per_cell = 200;
  const int draws = 252 * per_cell;
  for (int i = 0; i < draws; ++i) {
    auto s = sampler.draw(5, rng);
    std::sort(s.begin(), s.end());
    ++counts[s];
  }
  ASSERT_EQ(counts.size(), 252u);
  double chi2 = 0;
  for (const auto& [s, k] : counts) chi2 += (k - per_cell) * (k - per_cell) / double(per_cell);
  EXPECT_LT(chi2, oracle::chi_square_critical(251, 3.09));
}

TEST(Predistribute, Deterministic) {
  const auto pool = make_pool(1000, 11);
  Rng a(12), b(12);
  const auto ra = predistribute(pool, 50, 20, a);
  const auto rb = predistribute(pool, 50, 20, b);
  for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(encode(ra[i]), encode(rb[i]));
}

TEST(Predistribute, Disjoint) {
  const auto pool = make_pool(100, 13);
  const auto rings = predistribute_disjoint(pool, 10, 10);
  std::set<UnitId> all;
  for (const auto& r : rings) all.insert(r.unit_ids().begin(), r.unit_ids().end());
  EXPECT_EQ(all.size(), 100u);
  EXPECT_THROW(predistribute_disjoint(pool, 11, 10), InvalidConfig);
}

TEST(Provision, NewNode) {
  const auto pool = make_pool(100000, 14);
  Rng a(15), b(16);
  const std::vector<NodeId> used{0, 1, 2};
  const auto node = provision_new_node(pool, 3, 200, a, used);
  EXPECT_EQ(node.node_id, 3u);
  EXPECT_EQ(node.ring.size(), 200u);
  EXPECT_FALSE(node.ring.prioritized());
  EXPECT_TRUE(node.link_keys.empty());
  EXPECT_THROW(provision_new_node(pool, 2, 200, a, used), DuplicateId);
  EXPECT_THROW(provision_new_node(pool, 4, 0, a, used), InvalidConfig);

  double total = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto x = provision_new_node(pool, 10, 200, a);
    const auto y = provision_new_node(pool, 11, 200, b);
    std::vector<UnitId> xa(x.ring.unit_ids().begin(), x.ring.unit_ids().end());
    std::vector<UnitId> ya(y.ring.unit_ids().begin(), y.ring.unit_ids().end());
    total += static_cast<double>(oracle::intersect(xa, ya).size());
  }
  EXPECT_NEAR(total / 20000, 0.4, 0.05);
}

TEST(Dump, CsvShapes) {
  const auto pool = make_pool(3, 17, Field{10, 10});
  std::ostringstream out;
  write_pool_csv(out, *pool);
  const auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "unit_id,key_hex,x,y");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);

  NodeState n;
  n.node_id = 5;
  n.ring = KeyRing(pool, {0, 1, 2}, {2});
  std::ostringstream rings;
  write_rings_csv(rings, std::span<const NodeState>(&n, 1));
  EXPECT_EQ(rings.str(), "node_id,unit_id,high_priority_rank\n5,0,-1\n5,1,-1\n5,2,0\n");
}
