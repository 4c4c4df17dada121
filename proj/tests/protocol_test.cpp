#include <gtest/gtest.h>

#include <random>

#include "keysim/protocol.hpp"
#include "oracles.hpp"

using namespace keysim;

namespace {

PoolHandle make_pool(std::uint32_t M, std::uint64_t seed) {
  Rng rng(seed);
  return std::make_shared<const KeyPool>(generate_key_pool(M, Field{}, rng));
}

std::vector<std::uint32_t> brute_force(const KeyRing& ring, const Location& pa, std::size_t c) {
  std::vector<std::pair<std::uint32_t, oracle::Point>> units;
  for (UnitId id : ring.unit_ids()) units.push_back({id, {ring.unit(id).location.x, ring.unit(id).location.y}});
  return oracle::nearest(units, {pa.x, pa.y}, c);
}

NodeState node(NodeId id, const PoolHandle& pool, std::vector<UnitId> ids, Location pa, std::uint32_t c) {
  NodeState n;
  n.node_id = id;
  n.public_address = pa;
  n.ring = prioritize(KeyRing(pool, std::move(ids)), pa, c);
  return n;
}

const CryptoSuite& suite() {
  static const CryptoSuite s = CryptoSuite::from_names("sha1", "aes-128-ecb");
  return s;
}

}  // namespace

TEST(Prioritize, FullRingSortedByDistance) {
  const auto pool = make_pool(100000, 1);
  Rng rng(2);
  SubsetSampler sampler(100000);
  const KeyRing ring(pool, sampler.draw(200, rng));
  const Location pa{400, 600};
  const auto p = prioritize(ring, pa, 200);
  ASSERT_TRUE(p.prioritized());
  ASSERT_EQ(p.high_priority().size(), 200u);
  const auto expect = brute_force(ring, pa, 200);
  EXPECT_TRUE(std::equal(expect.begin(), expect.end(), p.high_priority().begin()));
}

TEST(Prioritize, SmallRingMatchesBruteForce) {
  const auto pool = make_pool(5000, 3);
  Rng rng(4);
  SubsetSampler sampler(5000);
  const KeyRing ring(pool, sampler.draw(50, rng));
  const auto p = prioritize(ring, {10, 990}, 10);
  const auto expect = brute_force(ring, {10, 990}, 10);
  EXPECT_TRUE(std::equal(expect.begin(), expect.end(), p.high_priority().begin(), p.high_priority().end()));
  EXPECT_EQ(p.size(), 50u);
  const auto d = prioritize(ring, {10, 990}, 10, true);
  EXPECT_EQ(d.size(), 10u);
}

TEST(Prioritize, TiesBreakOnSmallerId) {
  std::vector<KeyUnit> units{{9, Bytes(16, 9), {1, 0}}, {4, Bytes(16, 4), {0, 1}}, {7, Bytes(16, 7), {2, 1}}};
  auto pool = std::make_shared<const KeyPool>(KeyPool(units, Field{4, 4}));
  const auto p = prioritize(KeyRing(pool, {4, 7, 9}), {1, 1}, 2);
  EXPECT_EQ(std::vector<UnitId>(p.high_priority().begin(), p.high_priority().end()), (std::vector<UnitId>{4, 7}));
}

TEST(Prioritize, Boundaries) {
  const auto pool = make_pool(100, 5);
  const KeyRing ring(pool, {1, 2, 3});
  EXPECT_TRUE(prioritize(ring, {}, 0).high_priority().empty());
  EXPECT_THROW(prioritize(ring, {}, 4), InvalidConfig);
}

TEST(SharedSet, MatchesSetIntersection) {
  const auto pool = make_pool(100000, 6);
  Rng rng(7);
  SubsetSampler sampler(100000);
  for (int i = 0; i < 200; ++i) {
    auto a = node(1, pool, sampler.draw(200, rng), {500, 500}, 200);
    auto b = node(2, pool, sampler.draw(200, rng), {510, 500}, 200);
    const KeyOffer offer{1, a.ring.offer()};
    const auto got = compute_shared_set(offer, b.ring);
    std::vector<std::uint32_t> ha(a.ring.high_priority().begin(), a.ring.high_priority().end());
    std::vector<std::uint32_t> hb(b.ring.high_priority().begin(), b.ring.high_priority().end());
    EXPECT_EQ(got, oracle::intersect(ha, hb));
  }
  const auto same = node(3, pool, {1, 2, 3, 4}, {}, 4);
  EXPECT_EQ(compute_shared_set({3, same.ring.offer()}, same.ring).size(), 4u);
}

TEST(Handshake, HappyPathAndReplay) {
  const auto pool = make_pool(1000, 8);
  auto a = node(5, pool, {1, 2, 3, 10, 11}, {100, 100}, 5);
  auto b = node(9, pool, {2, 3, 10, 20}, {120, 100}, 4);
  Rng rng(9);
  std::vector<TranscriptEntry> log;
  const auto r = run_handshake(b, a, suite(), rng, &log);
  ASSERT_EQ(r.outcome, HandshakeOutcome::Established);
  ASSERT_TRUE(r.initiator_key && r.responder_key);
  EXPECT_EQ(*r.initiator_key, *r.responder_key);
  EXPECT_EQ(r.initiator_key->shared_unit_ids, (std::vector<UnitId>{2, 3, 10}));
  EXPECT_TRUE(r.initiator_key->confirmed);
  EXPECT_EQ(a.link_keys.at(9), b.link_keys.at(5));
  EXPECT_EQ(log.front().from, 5u);  // smaller id initiates
  ASSERT_EQ(log.size(), 6u);
  EXPECT_TRUE(std::holds_alternative<Confirm>(log.back().message));

  const auto again = run_handshake(a, b, suite(), rng);
  EXPECT_EQ(again.initiator_key->key, r.initiator_key->key);
}

TEST(Handshake, SingleSharedKey) {
  const auto pool = make_pool(1000, 10);
  auto a = node(1, pool, {1, 2}, {}, 2);
  auto b = node(2, pool, {2, 3}, {}, 2);
  Rng rng(11);
  const auto r = run_handshake(a, b, suite(), rng);
  ASSERT_EQ(r.outcome, HandshakeOutcome::Established);
  EXPECT_EQ(r.responder_key->shared_unit_ids.size(), 1u);
}

TEST(Handshake, DisjointRejects) {
  const auto pool = make_pool(1000, 12);
  auto a = node(1, pool, {1, 2}, {}, 2);
  auto b = node(2, pool, {3, 4}, {}, 2);
  Rng rng(13);
  std::vector<TranscriptEntry> log;
  const auto r = run_handshake(a, b, suite(), rng, &log);
  EXPECT_EQ(r.outcome, HandshakeOutcome::NoSharedKey);
  EXPECT_EQ(r.initiator_phase, Phase::Failed);
  EXPECT_TRUE(a.link_keys.empty() && b.link_keys.empty());
  EXPECT_EQ(std::get<Reject>(log.back().message).reason, kRejectNoSharedKey);
}

TEST(Handshake, LowPriorityUnitsDoNotCount) {
  const auto pool = make_pool(1000, 14);
  // Both hold unit 7, but only a ranks it high.
  auto a = node(1, pool, {7}, {}, 1);
  auto b = node(2, pool, {7, 8, 9}, pool->unit(8).location, 1);
  ASSERT_NE(b.ring.high_priority()[0], 7u);
  Rng rng(15);
  EXPECT_EQ(run_handshake(a, b, suite(), rng).outcome, HandshakeOutcome::NoSharedKey);
}

TEST(Handshake, CorruptedMaterialIsPuzzleMismatch) {
  const auto pool = make_pool(1000, 16);
  auto bad = std::make_shared<const KeyPool>(pool->with_material(3, Bytes(16, 0xee)));
  auto a = node(1, pool, {1, 2, 3}, {}, 3);
  NodeState b;
  b.node_id = 2;
  b.ring = prioritize(KeyRing(bad, {1, 2, 3}), {}, 3);
  Rng rng(17);
  const auto r = run_handshake(a, b, suite(), rng);
  EXPECT_EQ(r.outcome, HandshakeOutcome::PuzzleMismatch);
  EXPECT_TRUE(a.link_keys.empty() && b.link_keys.empty());
  const std::vector<UnitId> shared{1, 2, 3};
  EXPECT_THROW(complete_handshake(a, b, shared, suite(), rng), PuzzleMismatch);
}

TEST(Handshake, CompleteHandshakeDirect) {
  const auto pool = make_pool(1000, 18);
  auto a = node(1, pool, {1, 2, 3}, {5, 5}, 3);
  auto b = node(2, pool, {1, 2, 3}, {6, 6}, 3);
  Rng rng(19);
  const std::vector<UnitId> shared{1, 2, 3};
  const auto key = complete_handshake(a, b, shared, suite(), rng);
  EXPECT_EQ(a.link_keys.at(2), key);
  EXPECT_EQ(b.link_keys.at(1), key);
  EXPECT_THROW(complete_handshake(a, b, {}, suite(), rng), EmptySharedSet);
}

TEST(Handshake, UnprioritizedInitiatorThrows) {
  const auto pool = make_pool(100, 20);
  NodeState a;
  a.node_id = 1;
  a.ring = KeyRing(pool, {1, 2});
  EXPECT_THROW(initiate_handshake(a, Hello{2, {}}), NotPrioritized);
  auto p = node(1, pool, {1, 2}, {}, 2);
  const auto out = initiate_handshake(p, Hello{2, {}});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_TRUE(std::holds_alternative<Hello>(out[0]));
  EXPECT_EQ(std::get<KeyOffer>(out[1]).entries().size(), 2u);
}

TEST(Handshake, EndpointNeverStoresUnconfirmedKey) {
  const auto pool = make_pool(1000, 21);
  auto a = node(1, pool, {1, 2}, {}, 2);
  auto b = node(2, pool, {2, 3}, {}, 2);
  HandshakeEndpoint ini(a, 2, Role::Initiator, suite());
  HandshakeEndpoint res(b, 1, Role::Responder, suite());
  Rng rng(22);
  auto to_res = ini.start();
  std::vector<HandshakeMessage> to_ini;
  while (!to_res.empty() || !to_ini.empty()) {
    for (const auto& m : to_res) {
      auto r = res.receive(m, rng);
      to_ini.insert(to_ini.end(), r.begin(), r.end());
    }
    to_res.clear();
    EXPECT_TRUE(res.phase() == Phase::Established || !res.link_key());
    for (const auto& m : to_ini) {
      auto r = ini.receive(m, rng);
      to_res.insert(to_res.end(), r.begin(), r.end());
    }
    to_ini.clear();
    EXPECT_TRUE(ini.phase() == Phase::Established || !ini.link_key());
  }
  ASSERT_EQ(ini.phase(), Phase::Established);
  ASSERT_EQ(res.phase(), Phase::Established);
  EXPECT_EQ(*ini.link_key(), *res.link_key());
}

TEST(OnMove, SameLocationKeepsHighPriority) {
  const auto pool = make_pool(100000, 23);
  Rng rng(24);
  SubsetSampler sampler(100000);
  auto a = node(1, pool, sampler.draw(300, rng), {300, 300}, 200);
  const std::vector<UnitId> before(a.ring.high_priority().begin(), a.ring.high_priority().end());
  on_move(a, {300, 300}, 200);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), a.ring.high_priority().begin()));
}

TEST(OnMove, RecomputesAndRekeys) {
  const auto pool = make_pool(100000, 25);
  Rng rng(26);
  SubsetSampler sampler(100000);
  auto ids = sampler.draw(300, rng);
  auto a = node(1, pool, ids, {100, 100}, 200);
  auto b = node(2, pool, ids, {120, 100}, 200);
  const auto first = run_handshake(a, b, suite(), rng);
  ASSERT_EQ(first.outcome, HandshakeOutcome::Established);

  on_move(a, {900, 850}, 200);
  EXPECT_EQ(a.public_address, (Location{900, 850}));
  EXPECT_TRUE(a.link_keys.empty());
  const auto expect = brute_force(a.ring, {900, 850}, 200);
  EXPECT_TRUE(std::equal(expect.begin(), expect.end(), a.ring.high_priority().begin()));

  on_move(b, {910, 850}, 200);
  const auto second = run_handshake(a, b, suite(), rng);
  ASSERT_EQ(second.outcome, HandshakeOutcome::Established);
  EXPECT_NE(second.initiator_key->key, first.initiator_key->key);
}

TEST(Messages, EncodeDecodeRoundTrip) {
  const auto pool = make_pool(100, 27);
  const auto a = node(4, pool, {3, 8, 50}, {1, 2}, 2);
  const std::vector<HandshakeMessage> all{
      Hello{4, {1.5, 2.25}}, KeyOffer{4, a.ring.offer()}, Puzzle{Bytes(16, 1), Bytes(32, 2)}, Confirm{},
      Reject{kRejectPuzzleMismatch}};
  for (const auto& m : all) {
    EXPECT_EQ(decode_message(encode_message(m)), m) << describe(m);
  }
  EXPECT_THROW(decode_message(Bytes{9}), DecodeError);
  EXPECT_THROW(decode_message(Bytes{}), DecodeError);
  auto bytes = encode_message(Hello{1, {}});
  bytes.pop_back();
  EXPECT_THROW(decode_message(bytes), DecodeError);
}
