#include "keysim/protocol.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "keysim/wire.hpp"

namespace keysim {

KeyRing prioritize(const KeyRing& ring, const Location& pa, std::uint32_t c, bool delete_low_priority) {
  if (c > ring.size()) {
    throw InvalidConfig("c ≤ m violated: cannot keep " + std::to_string(c) + " of " +
                        std::to_string(ring.size()) + " units");
  }
  struct Ranked {
    double distance;
    UnitId id;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(ring.size());
  for (UnitId id : ring.unit_ids()) ranked.push_back({euclidean_distance(pa, ring.unit(id).location), id});

  auto closer = [](const Ranked& a, const Ranked& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  };
  const auto cut = ranked.begin() + c;
  if (c < ranked.size()) std::nth_element(ranked.begin(), cut, ranked.end(), closer);
  std::sort(ranked.begin(), cut, closer);

  std::vector<UnitId> high;
  high.reserve(c);
  for (auto it = ranked.begin(); it != cut; ++it) high.push_back(it->id);

  if (delete_low_priority) {
    std::vector<UnitId> kept = high;
    return KeyRing(ring.pool(), std::move(kept), std::move(high));
  }
  return KeyRing(ring.pool(), std::vector<UnitId>(ring.unit_ids().begin(), ring.unit_ids().end()),
                 std::move(high));
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

namespace {

enum Tag : std::uint8_t { kHello = 1, kKeyOffer = 2, kPuzzle = 3, kConfirm = 4, kReject = 5 };

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

Bytes encode_message(const HandshakeMessage& message) {
  ByteWriter w;
  std::visit(Overloaded{
                 [&](const Hello& m) {
                   w.u8(kHello);
                   w.u32(m.sender);
                   w.location(m.public_address);
                 },
                 [&](const KeyOffer& m) {
                   w.u8(kKeyOffer);
                   w.u32(m.sender);
                   const auto entries = m.entries();
                   w.u32(static_cast<std::uint32_t>(entries.size()));
                   for (const auto& e : entries) {
                     w.u32(e.unit_id);
                     w.location(e.location);
                   }
                 },
                 [&](const Puzzle& m) {
                   w.u8(kPuzzle);
                   w.blob16(m.plaintext);
                   w.blob16(m.ciphertext);
                 },
                 [&](const Confirm&) { w.u8(kConfirm); },
                 [&](const Reject& m) {
                   w.u8(kReject);
                   w.blob16(ByteView(reinterpret_cast<const std::uint8_t*>(m.reason.data()), m.reason.size()));
                 },
             },
             message);
  return w.take();
}

HandshakeMessage decode_message(ByteView bytes) {
  ByteReader r(bytes);
  HandshakeMessage out;
  switch (r.u8()) {
    case kHello: {
      Hello m;
      m.sender = r.u32();
      m.public_address = r.location();
      out = m;
      break;
    }
    case kKeyOffer: {
      KeyOffer m;
      m.sender = r.u32();
      const std::uint32_t count = r.u32();
      std::vector<KeyRing::OfferedUnit> entries;
      entries.reserve(std::min<std::uint32_t>(count, 1u << 16));
      for (std::uint32_t i = 0; i < count; ++i) {
        KeyRing::OfferedUnit e;
        e.unit_id = r.u32();
        e.location = r.location();
        entries.push_back(e);
      }
      m.units = std::make_shared<const std::vector<KeyRing::OfferedUnit>>(std::move(entries));
      out = std::move(m);
      break;
    }
    case kPuzzle: {
      Puzzle m;
      m.plaintext = r.blob16();
      m.ciphertext = r.blob16();
      out = std::move(m);
      break;
    }
    case kConfirm:
      out = Confirm{};
      break;
    case kReject: {
      const Bytes text = r.blob16();
      out = Reject{std::string(text.begin(), text.end())};
      break;
    }
    default:
      throw DecodeError("unknown message tag");
  }
  r.expect_done();
  return out;
}

std::string describe(const HandshakeMessage& message) {
  std::ostringstream s;
  std::visit(Overloaded{
                 [&](const Hello& m) {
                   s << "Hello(" << m.sender << ", (" << m.public_address.x << ", " << m.public_address.y << "))";
                 },
                 [&](const KeyOffer& m) { s << "KeyOffer(" << m.sender << ", " << m.entries().size() << " units)"; },
                 [&](const Puzzle& m) {
                   s << "Puzzle(" << to_hex(m.plaintext) << ", " << to_hex(m.ciphertext) << ")";
                 },
                 [&](const Confirm&) { s << "Confirm"; },
                 [&](const Reject& m) { s << "Reject(" << m.reason << ")"; },
             },
             message);
  return s.str();
}

// ---------------------------------------------------------------------------
// Shared set and derivation
// ---------------------------------------------------------------------------

std::vector<UnitId> compute_shared_set(const KeyOffer& offer, const KeyRing& ring) {
  const auto entries = offer.entries();
  const auto mine = ring.high_priority_by_id();
  std::vector<UnitId> shared;
  const auto* a = entries.data();
  const auto* a_end = a + entries.size();
  const auto* b = mine.data();
  const auto* b_end = b + mine.size();
  // Branch-free merge; the comparison outcome is close to random.
  while (a != a_end && b != b_end) {
    const UnitId x = a->unit_id;
    const UnitId y = *b;
    if (x == y) [[unlikely]] shared.push_back(x);
    a += x <= y;
    b += y <= x;
  }
  return shared;
}

Bytes derive_link_key(const CryptoSuite& suite, const NodeState& self, NodeId peer, const Location& peer_pa,
                      std::span<const UnitId> shared) {
  std::vector<ByteView> materials;
  materials.reserve(shared.size());
  for (UnitId id : shared) {
    if (!self.ring.contains(id)) {
      throw InvalidConfig("node " + std::to_string(self.node_id) + " does not hold unit " + std::to_string(id));
    }
    materials.emplace_back(self.ring.unit(id).key_material);
  }
  return derive_pairwise_key(*suite.hash, self.node_id, peer, self.public_address, peer_pa, materials);
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Idle: return "Idle";
    case Phase::SentHello: return "SentHello";
    case Phase::SentOffer: return "SentOffer";
    case Phase::AwaitConfirm: return "AwaitConfirm";
    case Phase::Established: return "Established";
    case Phase::Failed: return "Failed";
  }
  return "Idle";
}

// ---------------------------------------------------------------------------
// HandshakeEndpoint
// ---------------------------------------------------------------------------

HandshakeEndpoint::HandshakeEndpoint(const NodeState& self, NodeId peer, Role role, const CryptoSuite& suite)
    : self_(&self), peer_(peer), role_(role), suite_(&suite) {
  if (peer == self.node_id) throw InvalidConfig("a node cannot handshake with itself");
}

KeyOffer HandshakeEndpoint::own_offer() const { return KeyOffer{self_->node_id, self_->ring.offer()}; }

std::vector<HandshakeMessage> HandshakeEndpoint::start() {
  if (role_ != Role::Initiator) throw Error("only the initiator starts a handshake");
  if (!self_->ring.prioritized()) {
    throw NotPrioritized("node " + std::to_string(self_->node_id) + " has not prioritized its ring");
  }
  phase_ = Phase::SentHello;
  return {Hello{self_->node_id, self_->public_address}};
}

std::vector<HandshakeMessage> HandshakeEndpoint::fail(std::string reason, bool notify) {
  phase_ = Phase::Failed;
  established_.reset();
  pending_key_.clear();
  failure_ = reason;
  if (!notify) return {};
  return {Reject{std::move(reason)}};
}

std::vector<HandshakeMessage> HandshakeEndpoint::receive(const HandshakeMessage& message, Rng& rng) {
  if (const auto* reject = std::get_if<Reject>(&message)) return fail(reject->reason, false);

  if (const auto* hello = std::get_if<Hello>(&message)) {
    if (hello->sender != peer_) return fail("unexpected sender", true);
    // A Hello after completion restarts the exchange; derivation is
    // deterministic, so an unchanged pair re-derives the same key.
    if (role_ == Role::Responder &&
        (phase_ == Phase::Idle || phase_ == Phase::Established || phase_ == Phase::Failed)) {
      if (!self_->ring.prioritized()) {
        throw NotPrioritized("node " + std::to_string(self_->node_id) + " has not prioritized its ring");
      }
      established_.reset();
      shared_.clear();
      failure_.clear();
      peer_pa_ = hello->public_address;
      phase_ = Phase::SentHello;
      return {Hello{self_->node_id, self_->public_address}};
    }
    if (role_ == Role::Initiator && phase_ == Phase::SentHello) {
      peer_pa_ = hello->public_address;
      phase_ = Phase::SentOffer;
      return {own_offer()};
    }
    return fail("unexpected Hello in phase " + to_string(phase_), true);
  }

  if (const auto* offer = std::get_if<KeyOffer>(&message)) {
    if (offer->sender != peer_) return fail("unexpected sender", true);
    if (role_ == Role::Responder && phase_ == Phase::SentHello) {
      shared_ = compute_shared_set(*offer, self_->ring);
      phase_ = Phase::SentOffer;
      return {own_offer()};
    }
    if (role_ == Role::Initiator && phase_ == Phase::SentOffer) {
      shared_ = compute_shared_set(*offer, self_->ring);
      if (shared_.empty()) return fail(kRejectNoSharedKey, true);
      pending_key_ = derive_link_key(*suite_, *self_, peer_, *peer_pa_, shared_);
      Puzzle puzzle;
      puzzle.plaintext = make_puzzle(rng, suite_->puzzle_length);
      puzzle.ciphertext = suite_->cipher->encrypt(cipher_key(*suite_->cipher, pending_key_), puzzle.plaintext);
      phase_ = Phase::AwaitConfirm;
      return {std::move(puzzle)};
    }
    return fail("unexpected KeyOffer in phase " + to_string(phase_), true);
  }

  if (const auto* puzzle = std::get_if<Puzzle>(&message)) {
    if (role_ != Role::Responder || phase_ != Phase::SentOffer) {
      return fail("unexpected Puzzle in phase " + to_string(phase_), true);
    }
    if (shared_.empty()) return fail(kRejectNoSharedKey, true);
    Bytes key = derive_link_key(*suite_, *self_, peer_, *peer_pa_, shared_);
    if (!check_puzzle(*suite_->cipher, cipher_key(*suite_->cipher, key), puzzle->plaintext, puzzle->ciphertext)) {
      return fail(kRejectPuzzleMismatch, true);
    }
    established_ = LinkKey::make(self_->node_id, peer_, std::move(key), shared_, suite_->hash->digest_length(), true);
    phase_ = Phase::Established;
    return {Confirm{}};
  }

  // Confirm
  if (role_ != Role::Initiator || phase_ != Phase::AwaitConfirm) {
    return fail("unexpected Confirm in phase " + to_string(phase_), true);
  }
  established_ = LinkKey::make(self_->node_id, peer_, std::move(pending_key_), shared_,
                               suite_->hash->digest_length(), true);
  pending_key_.clear();
  phase_ = Phase::Established;
  return {};
}

std::vector<HandshakeMessage> initiate_handshake(const NodeState& self, const Hello& peer_hello) {
  if (!self.ring.prioritized()) {
    throw NotPrioritized("node " + std::to_string(self.node_id) + " has not prioritized its ring");
  }
  if (peer_hello.sender == self.node_id) throw InvalidConfig("a node cannot handshake with itself");
  return {Hello{self.node_id, self.public_address}, KeyOffer{self.node_id, self.ring.offer()}};
}

HandshakeResult run_handshake(NodeState& a, NodeState& b, const CryptoSuite& suite, Rng& rng,
                              std::vector<TranscriptEntry>* transcript) {
  NodeState& init = a.node_id < b.node_id ? a : b;
  NodeState& resp = a.node_id < b.node_id ? b : a;
  HandshakeEndpoint ends[2] = {HandshakeEndpoint(init, resp.node_id, Role::Initiator, suite),
                               HandshakeEndpoint(resp, init.node_id, Role::Responder, suite)};
  const NodeId ids[2] = {init.node_id, resp.node_id};

  struct InFlight {
    int to;
    HandshakeMessage message;
  };
  std::deque<InFlight> queue;
  for (auto& m : ends[0].start()) queue.push_back({1, std::move(m)});
  while (!queue.empty()) {
    InFlight next = std::move(queue.front());
    queue.pop_front();
    if (transcript) transcript->push_back({ids[1 - next.to], ids[next.to], next.message});
    for (auto& reply : ends[next.to].receive(next.message, rng)) queue.push_back({1 - next.to, std::move(reply)});
  }

  HandshakeResult result;
  result.initiator_phase = ends[0].phase();
  result.responder_phase = ends[1].phase();
  result.initiator_key = ends[0].link_key();
  result.responder_key = ends[1].link_key();

  if (result.initiator_phase == Phase::Established && result.responder_phase == Phase::Established) {
    result.outcome = HandshakeOutcome::Established;
    init.link_keys.insert_or_assign(resp.node_id, *result.initiator_key);
    resp.link_keys.insert_or_assign(init.node_id, *result.responder_key);
  } else {
    const bool mismatch =
        ends[1].failure_reason() == kRejectPuzzleMismatch || ends[0].failure_reason() == kRejectPuzzleMismatch;
    result.outcome = mismatch ? HandshakeOutcome::PuzzleMismatch : HandshakeOutcome::NoSharedKey;
    init.link_keys.erase(resp.node_id);
    resp.link_keys.erase(init.node_id);
  }
  return result;
}

LinkKey complete_handshake(NodeState& initiator, NodeState& responder, std::span<const UnitId> shared,
                           const CryptoSuite& suite, Rng& rng) {
  if (shared.empty()) throw EmptySharedSet();
  std::vector<UnitId> ids(shared.begin(), shared.end());
  std::sort(ids.begin(), ids.end());

  Bytes k_init = derive_link_key(suite, initiator, responder.node_id, responder.public_address, ids);
  const Bytes puzzle = make_puzzle(rng, suite.puzzle_length);
  const Bytes sealed = suite.cipher->encrypt(cipher_key(*suite.cipher, k_init), puzzle);

  Bytes k_resp = derive_link_key(suite, responder, initiator.node_id, initiator.public_address, ids);
  if (!check_puzzle(*suite.cipher, cipher_key(*suite.cipher, k_resp), puzzle, sealed)) {
    initiator.link_keys.erase(responder.node_id);
    responder.link_keys.erase(initiator.node_id);
    throw PuzzleMismatch("responder " + std::to_string(responder.node_id) + " could not open the puzzle of " +
                         std::to_string(initiator.node_id));
  }
  const auto digest = suite.hash->digest_length();
  auto key = LinkKey::make(initiator.node_id, responder.node_id, std::move(k_init), ids, digest, true);
  initiator.link_keys.insert_or_assign(responder.node_id, key);
  responder.link_keys.insert_or_assign(
      initiator.node_id, LinkKey::make(responder.node_id, initiator.node_id, std::move(k_resp), ids, digest, true));
  return key;
}

void on_move(NodeState& self, const Location& new_pa, std::uint32_t c, bool delete_low_priority) {
  self.public_address = new_pa;
  self.ring = prioritize(self.ring, new_pa, c, delete_low_priority);
  self.link_keys.clear();
}

}  // namespace keysim
