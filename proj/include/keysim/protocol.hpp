#pragma once

// Node-side behavior: key prioritization and the direct key establishment
// handshake.
//
// Message flow between initiator u (smaller node id) and responder v:
//
//   u -> v  Hello(u, PA_u)
//   v -> u  Hello(v, PA_v)
//   u -> v  KeyOffer(u, high-priority units of u)
//   v -> u  KeyOffer(v, high-priority units of v)
//   u -> v  Puzzle(P, E_k(P))      or Reject("no shared key")
//   v -> u  Confirm                or Reject("puzzle mismatch")
//
// Both sides derive k from the ascending-unit-id intersection of the two
// offers.  A node stores a link key only once the puzzle has checked out.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "keysim/crypto.hpp"
#include "keysim/domain.hpp"
#include "keysim/setup.hpp"

namespace keysim {

// ---------------------------------------------------------------------------
// Prioritization
// ---------------------------------------------------------------------------

/// Ranks the ring by distance from `pa` (ties: smaller unit id first) and
/// keeps the nearest c as high priority.  Low-priority units stay in the
/// ring unless `delete_low_priority` is set.  Throws InvalidConfig if c > m.
KeyRing prioritize(const KeyRing& ring, const Location& pa, std::uint32_t c, bool delete_low_priority = false);

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

struct Hello {
  NodeId sender = 0;
  Location public_address;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct KeyOffer {
  NodeId sender = 0;
  KeyRing::Offer units;  // ascending unit_id

  std::span<const KeyRing::OfferedUnit> entries() const {
    if (!units) return {};
    return *units;
  }
  friend bool operator==(const KeyOffer& a, const KeyOffer& b) {
    return a.sender == b.sender && std::ranges::equal(a.entries(), b.entries());
  }
};

struct Puzzle {
  Bytes plaintext;
  Bytes ciphertext;
  friend bool operator==(const Puzzle&, const Puzzle&) = default;
};

struct Confirm {
  friend bool operator==(const Confirm&, const Confirm&) = default;
};

struct Reject {
  std::string reason;
  friend bool operator==(const Reject&, const Reject&) = default;
};

using HandshakeMessage = std::variant<Hello, KeyOffer, Puzzle, Confirm, Reject>;

inline constexpr const char* kRejectNoSharedKey = "no shared key";
inline constexpr const char* kRejectPuzzleMismatch = "puzzle mismatch";

/// Debug encoding: one tag byte, then fixed-width big-endian fields.
///   1 Hello     u32 sender, f64 x, f64 y
///   2 KeyOffer  u32 sender, u32 count, count x (u32 unit_id, f64 x, f64 y)
///   3 Puzzle    u16 len, plaintext, u16 len, ciphertext
///   4 Confirm
///   5 Reject    u16 len, reason (UTF-8)
Bytes encode_message(const HandshakeMessage& message);
/// Throws DecodeError on truncated or malformed input.
HandshakeMessage decode_message(ByteView bytes);
std::string describe(const HandshakeMessage& message);

// ---------------------------------------------------------------------------
// Shared-set discovery and key confirmation
// ---------------------------------------------------------------------------

/// Offered unit ids that are also in the receiver's high-priority set,
/// ascending.  Defines k_1..k_q of the derivation.
std::vector<UnitId> compute_shared_set(const KeyOffer& offer, const KeyRing& ring);

/// Derived link key of `self` towards a peer, using `self`'s own copy of the
/// shared key materials.
Bytes derive_link_key(const CryptoSuite& suite, const NodeState& self, NodeId peer, const Location& peer_pa,
                      std::span<const UnitId> shared);

// ---------------------------------------------------------------------------
// State machine
// ---------------------------------------------------------------------------

enum class Phase { Idle, SentHello, SentOffer, AwaitConfirm, Established, Failed };
enum class Role { Initiator, Responder };

std::string to_string(Phase phase);

/// One side of a handshake.  Reads the node's ring and address but never
/// mutates the node; the caller stores `link_key()` once Established.
class HandshakeEndpoint {
 public:
  HandshakeEndpoint(const NodeState& self, NodeId peer, Role role, const CryptoSuite& suite);

  /// Initiator only: emits Hello.  Throws NotPrioritized if the ring has not
  /// been prioritized.
  std::vector<HandshakeMessage> start();

  /// Consumes one message from the peer and returns the replies.
  std::vector<HandshakeMessage> receive(const HandshakeMessage& message, Rng& rng);

  Phase phase() const { return phase_; }
  Role role() const { return role_; }
  NodeId peer() const { return peer_; }
  /// Present only in phase Established; always confirmed.
  const std::optional<LinkKey>& link_key() const { return established_; }
  const std::vector<UnitId>& shared() const { return shared_; }
  const std::string& failure_reason() const { return failure_; }

 private:
  std::vector<HandshakeMessage> fail(std::string reason, bool notify);
  KeyOffer own_offer() const;

  const NodeState* self_;
  NodeId peer_;
  Role role_;
  const CryptoSuite* suite_;
  Phase phase_ = Phase::Idle;
  std::optional<Location> peer_pa_;
  std::vector<UnitId> shared_;
  Bytes pending_key_;
  std::optional<LinkKey> established_;
  std::string failure_;
};

/// Builds the initiator's opening messages in answer to a peer's Hello
/// (Hello then KeyOffer).  Throws NotPrioritized.
std::vector<HandshakeMessage> initiate_handshake(const NodeState& self, const Hello& peer_hello);

enum class HandshakeOutcome { Established, NoSharedKey, PuzzleMismatch };

struct TranscriptEntry {
  NodeId from = 0;
  NodeId to = 0;
  HandshakeMessage message;
};

struct HandshakeResult {
  HandshakeOutcome outcome = HandshakeOutcome::NoSharedKey;
  Phase initiator_phase = Phase::Idle;
  Phase responder_phase = Phase::Idle;
  std::optional<LinkKey> initiator_key;
  std::optional<LinkKey> responder_key;
};

/// Runs a full handshake over an ideal transport (reliable, ordered).  The
/// smaller node id initiates.  On Established both nodes store the confirmed
/// key; otherwise neither stores anything for this peer.  Existing keys
/// between the pair are replaced.
HandshakeResult run_handshake(NodeState& a, NodeState& b, const CryptoSuite& suite, Rng& rng,
                              std::vector<TranscriptEntry>* transcript = nullptr);

/// Derivation plus puzzle exchange for a known shared set.  Returns the
/// confirmed key stored on both sides; throws PuzzleMismatch if the
/// responder's key disagrees, EmptySharedSet if `shared` is empty.
LinkKey complete_handshake(NodeState& initiator, NodeState& responder, std::span<const UnitId> shared,
                           const CryptoSuite& suite, Rng& rng);

/// Moves the node: new address, re-prioritized ring, all link keys dropped.
void on_move(NodeState& self, const Location& new_pa, std::uint32_t c, bool delete_low_priority = false);

}  // namespace keysim
