#pragma once

// Core value types shared by the setup server, the node protocol, the
// analytic model and the simulator.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace keysim {

using NodeId = std::uint32_t;
using UnitId = std::uint32_t;
using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class EmptySharedSet : public Error {
 public:
  EmptySharedSet() : Error("pairwise key derivation needs at least one shared key") {}
};

class DuplicateId : public Error {
 public:
  using Error::Error;
};

class NotPrioritized : public Error {
 public:
  using Error::Error;
};

class PuzzleMismatch : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// A point of the two-dimensional deployment field, in meters.
struct Location {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Location&, const Location&) = default;
};

/// Axis-aligned deployment field [0, width] x [0, height].
struct Field {
  double width = 1000.0;
  double height = 1000.0;

  double area() const { return width * height; }
  bool contains(const Location& p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }
  bool degenerate() const { return !(width > 0.0) || !(height > 0.0); }

  friend bool operator==(const Field&, const Field&) = default;
};

double euclidean_distance(const Location& a, const Location& b);

// ---------------------------------------------------------------------------
// Keying material
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultKeyLength = 16;

/// A pre-distributed key material bound to a field location.
struct KeyUnit {
  UnitId unit_id = 0;
  Bytes key_material;
  Location location;

  friend bool operator==(const KeyUnit&, const KeyUnit&) = default;
};

/// The setup server's pool of M key units.  Immutable once built; rings
/// refer back into it by unit id.
class KeyPool {
 public:
  /// Throws InvalidConfig on an empty pool, out-of-field or repeated
  /// locations, or repeated unit ids.
  KeyPool(std::vector<KeyUnit> units, Field field);

  std::size_t size() const { return units_.size(); }
  const Field& field() const { return field_; }
  std::span<const KeyUnit> units() const { return units_; }

  bool contains(UnitId id) const;
  /// Throws std::out_of_range for an unknown id.
  const KeyUnit& unit(UnitId id) const;

  /// Copy of this pool with one unit's key material replaced.
  KeyPool with_material(UnitId id, Bytes material) const;

 private:
  std::vector<KeyUnit> units_;  // ascending unit_id
  Field field_;
  bool dense_ = false;          // unit_id == index for every unit
};

using PoolHandle = std::shared_ptr<const KeyPool>;

/// A node's key ring: m unit ids out of a shared pool, plus the ranked
/// high-priority subset once prioritization has run.
class KeyRing {
 public:
  /// A unit as advertised in a key offer.
  struct OfferedUnit {
    UnitId unit_id = 0;
    Location location;
    friend bool operator==(const OfferedUnit&, const OfferedUnit&) = default;
  };
  using Offer = std::shared_ptr<const std::vector<OfferedUnit>>;

  KeyRing() = default;
  /// Unprioritized ring.  Throws InvalidConfig on ids missing from the pool
  /// or repeated ids.
  KeyRing(PoolHandle pool, std::vector<UnitId> unit_ids);

  /// Ring with a ranked high-priority list.  `high_priority` must be a
  /// subset of `unit_ids`, already in rank order.
  KeyRing(PoolHandle pool, std::vector<UnitId> unit_ids, std::vector<UnitId> high_priority);

  std::size_t size() const { return unit_ids_.size(); }
  bool empty() const { return unit_ids_.empty(); }
  bool prioritized() const { return prioritized_; }

  /// All unit ids, ascending.
  std::span<const UnitId> unit_ids() const { return unit_ids_; }
  /// High-priority ids in rank order (nearest first).
  std::span<const UnitId> high_priority() const { return high_priority_; }
  /// High-priority ids, ascending.
  std::span<const UnitId> high_priority_by_id() const { return high_priority_sorted_; }

  bool contains(UnitId id) const;
  const KeyUnit& unit(UnitId id) const { return pool_->unit(id); }
  const PoolHandle& pool() const { return pool_; }

  /// The (unit_id, location) list a node advertises; ascending unit_id.
  /// Empty offer before prioritization.
  const Offer& offer() const { return offer_; }

 private:
  PoolHandle pool_;
  std::vector<UnitId> unit_ids_;
  std::vector<UnitId> high_priority_;
  std::vector<UnitId> high_priority_sorted_;
  Offer offer_;
  bool prioritized_ = false;
};

/// A pairwise key between two nodes; peers are stored as (min, max).
struct LinkKey {
  NodeId low = 0;
  NodeId high = 0;
  Bytes key;
  std::vector<UnitId> shared_unit_ids;  // ascending, non-empty
  bool confirmed = false;

  /// Canonicalizes the peer pair and checks q >= 1 and the key length.
  static LinkKey make(NodeId a, NodeId b, Bytes key, std::vector<UnitId> shared,
                      std::size_t digest_length, bool confirmed);

  NodeId peer_of(NodeId self) const { return self == low ? high : low; }

  friend bool operator==(const LinkKey&, const LinkKey&) = default;
};

struct NodeState {
  NodeId node_id = 0;
  Location public_address;
  KeyRing ring;
  std::map<NodeId, LinkKey> link_keys;
  bool captured = false;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class MobilityModel { Static, RandomTeleport, RandomWaypoint };

struct MobilitySettings {
  MobilityModel model = MobilityModel::Static;
  double teleport_probability = 1.0;  // random teleport, per node per step
  double speed_min = 0.0;             // random waypoint, m/s
  double speed_max = 0.0;
  double pause = 0.0;                 // seconds at each waypoint
  std::uint32_t steps = 0;
  double step_duration = 1.0;         // seconds

  friend bool operator==(const MobilitySettings&, const MobilitySettings&) = default;
};

enum class CaptureTiming { BeforePrioritization, AfterPrioritization };
enum class CaptureSelection { UniformRandom };

struct AdversarySettings {
  std::uint32_t captured = 0;  // N_c
  CaptureTiming timing = CaptureTiming::AfterPrioritization;
  CaptureSelection selection = CaptureSelection::UniformRandom;

  friend bool operator==(const AdversarySettings&, const AdversarySettings&) = default;
};

/// Every simulation and analysis knob.  Defaults reproduce the reference
/// deployment: 18000 nodes on a 1 km square, 40 m radios, pool of 100000,
/// rings of 200, all 200 kept as high priority.
struct SimConfig {
  std::uint32_t n = 18000;
  Field field;
  double d_r = 40.0;
  double d = 50.0;
  std::uint32_t pool_size = 100000;  // M
  std::uint32_t ring_size = 200;     // m
  std::uint32_t high_priority = 200; // c
  bool delete_low_priority = false;
  bool use_floors = true;
  std::uint32_t simpson_intervals = 1000;
  MobilitySettings mobility;
  AdversarySettings adversary;
  std::uint64_t seed = 1;
  std::uint32_t trials = 10;
  std::size_t key_length = kDefaultKeyLength;
  std::size_t puzzle_length = 16;
  std::string hash = "sha1";
  std::string cipher = "aes-128-ecb";

  /// Every violated invariant, one message per violation; empty when valid.
  std::vector<std::string> violations() const;
  /// Throws InvalidConfig listing all violations.
  void validate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

std::string to_string(MobilityModel model);
std::string to_string(CaptureTiming timing);
std::string to_string(CaptureSelection selection);
std::optional<MobilityModel> parse_mobility_model(const std::string& text);
std::optional<CaptureTiming> parse_capture_timing(const std::string& text);
std::optional<CaptureSelection> parse_capture_selection(const std::string& text);

}  // namespace keysim
