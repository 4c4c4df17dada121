#include "keysim/wire.hpp"

namespace keysim {

namespace {

void put_unit(ByteWriter& w, const KeyUnit& unit) {
  w.u32(unit.unit_id);
  w.blob16(unit.key_material);
  w.location(unit.location);
}

KeyUnit get_unit(ByteReader& r) {
  KeyUnit unit;
  unit.unit_id = r.u32();
  unit.key_material = r.blob16();
  unit.location = r.location();
  return unit;
}

void put_ids(ByteWriter& w, std::span<const UnitId> ids) {
  w.u32(static_cast<std::uint32_t>(ids.size()));
  for (UnitId id : ids) w.u32(id);
}

std::vector<UnitId> get_ids(ByteReader& r) {
  const std::uint32_t count = r.u32();
  std::vector<UnitId> ids;
  ids.reserve(std::min<std::uint32_t>(count, 1u << 20));
  for (std::uint32_t i = 0; i < count; ++i) ids.push_back(r.u32());
  return ids;
}

}  // namespace

Bytes encode(const Location& p) {
  ByteWriter w;
  w.location(p);
  return w.take();
}

Bytes encode(const KeyUnit& unit) {
  ByteWriter w;
  put_unit(w, unit);
  return w.take();
}

Bytes encode(const KeyPool& pool) {
  ByteWriter w;
  w.f64(pool.field().width);
  w.f64(pool.field().height);
  w.u32(static_cast<std::uint32_t>(pool.size()));
  for (const auto& u : pool.units()) put_unit(w, u);
  return w.take();
}

Bytes encode(const LinkKey& key) {
  ByteWriter w;
  w.u32(key.low);
  w.u32(key.high);
  w.blob16(key.key);
  put_ids(w, key.shared_unit_ids);
  w.u8(key.confirmed ? 1 : 0);
  return w.take();
}

Bytes encode(const KeyRing& ring) {
  ByteWriter w;
  put_ids(w, ring.unit_ids());
  w.u8(ring.prioritized() ? 1 : 0);
  put_ids(w, ring.high_priority());
  return w.take();
}

Location decode_location(ByteView bytes) {
  ByteReader r(bytes);
  auto p = r.location();
  r.expect_done();
  return p;
}

KeyUnit decode_key_unit(ByteView bytes) {
  ByteReader r(bytes);
  auto unit = get_unit(r);
  r.expect_done();
  return unit;
}

KeyPool decode_key_pool(ByteView bytes) {
  ByteReader r(bytes);
  Field field;
  field.width = r.f64();
  field.height = r.f64();
  const std::uint32_t count = r.u32();
  std::vector<KeyUnit> units;
  units.reserve(std::min<std::uint32_t>(count, 1u << 20));
  for (std::uint32_t i = 0; i < count; ++i) units.push_back(get_unit(r));
  r.expect_done();
  return KeyPool(std::move(units), field);
}

LinkKey decode_link_key(ByteView bytes) {
  ByteReader r(bytes);
  LinkKey key;
  key.low = r.u32();
  key.high = r.u32();
  key.key = r.blob16();
  key.shared_unit_ids = get_ids(r);
  key.confirmed = r.u8() != 0;
  r.expect_done();
  return key;
}

KeyRing decode_key_ring(ByteView bytes, PoolHandle pool) {
  ByteReader r(bytes);
  auto ids = get_ids(r);
  const bool prioritized = r.u8() != 0;
  auto hp = get_ids(r);
  r.expect_done();
  if (prioritized) return KeyRing(std::move(pool), std::move(ids), std::move(hp));
  if (!hp.empty()) throw DecodeError("unprioritized ring carries a high-priority list");
  return KeyRing(std::move(pool), std::move(ids));
}

}  // namespace keysim
