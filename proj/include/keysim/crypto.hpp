#pragma once

// Pluggable primitives: the one-way hash h, the puzzle cipher E, and the
// symmetric pairwise key derivation built from h.
//
// Note on the puzzle: the initiator ships the plaintext next to its
// encryption, so every handshake hands an eavesdropper a known-plaintext
// pair under the link key.  The simulator reproduces that message flow
// verbatim.

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "keysim/domain.hpp"

namespace keysim {

class HashFunction {
 public:
  virtual ~HashFunction() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t digest_length() const = 0;
  virtual Bytes digest(ByteView data) const = 0;
};

class SymmetricCipher {
 public:
  virtual ~SymmetricCipher() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t key_length() const = 0;
  virtual Bytes encrypt(ByteView key, ByteView plaintext) const = 0;
  /// Empty optional when the ciphertext does not decrypt cleanly under `key`.
  virtual std::optional<Bytes> decrypt(ByteView key, ByteView ciphertext) const = 0;
};

using HashHandle = std::shared_ptr<const HashFunction>;
using CipherHandle = std::shared_ptr<const SymmetricCipher>;

// Registry.  Hashes: "sha1" (default), "sha256".  Ciphers: "aes-128-ecb".
bool has_hash(const std::string& name);
bool has_cipher(const std::string& name);
/// Throws InvalidConfig for an unknown name.
HashHandle make_hash(const std::string& name);
CipherHandle make_cipher(const std::string& name);
std::vector<std::string> hash_names();
std::vector<std::string> cipher_names();

/// Everything a node needs to derive and confirm link keys.
struct CryptoSuite {
  HashHandle hash;
  CipherHandle cipher;
  std::size_t puzzle_length = 16;

  /// Throws InvalidConfig on unknown names or a digest shorter than the
  /// cipher key.
  static CryptoSuite from_names(const std::string& hash_name, const std::string& cipher_name,
                                std::size_t puzzle_length = 16);
  static CryptoSuite from_config(const SimConfig& config);
};

/// Millimeter fixed-point encoding of a coordinate sum.
std::int64_t quantize_millimeters(double meters);

/// Serialized hash input: lower id, higher id (8-byte big-endian each), the
/// coordinate sums x then y (millimeters, 8-byte big-endian signed), then
/// the shared key materials in the order given.
Bytes pairwise_key_input(NodeId id_a, NodeId id_b, const Location& pa_a, const Location& pa_b,
                         std::span<const ByteView> shared_keys);

/// h(ID_low || ID_high || x-sum || y-sum || k_1 || ... || k_q).  Symmetric in
/// (id_a, pa_a) <-> (id_b, pa_b).  Throws EmptySharedSet when no keys are
/// given.
Bytes derive_pairwise_key(const HashFunction& hash, NodeId id_a, NodeId id_b, const Location& pa_a,
                          const Location& pa_b, std::span<const ByteView> shared_keys);

/// Digest truncated to the cipher's key length.
Bytes cipher_key(const SymmetricCipher& cipher, ByteView derived);

Bytes make_puzzle(std::mt19937_64& rng, std::size_t length = 16);

/// True iff `ciphertext` decrypts under `key` to exactly `puzzle`.
bool check_puzzle(const SymmetricCipher& cipher, ByteView key, ByteView puzzle, ByteView ciphertext);

std::string to_hex(ByteView bytes);
/// Throws DecodeError on odd length or non-hex characters.
Bytes from_hex(const std::string& text);

}  // namespace keysim
