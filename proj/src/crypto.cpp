#include "keysim/crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace keysim {

namespace {

struct MdFree {
  void operator()(EVP_MD* md) const { EVP_MD_free(md); }
};
struct CipherFree {
  void operator()(EVP_CIPHER* c) const { EVP_CIPHER_free(c); }
};
struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};

class EvpHash final : public HashFunction {
 public:
  EvpHash(std::string name, const char* openssl_name) : name_(std::move(name)) {
    md_.reset(EVP_MD_fetch(nullptr, openssl_name, nullptr));
    if (!md_) throw InvalidConfig("OpenSSL does not provide " + std::string(openssl_name));
    length_ = static_cast<std::size_t>(EVP_MD_get_size(md_.get()));
  }

  const std::string& name() const override { return name_; }
  std::size_t digest_length() const override { return length_; }

  Bytes digest(ByteView data) const override {
    Bytes out(length_);
    unsigned int written = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &written, md_.get(), nullptr) != 1 ||
        written != length_) {
      throw Error("digest computation failed for " + name_);
    }
    return out;
  }

 private:
  std::string name_;
  std::unique_ptr<EVP_MD, MdFree> md_;
  std::size_t length_ = 0;
};

// Block cipher in ECB mode with PKCS#7 padding; a puzzle is one or two
// blocks, so the mode never matters beyond framing.
class EvpBlockCipher final : public SymmetricCipher {
 public:
  EvpBlockCipher(std::string name, const char* openssl_name) : name_(std::move(name)) {
    cipher_.reset(EVP_CIPHER_fetch(nullptr, openssl_name, nullptr));
    if (!cipher_) throw InvalidConfig("OpenSSL does not provide " + std::string(openssl_name));
    key_length_ = static_cast<std::size_t>(EVP_CIPHER_get_key_length(cipher_.get()));
    block_ = static_cast<std::size_t>(EVP_CIPHER_get_block_size(cipher_.get()));
  }

  const std::string& name() const override { return name_; }
  std::size_t key_length() const override { return key_length_; }

  Bytes encrypt(ByteView key, ByteView plaintext) const override {
    check_key(key);
    std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree> ctx(EVP_CIPHER_CTX_new());
    Bytes out(plaintext.size() + block_);
    int n1 = 0;
    int n2 = 0;
    if (!ctx || EVP_EncryptInit_ex2(ctx.get(), cipher_.get(), key.data(), nullptr, nullptr) != 1 ||
        EVP_EncryptUpdate(ctx.get(), out.data(), &n1, plaintext.data(), static_cast<int>(plaintext.size())) != 1 ||
        EVP_EncryptFinal_ex(ctx.get(), out.data() + n1, &n2) != 1) {
      throw Error("encryption failed for " + name_);
    }
    out.resize(static_cast<std::size_t>(n1 + n2));
    return out;
  }

  std::optional<Bytes> decrypt(ByteView key, ByteView ciphertext) const override {
    check_key(key);
    if (ciphertext.empty() || ciphertext.size() % block_ != 0) return std::nullopt;
    std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree> ctx(EVP_CIPHER_CTX_new());
    Bytes out(ciphertext.size() + block_);
    int n1 = 0;
    int n2 = 0;
    if (!ctx || EVP_DecryptInit_ex2(ctx.get(), cipher_.get(), key.data(), nullptr, nullptr) != 1 ||
        EVP_DecryptUpdate(ctx.get(), out.data(), &n1, ciphertext.data(), static_cast<int>(ciphertext.size())) != 1) {
      throw Error("decryption failed for " + name_);
    }
    // A bad padding block is the usual sign of a wrong key.
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + n1, &n2) != 1) return std::nullopt;
    out.resize(static_cast<std::size_t>(n1 + n2));
    return out;
  }

 private:
  void check_key(ByteView key) const {
    if (key.size() != key_length_) {
      throw InvalidConfig(name_ + " expects a " + std::to_string(key_length_) + "-byte key, got " +
                          std::to_string(key.size()));
    }
  }

  std::string name_;
  std::unique_ptr<EVP_CIPHER, CipherFree> cipher_;
  std::size_t key_length_ = 0;
  std::size_t block_ = 1;
};

const std::map<std::string, const char*>& hash_table() {
  static const std::map<std::string, const char*> table{{"sha1", "SHA1"}, {"sha256", "SHA256"}};
  return table;
}

const std::map<std::string, const char*>& cipher_table() {
  static const std::map<std::string, const char*> table{{"aes-128-ecb", "AES-128-ECB"}};
  return table;
}

void put_be64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

}  // namespace

bool has_hash(const std::string& name) { return hash_table().contains(name); }
bool has_cipher(const std::string& name) { return cipher_table().contains(name); }

HashHandle make_hash(const std::string& name) {
  // Fetched algorithms are immutable and shareable across threads.
  static std::map<std::string, HashHandle> cache = [] {
    std::map<std::string, HashHandle> c;
    for (const auto& [key, ossl] : hash_table()) c.emplace(key, std::make_shared<EvpHash>(key, ossl));
    return c;
  }();
  auto it = cache.find(name);
  if (it == cache.end()) throw InvalidConfig("unknown hash function '" + name + "'");
  return it->second;
}

CipherHandle make_cipher(const std::string& name) {
  static std::map<std::string, CipherHandle> cache = [] {
    std::map<std::string, CipherHandle> c;
    for (const auto& [key, ossl] : cipher_table()) c.emplace(key, std::make_shared<EvpBlockCipher>(key, ossl));
    return c;
  }();
  auto it = cache.find(name);
  if (it == cache.end()) throw InvalidConfig("unknown cipher '" + name + "'");
  return it->second;
}

std::vector<std::string> hash_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : hash_table()) out.push_back(k);
  return out;
}

std::vector<std::string> cipher_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : cipher_table()) out.push_back(k);
  return out;
}

CryptoSuite CryptoSuite::from_names(const std::string& hash_name, const std::string& cipher_name,
                                    std::size_t puzzle_length) {
  CryptoSuite suite{make_hash(hash_name), make_cipher(cipher_name), puzzle_length};
  if (suite.hash->digest_length() < suite.cipher->key_length()) {
    throw InvalidConfig("digest of " + hash_name + " is shorter than the " + cipher_name + " key");
  }
  if (puzzle_length == 0) throw InvalidConfig("puzzle_length must be >= 1");
  return suite;
}

CryptoSuite CryptoSuite::from_config(const SimConfig& config) {
  return from_names(config.hash, config.cipher, config.puzzle_length);
}

std::int64_t quantize_millimeters(double meters) { return std::llround(meters * 1000.0); }

Bytes pairwise_key_input(NodeId id_a, NodeId id_b, const Location& pa_a, const Location& pa_b,
                         std::span<const ByteView> shared_keys) {
  std::size_t total = 32;
  for (const auto& k : shared_keys) total += k.size();
  Bytes in;
  in.reserve(total);
  put_be64(in, std::min(id_a, id_b));
  put_be64(in, std::max(id_a, id_b));
  put_be64(in, static_cast<std::uint64_t>(quantize_millimeters(pa_a.x + pa_b.x)));
  put_be64(in, static_cast<std::uint64_t>(quantize_millimeters(pa_a.y + pa_b.y)));
  for (const auto& k : shared_keys) in.insert(in.end(), k.begin(), k.end());
  return in;
}

Bytes derive_pairwise_key(const HashFunction& hash, NodeId id_a, NodeId id_b, const Location& pa_a,
                          const Location& pa_b, std::span<const ByteView> shared_keys) {
  if (shared_keys.empty()) throw EmptySharedSet();
  return hash.digest(pairwise_key_input(id_a, id_b, pa_a, pa_b, shared_keys));
}

Bytes cipher_key(const SymmetricCipher& cipher, ByteView derived) {
  if (derived.size() < cipher.key_length()) {
    throw InvalidConfig("derived key shorter than the " + cipher.name() + " key length");
  }
  return Bytes(derived.begin(), derived.begin() + static_cast<std::ptrdiff_t>(cipher.key_length()));
}

Bytes make_puzzle(std::mt19937_64& rng, std::size_t length) {
  Bytes out(length);
  std::size_t i = 0;
  while (i < length) {
    std::uint64_t word = rng();
    for (int b = 0; b < 8 && i < length; ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word & 0xff);
      word >>= 8;
    }
  }
  return out;
}

bool check_puzzle(const SymmetricCipher& cipher, ByteView key, ByteView puzzle, ByteView ciphertext) {
  const auto plain = cipher.decrypt(key, ciphertext);
  return plain && std::equal(plain->begin(), plain->end(), puzzle.begin(), puzzle.end());
}

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(const std::string& text) {
  if (text.size() % 2 != 0) throw DecodeError("hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw DecodeError(std::string("invalid hex digit '") + c + "'");
  };
  Bytes out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(text[2 * i]) << 4 | nibble(text[2 * i + 1]));
  }
  return out;
}

}  // namespace keysim
