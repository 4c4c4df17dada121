#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "keysim/crypto.hpp"

using namespace keysim;

namespace {

std::map<std::string, std::string> golden() {
  std::ifstream in(std::string(KEYSIM_TEST_DATA) + "/golden_sha1.txt");
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string k, v;
    fields >> k >> v;
    out[k] = v;
  }
  return out;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

}  // namespace

TEST(Quantize, Millimeters) {
  EXPECT_EQ(quantize_millimeters(400.0), 400000);
  EXPECT_EQ(quantize_millimeters(-1.2345), -1235);
  EXPECT_EQ(quantize_millimeters(0.0004), 0);
}

TEST(PairwiseKey, GoldenVector) {
  const auto g = golden();
  ASSERT_EQ(g.size(), 2u);
  const Bytes zero(16, 0);
  const std::vector<ByteView> keys{zero};
  EXPECT_EQ(to_hex(pairwise_key_input(1, 2, {100, 200}, {300, 400}, keys)), g.at("input"));
  const auto sha1 = make_hash("sha1");
  EXPECT_EQ(to_hex(derive_pairwise_key(*sha1, 1, 2, {100, 200}, {300, 400}, keys)), g.at("sha1"));
  EXPECT_EQ(to_hex(derive_pairwise_key(*sha1, 2, 1, {300, 400}, {100, 200}, keys)), g.at("sha1"));
}

TEST(PairwiseKey, Symmetric) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1000);
  const auto sha1 = make_hash("sha1");
  for (int i = 0; i < 1000; ++i) {
    const NodeId a = static_cast<NodeId>(rng()), b = a + 1 + static_cast<NodeId>(rng() % 1000);
    const Location pa{u(rng), u(rng)}, pb{u(rng), u(rng)};
    std::vector<Bytes> material(1 + rng() % 4);
    for (auto& k : material) k = random_bytes(rng, 16);
    const std::vector<ByteView> views(material.begin(), material.end());
    EXPECT_EQ(derive_pairwise_key(*sha1, a, b, pa, pb, views), derive_pairwise_key(*sha1, b, a, pb, pa, views));
  }
}

TEST(PairwiseKey, AnyKeyByteMatters) {
  std::mt19937_64 rng(22);
  const auto sha1 = make_hash("sha1");
  std::vector<Bytes> material{random_bytes(rng, 16), random_bytes(rng, 16)};
  auto derive = [&] {
    const std::vector<ByteView> views(material.begin(), material.end());
    return derive_pairwise_key(*sha1, 3, 4, {1, 2}, {3, 4}, views);
  };
  const auto base = derive();
  EXPECT_EQ(base.size(), 20u);
  for (std::size_t k = 0; k < material.size(); ++k) {
    for (std::size_t i = 0; i < 16; ++i) {
      material[k][i] ^= 1;
      EXPECT_NE(derive(), base);
      material[k][i] ^= 1;
    }
  }
}

TEST(PairwiseKey, EmptySetThrows) {
  const auto sha1 = make_hash("sha1");
  EXPECT_THROW(derive_pairwise_key(*sha1, 1, 2, {}, {}, {}), EmptySharedSet);
}

TEST(PairwiseKey, Sha256Length) {
  const Bytes k(16, 1);
  const std::vector<ByteView> keys{k};
  EXPECT_EQ(derive_pairwise_key(*make_hash("sha256"), 1, 2, {}, {}, keys).size(), 32u);
}

TEST(Registry, UnknownNamesRejected) {
  EXPECT_TRUE(has_hash("sha1"));
  EXPECT_FALSE(has_hash("md4"));
  EXPECT_THROW(make_hash("md4"), InvalidConfig);
  EXPECT_THROW(make_cipher("rot13"), InvalidConfig);
  EXPECT_THROW(CryptoSuite::from_names("sha1", "rot13"), InvalidConfig);
}

TEST(Puzzle, Contract) {
  std::mt19937_64 a(1), b(1), c(2);
  const auto p = make_puzzle(a);
  EXPECT_EQ(p.size(), 16u);
  EXPECT_EQ(p, make_puzzle(b));
  EXPECT_NE(p, make_puzzle(c));
  EXPECT_NE(make_puzzle(a), p);
  EXPECT_EQ(make_puzzle(a, 5).size(), 5u);
}

TEST(Puzzle, CheckRoundTripAndMismatch) {
  const auto aes = make_cipher("aes-128-ecb");
  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const auto k = random_bytes(rng, 16);
    auto k2 = random_bytes(rng, 16);
    if (k2 == k) k2[0] ^= 1;
    const auto p = random_bytes(rng, 1 + rng() % 40);
    const auto ct = aes->encrypt(k, p);
    EXPECT_TRUE(check_puzzle(*aes, k, p, ct));
    EXPECT_FALSE(check_puzzle(*aes, k2, p, ct));
    auto p2 = p;
    p2[0] ^= 0x80;
    EXPECT_FALSE(check_puzzle(*aes, k, p2, ct));
  }
}

TEST(CipherKey, TruncatesDigest) {
  const auto aes = make_cipher("aes-128-ecb");
  Bytes digest(20);
  for (std::size_t i = 0; i < digest.size(); ++i) digest[i] = static_cast<std::uint8_t>(i);
  const auto k = cipher_key(*aes, digest);
  EXPECT_EQ(k, Bytes(digest.begin(), digest.begin() + 16));
}

TEST(Hex, RoundTrip) {
  EXPECT_EQ(to_hex(Bytes{0x00, 0xff, 0x1a}), "00ff1a");
  EXPECT_EQ(from_hex("00FF1a"), (Bytes{0x00, 0xff, 0x1a}));
  EXPECT_THROW(from_hex("abc"), DecodeError);
  EXPECT_THROW(from_hex("zz"), DecodeError);
}
