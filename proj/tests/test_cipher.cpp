#include <doctest.h>

#include <random>

#include "pvea/cipher.hpp"
#include "pvea/mpeg_syntax.hpp"
#include "support/errc.hpp"
#include "support/ref_prf.hpp"

using namespace pvea;
using pvea::testing::RefPrf;

namespace {

CipherConfig cfg(CipherMode mode, int block_bits = 64, bool gop_keying = false) {
  return CipherConfig{mode, block_bits, gop_keying};
}

Key key_of(std::uint8_t b) {
  Key k{};
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<std::uint8_t>(b + i);
  return k;
}

}  // namespace

TEST_CASE("hex helpers and folding") {
  const auto k = parse_hex16("000102030405060708090a0b0c0d0e0f");
  CHECK(k[15] == 0x0f);
  CHECK(to_hex(k) == "000102030405060708090a0b0c0d0e0f");
  CHECK(fold128(k) == (0x0001020304050607ull ^ 0x08090a0b0c0d0e0full));
  CHECK_ERRC(parse_hex16("00"), Errc::invalid_argument);
  CHECK_ERRC(parse_hex16("zz0102030405060708090a0b0c0d0e0f"), Errc::invalid_argument);
  CHECK(uid_absent(Uid{}));
  CHECK(mix64(0) == 0);
  CHECK(mix64(1) == 0x5692161d100b05e5ull);
}

TEST_CASE("generator matches its definition") {
  TestPrf p(1);
  RefPrf r(1);
  for (int i = 0; i < 1000; ++i) REQUIRE(p.next() == r.next());
  CHECK(TestPrf(0).state() == 1);
}

TEST_CASE("derive_prf on all-zero inputs") {
  const TestPrf p = derive_prf(Key{}, Uid{}, 0, 0);
  CHECK(p.state() == 0x10bed091d1ccd331ull);
  TestPrf q = derive_prf(Key{}, Uid{}, 0, 0);
  CHECK(q.next() == 0x56b2b122e9483038ull);
  CHECK(q.next() == 0xbffab238424d3a95ull);
  CHECK(derive_prf(Key{}, Uid{}, 0, 0).state() == p.state());
  // Seed 0 is remapped to 1, so gop 1 lands on the same state here.
  CHECK(derive_prf(Key{}, Uid{}, 1, 0).state() == p.state());
  Key k{};
  k[15] = 0x40;
  CHECK(derive_prf(k, Uid{}, 1, 0).state() != derive_prf(k, Uid{}, 0, 0).state());
}

TEST_CASE("keystream bits are one continuous stream") {
  CipherState a(cfg(CipherMode::keystream), Key{}, Uid{});
  CipherState b(cfg(CipherMode::keystream), Key{}, Uid{});
  const std::uint32_t lo = a.keystream_bits(8);
  const std::uint32_t hi = a.keystream_bits(8);
  CHECK(((lo << 8) | hi) == b.keystream_bits(16));

  CipherState c(cfg(CipherMode::keystream), Key{}, Uid{});
  const std::uint64_t high = c.keystream_bits(32);
  const std::uint64_t word = (high << 32) | c.keystream_bits(32);
  CHECK(word == 0x56b2b122e9483038ull);
  CHECK(c.counter() == 64);
  CHECK_ERRC(c.keystream_bits(0), Errc::invalid_argument);
  CHECK_ERRC(c.keystream_bits(33), Errc::invalid_argument);
}

TEST_CASE("gop keying re-derives the state") {
  CipherState on(cfg(CipherMode::keystream, 64, true), key_of(1), Uid{});
  const std::uint32_t g0 = on.keystream_bits(32);
  on.rekey(1);
  const std::uint32_t g1 = on.keystream_bits(32);
  CHECK(g0 != g1);
  on.rekey(0);
  CHECK(on.keystream_bits(32) == g0);

  CipherState off(cfg(CipherMode::keystream), key_of(1), Uid{});
  off.keystream_bits(32);
  off.rekey(5);
  CHECK(off.gop_index() == 0);
}

TEST_CASE("payload transforms per kind") {
  SUBCASE("xor on a DC differential") {
    const Payload p = extract_payload(IntraDcDiff{4, Component::luma}, 0b1010, false);
    CHECK(p.width == 4);
    CHECK(replace_payload(IntraDcDiff{4, Component::luma}, 0b1010, {0b1010 ^ 0b0110, 4}, false) == 0b1100);
  }
  SUBCASE("escape level sign flip") {
    const EscapeLevel k{8};
    const Payload p = extract_payload(k, 0x05, false);
    CHECK(p.value == 0);
    CHECK(p.width == 1);
    const std::uint32_t flipped = replace_payload(k, 0x05, {1, 1}, false);
    CHECK(flipped == encode_escape_level(-5, 8));
    CHECK(replace_payload(k, flipped, {0, 1}, false) == 0x05);
  }
  SUBCASE("signs only keeps the low bits") {
    const MvResidual k{3, Axis::vertical};
    const Payload p = extract_payload(k, 0b101, true);
    CHECK(p.value == 1);
    CHECK(replace_payload(k, 0b101, {0, 1}, true) == 0b001);
  }
  SUBCASE("width mismatch") {
    CHECK_ERRC(replace_payload(CoeffSign{}, 0, {3, 2}, false), Errc::width_mismatch);
    CipherState s(cfg(CipherMode::keystream), Key{}, Uid{});
    CHECK_ERRC(s.encrypt_site(IntraDcDiff{4, Component::luma}, 0b1010, 3), Errc::width_mismatch);
  }
}

TEST_CASE("site transforms with a known keystream bit") {
  // First keystream bits on all-zero inputs: 0x56... = 0101 0110.
  CipherState s(cfg(CipherMode::keystream), Key{}, Uid{});
  CHECK(s.encrypt_site(CoeffSign{}, 0, 1) == 0);  // bit 0
  CHECK(s.encrypt_site(EscapeLevel{8}, 0x05, 8) == encode_escape_level(-5, 8));  // bit 1
  CHECK(s.encrypt_site(IntraDcDiff{4, Component::luma}, 0b1010, 4) == (0b1010 ^ 0b0101));
}

TEST_CASE("stream modes invert for every kind") {
  std::mt19937_64 rng(3);
  const std::vector<FlcKind> kinds = {IntraDcDiff{7, Component::chroma}, CoeffSign{true, false}, EscapeLevel{16},
                                      EscapeLevel{8}, MvSign{Axis::vertical}, MvResidual{5, Axis::horizontal}};
  for (CipherMode mode : {CipherMode::keystream, CipherMode::keystream_feedback, CipherMode::cfb}) {
    for (int bits : {1, 5, 17, 64}) {
      for (bool signs_only : {false, true}) {
        CipherState enc(cfg(mode, bits), key_of(9), key_of(40));
        CipherState dec(cfg(mode, bits), key_of(9), key_of(40));
        for (int i = 0; i < 300; ++i) {
          const FlcKind& kind = kinds[rng() % kinds.size()];
          const int w = bit_length(kind);
          std::uint32_t field;
          if (std::holds_alternative<EscapeLevel>(kind)) {
            int level = static_cast<int>(rng() % (w == 8 ? 127 : 128)) + (w == 8 ? 1 : 128);
            if (rng() & 1) level = -level;
            field = encode_escape_level(level, w);
          } else {
            field = static_cast<std::uint32_t>(rng()) & ((1u << w) - 1);
          }
          const std::uint32_t c = enc.encrypt_site(kind, field, w, signs_only);
          REQUIRE(dec.decrypt_site(kind, c, w, signs_only) == field);
        }
      }
    }
  }
}

TEST_CASE("wrong key decrypts to different payloads") {
  std::mt19937_64 rng(11);
  int differ = 0;
  const int trials = 10000;
  CipherState enc(cfg(CipherMode::keystream), key_of(1), Uid{});
  CipherState dec(cfg(CipherMode::keystream), key_of(2), Uid{});
  for (int i = 0; i < trials; ++i) {
    const auto plain = static_cast<std::uint32_t>(rng() & 0xF);
    differ += dec.decrypt_payload(enc.encrypt_payload(plain, 4), 4) != plain;
  }
  CHECK(differ >= trials * 93 / 100);
}

TEST_CASE("feedback modes diverge after one changed plaintext bit") {
  for (CipherMode mode : {CipherMode::keystream_feedback, CipherMode::cfb}) {
    CipherState a(cfg(mode, 32), key_of(5), Uid{});
    CipherState b(cfg(mode, 32), key_of(5), Uid{});
    CHECK(a.encrypt_payload(0, 1) != b.encrypt_payload(1, 1));
    for (int i = 0; i < 40; ++i) {
      const std::uint32_t ka = a.encrypt_payload(0, 16);
      const std::uint32_t kb = b.encrypt_payload(0, 16);
      CHECK(ka != kb);
    }
  }
  CipherState a(cfg(CipherMode::keystream), key_of(5), Uid{});
  CipherState b(cfg(CipherMode::keystream), key_of(5), Uid{});
  a.encrypt_payload(0, 1);
  b.encrypt_payload(1, 1);
  CHECK(a.encrypt_payload(0, 16) == b.encrypt_payload(0, 16));
}

TEST_CASE("feedback calls are mode checked") {
  CipherState s(cfg(CipherMode::keystream), Key{}, Uid{});
  CHECK_ERRC(s.feedback(1, 1), Errc::mode_mismatch);
  CHECK_ERRC(s.cfb_feedback(1, 1), Errc::mode_mismatch);
  CipherState c(cfg(CipherMode::cascade), Key{}, Uid{});
  CHECK_ERRC(c.encrypt_payload(1, 1), Errc::mode_mismatch);
  CHECK_ERRC(CipherState(cfg(CipherMode::cfb, 65), Key{}, Uid{}), Errc::invalid_argument);
  CHECK(parse_mode("feedback") == CipherMode::keystream_feedback);
  CHECK_ERRC(parse_mode("ecb"), Errc::invalid_argument);
}

TEST_CASE("cfb register takes ciphertext bits") {
  CipherState s(cfg(CipherMode::cfb, 8), key_of(3), Uid{});
  const std::uint64_t before = s.cfb_register();
  const std::uint32_t c = s.encrypt_payload(0b101, 3);
  CHECK(s.cfb_register() == (((before << 3) | c) & 0xFF));
  const std::uint32_t c2 = s.encrypt_payload(0xABCD, 16);
  CHECK(s.cfb_register() == (c2 & 0xFF));
}

TEST_CASE("feistel permutes every width") {
  const std::array<std::uint64_t, 4> keys = {1, 0x1234, 0xFFFF0000FFFFull, 42};
  for (int w = 1; w <= 10; ++w) {
    std::vector<bool> seen(std::size_t{1} << w, false);
    for (std::uint64_t v = 0; v < (1ull << w); ++v) {
      const std::uint64_t e = feistel_encrypt(v, w, keys);
      REQUIRE(e < (1ull << w));
      REQUIRE_FALSE(seen[e]);
      seen[e] = true;
      REQUIRE(feistel_decrypt(e, w, keys) == v);
    }
  }
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = rng();
    CHECK(feistel_decrypt(feistel_encrypt(v, 64, keys), 64, keys) == v);
  }
}

TEST_CASE("cascade keeps payload widths and inverts") {
  CipherState enc(cfg(CipherMode::cascade, 16), key_of(7), Uid{});
  const std::vector<Payload> in = {{0b1011, 4}, {1, 1}, {0xA5, 8}, {0b011, 3}};
  CascadeCipher cascade(enc, false);
  CHECK(cascade.push(0, in[0]).empty());
  CHECK(cascade.push(1, in[1]).empty());
  CHECK(cascade.push(2, in[2]).empty());
  const auto ready = cascade.push(3, in[3]);
  CHECK(ready == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(cascade.pending_bits() == 0);
  std::vector<Payload> out;
  for (std::size_t i = 0; i < 4; ++i) out.push_back(cascade.take(i));
  for (std::size_t i = 0; i < 4; ++i) CHECK(out[i].width == in[i].width);
  CHECK(enc.counter() == 4 * 64);

  CipherState dec(cfg(CipherMode::cascade, 16), key_of(7), Uid{});
  const auto back = cascade_transform(dec, out, true);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back[i].value == in[i].value);
}

TEST_CASE("cascade partial block") {
  CipherState enc(cfg(CipherMode::cascade, 64), key_of(7), Uid{});
  const auto out = cascade_transform(enc, {{1, 1}}, false);
  REQUIRE(out.size() == 1);
  CHECK(out[0].width == 1);
  CipherState dec(cfg(CipherMode::cascade, 64), key_of(7), Uid{});
  CHECK(cascade_transform(dec, out, true)[0].value == 1);

  std::mt19937_64 rng(4);
  for (int bits : {1, 3, 13, 64}) {
    std::vector<Payload> in;
    for (int i = 0; i < 57; ++i) {
      const int w = 1 + static_cast<int>(rng() % 8);
      in.push_back({static_cast<std::uint32_t>(rng()) & ((1u << w) - 1), w});
    }
    CipherState e(cfg(CipherMode::cascade, bits), key_of(1), key_of(2));
    CipherState d(cfg(CipherMode::cascade, bits), key_of(1), key_of(2));
    const auto back = cascade_transform(d, cascade_transform(e, in, false), true);
    for (std::size_t i = 0; i < in.size(); ++i) REQUIRE(back[i].value == in[i].value);
  }
}
