#include "pvea/cipher.hpp"

#include <cctype>

#include "pvea/error.hpp"

namespace pvea {

namespace {

std::uint64_t mask_bits(int n) { return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1; }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  const int l = std::tolower(static_cast<unsigned char>(c));
  if (l >= 'a' && l <= 'f') return l - 'a' + 10;
  return -1;
}

void check_width(const FlcKind& kind, int width) {
  if (width != bit_length(kind)) {
    throw Error(Errc::width_mismatch, std::string(kind_name(kind_index(kind))) + " has " +
                                          std::to_string(bit_length(kind)) + " bits, got " +
                                          std::to_string(width));
  }
}

}  // namespace

std::array<std::uint8_t, 16> parse_hex16(const std::string& hex) {
  if (hex.size() != 32) {
    throw Error(Errc::invalid_argument, "expected 32 hex digits, got " + std::to_string(hex.size()));
  }
  std::array<std::uint8_t, 16> out{};
  for (std::size_t i = 0; i < 16; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::invalid_argument, "not a hex string: " + hex);
    out[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static const char* const digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

bool uid_absent(const Uid& uid) {
  for (std::uint8_t b : uid) {
    if (b != 0) return false;
  }
  return true;
}

std::uint64_t fold128(const std::array<std::uint8_t, 16>& bytes) {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  for (int i = 0; i < 8; ++i) {
    hi = (hi << 8) | bytes[i];
    lo = (lo << 8) | bytes[8 + i];
  }
  return hi ^ lo;
}

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t TestPrf::next() {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1Dull;
}

void TestPrf::absorb(std::uint64_t value) {
  state_ ^= value;
  if (state_ == 0) state_ = 1;
}

TestPrf derive_prf(const Key& key, const Uid& uid, std::uint32_t gop_index, std::uint64_t tag) {
  TestPrf prf(fold128(key) ^ fold128(uid) ^ gop_index ^ tag);
  for (int i = 0; i < kWarmupSteps; ++i) prf.next();
  return prf;
}

GeneratorFactory test_prf_factory() {
  return [](const Key& key, const Uid& uid, std::uint32_t gop, std::uint64_t tag) {
    return std::make_unique<TestPrf>(derive_prf(key, uid, gop, tag));
  };
}

const char* mode_name(CipherMode mode) {
  switch (mode) {
    case CipherMode::keystream: return "keystream";
    case CipherMode::keystream_feedback: return "feedback";
    case CipherMode::cfb: return "cfb";
    case CipherMode::cascade: return "cascade";
  }
  return "?";
}

CipherMode parse_mode(const std::string& name) {
  if (name == "keystream") return CipherMode::keystream;
  if (name == "feedback" || name == "keystream_feedback") return CipherMode::keystream_feedback;
  if (name == "cfb") return CipherMode::cfb;
  if (name == "cascade") return CipherMode::cascade;
  throw Error(Errc::invalid_argument, "unknown cipher mode '" + name + "'");
}

Payload extract_payload(const FlcKind& kind, std::uint32_t field, bool signs_only) {
  const int width = bit_length(kind);
  switch (kind_index(kind)) {
    case 0:  // IntraDcDiff
    case 4:  // MvResidual
      if (signs_only) return {field >> (width - 1), 1};
      return {field, width};
    case 2: {  // EscapeLevel
      const int level = decode_escape_level(field, width);
      if (level == 0) throw Error(Errc::unencodable_value, "escape field is not a valid level");
      return {level < 0 ? 1u : 0u, 1};
    }
    default:
      return {field, 1};
  }
}

std::uint32_t replace_payload(const FlcKind& kind, std::uint32_t field, Payload payload,
                              bool signs_only) {
  const int width = bit_length(kind);
  const Payload expected = extract_payload(kind, field, signs_only);
  if (payload.width != expected.width || (payload.value >> payload.width) != 0) {
    throw Error(Errc::width_mismatch, "payload width " + std::to_string(payload.width) +
                                          " for a " + std::to_string(expected.width) +
                                          "-bit payload");
  }
  switch (kind_index(kind)) {
    case 0:
    case 4:
      if (signs_only) {
        return static_cast<std::uint32_t>((field & mask_bits(width - 1)) |
                                          (std::uint64_t{payload.value} << (width - 1)));
      }
      return payload.value;
    case 2: {
      int level = decode_escape_level(field, width);
      if (level < 0) level = -level;
      return encode_escape_level(payload.value != 0 ? -level : level, width);
    }
    default:
      return payload.value;
  }
}

CipherState::CipherState(const CipherConfig& config, const Key& key, const Uid& uid,
                         std::uint32_t gop_index, GeneratorFactory factory)
    : config_(config), key_(key), uid_(uid), gop_(gop_index), factory_(std::move(factory)) {
  if (config_.block_bits < 1 || config_.block_bits > 64) {
    throw Error(Errc::invalid_argument,
                "block width " + std::to_string(config_.block_bits) + " outside 1..64");
  }
  reset();
}

void CipherState::reset() {
  gen_ = factory_(key_, uid_, config_.gop_keying ? gop_ : 0, kCipherTag);
  buffer_ = 0;
  buffered_ = 0;
  counter_ = 0;
  if (config_.mode == CipherMode::cfb) {
    register_ = gen_->next() >> (64 - config_.block_bits);
    cfb_key_ = gen_->next();
  }
}

void CipherState::rekey(std::uint32_t gop_index) {
  if (!config_.gop_keying || gop_index == gop_) return;
  gop_ = gop_index;
  reset();
}

std::uint64_t CipherState::next_word() {
  counter_ += 64;
  return gen_->next();
}

std::uint32_t CipherState::keystream_bits(int n) {
  if (n < 1 || n > 32) {
    throw Error(Errc::invalid_argument, "keystream request of " + std::to_string(n) + " bits");
  }
  std::uint64_t out = 0;
  int need = n;
  while (need > 0) {
    if (buffered_ == 0) {
      buffer_ = gen_->next();
      buffered_ = 64;
    }
    const int take = need < buffered_ ? need : buffered_;
    const std::uint64_t bits = (buffer_ >> (buffered_ - take)) & mask_bits(take);
    out = (out << take) | bits;
    buffered_ -= take;
    need -= take;
  }
  counter_ += static_cast<std::uint64_t>(n);
  return static_cast<std::uint32_t>(out);
}

void CipherState::feedback(std::uint32_t bits, int width) {
  if (config_.mode != CipherMode::keystream_feedback) {
    throw Error(Errc::mode_mismatch, std::string("feedback in ") + mode_name(config_.mode) + " mode");
  }
  gen_->absorb(mix64((static_cast<std::uint64_t>(width) << 32) | bits));
  buffered_ = 0;
}

void CipherState::cfb_feedback(std::uint32_t cipher_bits, int width) {
  if (config_.mode != CipherMode::cfb) {
    throw Error(Errc::mode_mismatch, std::string("cfb feedback in ") + mode_name(config_.mode) + " mode");
  }
  const int n = config_.block_bits;
  if (width >= n) {
    register_ = cipher_bits & mask_bits(n);
  } else {
    register_ = ((register_ << width) | cipher_bits) & mask_bits(n);
  }
}

std::uint32_t CipherState::cfb_keystream(int n) {
  const std::uint64_t block = mix64((register_ << (64 - config_.block_bits)) ^ cfb_key_);
  counter_ += static_cast<std::uint64_t>(n);
  return static_cast<std::uint32_t>(block >> (64 - n));
}

std::uint32_t CipherState::encrypt_payload(std::uint32_t plain, int width) {
  switch (config_.mode) {
    case CipherMode::keystream:
      return plain ^ keystream_bits(width);
    case CipherMode::keystream_feedback: {
      const std::uint32_t c = plain ^ keystream_bits(width);
      feedback(plain, width);
      return c;
    }
    case CipherMode::cfb: {
      const std::uint32_t c = plain ^ cfb_keystream(width);
      cfb_feedback(c, width);
      return c;
    }
    case CipherMode::cascade:
      break;
  }
  throw Error(Errc::mode_mismatch, "cascade mode transforms payloads through CascadeCipher");
}

std::uint32_t CipherState::decrypt_payload(std::uint32_t cipher, int width) {
  switch (config_.mode) {
    case CipherMode::keystream:
      return cipher ^ keystream_bits(width);
    case CipherMode::keystream_feedback: {
      const std::uint32_t p = cipher ^ keystream_bits(width);
      feedback(p, width);
      return p;
    }
    case CipherMode::cfb: {
      const std::uint32_t p = cipher ^ cfb_keystream(width);
      cfb_feedback(cipher, width);
      return p;
    }
    case CipherMode::cascade:
      break;
  }
  throw Error(Errc::mode_mismatch, "cascade mode transforms payloads through CascadeCipher");
}

std::uint32_t CipherState::encrypt_site(const FlcKind& kind, std::uint32_t field, int width,
                                        bool signs_only) {
  check_width(kind, width);
  Payload p = extract_payload(kind, field, signs_only);
  p.value = encrypt_payload(p.value, p.width);
  return replace_payload(kind, field, p, signs_only);
}

std::uint32_t CipherState::decrypt_site(const FlcKind& kind, std::uint32_t field, int width,
                                        bool signs_only) {
  check_width(kind, width);
  Payload p = extract_payload(kind, field, signs_only);
  p.value = decrypt_payload(p.value, p.width);
  return replace_payload(kind, field, p, signs_only);
}

namespace {

struct Halves {
  int high;  // bits in L
  int low;   // bits in R
};

Halves halves(int width) { return {width / 2, width - width / 2}; }

}  // namespace

std::uint64_t feistel_encrypt(std::uint64_t value, int width,
                              const std::array<std::uint64_t, 4>& round_keys) {
  const Halves h = halves(width);
  std::uint64_t l = h.high == 0 ? 0 : (value >> h.low) & mask_bits(h.high);
  std::uint64_t r = value & mask_bits(h.low);
  for (int i = 0; i < 4; ++i) {
    if (i % 2 == 0) {
      l ^= mix64(r ^ round_keys[i]) & mask_bits(h.high);
    } else {
      r ^= mix64(l ^ round_keys[i]) & mask_bits(h.low);
    }
  }
  return h.high == 0 ? r : (l << h.low) | r;
}

std::uint64_t feistel_decrypt(std::uint64_t value, int width,
                              const std::array<std::uint64_t, 4>& round_keys) {
  const Halves h = halves(width);
  std::uint64_t l = h.high == 0 ? 0 : (value >> h.low) & mask_bits(h.high);
  std::uint64_t r = value & mask_bits(h.low);
  for (int i = 3; i >= 0; --i) {
    if (i % 2 == 0) {
      l ^= mix64(r ^ round_keys[i]) & mask_bits(h.high);
    } else {
      r ^= mix64(l ^ round_keys[i]) & mask_bits(h.low);
    }
  }
  return h.high == 0 ? r : (l << h.low) | r;
}

CascadeCipher::CascadeCipher(CipherState& state, bool decrypt)
    : state_(state), decrypt_(decrypt), n_(static_cast<std::size_t>(state.config().block_bits)) {}

std::vector<std::size_t> CascadeCipher::push(std::size_t id, Payload payload) {
  if (payload.width < 1 || payload.width > 32) {
    throw Error(Errc::width_mismatch, "payload width " + std::to_string(payload.width));
  }
  entries_.push_back(Entry{id, payload.width});
  for (int i = payload.width - 1; i >= 0; --i) {
    bits_.push_back(static_cast<std::uint8_t>((payload.value >> i) & 1u));
  }
  std::vector<std::size_t> ready;
  while (bits_.size() >= n_) process(n_, ready);
  return ready;
}

std::vector<std::size_t> CascadeCipher::flush() {
  std::vector<std::size_t> ready;
  if (!bits_.empty()) process(bits_.size(), ready);
  return ready;
}

Payload CascadeCipher::take(std::size_t id) {
  const auto it = done_.find(id);
  if (it == done_.end()) throw Error(Errc::invalid_argument, "payload not ready");
  const Payload p = it->second;
  done_.erase(it);
  return p;
}

void CascadeCipher::process(std::size_t count, std::vector<std::size_t>& ready) {
  std::uint64_t block = 0;
  for (std::size_t i = 0; i < count; ++i) {
    block = (block << 1) | bits_.front();
    bits_.pop_front();
  }
  std::array<std::uint64_t, 4> keys{};
  for (auto& k : keys) k = state_.next_word();
  const int width = static_cast<int>(count);
  const std::uint64_t out =
      decrypt_ ? feistel_decrypt(block, width, keys) : feistel_encrypt(block, width, keys);
  for (int i = width - 1; i >= 0; --i) {
    Entry& e = entries_.front();
    e.value = (e.value << 1) | static_cast<std::uint32_t>((out >> i) & 1u);
    if (++e.filled == e.width) {
      done_[e.id] = Payload{e.value, e.width};
      ready.push_back(e.id);
      entries_.pop_front();
    }
  }
}

std::vector<Payload> cascade_transform(CipherState& state, const std::vector<Payload>& payloads,
                                       bool decrypt) {
  CascadeCipher cascade(state, decrypt);
  for (std::size_t i = 0; i < payloads.size(); ++i) cascade.push(i, payloads[i]);
  cascade.flush();
  std::vector<Payload> out;
  out.reserve(payloads.size());
  for (std::size_t i = 0; i < payloads.size(); ++i) out.push_back(cascade.take(i));
  return out;
}

}  // namespace pvea
