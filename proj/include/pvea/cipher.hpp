#pragma once

// Keystream and block transforms that replace selected FLC payloads.
//
// TestPrf is a xorshift-multiply generator pinned for reproducible vectors. It
// is NOT a cryptographic primitive; production builds should plug a vetted
// cipher in through WordGenerator.

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pvea/flc.hpp"

namespace pvea {

using Key = std::array<std::uint8_t, 16>;
using Uid = std::array<std::uint8_t, 16>;  // all-zero means absent

/// 32 hex digits; throws InvalidArgument otherwise.
std::array<std::uint8_t, 16> parse_hex16(const std::string& hex);
std::string to_hex(std::span<const std::uint8_t> bytes);
bool uid_absent(const Uid& uid);

/// XOR of the two big-endian 64-bit words.
std::uint64_t fold128(const std::array<std::uint8_t, 16>& bytes);
/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

class WordGenerator {
 public:
  virtual ~WordGenerator() = default;
  virtual std::uint64_t next() = 0;
  /// Perturbs the internal state with `value`.
  virtual void absorb(std::uint64_t value) = 0;
};

class TestPrf : public WordGenerator {
 public:
  explicit TestPrf(std::uint64_t seed) : state_(seed == 0 ? 1 : seed) {}
  std::uint64_t next() override;
  void absorb(std::uint64_t value) override;
  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

inline constexpr int kWarmupSteps = 8;

/// seed = fold(key) ^ fold(uid) ^ gop_index ^ tag, then kWarmupSteps steps.
TestPrf derive_prf(const Key& key, const Uid& uid, std::uint32_t gop_index, std::uint64_t tag);

using GeneratorFactory = std::function<std::unique_ptr<WordGenerator>(
    const Key&, const Uid&, std::uint32_t gop_index, std::uint64_t tag)>;
GeneratorFactory test_prf_factory();

enum class CipherMode : std::uint8_t { keystream = 0, keystream_feedback = 1, cfb = 2, cascade = 3 };
const char* mode_name(CipherMode mode);
/// Accepts keystream, feedback, cfb, cascade; throws InvalidArgument.
CipherMode parse_mode(const std::string& name);

struct CipherConfig {
  CipherMode mode = CipherMode::keystream;
  int block_bits = 64;  // cfb register / cascade block width, 1..64
  bool gop_keying = false;
};

inline constexpr std::uint64_t kCipherTag = 0;

// Per-site payload: the bits the cipher actually transforms.
struct Payload {
  std::uint32_t value = 0;
  int width = 0;
};

/// IntraDcDiff / MvResidual: the whole field, or only its MSB under
/// `signs_only`. CoeffSign / MvSign: the bit. EscapeLevel: 1 when negative.
Payload extract_payload(const FlcKind& kind, std::uint32_t field, bool signs_only);
/// Writes `payload` back into `field`; throws WidthMismatch on width disagreement.
std::uint32_t replace_payload(const FlcKind& kind, std::uint32_t field, Payload payload,
                              bool signs_only);

// Stream-mode state (keystream, keystream_feedback, cfb). Cascade mode uses
// CascadeCipher, which draws its round keys from a CipherState.
class CipherState {
 public:
  CipherState(const CipherConfig& config, const Key& key, const Uid& uid,
              std::uint32_t gop_index = 0, GeneratorFactory factory = test_prf_factory());

  const CipherConfig& config() const noexcept { return config_; }
  std::uint32_t gop_index() const noexcept { return gop_; }
  /// Re-derives the state for a new GOP; a no-op unless gop_keying is set.
  void rekey(std::uint32_t gop_index);

  /// Next `n` (1..32) keystream bits, MSB-first across generator words.
  std::uint32_t keystream_bits(int n);
  std::uint64_t next_word();
  std::uint64_t counter() const noexcept { return counter_; }

  /// keystream_feedback only: folds plaintext bits into the generator and
  /// discards buffered keystream. ModeMismatch otherwise.
  void feedback(std::uint32_t bits, int width);
  /// cfb only: shifts `width` ciphertext bits into the register.
  void cfb_feedback(std::uint32_t cipher_bits, int width);
  std::uint64_t cfb_register() const noexcept { return register_; }

  /// Transforms one payload, including the mode's feedback step.
  std::uint32_t encrypt_payload(std::uint32_t plain, int width);
  std::uint32_t decrypt_payload(std::uint32_t cipher, int width);

  /// Whole-field wrappers: validate the width against the kind, then
  /// extract / transform / replace.
  std::uint32_t encrypt_site(const FlcKind& kind, std::uint32_t field, int width,
                             bool signs_only = false);
  std::uint32_t decrypt_site(const FlcKind& kind, std::uint32_t field, int width,
                             bool signs_only = false);

 private:
  void reset();
  std::uint32_t cfb_keystream(int n);

  CipherConfig config_;
  Key key_;
  Uid uid_;
  std::uint32_t gop_ = 0;
  GeneratorFactory factory_;
  std::unique_ptr<WordGenerator> gen_;
  std::uint64_t buffer_ = 0;
  int buffered_ = 0;
  std::uint64_t counter_ = 0;
  std::uint64_t register_ = 0;
  std::uint64_t cfb_key_ = 0;
};

/// Invertible permutation of `width`-bit values (1..64): four unbalanced
/// Feistel rounds keyed by `round_keys`.
std::uint64_t feistel_encrypt(std::uint64_t value, int width,
                              const std::array<std::uint64_t, 4>& round_keys);
std::uint64_t feistel_decrypt(std::uint64_t value, int width,
                              const std::array<std::uint64_t, 4>& round_keys);

// Concatenates payloads MSB-first into n-bit blocks and permutes each block.
// A trailing partial block of k bits is permuted at width k on flush.
class CascadeCipher {
 public:
  CascadeCipher(CipherState& state, bool decrypt);

  /// Queues a payload. Returns ids whose final values became available.
  std::vector<std::size_t> push(std::size_t id, Payload payload);
  std::vector<std::size_t> flush();
  /// Removes and returns the transformed payload of a completed id.
  Payload take(std::size_t id);
  std::size_t pending_bits() const noexcept { return bits_.size(); }

 private:
  void process(std::size_t count, std::vector<std::size_t>& ready);

  struct Entry {
    std::size_t id;
    int width;
    std::uint32_t value = 0;
    int filled = 0;
  };
  CipherState& state_;
  bool decrypt_;
  std::size_t n_;
  std::deque<std::uint8_t> bits_;  // queued input bits
  std::deque<Entry> entries_;      // payloads not yet fully transformed
  std::unordered_map<std::size_t, Payload> done_;
};

/// Convenience for tests: runs a whole queue through a fresh cascade.
std::vector<Payload> cascade_transform(CipherState& state, const std::vector<Payload>& payloads,
                                       bool decrypt);

}  // namespace pvea
