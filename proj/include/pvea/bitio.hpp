#pragma once

// Bit-granular access to byte buffers. Bits are numbered MSB-first inside each
// byte, which is the MPEG bitstream order: bit offset 0 is the top bit of
// byte 0.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pvea/error.hpp"

namespace pvea {

class BitCursor {
 public:
  BitCursor() = default;
  explicit BitCursor(std::span<const std::uint8_t> buffer, std::uint64_t pos = 0);

  /// Reads `n` (1..32) bits big-endian and advances. Throws OutOfBounds
  /// when fewer than `n` bits remain; the position is left untouched then.
  std::uint32_t read_bits(int n);
  std::uint32_t peek_bits(int n) const;
  /// Like peek_bits but pads past-the-end bits with zeros.
  std::uint32_t peek_bits_padded(int n) const;
  bool read_flag() { return read_bits(1) != 0; }
  void skip_bits(std::uint64_t n);

  std::uint64_t pos() const noexcept { return pos_; }
  void seek(std::uint64_t pos);
  std::uint64_t size_bits() const noexcept { return buffer_.size() * 8; }
  std::uint64_t bits_left() const noexcept { return size_bits() - pos_; }
  bool byte_aligned() const noexcept { return (pos_ & 7) == 0; }
  void align_to_byte();
  std::span<const std::uint8_t> buffer() const noexcept { return buffer_; }

 private:
  std::span<const std::uint8_t> buffer_;
  std::uint64_t pos_ = 0;
};

struct BitPatch {
  std::uint64_t offset = 0;
  int length = 0;  // 1..32
  std::uint32_t value = 0;
};

/// Overwrites `patch.length` bits at `patch.offset`; nothing else changes.
void apply_patch(std::span<std::uint8_t> buffer, const BitPatch& patch);

/// Random-access read without a cursor.
std::uint32_t read_bits_at(std::span<const std::uint8_t> buffer, std::uint64_t offset, int length);

struct StartCode {
  std::uint8_t code = 0;
  std::uint64_t byte_offset = 0;
};

/// Finds the first byte-aligned 00 00 01 xx at or after the cursor (rounded
/// up to a byte boundary) and leaves the cursor just past the xx byte.
/// Returns nullopt at end of stream; the cursor then sits at the end.
std::optional<StartCode> next_start_code(BitCursor& cursor);

// Append-only MSB-first writer used to assemble streams.
class BitWriter {
 public:
  void put_bits(std::uint32_t value, int n);
  /// Writes a codeword given as a string of '0'/'1' characters; spaces are
  /// ignored.
  void put_code(const char* code);
  void put_start_code(std::uint8_t code);
  void align_zero();
  std::uint64_t pos() const noexcept { return bits_; }
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bits_ = 0;
};

}  // namespace pvea
