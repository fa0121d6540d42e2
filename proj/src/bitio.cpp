#include "pvea/bitio.hpp"

#include <string>

namespace pvea {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::out_of_bounds: return "OutOfBounds";
    case Errc::value_too_wide: return "ValueTooWide";
    case Errc::syntax_error: return "SyntaxError";
    case Errc::unsupported_stream: return "UnsupportedStream";
    case Errc::unencodable_value: return "UnencodableValue";
    case Errc::width_mismatch: return "WidthMismatch";
    case Errc::mode_mismatch: return "ModeMismatch";
    case Errc::already_provisioned: return "AlreadyProvisioned";
    case Errc::missing_uid: return "MissingUid";
    case Errc::schedule_out_of_range: return "ScheduleOutOfRange";
    case Errc::not_intra_picture: return "NotIntraPicture";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::io_failure: return "IoFailure";
    case Errc::degenerate_input: return "DegenerateInput";
    case Errc::inconsistent_pairs: return "InconsistentPairs";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

void check_width(int n) {
  if (n < 1 || n > 32) {
    throw Error(Errc::invalid_argument, "bit count " + std::to_string(n) + " outside 1..32");
  }
}

// Caller guarantees offset + n <= 8 * buffer.size().
std::uint32_t extract(std::span<const std::uint8_t> buffer, std::uint64_t offset, int n) {
  std::uint64_t acc = 0;
  std::uint64_t byte = offset >> 3;
  const int skip = static_cast<int>(offset & 7);
  const int span_bits = skip + n;
  const int span_bytes = (span_bits + 7) / 8;  // at most 5
  for (int i = 0; i < span_bytes; ++i) {
    acc = (acc << 8) | buffer[byte + i];
  }
  acc >>= span_bytes * 8 - span_bits;
  return static_cast<std::uint32_t>(acc & ((std::uint64_t{1} << n) - 1));
}

}  // namespace

BitCursor::BitCursor(std::span<const std::uint8_t> buffer, std::uint64_t pos) : buffer_(buffer) {
  seek(pos);
}

std::uint32_t BitCursor::peek_bits(int n) const {
  check_width(n);
  if (pos_ + static_cast<std::uint64_t>(n) > size_bits()) {
    throw Error(Errc::out_of_bounds, "read of " + std::to_string(n) + " bits at bit " +
                                         std::to_string(pos_) + " passes end of buffer");
  }
  return extract(buffer_, pos_, n);
}

std::uint32_t BitCursor::peek_bits_padded(int n) const {
  check_width(n);
  const std::uint64_t left = bits_left();
  if (left >= static_cast<std::uint64_t>(n)) return extract(buffer_, pos_, n);
  if (left == 0) return 0;
  const int have = static_cast<int>(left);
  return extract(buffer_, pos_, have) << (n - have);
}

std::uint32_t BitCursor::read_bits(int n) {
  const std::uint32_t v = peek_bits(n);
  pos_ += static_cast<std::uint64_t>(n);
  return v;
}

void BitCursor::skip_bits(std::uint64_t n) {
  if (n > bits_left()) {
    throw Error(Errc::out_of_bounds, "skip passes end of buffer");
  }
  pos_ += n;
}

void BitCursor::seek(std::uint64_t pos) {
  if (pos > size_bits()) {
    throw Error(Errc::out_of_bounds, "seek to bit " + std::to_string(pos) + " past end");
  }
  pos_ = pos;
}

void BitCursor::align_to_byte() {
  const std::uint64_t aligned = (pos_ + 7) & ~std::uint64_t{7};
  seek(aligned);
}

void apply_patch(std::span<std::uint8_t> buffer, const BitPatch& patch) {
  check_width(patch.length);
  if (patch.length < 32 && patch.value >> patch.length != 0) {
    throw Error(Errc::value_too_wide, std::to_string(patch.value) + " does not fit in " +
                                          std::to_string(patch.length) + " bits");
  }
  if (patch.offset + static_cast<std::uint64_t>(patch.length) > buffer.size() * 8) {
    throw Error(Errc::out_of_bounds, "patch at bit " + std::to_string(patch.offset) + " passes end");
  }
  std::uint64_t offset = patch.offset;
  int remaining = patch.length;
  while (remaining > 0) {
    const int bit_in_byte = static_cast<int>(offset & 7);
    const int take = std::min(8 - bit_in_byte, remaining);
    const int shift = 8 - bit_in_byte - take;
    const auto mask = static_cast<std::uint8_t>(((1u << take) - 1) << shift);
    const auto bits =
        static_cast<std::uint8_t>(((patch.value >> (remaining - take)) & ((1u << take) - 1)) << shift);
    std::uint8_t& b = buffer[offset >> 3];
    b = static_cast<std::uint8_t>((b & ~mask) | bits);
    offset += static_cast<std::uint64_t>(take);
    remaining -= take;
  }
}

std::uint32_t read_bits_at(std::span<const std::uint8_t> buffer, std::uint64_t offset, int length) {
  BitCursor c(buffer, offset);
  return c.read_bits(length);
}

std::optional<StartCode> next_start_code(BitCursor& cursor) {
  const auto buf = cursor.buffer();
  std::uint64_t i = (cursor.pos() + 7) >> 3;
  while (i + 3 < buf.size()) {
    if (buf[i + 2] > 1) {
      i += 3;
    } else if (buf[i] == 0 && buf[i + 1] == 0 && buf[i + 2] == 1) {
      cursor.seek((i + 4) * 8);
      return StartCode{buf[i + 3], i};
    } else {
      ++i;
    }
  }
  cursor.seek(cursor.size_bits());
  return std::nullopt;
}

void BitWriter::put_bits(std::uint32_t value, int n) {
  for (int i = n - 1; i >= 0; --i) {
    if ((bits_ & 7) == 0) bytes_.push_back(0);
    if ((value >> i) & 1u) {
      bytes_.back() = static_cast<std::uint8_t>(bytes_.back() | (0x80u >> (bits_ & 7)));
    }
    ++bits_;
  }
}

void BitWriter::put_code(const char* code) {
  for (const char* p = code; *p != '\0'; ++p) {
    if (*p == '0' || *p == '1') put_bits(*p == '1' ? 1u : 0u, 1);
  }
}

void BitWriter::put_start_code(std::uint8_t code) {
  align_zero();
  put_bits(0x000001, 24);
  put_bits(code, 8);
}

void BitWriter::align_zero() {
  while ((bits_ & 7) != 0) put_bits(0, 1);
}

}  // namespace pvea
