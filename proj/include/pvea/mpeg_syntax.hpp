#pragma once

// Block-layer parser for MPEG-1 video elementary streams (ISO/IEC 11172-2).
//
// VLCs are decoded exactly, but only far enough to find and classify every
// FLC the cipher may touch: no IDCT, no motion compensation. Pixel
// reconstruction hooks in through SyntaxVisitor (see decoder.hpp).

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pvea/bitio.hpp"
#include "pvea/flc.hpp"

namespace pvea {

inline constexpr std::uint8_t kPictureStartCode = 0x00;
inline constexpr std::uint8_t kSliceStartFirst = 0x01;
inline constexpr std::uint8_t kSliceStartLast = 0xAF;
inline constexpr std::uint8_t kUserDataStartCode = 0xB2;
inline constexpr std::uint8_t kSequenceHeaderCode = 0xB3;
inline constexpr std::uint8_t kSequenceErrorCode = 0xB4;
inline constexpr std::uint8_t kExtensionStartCode = 0xB5;
inline constexpr std::uint8_t kSequenceEndCode = 0xB7;
inline constexpr std::uint8_t kGroupStartCode = 0xB8;

using QuantMatrix = std::array<std::uint8_t, 64>;  // natural (row-major) order

extern const QuantMatrix kDefaultIntraMatrix;
extern const QuantMatrix kDefaultNonIntraMatrix;
/// kZigzag[i] is the row-major position of the i-th coefficient in scan order.
extern const std::array<std::uint8_t, 64> kZigzag;

struct SequenceInfo {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint8_t aspect_ratio = 0;
  std::uint8_t picture_rate = 0;
  std::uint32_t bit_rate = 0;
  std::uint32_t vbv_buffer_size = 0;
  bool constrained = false;
  QuantMatrix intra_matrix = kDefaultIntraMatrix;
  QuantMatrix non_intra_matrix = kDefaultNonIntraMatrix;
  std::uint64_t byte_offset = 0;

  std::uint32_t mb_width() const { return (width + 15) / 16; }
  std::uint32_t mb_height() const { return (height + 15) / 16; }
};

struct GopInfo {
  std::uint64_t byte_offset = 0;
  std::uint32_t time_code = 0;
  bool closed = false;
  bool broken_link = false;
};

struct PictureInfo {
  std::uint64_t byte_offset = 0;  // of the picture start code
  std::uint64_t end_byte = 0;     // first byte after the picture's payload
  std::uint32_t gop_index = 0;
  PictureType type = PictureType::I;
  std::uint32_t temporal_reference = 0;
  int forward_f_code = 0;  // 0 when absent
  int backward_f_code = 0;
  bool full_pel_forward = false;
  bool full_pel_backward = false;
  std::size_t first_site = 0;
  std::size_t site_count = 0;
  std::size_t first_slice = 0;
  std::size_t slice_count = 0;
};

struct SliceInfo {
  std::uint64_t byte_offset = 0;
  std::uint32_t picture_index = 0;
  int vertical_position = 1;
  int quantizer_scale = 1;
};

struct UserDataSegment {
  std::uint64_t byte_offset = 0;  // of the 0x000001B2 start code
  std::vector<std::uint8_t> payload;
};

struct StreamMap {
  SequenceInfo sequence;
  std::vector<GopInfo> gops;
  std::vector<PictureInfo> pictures;
  std::vector<SliceInfo> slices;
  std::vector<UserDataSegment> user_data;
  std::vector<FlcSite> sites;
  std::uint64_t total_bits = 0;
};

struct MotionVectorCode {
  int code = 0;            // -16..16
  std::uint32_t residual = 0;
  int r_size = 0;          // residual bit count, 0 when not coded
};

struct MacroblockData {
  std::uint32_t picture_index = 0;
  std::uint32_t slice_index = 0;
  std::uint32_t address = 0;
  int type_flags = 0;
  bool intra = false;
  int quantizer_scale = 1;
  /// Address of the previously coded macroblock in the slice, or -1 at the
  /// start of a slice; intra DC prediction resets when the gap exceeds one.
  std::int64_t previous_address = -1;
  std::optional<std::array<MotionVectorCode, 2>> forward;   // horizontal, vertical
  std::optional<std::array<MotionVectorCode, 2>> backward;
  int coded_block_pattern = 0;
};

struct RunLevel {
  int run = 0;
  int level = 0;
  bool operator==(const RunLevel&) const = default;
};

struct BlockData {
  int block_index = 0;  // 0..3 luma, 4 Cb, 5 Cr
  bool intra = false;
  int dc_size = 0;
  int dc_differential = 0;
  std::vector<RunLevel> events;  // AC events for intra blocks, all for non-intra
};

// Receives parse events in stream order. Sites are reported after their bits
// have been consumed, so a visitor may patch them in place.
class SyntaxVisitor {
 public:
  virtual ~SyntaxVisitor() = default;
  virtual void on_site(const FlcSite& /*site*/) {}
  virtual void on_macroblock(const MacroblockData& /*mb*/) {}
  virtual void on_block(const MacroblockData& /*mb*/, const BlockData& /*block*/) {}
};

/// Parses a whole elementary stream. Throws SyntaxError on malformed input and
/// UnsupportedStream for MPEG-2 extensions or D-pictures.
StreamMap parse_stream(std::span<const std::uint8_t> bytes, SyntaxVisitor* visitor = nullptr);

/// Re-walks one picture of an already parsed stream, reporting to `visitor`.
void walk_picture(std::span<const std::uint8_t> bytes, const StreamMap& map,
                  std::uint32_t picture_index, SyntaxVisitor& visitor);

int decode_dct_dc_size(BitCursor& cursor, Component component);

struct CoeffToken {
  bool end_of_block = false;
  int run = 0;
  int level = 0;
  std::optional<std::uint64_t> sign_offset;  // table-coded events
  std::optional<std::uint64_t> escape_offset;  // escape-coded events
  int escape_width = 0;
};

/// Decodes one run/level event or end_of_block. `first_coeff` selects the
/// first-coefficient table of non-intra blocks.
CoeffToken decode_run_level(BitCursor& cursor, bool first_coeff);

struct Census {
  std::array<std::size_t, kKindCount> per_kind{};
  std::array<std::size_t, kCategoryCount> per_category{};
  std::vector<std::size_t> per_picture;  // N, all kinds
  std::vector<std::array<std::size_t, kCategoryCount>> per_picture_category;
  std::size_t total() const;
};

Census census(const StreamMap& map);

}  // namespace pvea
