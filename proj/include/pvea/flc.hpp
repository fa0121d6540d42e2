#pragma once

// Fixed-length codewords (FLCs) that the perceptual cipher may touch. Every
// other bit of the stream (start codes, headers, VLCs, stuffing) is left
// alone, which is what keeps the ciphertext decodable and the same size.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace pvea {

enum class Component : std::uint8_t { luma, chroma };
enum class Axis : std::uint8_t { horizontal, vertical };
enum class PictureType : std::uint8_t { I = 1, P = 2, B = 3 };

struct IntraDcDiff {
  int dc_size = 1;  // 1..8; size 0 carries no bits and is never a site
  Component component = Component::luma;
  bool operator==(const IntraDcDiff&) const = default;
};

struct CoeffSign {
  bool intra = false;
  bool is_dc_nonintra = false;
  bool operator==(const CoeffSign&) const = default;
};

// 8-bit levels cover |L| <= 127; the 16-bit form is the 0x00/0x80 prefix plus
// an extension byte and covers 128 <= |L| <= 255.
struct EscapeLevel {
  int width = 8;
  bool operator==(const EscapeLevel&) const = default;
};

// Trailing sign bit of a nonzero motion_code VLC.
struct MvSign {
  Axis axis = Axis::horizontal;
  bool operator==(const MvSign&) const = default;
};

struct MvResidual {
  int r_size = 1;  // 1..6
  Axis axis = Axis::horizontal;
  bool operator==(const MvResidual&) const = default;
};

using FlcKind = std::variant<IntraDcDiff, CoeffSign, EscapeLevel, MvSign, MvResidual>;

/// Index of the kind in FlcKind (0..4), usable for census arrays.
inline int kind_index(const FlcKind& kind) { return static_cast<int>(kind.index()); }
inline constexpr int kKindCount = 5;
const char* kind_name(int kind_index);

/// Bit length implied by the kind: dc_size, 1, width, 1, r_size.
int bit_length(const FlcKind& kind);

enum class Category : std::uint8_t { sr = 0, sd = 1, mv = 2 };
inline constexpr int kCategoryCount = 3;
const char* category_name(Category c);
/// IntraDcDiff -> sr; CoeffSign, EscapeLevel -> sd; MvSign, MvResidual -> mv.
Category category_of(const FlcKind& kind);

struct FlcSite {
  FlcKind kind;
  std::uint64_t bit_offset = 0;
  int bit_length = 0;
  std::uint32_t gop_index = 0;
  std::uint32_t picture_index = 0;
  PictureType picture_type = PictureType::I;
  std::uint32_t slice_index = 0;
  std::uint32_t macroblock_address = 0;
  std::optional<int> block_index;  // none for motion vector sites
  bool macroblock_intra = false;

  bool operator==(const FlcSite&) const = default;
};

std::string describe(const FlcSite& site);

// Interpretation of the level field of an ESCAPE event.
int decode_escape_level(std::uint32_t field, int width);
/// Canonical MPEG-1 encoding; throws UnencodableValue when the level does not
/// belong to the width class (0, |L| > 255, or wrong class).
std::uint32_t encode_escape_level(int level, int width);
/// 8 for 1 <= |L| <= 127, 16 for 128 <= |L| <= 255.
int escape_width_for(int level);

/// Signed differential carried by `size` intra DC bits (MSB set = positive).
int dc_differential_value(std::uint32_t bits, int size);
std::uint32_t dc_differential_bits(int value, int size);
/// Smallest size able to carry `value` (0 for value 0).
int dc_size_for(int value);

}  // namespace pvea
