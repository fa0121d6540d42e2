#pragma once

// Entropy-coder-only MPEG-1 stream assembler: takes quantized coefficients
// and motion codes as given, writes the VLC/FLC syntax, and records every FLC
// site it emits.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pvea/flc.hpp"

namespace pvea {

struct ForgeEvent {
  int run = 0;
  int level = 1;
  bool force_escape = false;  // use ESCAPE even when a table code exists
};

struct ForgeBlock {
  int dc_size = 0;  // intra blocks only
  std::uint32_t dc_bits = 0;
  std::vector<ForgeEvent> events;
};

struct ForgeMotionAxis {
  int code = 0;  // -16..16
  std::uint32_t residual = 0;
};
using ForgeMotion = std::array<ForgeMotionAxis, 2>;  // horizontal, vertical

struct ForgeMacroblock {
  int address_increment = 1;
  bool intra = false;
  std::optional<int> quantizer_scale;  // emits macroblock_quant
  std::optional<ForgeMotion> forward;
  std::optional<ForgeMotion> backward;
  /// Intra macroblocks code all six blocks; a missing entry is an empty block.
  std::array<std::optional<ForgeBlock>, 6> blocks;
};

struct ForgeSlice {
  int vertical_position = 0;  // 0 = slice number within the picture, plus one
  int quantizer_scale = 8;
  std::vector<ForgeMacroblock> macroblocks;
};

struct ForgePicture {
  PictureType type = PictureType::I;
  int forward_f_code = 1;
  int backward_f_code = 1;
  bool new_gop = false;  // the first picture always opens a GOP
  std::vector<ForgeSlice> slices;
};

struct ForgeSpec {
  std::uint32_t width = 16;
  std::uint32_t height = 16;
  std::vector<ForgePicture> pictures;
};

struct ForgeResult {
  std::vector<std::uint8_t> bytes;
  std::vector<FlcSite> sites;
};

/// Throws UnencodableValue for anything the MPEG-1 tables cannot express.
ForgeResult forge_stream(const ForgeSpec& spec);

/// Intra pictures whose blocks all use dct_dc_size 0, so they carry no intra
/// DC sites at all.
ForgeSpec dark_fixture_spec();
std::vector<std::uint8_t> forge_dark_fixture();

}  // namespace pvea
