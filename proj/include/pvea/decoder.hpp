#pragma once

// I-picture reconstruction (dequantization + floating-point IDCT) so that the
// visual effect of encryption can be measured. No motion compensation.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pvea/mpeg_syntax.hpp"

namespace pvea {

struct Plane {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> samples;  // row-major

  Plane() = default;
  Plane(std::uint32_t w, std::uint32_t h, std::uint8_t fill = 0)
      : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {}
  std::uint8_t& at(std::uint32_t x, std::uint32_t y) { return samples[std::size_t{y} * width + x]; }
  std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return samples[std::size_t{y} * width + x]; }
  bool operator==(const Plane&) const = default;
};

// 4:2:0 frame; chroma planes are half size, rounded up.
struct Frame {
  Plane y;
  Plane cb;
  Plane cr;
};

/// Row-major 8x8 block, index v * 8 + u for coefficients, y * 8 + x for samples.
using Block8 = std::array<double, 64>;

/// Orthonormal 2-D inverse DCT, computed as row then column passes.
Block8 idct_8x8(const Block8& coeffs);

/// Reconstructed level of an intra AC coefficient: (2 * level * qs * w) / 16
/// truncated, made odd toward zero, clipped to [-2048, 2047].
int dequantize_intra(int level, int quantizer_scale, int weight);
/// Non-intra rule: ((2 * level + sign) * qs * w) / 16 with the same
/// oddification and clipping.
int dequantize_non_intra(int level, int quantizer_scale, int weight);

/// Throws NotIntraPicture for P/B pictures.
Frame decode_i_picture(std::span<const std::uint8_t> bytes, const StreamMap& map,
                       std::uint32_t picture_index);

/// 10 log10(255^2 / MSE); +infinity for identical planes. DimensionMismatch
/// when sizes differ.
double psnr(const Plane& a, const Plane& b);

void write_pgm(const Plane& plane, const std::string& path);
/// Nearest-neighbour chroma upsampling and a full-range BT.601 matrix.
void write_ppm(const Frame& frame, const std::string& path);
Plane read_pgm(const std::string& path);
std::string encode_pgm(const Plane& plane);

}  // namespace pvea
