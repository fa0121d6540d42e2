#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pvea/attacks.hpp"
#include "pvea/decoder.hpp"
#include "pvea/engine.hpp"
#include "pvea/forge.hpp"

namespace pvea::testing {

using Rng = std::mt19937_64;

/// Up to 4 pictures (first is I), up to 10 macroblocks per slice, up to 8
/// coefficient events per block; covers escapes, quantizer changes, skips
/// and both motion directions.
ForgeSpec random_forge_spec(Rng& rng);

/// Intra pictures encoded from smooth, textured synthetic images with a small
/// forward DCT and quantizer, so reconstructed pictures resemble the source.
std::vector<ForgeSpec> textured_fixture_specs();

/// Intra pictures whose blocks all carry dct_dc_size 1 differentials.
ForgeSpec dc_size_one_spec();

/// Smooth 2M x 2M image stretched to span exactly 0..255.
Image smooth_pd_image(Rng& rng, std::uint32_t m);

/// Direct double sum over all 64 basis functions.
Block8 idct_direct(const Block8& coeffs);

Key random_key(Rng& rng);

/// Bit offsets where the two equal-length buffers differ.
std::vector<std::uint64_t> diff_bits(const std::vector<std::uint8_t>& a,
                                     const std::vector<std::uint8_t>& b);

/// Mean luma PSNR over the I-pictures of `test` against `reference`.
double mean_i_psnr(const std::vector<std::uint8_t>& reference, const std::vector<std::uint8_t>& test);

}  // namespace pvea::testing
