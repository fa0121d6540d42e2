#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pvea::testing {

namespace {

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool chance(Rng& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

int random_level(Rng& rng) {
  int mag;
  const int pick = uniform(rng, 0, 19);
  if (pick < 12) {
    mag = uniform(rng, 1, 3);
  } else if (pick < 17) {
    mag = uniform(rng, 4, 40);
  } else if (pick < 19) {
    mag = uniform(rng, 41, 127);
  } else {
    mag = uniform(rng, 128, 255);
  }
  return chance(rng, 0.5) ? -mag : mag;
}

std::vector<ForgeEvent> random_events(Rng& rng, int start, int min_events) {
  std::vector<ForgeEvent> events;
  const int count = uniform(rng, min_events, 8);
  int pos = start;
  for (int i = 0; i < count && pos <= 63; ++i) {
    ForgeEvent e;
    e.run = std::min(63 - pos, chance(rng, 0.7) ? uniform(rng, 0, 3) : uniform(rng, 0, 20));
    e.level = random_level(rng);
    e.force_escape = chance(rng, 0.05);
    pos += e.run + 1;
    events.push_back(e);
  }
  return events;
}

ForgeBlock random_intra_block(Rng& rng) {
  ForgeBlock b;
  b.dc_size = chance(rng, 0.15) ? 0 : uniform(rng, 1, 8);
  b.dc_bits = b.dc_size == 0 ? 0 : static_cast<std::uint32_t>(uniform(rng, 0, (1 << b.dc_size) - 1));
  b.events = random_events(rng, 1, 0);
  return b;
}

ForgeMotion random_motion(Rng& rng, int f_code) {
  ForgeMotion m;
  for (auto& axis : m) {
    axis.code = chance(rng, 0.2) ? 0 : uniform(rng, -16, 16);
    const int r_size = f_code - 1;
    if (axis.code != 0 && r_size > 0) axis.residual = static_cast<std::uint32_t>(uniform(rng, 0, (1 << r_size) - 1));
  }
  return m;
}

ForgeMacroblock random_macroblock(Rng& rng, const ForgePicture& p, bool force_intra) {
  ForgeMacroblock mb;
  mb.intra = force_intra || p.type == PictureType::I || chance(rng, 0.15);
  if (mb.intra) {
    for (auto& b : mb.blocks) {
      if (chance(rng, 0.85)) b = random_intra_block(rng);
    }
    if (chance(rng, 0.15)) mb.quantizer_scale = uniform(rng, 1, 31);
    return mb;
  }
  for (auto& b : mb.blocks) {
    if (chance(rng, 0.4)) {
      ForgeBlock blk;
      blk.events = random_events(rng, 0, 1);
      b = blk;
    }
  }
  const bool coded = std::any_of(mb.blocks.begin(), mb.blocks.end(), [](const auto& b) { return b.has_value(); });
  if (p.type == PictureType::P) {
    if (chance(rng, 0.75) || !coded) mb.forward = random_motion(rng, p.forward_f_code);
  } else {
    const int dir = uniform(rng, 0, 2);
    if (dir != 1) mb.forward = random_motion(rng, p.forward_f_code);
    if (dir != 0) mb.backward = random_motion(rng, p.backward_f_code);
  }
  if (coded && chance(rng, 0.15)) mb.quantizer_scale = uniform(rng, 1, 31);
  return mb;
}

}  // namespace

ForgeSpec random_forge_spec(Rng& rng) {
  ForgeSpec spec;
  spec.width = 16 * static_cast<std::uint32_t>(uniform(rng, 1, 11));
  spec.height = 16 * static_cast<std::uint32_t>(uniform(rng, 1, 3));
  if (chance(rng, 0.2)) spec.width -= static_cast<std::uint32_t>(uniform(rng, 0, 7));
  const int mb_width = static_cast<int>((spec.width + 15) / 16);
  const int mb_height = static_cast<int>((spec.height + 15) / 16);
  const int pictures = uniform(rng, 1, 4);
  for (int pi = 0; pi < pictures; ++pi) {
    ForgePicture p;
    const int t = pi == 0 ? 0 : uniform(rng, 0, 2);
    p.type = t == 0 ? PictureType::I : t == 1 ? PictureType::P : PictureType::B;
    p.forward_f_code = uniform(rng, 1, 4);
    p.backward_f_code = uniform(rng, 1, 4);
    p.new_gop = pi > 0 && p.type == PictureType::I && chance(rng, 0.5);
    for (int row = 0; row < mb_height; ++row) {
      if (row > 0 && chance(rng, 0.3)) continue;
      ForgeSlice s;
      s.vertical_position = row + 1;
      s.quantizer_scale = uniform(rng, 1, 31);
      const int count = uniform(rng, 1, std::min(10, mb_width));
      if (p.type == PictureType::I) {
        for (int i = 0; i < count; ++i) s.macroblocks.push_back(random_macroblock(rng, p, false));
      } else {
        std::vector<int> cols(static_cast<std::size_t>(mb_width));
        for (int c = 0; c < mb_width; ++c) cols[static_cast<std::size_t>(c)] = c;
        std::shuffle(cols.begin(), cols.end(), rng);
        cols.resize(static_cast<std::size_t>(count));
        std::sort(cols.begin(), cols.end());
        int prev = -1;
        bool prev_intra = false;
        for (int c : cols) {
          // Skipped B macroblocks inherit motion, so none may follow an intra one.
          const bool skip = c - prev > 1 && prev >= 0;
          ForgeMacroblock mb = random_macroblock(rng, p, false);
          if (skip && prev_intra && p.type == PictureType::B && !mb.intra) mb = random_macroblock(rng, p, true);
          mb.address_increment = c - prev;
          prev = c;
          prev_intra = mb.intra;
          s.macroblocks.push_back(mb);
        }
      }
      p.slices.push_back(std::move(s));
    }
    if (p.slices.empty()) {
      ForgeSlice s;
      s.macroblocks.push_back(random_macroblock(rng, p, p.type == PictureType::I));
      p.slices.push_back(std::move(s));
    }
    spec.pictures.push_back(std::move(p));
  }
  return spec;
}

namespace {

using Sampler = double (*)(double x, double y, int variant);

double luma_sample(double x, double y, int variant) {
  const double k = 1.0 + variant * 0.35;
  double v = 110.0 + 60.0 * std::sin(x * 0.045 * k + variant) * std::cos(y * 0.06 / k) +
             30.0 * std::sin((x + 2 * y) * 0.21 * k) + 0.4 * (x - y);
  if ((static_cast<int>(x / 24) + static_cast<int>(y / 20) + variant) % 3 == 0) v += 25.0;
  return v;
}

double cb_sample(double x, double y, int variant) { return 128.0 + 35.0 * std::sin(0.09 * x + 0.05 * y + variant); }
double cr_sample(double x, double y, int variant) { return 128.0 - 30.0 * std::cos(0.07 * y - 0.04 * x * (variant + 1)); }

Block8 forward_dct(const std::array<double, 64>& samples) {
  Block8 out{};
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(0.5) : 1.0;
      const double cv = v == 0 ? std::sqrt(0.5) : 1.0;
      double s = 0.0;
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          s += samples[y * 8 + x] * std::cos((2 * x + 1) * u * std::numbers::pi / 16) *
               std::cos((2 * y + 1) * v * std::numbers::pi / 16);
        }
      }
      out[v * 8 + u] = 0.25 * cu * cv * s;
    }
  }
  return out;
}

struct DcPredictors {
  int y = 128;
  int cb = 128;
  int cr = 128;
};

ForgeBlock encode_intra_block(const Block8& f, int qs, int& predictor) {
  ForgeBlock b;
  const int dc = std::clamp(static_cast<int>(std::lround(f[0] / 8.0)), 0, 255);
  const int diff = dc - predictor;
  predictor = dc;
  b.dc_size = dc_size_for(diff);
  b.dc_bits = b.dc_size == 0 ? 0 : dc_differential_bits(diff, b.dc_size);
  int run = 0;
  for (int i = 1; i < 64; ++i) {
    const int pos = kZigzag[i];
    const double w = kDefaultIntraMatrix[pos];
    const int level = std::clamp(static_cast<int>(std::lround(8.0 * f[pos] / (qs * w))), -255, 255);
    if (level == 0) {
      ++run;
      continue;
    }
    b.events.push_back({run, level, false});
    run = 0;
  }
  return b;
}

ForgePicture encode_intra_picture(std::uint32_t width, std::uint32_t height, int variant, int qs, bool new_gop) {
  ForgePicture p;
  p.type = PictureType::I;
  p.new_gop = new_gop;
  const std::uint32_t mbw = width / 16;
  const std::uint32_t mbh = height / 16;
  for (std::uint32_t row = 0; row < mbh; ++row) {
    ForgeSlice s;
    s.vertical_position = static_cast<int>(row + 1);
    s.quantizer_scale = qs;
    DcPredictors pred;
    for (std::uint32_t col = 0; col < mbw; ++col) {
      ForgeMacroblock mb;
      mb.intra = true;
      for (int bi = 0; bi < 6; ++bi) {
        std::array<double, 64> samples{};
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            double v;
            if (bi < 4) {
              const double px = col * 16.0 + (bi & 1) * 8 + x;
              const double py = row * 16.0 + (bi >> 1) * 8 + y;
              v = luma_sample(px, py, variant);
            } else {
              const double px = col * 8.0 + x;
              const double py = row * 8.0 + y;
              v = bi == 4 ? cb_sample(px, py, variant) : cr_sample(px, py, variant);
            }
            samples[y * 8 + x] = std::clamp(v, 0.0, 255.0);
          }
        }
        int& predictor = bi < 4 ? pred.y : bi == 4 ? pred.cb : pred.cr;
        mb.blocks[bi] = encode_intra_block(forward_dct(samples), qs, predictor);
      }
      s.macroblocks.push_back(mb);
    }
    p.slices.push_back(std::move(s));
  }
  return p;
}

}  // namespace

std::vector<ForgeSpec> textured_fixture_specs() {
  std::vector<ForgeSpec> specs;
  const std::array<std::array<std::uint32_t, 2>, 3> sizes = {{{96, 64}, {128, 96}, {80, 80}}};
  for (int v = 0; v < 3; ++v) {
    ForgeSpec spec;
    spec.width = sizes[v][0];
    spec.height = sizes[v][1];
    spec.pictures.push_back(encode_intra_picture(spec.width, spec.height, v, 4 + 2 * v, false));
    spec.pictures.push_back(encode_intra_picture(spec.width, spec.height, v + 3, 6, true));
    specs.push_back(std::move(spec));
  }
  return specs;
}

ForgeSpec dc_size_one_spec() {
  ForgeSpec spec;
  spec.width = 64;
  spec.height = 32;
  for (int pic = 0; pic < 2; ++pic) {
    ForgePicture p;
    p.type = PictureType::I;
    p.new_gop = pic > 0;
    for (int row = 0; row < 2; ++row) {
      ForgeSlice s;
      for (int col = 0; col < 4; ++col) {
        ForgeMacroblock mb;
        mb.intra = true;
        for (int b = 0; b < 6; ++b) {
          ForgeBlock blk;
          blk.dc_size = 1;
          blk.dc_bits = static_cast<std::uint32_t>((pic + row + col + b) & 1);
          if ((col + b) % 3 == 0) blk.events.push_back({1, b % 2 ? -2 : 1, false});
          mb.blocks[b] = blk;
        }
        s.macroblocks.push_back(mb);
      }
      p.slices.push_back(std::move(s));
    }
    spec.pictures.push_back(std::move(p));
  }
  return spec;
}

Image smooth_pd_image(Rng& rng, std::uint32_t m) {
  const std::uint32_t size = 2 * m;
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> freq(0.3, 1.6);
  std::uniform_real_distribution<double> amp(0.4, 1.0);
  struct Wave {
    double fx, fy, ph, a;
  };
  std::array<Wave, 3> waves{};
  for (auto& w : waves) w = {freq(rng), freq(rng), phase(rng), amp(rng)};
  const double slope_x = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  const double slope_y = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);

  std::vector<double> raw(std::size_t{size} * size);
  for (std::uint32_t y = 0; y < size; ++y) {
    for (std::uint32_t x = 0; x < size; ++x) {
      const double u = double(x) / size * 2 * std::numbers::pi;
      const double v = double(y) / size * 2 * std::numbers::pi;
      double s = slope_x * u / 4 + slope_y * v / 4;
      for (const auto& w : waves) s += w.a * std::sin(w.fx * u + w.fy * v + w.ph);
      raw[std::size_t{y} * size + x] = s;
    }
  }
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double min = *lo;
  const double span = *hi - *lo;
  Image img{size, size, std::vector<int>(raw.size())};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    img.pixels[i] = static_cast<int>(std::lround((raw[i] - min) / span * 255.0));
  }
  return img;
}

Block8 idct_direct(const Block8& coeffs) {
  Block8 out{};
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) {
        for (int u = 0; u < 8; ++u) {
          const double cu = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
          const double cv = v == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
          s += cu * cv * coeffs[v * 8 + u] * std::cos((2 * x + 1) * u * std::numbers::pi / 16) *
               std::cos((2 * y + 1) * v * std::numbers::pi / 16);
        }
      }
      out[y * 8 + x] = s / 4.0;
    }
  }
  return out;
}

Key random_key(Rng& rng) {
  Key k{};
  for (auto& b : k) b = static_cast<std::uint8_t>(rng());
  return k;
}

std::vector<std::uint64_t> diff_bits(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const std::uint8_t x = a[i] ^ b[i];
    for (int bit = 0; bit < 8; ++bit) {
      if (x & (0x80 >> bit)) out.push_back(i * 8 + static_cast<std::uint64_t>(bit));
    }
  }
  return out;
}

double mean_i_psnr(const std::vector<std::uint8_t>& reference, const std::vector<std::uint8_t>& test) {
  const StreamMap ref_map = parse_stream(reference);
  const StreamMap test_map = parse_stream(test);
  double sum = 0.0;
  int count = 0;
  for (std::uint32_t i = 0; i < ref_map.pictures.size(); ++i) {
    if (ref_map.pictures[i].type != PictureType::I) continue;
    const Frame a = decode_i_picture(reference, ref_map, i);
    const Frame b = decode_i_picture(test, test_map, i);
    sum += psnr(a.y, b.y);
    ++count;
  }
  return count == 0 ? 0.0 : sum / count;
}

}  // namespace pvea::testing
