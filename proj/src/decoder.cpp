#include "pvea/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pvea/error.hpp"

namespace pvea {

namespace {

const std::array<double, 64>& cosine_table() {
  static const std::array<double, 64> table = [] {
    std::array<double, 64> t{};
    const double pi = std::acos(-1.0);
    for (int x = 0; x < 8; ++x) {
      for (int u = 0; u < 8; ++u) {
        const double c = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
        t[x * 8 + u] = 0.5 * c * std::cos((2 * x + 1) * u * pi / 16.0);
      }
    }
    return t;
  }();
  return table;
}

int finish_level(int value) {
  if (value != 0 && (value & 1) == 0) value -= value > 0 ? 1 : -1;
  return std::clamp(value, -2048, 2047);
}

std::uint8_t clamp_sample(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

class IntraDecoder : public SyntaxVisitor {
 public:
  IntraDecoder(const SequenceInfo& seq)
      : seq_(seq),
        y_(seq.mb_width() * 16, seq.mb_height() * 16),
        cb_(seq.mb_width() * 8, seq.mb_height() * 8),
        cr_(seq.mb_width() * 8, seq.mb_height() * 8) {}

  void on_macroblock(const MacroblockData& mb) override {
    if (mb.previous_address < 0 || mb.address - mb.previous_address > 1 || !mb.intra) {
      pred_.fill(1024);
    }
  }

  void on_block(const MacroblockData& mb, const BlockData& block) override {
    Block8 coeffs{};
    int index = 0;
    if (block.intra) {
      const int comp = block.block_index < 4 ? 0 : block.block_index - 3;
      pred_[comp] += block.dc_differential * 8;
      coeffs[0] = std::clamp(pred_[comp], -2048, 2047);
      index = 1;
    }
    for (const RunLevel& e : block.events) {
      index += e.run;
      if (index > 63) break;
      const int pos = kZigzag[index];
      coeffs[pos] = block.intra
                        ? dequantize_intra(e.level, mb.quantizer_scale, seq_.intra_matrix[pos])
                        : dequantize_non_intra(e.level, mb.quantizer_scale, seq_.non_intra_matrix[pos]);
      ++index;
    }
    const Block8 pixels = idct_8x8(coeffs);
    const std::uint32_t mbx = mb.address % seq_.mb_width();
    const std::uint32_t mby = mb.address / seq_.mb_width();
    Plane* plane = &y_;
    std::uint32_t x0 = mbx * 16;
    std::uint32_t y0 = mby * 16;
    if (block.block_index < 4) {
      x0 += (block.block_index & 1) * 8;
      y0 += (block.block_index >> 1) * 8;
    } else {
      plane = block.block_index == 4 ? &cb_ : &cr_;
      x0 = mbx * 8;
      y0 = mby * 8;
    }
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) plane->at(x0 + x, y0 + y) = clamp_sample(pixels[y * 8 + x]);
    }
  }

  Frame frame() const {
    Frame f;
    f.y = crop(y_, seq_.width, seq_.height);
    f.cb = crop(cb_, (seq_.width + 1) / 2, (seq_.height + 1) / 2);
    f.cr = crop(cr_, (seq_.width + 1) / 2, (seq_.height + 1) / 2);
    return f;
  }

 private:
  static Plane crop(const Plane& p, std::uint32_t w, std::uint32_t h) {
    Plane out(w, h);
    for (std::uint32_t y = 0; y < h; ++y) {
      std::copy_n(p.samples.begin() + static_cast<std::ptrdiff_t>(y * p.width), w,
                  out.samples.begin() + static_cast<std::ptrdiff_t>(y * w));
    }
    return out;
  }

  const SequenceInfo& seq_;
  Plane y_;
  Plane cb_;
  Plane cr_;
  std::array<int, 3> pred_{1024, 1024, 1024};
};

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::io_failure, "write to " + path + " failed");
}

}  // namespace

Block8 idct_8x8(const Block8& coeffs) {
  if (std::all_of(coeffs.begin() + 1, coeffs.end(), [](double c) { return c == 0.0; })) {
    Block8 flat;
    flat.fill(coeffs[0] / 8.0);
    return flat;
  }
  const auto& t = cosine_table();
  Block8 rows{};
  for (int v = 0; v < 8; ++v) {
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += t[x * 8 + u] * coeffs[v * 8 + u];
      rows[v * 8 + x] = s;
    }
  }
  Block8 out{};
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += t[y * 8 + v] * rows[v * 8 + x];
      out[y * 8 + x] = s;
    }
  }
  return out;
}

int dequantize_intra(int level, int quantizer_scale, int weight) {
  return finish_level((2 * level * quantizer_scale * weight) / 16);
}

int dequantize_non_intra(int level, int quantizer_scale, int weight) {
  const int sign = level > 0 ? 1 : (level < 0 ? -1 : 0);
  return finish_level(((2 * level + sign) * quantizer_scale * weight) / 16);
}

Frame decode_i_picture(std::span<const std::uint8_t> bytes, const StreamMap& map,
                       std::uint32_t picture_index) {
  if (picture_index >= map.pictures.size()) {
    throw Error(Errc::invalid_argument, "picture " + std::to_string(picture_index) + " out of range");
  }
  if (map.pictures[picture_index].type != PictureType::I) {
    throw Error(Errc::not_intra_picture, "picture " + std::to_string(picture_index) + " is not an I-picture");
  }
  IntraDecoder dec(map.sequence);
  walk_picture(bytes, map, picture_index, dec);
  return dec.frame();
}

double psnr(const Plane& a, const Plane& b) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(Errc::dimension_mismatch, std::to_string(a.width) + "x" + std::to_string(a.height) +
                                              " vs " + std::to_string(b.width) + "x" +
                                              std::to_string(b.height));
  }
  if (a.samples.empty()) throw Error(Errc::dimension_mismatch, "empty planes");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = double(a.samples[i]) - double(b.samples[i]);
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.samples.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

std::string encode_pgm(const Plane& plane) {
  if (plane.width == 0 || plane.height == 0) throw Error(Errc::invalid_argument, "zero-sized plane");
  std::string s = "P5\n" + std::to_string(plane.width) + " " + std::to_string(plane.height) + "\n255\n";
  s.append(plane.samples.begin(), plane.samples.end());
  return s;
}

void write_pgm(const Plane& plane, const std::string& path) { write_file(path, encode_pgm(plane)); }

void write_ppm(const Frame& frame, const std::string& path) {
  const Plane& y = frame.y;
  if (y.width == 0 || y.height == 0) throw Error(Errc::invalid_argument, "zero-sized frame");
  std::string s = "P6\n" + std::to_string(y.width) + " " + std::to_string(y.height) + "\n255\n";
  for (std::uint32_t row = 0; row < y.height; ++row) {
    for (std::uint32_t col = 0; col < y.width; ++col) {
      const double luma = y.at(col, row);
      const double cb = frame.cb.at(col / 2, row / 2) - 128.0;
      const double cr = frame.cr.at(col / 2, row / 2) - 128.0;
      s += static_cast<char>(clamp_sample(luma + 1.402 * cr));
      s += static_cast<char>(clamp_sample(luma - 0.344136 * cb - 0.714136 * cr));
      s += static_cast<char>(clamp_sample(luma + 1.772 * cb));
    }
  }
  write_file(path, s);
}

Plane read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path);
  auto token = [&in, &path]() {
    std::string t;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        t += c;
        break;
      }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) t += c;
    if (t.empty()) throw Error(Errc::io_failure, path + ": truncated PGM header");
    return t;
  };
  if (token() != "P5") throw Error(Errc::io_failure, path + ": not a binary PGM");
  std::uint32_t w = 0, h = 0, maxval = 0;
  try {
    w = static_cast<std::uint32_t>(std::stoul(token()));
    h = static_cast<std::uint32_t>(std::stoul(token()));
    maxval = static_cast<std::uint32_t>(std::stoul(token()));
  } catch (const std::logic_error&) {
    throw Error(Errc::io_failure, path + ": bad PGM header");
  }
  if (maxval != 255 || w == 0 || h == 0) throw Error(Errc::io_failure, path + ": unsupported PGM");
  Plane p(w, h);
  in.read(reinterpret_cast<char*>(p.samples.data()), static_cast<std::streamsize>(p.samples.size()));
  if (in.gcount() != static_cast<std::streamsize>(p.samples.size())) {
    throw Error(Errc::io_failure, path + ": truncated PGM data");
  }
  return p;
}

}  // namespace pvea
