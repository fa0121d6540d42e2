#include "pvea/forge.hpp"

#include <string>

#include "pvea/bitio.hpp"
#include "pvea/error.hpp"
#include "pvea/mpeg_syntax.hpp"
#include "vlc_tables.hpp"

namespace pvea {

namespace {

[[noreturn]] void unencodable(const std::string& element, const std::string& reason) {
  throw Error(Errc::unencodable_value, element + ": " + reason);
}

class Forge {
 public:
  explicit Forge(const ForgeSpec& spec) : spec_(spec) {}
  ForgeResult run();

 private:
  void sequence_header();
  void gop_header();
  void picture(const ForgePicture& p);
  void slice(const ForgePicture& p, const ForgeSlice& s, int slice_in_picture);
  void macroblock(const ForgePicture& p, const ForgeMacroblock& mb);
  void motion(const ForgeMotion& m, int f_code);
  void block(const ForgeBlock& b, int index, bool intra);
  void site(FlcKind kind, std::uint64_t offset, std::optional<int> block);

  const ForgeSpec& spec_;
  BitWriter w_;
  std::vector<FlcSite> sites_;
  std::uint32_t mb_width_ = 0;
  std::uint32_t mb_count_ = 0;
  std::uint32_t gop_index_ = 0;
  std::uint32_t picture_index_ = 0;
  std::uint32_t picture_in_gop_ = 0;
  std::uint32_t slice_index_ = 0;
  PictureType type_ = PictureType::I;
  std::int64_t address_ = -1;
  bool mb_intra_ = false;
};

void Forge::site(FlcKind kind, std::uint64_t offset, std::optional<int> block) {
  FlcSite s;
  s.bit_length = bit_length(kind);
  s.kind = kind;
  s.bit_offset = offset;
  s.gop_index = gop_index_;
  s.picture_index = picture_index_;
  s.picture_type = type_;
  s.slice_index = slice_index_;
  s.macroblock_address = static_cast<std::uint32_t>(address_);
  s.block_index = block;
  s.macroblock_intra = mb_intra_;
  sites_.push_back(s);
}

ForgeResult Forge::run() {
  if (spec_.width == 0 || spec_.height == 0 || spec_.width > 4095 || spec_.height > 4095) {
    unencodable("sequence_header", "picture size must be 1..4095");
  }
  mb_width_ = (spec_.width + 15) / 16;
  mb_count_ = mb_width_ * ((spec_.height + 15) / 16);
  sequence_header();
  for (std::size_t i = 0; i < spec_.pictures.size(); ++i) {
    const ForgePicture& p = spec_.pictures[i];
    if (i == 0 || p.new_gop) {
      if (i != 0) ++gop_index_;
      gop_header();
    }
    picture(p);
  }
  w_.put_start_code(kSequenceEndCode);
  return ForgeResult{w_.take(), std::move(sites_)};
}

void Forge::sequence_header() {
  w_.put_start_code(kSequenceHeaderCode);
  w_.put_bits(spec_.width, 12);
  w_.put_bits(spec_.height, 12);
  w_.put_bits(1, 4);   // square pels
  w_.put_bits(1, 4);   // 23.976 Hz
  w_.put_bits(1, 18);  // bit_rate
  w_.put_bits(1, 1);   // marker
  w_.put_bits(1, 10);  // vbv_buffer_size
  w_.put_bits(0, 1);   // constrained_parameters_flag
  w_.put_bits(0, 1);   // load_intra_quantizer_matrix
  w_.put_bits(0, 1);   // load_non_intra_quantizer_matrix
}

void Forge::gop_header() {
  w_.put_start_code(kGroupStartCode);
  w_.put_bits(1u << 12, 25);  // time_code 00:00:00:00 with its marker bit
  w_.put_bits(1, 1);          // closed_gop
  w_.put_bits(0, 1);          // broken_link
  picture_in_gop_ = 0;
}

void Forge::picture(const ForgePicture& p) {
  type_ = p.type;
  if (p.slices.empty()) unencodable("picture", "needs at least one slice");
  for (int f : {p.forward_f_code, p.backward_f_code}) {
    if (f < 1 || f > 7) unencodable("f_code", std::to_string(f) + " outside 1..7");
  }
  w_.put_start_code(kPictureStartCode);
  w_.put_bits(picture_in_gop_ & 0x3FF, 10);
  w_.put_bits(static_cast<std::uint32_t>(p.type), 3);
  w_.put_bits(0xFFFF, 16);
  if (p.type != PictureType::I) {
    w_.put_bits(0, 1);
    w_.put_bits(static_cast<std::uint32_t>(p.forward_f_code), 3);
  }
  if (p.type == PictureType::B) {
    w_.put_bits(0, 1);
    w_.put_bits(static_cast<std::uint32_t>(p.backward_f_code), 3);
  }
  w_.put_bits(0, 1);  // extra_bit_picture
  for (std::size_t i = 0; i < p.slices.size(); ++i) slice(p, p.slices[i], static_cast<int>(i));
  ++picture_index_;
  ++picture_in_gop_;
}

void Forge::slice(const ForgePicture& p, const ForgeSlice& s, int slice_in_picture) {
  const int vp = s.vertical_position != 0 ? s.vertical_position : slice_in_picture + 1;
  const auto mb_height = static_cast<int>(mb_count_ / mb_width_);
  if (vp < 1 || vp > mb_height || vp > kSliceStartLast) {
    unencodable("slice", "vertical position " + std::to_string(vp) + " outside picture");
  }
  if (s.quantizer_scale < 1 || s.quantizer_scale > 31) {
    unencodable("quantizer_scale", std::to_string(s.quantizer_scale) + " outside 1..31");
  }
  if (s.macroblocks.empty()) unencodable("slice", "needs at least one macroblock");
  w_.put_start_code(static_cast<std::uint8_t>(vp));
  w_.put_bits(static_cast<std::uint32_t>(s.quantizer_scale), 5);
  w_.put_bits(0, 1);  // extra_bit_slice
  address_ = static_cast<std::int64_t>(vp - 1) * mb_width_ - 1;
  for (std::size_t i = 0; i < s.macroblocks.size(); ++i) {
    const ForgeMacroblock& mb = s.macroblocks[i];
    if (mb.address_increment < 1) unencodable("macroblock_address_increment", "must be >= 1");
    if (p.type == PictureType::I && i > 0 && mb.address_increment != 1) {
      unencodable("macroblock_address_increment", "I-pictures cannot skip macroblocks");
    }
    address_ += mb.address_increment;
    if (address_ >= static_cast<std::int64_t>(mb_count_)) {
      unencodable("macroblock_address", std::to_string(address_) + " outside picture");
    }
    int inc = mb.address_increment;
    while (inc > 33) {
      w_.put_code(vlc::address_increment_code(vlc::kAddressEscape));
      inc -= 33;
    }
    w_.put_code(vlc::address_increment_code(inc));
    macroblock(p, mb);
  }
  ++slice_index_;
}

void Forge::motion(const ForgeMotion& m, int f_code) {
  const int r_size = f_code - 1;
  for (int axis = 0; axis < 2; ++axis) {
    const ForgeMotionAxis& a = m[axis];
    const Axis ax = axis == 0 ? Axis::horizontal : Axis::vertical;
    const char* code = vlc::motion_code(a.code);
    if (code == nullptr) unencodable("motion_code", std::to_string(a.code) + " outside -16..16");
    w_.put_code(code);
    if (a.code != 0) site(MvSign{ax}, w_.pos() - 1, std::nullopt);
    if (r_size > 0 && a.code != 0) {
      if (a.residual >> r_size != 0) {
        unencodable("motion_r", std::to_string(a.residual) + " wider than " +
                                    std::to_string(r_size) + " bits");
      }
      site(MvResidual{r_size, ax}, w_.pos(), std::nullopt);
      w_.put_bits(a.residual, r_size);
    } else if (a.residual != 0) {
      unencodable("motion_r", "residual present but not coded");
    }
  }
}

void Forge::macroblock(const ForgePicture& p, const ForgeMacroblock& mb) {
  mb_intra_ = mb.intra;
  if (p.type == PictureType::I && !mb.intra) unencodable("macroblock_type", "I-pictures are all intra");
  int cbp = 0;
  for (int i = 0; i < 6; ++i) {
    if (mb.blocks[i]) cbp |= 0x20 >> i;
  }
  std::optional<ForgeMotion> forward = mb.forward;
  std::optional<ForgeMotion> backward = mb.backward;
  int flags = 0;
  if (mb.intra) {
    if (forward || backward) unencodable("macroblock_type", "intra macroblocks carry no motion");
    flags = vlc::kMbIntra;
  } else {
    if (p.type == PictureType::P && backward) unencodable("macroblock_type", "backward motion in P-picture");
    if (!forward && !backward && (p.type == PictureType::B || cbp == 0)) forward = ForgeMotion{};
    if (forward) flags |= vlc::kMbForward;
    if (backward) flags |= vlc::kMbBackward;
    if (cbp != 0) flags |= vlc::kMbPattern;
  }
  if (mb.quantizer_scale) flags |= vlc::kMbQuant;
  const char* type_code = vlc::mb_type_code(p.type, flags);
  if (type_code == nullptr) {
    unencodable("macroblock_type", "no code for this combination (quant needs coded blocks)");
  }
  w_.put_code(type_code);
  if (mb.quantizer_scale) {
    if (*mb.quantizer_scale < 1 || *mb.quantizer_scale > 31) {
      unencodable("quantizer_scale", std::to_string(*mb.quantizer_scale) + " outside 1..31");
    }
    w_.put_bits(static_cast<std::uint32_t>(*mb.quantizer_scale), 5);
  }
  if (forward) motion(*forward, p.forward_f_code);
  if (backward) motion(*backward, p.backward_f_code);
  if (!mb.intra && cbp != 0) w_.put_code(vlc::cbp_code(cbp));
  static const ForgeBlock kEmpty;
  for (int i = 0; i < 6; ++i) {
    if (mb.intra) {
      block(mb.blocks[i] ? *mb.blocks[i] : kEmpty, i, true);
    } else if (mb.blocks[i]) {
      block(*mb.blocks[i], i, false);
    }
  }
}

void Forge::block(const ForgeBlock& b, int index, bool intra) {
  int pos = 0;
  if (intra) {
    const Component comp = index < 4 ? Component::luma : Component::chroma;
    if (b.dc_size < 0 || b.dc_size > 8) unencodable("dct_dc_size", std::to_string(b.dc_size));
    if (b.dc_size == 0 ? b.dc_bits != 0 : (b.dc_bits >> b.dc_size) != 0) {
      unencodable("dct_dc_differential", "bits wider than dct_dc_size");
    }
    w_.put_code(vlc::dc_size_code(comp, b.dc_size));
    if (b.dc_size > 0) {
      site(IntraDcDiff{b.dc_size, comp}, w_.pos(), index);
      w_.put_bits(b.dc_bits, b.dc_size);
    }
    pos = 1;
  } else {
    if (b.dc_size != 0) unencodable("dct_dc_size", "non-intra blocks have no DC size");
    if (b.events.empty()) unencodable("block", "coded non-intra block needs a coefficient");
  }
  bool first = !intra;
  for (const ForgeEvent& e : b.events) {
    const int mag = e.level < 0 ? -e.level : e.level;
    if (e.level == 0 || mag > 255) unencodable("level", std::to_string(e.level) + " outside +-1..255");
    if (e.run < 0 || pos + e.run > 63) unencodable("run", std::to_string(e.run) + " runs past the block");
    pos += e.run + 1;
    const char* code = e.force_escape ? nullptr : vlc::coeff_code(e.run, mag, first);
    if (code != nullptr) {
      w_.put_code(code);
      site(CoeffSign{intra, !intra && pos == 1}, w_.pos(), index);
      w_.put_bits(e.level < 0 ? 1 : 0, 1);
    } else {
      w_.put_code(vlc::kEscapeCode);
      w_.put_bits(static_cast<std::uint32_t>(e.run), 6);
      const int width = escape_width_for(e.level);
      site(EscapeLevel{width}, w_.pos(), index);
      w_.put_bits(encode_escape_level(e.level, width), width);
    }
    first = false;
  }
  w_.put_code(vlc::kEndOfBlockCode);
}

}  // namespace

ForgeResult forge_stream(const ForgeSpec& spec) { return Forge(spec).run(); }

ForgeSpec dark_fixture_spec() {
  ForgeSpec spec;
  spec.width = 48;
  spec.height = 32;
  for (int pic = 0; pic < 2; ++pic) {
    ForgePicture p;
    p.type = PictureType::I;
    p.new_gop = pic > 0;
    for (int row = 0; row < 2; ++row) {
      ForgeSlice s;
      s.quantizer_scale = 4;
      for (int col = 0; col < 3; ++col) {
        ForgeMacroblock mb;
        mb.intra = true;
        for (int b = 0; b < 6; ++b) {
          ForgeBlock blk;
          const int k = (pic * 7 + row * 5 + col * 3 + b) % 4;
          if (b < 4 && k != 0) {
            blk.events.push_back({k - 1, (k % 2 == 0) ? 2 : -1, false});
            blk.events.push_back({0, k == 3 ? -1 : 1, false});
          }
          mb.blocks[b] = blk;
        }
        s.macroblocks.push_back(mb);
      }
      p.slices.push_back(s);
    }
    spec.pictures.push_back(p);
  }
  return spec;
}

std::vector<std::uint8_t> forge_dark_fixture() { return forge_stream(dark_fixture_spec()).bytes; }

}  // namespace pvea
