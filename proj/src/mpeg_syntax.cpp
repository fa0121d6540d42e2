#include "pvea/mpeg_syntax.hpp"

#include <string>

#include "vlc_tables.hpp"

namespace pvea {

const QuantMatrix kDefaultIntraMatrix = {
    8,  16, 19, 22, 26, 27, 29, 34,  //
    16, 16, 22, 24, 27, 29, 34, 37,  //
    19, 22, 26, 27, 29, 34, 34, 38,  //
    22, 22, 26, 27, 29, 34, 37, 40,  //
    22, 26, 27, 29, 32, 35, 40, 48,  //
    26, 27, 29, 32, 35, 40, 48, 58,  //
    26, 27, 29, 34, 38, 46, 56, 69,  //
    27, 29, 35, 38, 46, 56, 69, 83,
};

const QuantMatrix kDefaultNonIntraMatrix = [] {
  QuantMatrix m{};
  m.fill(16);
  return m;
}();

const std::array<std::uint8_t, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,   //
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,  //
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,  //
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
};

namespace {

std::uint32_t read_field(BitCursor& c, int n, const char* what) {
  if (c.bits_left() < static_cast<std::uint64_t>(n)) {
    throw SyntaxError(c.pos(), std::string(what) + " (truncated)");
  }
  return c.read_bits(n);
}

void expect_marker(BitCursor& c, const char* what) {
  const std::uint64_t at = c.pos();
  if (read_field(c, 1, what) != 1) throw SyntaxError(at, what);
}

// next_start_code() of the standard: zero stuffing up to 00 00 01. Anything
// else between the end of an element and the next start code is an error.
std::optional<StartCode> next_start_code_strict(BitCursor& c) {
  if (!c.byte_aligned()) {
    const int pad = static_cast<int>(8 - (c.pos() & 7));
    const std::uint64_t at = c.pos();
    if (read_field(c, pad, "zero stuffing") != 0) throw SyntaxError(at, "zero stuffing bits");
  }
  const auto buf = c.buffer();
  std::uint64_t i = c.pos() >> 3;
  while (i + 3 < buf.size()) {
    if (buf[i] == 0 && buf[i + 1] == 0 && buf[i + 2] == 1) {
      c.seek((i + 4) * 8);
      return StartCode{buf[i + 3], i};
    }
    if (buf[i] != 0) throw SyntaxError(i * 8, "start code or zero stuffing");
    ++i;
  }
  for (; i < buf.size(); ++i) {
    if (buf[i] != 0) throw SyntaxError(i * 8, "start code or zero stuffing");
  }
  c.seek(c.size_bits());
  return std::nullopt;
}

bool is_slice_code(std::uint8_t code) {
  return code >= kSliceStartFirst && code <= kSliceStartLast;
}

class Walker {
 public:
  Walker(std::span<const std::uint8_t> bytes, StreamMap* map, SyntaxVisitor* visitor)
      : bytes_(bytes), cursor_(bytes), map_(map), visitor_(visitor) {}

  void parse_all();
  void walk_one(const StreamMap& map, std::uint32_t picture_index);

 private:
  void parse_sequence_header(std::uint64_t byte_offset);
  void parse_gop(std::uint64_t byte_offset);
  std::optional<StartCode> parse_user_data(std::uint64_t byte_offset);
  std::optional<StartCode> parse_picture(std::uint64_t byte_offset);
  void parse_picture_header();
  void parse_slice(std::uint8_t code, std::uint64_t byte_offset);
  void parse_macroblock();
  void parse_motion(std::array<MotionVectorCode, 2>& mv, int f_code);
  void parse_block(int block_index);
  void emit(FlcKind kind, std::uint64_t offset, std::optional<int> block);

  std::span<const std::uint8_t> bytes_;
  BitCursor cursor_;
  StreamMap* map_;
  SyntaxVisitor* visitor_;

  SequenceInfo seq_;
  bool have_sequence_ = false;
  std::uint32_t gop_count_ = 0;
  std::uint32_t picture_count_ = 0;
  std::uint32_t slice_count_ = 0;

  PictureInfo pic_;
  std::uint32_t picture_index_ = 0;
  std::uint32_t slice_index_ = 0;
  int quantizer_scale_ = 1;
  std::int64_t previous_address_ = -1;
  MacroblockData mb_;
};

void Walker::emit(FlcKind kind, std::uint64_t offset, std::optional<int> block) {
  FlcSite site;
  site.bit_length = bit_length(kind);
  site.kind = kind;
  site.bit_offset = offset;
  site.gop_index = pic_.gop_index;
  site.picture_index = picture_index_;
  site.picture_type = pic_.type;
  site.slice_index = slice_index_;
  site.macroblock_address = mb_.address;
  site.block_index = block;
  site.macroblock_intra = mb_.intra;
  if (map_ != nullptr) map_->sites.push_back(site);
  if (visitor_ != nullptr) visitor_->on_site(site);
}

void Walker::parse_all() {
  auto sc = next_start_code(cursor_);
  if (!sc || sc->code != kSequenceHeaderCode) {
    throw SyntaxError(sc ? sc->byte_offset * 8 : 0, "sequence_header_code");
  }
  for (std::uint64_t i = 0; i < sc->byte_offset; ++i) {
    if (bytes_[i] != 0) throw SyntaxError(i * 8, "sequence_header_code");
  }
  map_->total_bits = static_cast<std::uint64_t>(bytes_.size()) * 8;

  while (sc) {
    const std::uint8_t code = sc->code;
    const std::uint64_t at = sc->byte_offset;
    if (code == kSequenceHeaderCode) {
      parse_sequence_header(at);
      sc = next_start_code_strict(cursor_);
    } else if (code == kGroupStartCode) {
      parse_gop(at);
      sc = next_start_code_strict(cursor_);
    } else if (code == kUserDataStartCode) {
      sc = parse_user_data(at);
    } else if (code == kPictureStartCode) {
      sc = parse_picture(at);
    } else if (code == kSequenceEndCode) {
      sc = next_start_code_strict(cursor_);
    } else if (code == kExtensionStartCode) {
      throw Error(Errc::unsupported_stream,
                  "extension_start_code at byte " + std::to_string(at) + " (MPEG-2 stream?)");
    } else if (is_slice_code(code)) {
      throw SyntaxError(at * 8, "picture_start_code before slice");
    } else if (code == kSequenceErrorCode) {
      throw SyntaxError(at * 8, "video start code (found sequence_error_code)");
    } else {
      throw Error(Errc::unsupported_stream, "system start code 0x" + std::to_string(code) +
                                                " at byte " + std::to_string(at) +
                                                "; input must be a video elementary stream");
    }
  }
  map_->sequence = seq_;
}

void Walker::walk_one(const StreamMap& map, std::uint32_t picture_index) {
  if (picture_index >= map.pictures.size()) {
    throw Error(Errc::invalid_argument, "picture index " + std::to_string(picture_index) +
                                            " out of range");
  }
  seq_ = map.sequence;
  have_sequence_ = true;
  const PictureInfo& info = map.pictures[picture_index];
  picture_count_ = picture_index;
  slice_count_ = static_cast<std::uint32_t>(info.first_slice);
  gop_count_ = info.gop_index + 1;
  cursor_.seek((info.byte_offset + 4) * 8);
  parse_picture(info.byte_offset);
}

void Walker::parse_sequence_header(std::uint64_t byte_offset) {
  BitCursor& c = cursor_;
  SequenceInfo s;
  s.byte_offset = byte_offset;
  const std::uint64_t at = c.pos();
  s.width = read_field(c, 12, "horizontal_size");
  s.height = read_field(c, 12, "vertical_size");
  if (s.width == 0 || s.height == 0) throw SyntaxError(at, "nonzero picture size");
  s.aspect_ratio = static_cast<std::uint8_t>(read_field(c, 4, "pel_aspect_ratio"));
  if (s.aspect_ratio == 0) throw SyntaxError(at + 24, "pel_aspect_ratio != 0");
  s.picture_rate = static_cast<std::uint8_t>(read_field(c, 4, "picture_rate"));
  if (s.picture_rate == 0) throw SyntaxError(at + 28, "picture_rate != 0");
  s.bit_rate = read_field(c, 18, "bit_rate");
  expect_marker(c, "marker_bit");
  s.vbv_buffer_size = read_field(c, 10, "vbv_buffer_size");
  s.constrained = read_field(c, 1, "constrained_parameters_flag") != 0;
  for (QuantMatrix* m : {&s.intra_matrix, &s.non_intra_matrix}) {
    if (read_field(c, 1, "load_quantizer_matrix") != 0) {
      for (int i = 0; i < 64; ++i) {
        const std::uint64_t entry_at = c.pos();
        const auto v = static_cast<std::uint8_t>(read_field(c, 8, "quantizer_matrix"));
        if (v == 0) throw SyntaxError(entry_at, "nonzero quantizer_matrix entry");
        (*m)[kZigzag[i]] = v;
      }
    }
  }
  seq_ = s;
  have_sequence_ = true;
}

void Walker::parse_gop(std::uint64_t byte_offset) {
  GopInfo g;
  g.byte_offset = byte_offset;
  g.time_code = read_field(cursor_, 25, "time_code");
  g.closed = read_field(cursor_, 1, "closed_gop") != 0;
  g.broken_link = read_field(cursor_, 1, "broken_link") != 0;
  ++gop_count_;
  if (map_ != nullptr) map_->gops.push_back(g);
}

std::optional<StartCode> Walker::parse_user_data(std::uint64_t byte_offset) {
  const std::uint64_t begin = cursor_.pos() >> 3;
  auto sc = next_start_code(cursor_);
  const std::uint64_t end = sc ? sc->byte_offset : bytes_.size();
  if (map_ != nullptr) {
    UserDataSegment seg;
    seg.byte_offset = byte_offset;
    seg.payload.assign(bytes_.begin() + static_cast<std::ptrdiff_t>(begin),
                       bytes_.begin() + static_cast<std::ptrdiff_t>(end));
    map_->user_data.push_back(std::move(seg));
  }
  return sc;
}

void Walker::parse_picture_header() {
  BitCursor& c = cursor_;
  pic_.temporal_reference = read_field(c, 10, "temporal_reference");
  const std::uint64_t type_at = c.pos();
  const auto type = read_field(c, 3, "picture_coding_type");
  if (type == 4) throw Error(Errc::unsupported_stream, "D-picture at bit " + std::to_string(type_at));
  if (type < 1 || type > 3) throw SyntaxError(type_at, "picture_coding_type 1..3");
  pic_.type = static_cast<PictureType>(type);
  read_field(c, 16, "vbv_delay");
  if (pic_.type == PictureType::P || pic_.type == PictureType::B) {
    pic_.full_pel_forward = read_field(c, 1, "full_pel_forward_vector") != 0;
    const std::uint64_t f_at = c.pos();
    pic_.forward_f_code = static_cast<int>(read_field(c, 3, "forward_f_code"));
    if (pic_.forward_f_code == 0) throw SyntaxError(f_at, "forward_f_code 1..7");
  }
  if (pic_.type == PictureType::B) {
    pic_.full_pel_backward = read_field(c, 1, "full_pel_backward_vector") != 0;
    const std::uint64_t f_at = c.pos();
    pic_.backward_f_code = static_cast<int>(read_field(c, 3, "backward_f_code"));
    if (pic_.backward_f_code == 0) throw SyntaxError(f_at, "backward_f_code 1..7");
  }
  while (read_field(c, 1, "extra_bit_picture") != 0) read_field(c, 8, "extra_information_picture");
}

std::optional<StartCode> Walker::parse_picture(std::uint64_t byte_offset) {
  if (!have_sequence_) throw SyntaxError(byte_offset * 8, "sequence_header before picture");
  pic_ = PictureInfo{};
  pic_.byte_offset = byte_offset;
  pic_.gop_index = gop_count_ == 0 ? 0 : gop_count_ - 1;
  picture_index_ = picture_count_;
  pic_.first_site = map_ != nullptr ? map_->sites.size() : 0;
  pic_.first_slice = slice_count_;
  parse_picture_header();

  auto sc = next_start_code_strict(cursor_);
  while (sc && !is_slice_code(sc->code)) {
    if (sc->code == kExtensionStartCode) {
      throw Error(Errc::unsupported_stream, "picture extension at byte " +
                                                std::to_string(sc->byte_offset));
    }
    if (sc->code != kUserDataStartCode) break;
    sc = parse_user_data(sc->byte_offset);
  }
  while (sc && is_slice_code(sc->code)) {
    parse_slice(sc->code, sc->byte_offset);
    sc = next_start_code_strict(cursor_);
  }
  pic_.end_byte = sc ? sc->byte_offset : bytes_.size();
  pic_.slice_count = slice_count_ - pic_.first_slice;
  if (map_ != nullptr) {
    pic_.site_count = map_->sites.size() - pic_.first_site;
    map_->pictures.push_back(pic_);
  }
  ++picture_count_;
  return sc;
}

void Walker::parse_slice(std::uint8_t code, std::uint64_t byte_offset) {
  BitCursor& c = cursor_;
  slice_index_ = slice_count_++;
  SliceInfo info;
  info.byte_offset = byte_offset;
  info.picture_index = picture_index_;
  info.vertical_position = code;
  if (static_cast<std::uint32_t>(code) > seq_.mb_height()) {
    throw SyntaxError(byte_offset * 8 + 24, "slice_vertical_position within picture");
  }
  const std::uint64_t q_at = c.pos();
  quantizer_scale_ = static_cast<int>(read_field(c, 5, "quantizer_scale"));
  if (quantizer_scale_ == 0) throw SyntaxError(q_at, "quantizer_scale 1..31");
  info.quantizer_scale = quantizer_scale_;
  while (read_field(c, 1, "extra_bit_slice") != 0) read_field(c, 8, "extra_information_slice");
  if (map_ != nullptr) map_->slices.push_back(info);

  previous_address_ = -1;
  const auto row_start = static_cast<std::int64_t>((code - 1) * seq_.mb_width());
  std::int64_t base = row_start - 1;
  do {
    mb_ = MacroblockData{};
    mb_.previous_address = previous_address_;
    mb_.picture_index = picture_index_;
    mb_.slice_index = slice_index_;
    // Address increment, with stuffing and escapes.
    const std::uint64_t mb_at = c.pos();
    std::int64_t increment = 0;
    for (;;) {
      const int v = vlc::address_increment_decoder().decode(c, "macroblock_address_increment");
      if (v == vlc::kAddressStuffing) continue;
      if (v == vlc::kAddressEscape) {
        increment += 33;
        continue;
      }
      increment += v;
      break;
    }
    const std::int64_t address = base + increment;
    const std::int64_t mb_count = static_cast<std::int64_t>(seq_.mb_width()) * seq_.mb_height();
    if (address >= mb_count) throw SyntaxError(mb_at, "macroblock_address within picture");
    if (pic_.type == PictureType::I && previous_address_ >= 0 && increment != 1) {
      throw SyntaxError(mb_at, "no skipped macroblocks in I-picture");
    }
    mb_.address = static_cast<std::uint32_t>(address);
    parse_macroblock();
    previous_address_ = address;
    base = address;
  } while (c.peek_bits_padded(23) != 0);
}

void Walker::parse_motion(std::array<MotionVectorCode, 2>& mv, int f_code) {
  BitCursor& c = cursor_;
  const int r_size = f_code - 1;
  for (int axis = 0; axis < 2; ++axis) {
    const Axis ax = axis == 0 ? Axis::horizontal : Axis::vertical;
    MotionVectorCode& m = mv[axis];
    m.code = vlc::motion_code_decoder().decode(c, "motion_code");
    if (m.code != 0) emit(MvSign{ax}, c.pos() - 1, std::nullopt);
    if (r_size > 0 && m.code != 0) {
      const std::uint64_t at = c.pos();
      m.residual = read_field(c, r_size, "motion_r");
      m.r_size = r_size;
      emit(MvResidual{r_size, ax}, at, std::nullopt);
    }
  }
}

void Walker::parse_macroblock() {
  BitCursor& c = cursor_;
  const int flags = vlc::mb_type_decoder(pic_.type).decode(c, "macroblock_type");
  mb_.type_flags = flags;
  mb_.intra = (flags & vlc::kMbIntra) != 0;
  if ((flags & vlc::kMbQuant) != 0) {
    const std::uint64_t q_at = c.pos();
    quantizer_scale_ = static_cast<int>(read_field(c, 5, "quantizer_scale"));
    if (quantizer_scale_ == 0) throw SyntaxError(q_at, "quantizer_scale 1..31");
  }
  mb_.quantizer_scale = quantizer_scale_;
  if ((flags & vlc::kMbForward) != 0) {
    mb_.forward.emplace();
    parse_motion(*mb_.forward, pic_.forward_f_code);
  }
  if ((flags & vlc::kMbBackward) != 0) {
    mb_.backward.emplace();
    parse_motion(*mb_.backward, pic_.backward_f_code);
  }
  if ((flags & vlc::kMbPattern) != 0) {
    mb_.coded_block_pattern = vlc::cbp_decoder().decode(c, "coded_block_pattern");
  } else {
    mb_.coded_block_pattern = mb_.intra ? 0x3F : 0;
  }
  if (visitor_ != nullptr) visitor_->on_macroblock(mb_);
  for (int i = 0; i < 6; ++i) {
    if ((mb_.coded_block_pattern & (0x20 >> i)) != 0) parse_block(i);
  }
}

void Walker::parse_block(int block_index) {
  BitCursor& c = cursor_;
  BlockData block;
  block.block_index = block_index;
  block.intra = mb_.intra;
  int index = 0;
  bool first = !mb_.intra;
  if (mb_.intra) {
    const Component comp = block_index < 4 ? Component::luma : Component::chroma;
    block.dc_size = decode_dct_dc_size(c, comp);
    if (block.dc_size > 0) {
      const std::uint64_t at = c.pos();
      const auto bits = read_field(c, block.dc_size, "dct_dc_differential");
      block.dc_differential = dc_differential_value(bits, block.dc_size);
      emit(IntraDcDiff{block.dc_size, comp}, at, block_index);
    }
    index = 1;
  }
  for (;;) {
    const std::uint64_t token_at = c.pos();
    const CoeffToken t = decode_run_level(c, first);
    if (t.end_of_block) break;
    index += t.run;
    if (index > 63) throw SyntaxError(token_at, "run within block (coefficient index <= 63)");
    if (t.sign_offset) {
      emit(CoeffSign{mb_.intra, !mb_.intra && index == 0}, *t.sign_offset, block_index);
    } else {
      emit(EscapeLevel{t.escape_width}, *t.escape_offset, block_index);
    }
    block.events.push_back({t.run, t.level});
    ++index;
    first = false;
  }
  if (visitor_ != nullptr) visitor_->on_block(mb_, block);
}

}  // namespace

StreamMap parse_stream(std::span<const std::uint8_t> bytes, SyntaxVisitor* visitor) {
  StreamMap map;
  Walker w(bytes, &map, visitor);
  w.parse_all();
  return map;
}

void walk_picture(std::span<const std::uint8_t> bytes, const StreamMap& map,
                  std::uint32_t picture_index, SyntaxVisitor& visitor) {
  Walker w(bytes, nullptr, &visitor);
  w.walk_one(map, picture_index);
}

int decode_dct_dc_size(BitCursor& cursor, Component component) {
  return vlc::dc_size_decoder(component).decode(cursor, component == Component::luma
                                                            ? "dct_dc_size_luminance"
                                                            : "dct_dc_size_chrominance");
}

CoeffToken decode_run_level(BitCursor& cursor, bool first_coeff) {
  CoeffToken t;
  const int token = vlc::coeff_decoder(first_coeff).decode(cursor, "dct_coeff");
  if (token == vlc::kTokenEndOfBlock) {
    t.end_of_block = true;
    return t;
  }
  if (token == vlc::kTokenEscape) {
    t.run = static_cast<int>(read_field(cursor, 6, "escape run"));
    const std::uint64_t at = cursor.pos();
    const auto first = read_field(cursor, 8, "escape level");
    t.escape_offset = at;
    if (first == 0x00 || first == 0x80) {
      const auto ext = read_field(cursor, 8, "escape level extension");
      t.escape_width = 16;
      t.level = decode_escape_level((first << 8) | ext, 16);
      if (t.level == 0) throw SyntaxError(at, "escape level in 128..255 or -255..-128");
    } else {
      t.escape_width = 8;
      t.level = decode_escape_level(first, 8);
    }
    return t;
  }
  t.run = token / 256;
  t.level = token % 256;
  t.sign_offset = cursor.pos();
  if (read_field(cursor, 1, "coefficient sign") != 0) t.level = -t.level;
  return t;
}

// ---- FLC helpers ----------------------------------------------------------

const char* kind_name(int index) {
  static const char* const names[kKindCount] = {"IntraDcDiff", "CoeffSign", "EscapeLevel",
                                                "MvSign", "MvResidual"};
  return index >= 0 && index < kKindCount ? names[index] : "?";
}

int bit_length(const FlcKind& kind) {
  struct {
    int operator()(const IntraDcDiff& k) const { return k.dc_size; }
    int operator()(const CoeffSign&) const { return 1; }
    int operator()(const EscapeLevel& k) const { return k.width; }
    int operator()(const MvSign&) const { return 1; }
    int operator()(const MvResidual& k) const { return k.r_size; }
  } len;
  return std::visit(len, kind);
}

std::string describe(const FlcSite& site) {
  std::string s = kind_name(kind_index(site.kind));
  s += " @" + std::to_string(site.bit_offset) + "+" + std::to_string(site.bit_length);
  s += " pic " + std::to_string(site.picture_index) + " mb " +
       std::to_string(site.macroblock_address);
  if (site.block_index) s += " blk " + std::to_string(*site.block_index);
  return s;
}

// Returns 0 for fields that are not a valid level of the width class.
int decode_escape_level(std::uint32_t field, int width) {
  if (width == 8) {
    if (field == 0x00 || field == 0x80 || field > 0xFF) return 0;
    return field < 0x80 ? static_cast<int>(field) : static_cast<int>(field) - 256;
  }
  if (width == 16) {
    const std::uint32_t prefix = field >> 8;
    const std::uint32_t ext = field & 0xFF;
    if (prefix == 0x00 && ext >= 128) return static_cast<int>(ext);
    if (prefix == 0x80 && ext >= 1 && ext <= 128) return static_cast<int>(ext) - 256;
    return 0;
  }
  return 0;
}

int escape_width_for(int level) {
  const int mag = level < 0 ? -level : level;
  if (mag >= 1 && mag <= 127) return 8;
  if (mag >= 128 && mag <= 255) return 16;
  return 0;
}

std::uint32_t encode_escape_level(int level, int width) {
  if (escape_width_for(level) != width) {
    throw Error(Errc::unencodable_value, "escape level " + std::to_string(level) +
                                             " not encodable in " + std::to_string(width) +
                                             " bits");
  }
  if (width == 8) return static_cast<std::uint32_t>(level) & 0xFF;
  if (level > 0) return static_cast<std::uint32_t>(level);
  return 0x8000u | static_cast<std::uint32_t>(level + 256);
}

int dc_differential_value(std::uint32_t bits, int size) {
  if (size == 0) return 0;
  if ((bits >> (size - 1)) & 1u) return static_cast<int>(bits);
  return static_cast<int>(bits) - ((1 << size) - 1);
}

int dc_size_for(int value) {
  int mag = value < 0 ? -value : value;
  int size = 0;
  while (mag > 0) {
    ++size;
    mag >>= 1;
  }
  return size;
}

std::uint32_t dc_differential_bits(int value, int size) {
  if (size == 0 || dc_size_for(value) != size) {
    throw Error(Errc::unencodable_value, "dc differential " + std::to_string(value) +
                                             " needs size " + std::to_string(dc_size_for(value)));
  }
  if (value > 0) return static_cast<std::uint32_t>(value);
  return static_cast<std::uint32_t>(value + (1 << size) - 1);
}

}  // namespace pvea
