#include "vlc_tables.hpp"

#include <string>

#include "pvea/error.hpp"

namespace pvea::vlc {

// ISO/IEC 11172-2 Annex B code tables, written out as bit strings.

const std::array<VlcEntry, 35> kAddressIncrement = {{
    {"1", 1},
    {"011", 2},
    {"010", 3},
    {"0011", 4},
    {"0010", 5},
    {"0001 1", 6},
    {"0001 0", 7},
    {"0000 111", 8},
    {"0000 110", 9},
    {"0000 1011", 10},
    {"0000 1010", 11},
    {"0000 1001", 12},
    {"0000 1000", 13},
    {"0000 0111", 14},
    {"0000 0110", 15},
    {"0000 0101 11", 16},
    {"0000 0101 10", 17},
    {"0000 0101 01", 18},
    {"0000 0101 00", 19},
    {"0000 0100 11", 20},
    {"0000 0100 10", 21},
    {"0000 0100 011", 22},
    {"0000 0100 010", 23},
    {"0000 0100 001", 24},
    {"0000 0100 000", 25},
    {"0000 0011 111", 26},
    {"0000 0011 110", 27},
    {"0000 0011 101", 28},
    {"0000 0011 100", 29},
    {"0000 0011 011", 30},
    {"0000 0011 010", 31},
    {"0000 0011 001", 32},
    {"0000 0011 000", 33},
    {"0000 0001 111", kAddressStuffing},
    {"0000 0001 000", kAddressEscape},
}};

const std::array<VlcEntry, 2> kMbTypeI = {{
    {"1", kMbIntra},
    {"01", kMbIntra | kMbQuant},
}};

const std::array<VlcEntry, 7> kMbTypeP = {{
    {"1", kMbForward | kMbPattern},
    {"01", kMbPattern},
    {"001", kMbForward},
    {"0001 1", kMbIntra},
    {"0001 0", kMbForward | kMbPattern | kMbQuant},
    {"0000 1", kMbPattern | kMbQuant},
    {"0000 01", kMbIntra | kMbQuant},
}};

const std::array<VlcEntry, 11> kMbTypeB = {{
    {"10", kMbForward | kMbBackward},
    {"11", kMbForward | kMbBackward | kMbPattern},
    {"010", kMbBackward},
    {"011", kMbBackward | kMbPattern},
    {"0010", kMbForward},
    {"0011", kMbForward | kMbPattern},
    {"0001 1", kMbIntra},
    {"0001 0", kMbForward | kMbBackward | kMbPattern | kMbQuant},
    {"0000 11", kMbForward | kMbPattern | kMbQuant},
    {"0000 10", kMbBackward | kMbPattern | kMbQuant},
    {"0000 01", kMbIntra | kMbQuant},
}};

const std::array<VlcEntry, 63> kCodedBlockPattern = {{
    {"0101 1", 1},
    {"0100 1", 2},
    {"0011 01", 3},
    {"1101", 4},
    {"0010 111", 5},
    {"0010 011", 6},
    {"0001 1111", 7},
    {"1100", 8},
    {"0010 110", 9},
    {"0010 010", 10},
    {"0001 1110", 11},
    {"1001 1", 12},
    {"0001 1011", 13},
    {"0001 0111", 14},
    {"0001 0011", 15},
    {"1011", 16},
    {"0010 101", 17},
    {"0010 001", 18},
    {"0001 1101", 19},
    {"1000 1", 20},
    {"0001 1001", 21},
    {"0001 0101", 22},
    {"0001 0001", 23},
    {"0011 11", 24},
    {"0000 1111", 25},
    {"0000 1101", 26},
    {"0000 0001 1", 27},
    {"0111 1", 28},
    {"0000 1011", 29},
    {"0000 0111", 30},
    {"0000 0011 1", 31},
    {"1010", 32},
    {"0010 100", 33},
    {"0010 000", 34},
    {"0001 1100", 35},
    {"0011 10", 36},
    {"0000 1110", 37},
    {"0000 1100", 38},
    {"0000 0001 0", 39},
    {"1000 0", 40},
    {"0001 1000", 41},
    {"0001 0100", 42},
    {"0001 0000", 43},
    {"0111 0", 44},
    {"0000 1010", 45},
    {"0000 0110", 46},
    {"0000 0011 0", 47},
    {"1001 0", 48},
    {"0001 1010", 49},
    {"0001 0110", 50},
    {"0001 0010", 51},
    {"0110 1", 52},
    {"0000 1001", 53},
    {"0000 0101", 54},
    {"0000 0010 1", 55},
    {"0110 0", 56},
    {"0000 1000", 57},
    {"0000 0100", 58},
    {"0000 0010 0", 59},
    {"111", 60},
    {"0101 0", 61},
    {"0100 0", 62},
    {"0011 00", 63},
}};

// The sign bit s is the last bit of every nonzero code.
const std::array<VlcEntry, 33> kMotionCode = {{
    {"1", 0},
    {"010", 1},
    {"011", -1},
    {"0010", 2},
    {"0011", -2},
    {"0001 0", 3},
    {"0001 1", -3},
    {"0000 110", 4},
    {"0000 111", -4},
    {"0000 1010", 5},
    {"0000 1011", -5},
    {"0000 1000", 6},
    {"0000 1001", -6},
    {"0000 0110", 7},
    {"0000 0111", -7},
    {"0000 0101 10", 8},
    {"0000 0101 11", -8},
    {"0000 0101 00", 9},
    {"0000 0101 01", -9},
    {"0000 0100 10", 10},
    {"0000 0100 11", -10},
    {"0000 0100 010", 11},
    {"0000 0100 011", -11},
    {"0000 0100 000", 12},
    {"0000 0100 001", -12},
    {"0000 0011 110", 13},
    {"0000 0011 111", -13},
    {"0000 0011 100", 14},
    {"0000 0011 101", -14},
    {"0000 0011 010", 15},
    {"0000 0011 011", -15},
    {"0000 0011 000", 16},
    {"0000 0011 001", -16},
}};

const std::array<VlcEntry, 9> kDcSizeLuma = {{
    {"100", 0}, {"00", 1}, {"01", 2}, {"101", 3}, {"110", 4},
    {"1110", 5}, {"1111 0", 6}, {"1111 10", 7}, {"1111 110", 8},
}};

const std::array<VlcEntry, 9> kDcSizeChroma = {{
    {"00", 0}, {"01", 1}, {"10", 2}, {"110", 3}, {"1110", 4},
    {"1111 0", 5}, {"1111 10", 6}, {"1111 110", 7}, {"1111 1110", 8},
}};

// Run/level codes excluding run 0 / level 1, whose code depends on the
// position in the block ("1s" first, "11s" afterwards). Sign bit follows.
const std::array<CoeffEntry, 110> kDctCoeff = {{
    {"011", 1, 1},
    {"0100", 0, 2},
    {"0101", 2, 1},
    {"0010 1", 0, 3},
    {"0011 0", 4, 1},
    {"0011 1", 3, 1},
    {"0001 00", 7, 1},
    {"0001 01", 6, 1},
    {"0001 10", 1, 2},
    {"0001 11", 5, 1},
    {"0000 100", 2, 2},
    {"0000 101", 9, 1},
    {"0000 110", 0, 4},
    {"0000 111", 8, 1},
    {"0010 0000", 13, 1},
    {"0010 0001", 0, 6},
    {"0010 0010", 12, 1},
    {"0010 0011", 11, 1},
    {"0010 0100", 3, 2},
    {"0010 0101", 1, 3},
    {"0010 0110", 0, 5},
    {"0010 0111", 10, 1},
    {"0000 0010 00", 16, 1},
    {"0000 0010 01", 5, 2},
    {"0000 0010 10", 0, 7},
    {"0000 0010 11", 2, 3},
    {"0000 0011 00", 1, 4},
    {"0000 0011 01", 15, 1},
    {"0000 0011 10", 14, 1},
    {"0000 0011 11", 4, 2},
    {"0000 0001 0000", 0, 11},
    {"0000 0001 0001", 8, 2},
    {"0000 0001 0010", 4, 3},
    {"0000 0001 0011", 0, 10},
    {"0000 0001 0100", 2, 4},
    {"0000 0001 0101", 7, 2},
    {"0000 0001 0110", 21, 1},
    {"0000 0001 0111", 20, 1},
    {"0000 0001 1000", 0, 9},
    {"0000 0001 1001", 19, 1},
    {"0000 0001 1010", 18, 1},
    {"0000 0001 1011", 1, 5},
    {"0000 0001 1100", 3, 3},
    {"0000 0001 1101", 0, 8},
    {"0000 0001 1110", 6, 2},
    {"0000 0001 1111", 17, 1},
    {"0000 0000 1000 0", 10, 2},
    {"0000 0000 1000 1", 9, 2},
    {"0000 0000 1001 0", 5, 3},
    {"0000 0000 1001 1", 3, 4},
    {"0000 0000 1010 0", 2, 5},
    {"0000 0000 1010 1", 1, 7},
    {"0000 0000 1011 0", 1, 6},
    {"0000 0000 1011 1", 0, 15},
    {"0000 0000 1100 0", 0, 14},
    {"0000 0000 1100 1", 0, 13},
    {"0000 0000 1101 0", 0, 12},
    {"0000 0000 1101 1", 26, 1},
    {"0000 0000 1110 0", 25, 1},
    {"0000 0000 1110 1", 24, 1},
    {"0000 0000 1111 0", 23, 1},
    {"0000 0000 1111 1", 22, 1},
    {"0000 0000 0100 00", 0, 31},
    {"0000 0000 0100 01", 0, 30},
    {"0000 0000 0100 10", 0, 29},
    {"0000 0000 0100 11", 0, 28},
    {"0000 0000 0101 00", 0, 27},
    {"0000 0000 0101 01", 0, 26},
    {"0000 0000 0101 10", 0, 25},
    {"0000 0000 0101 11", 0, 24},
    {"0000 0000 0110 00", 0, 23},
    {"0000 0000 0110 01", 0, 22},
    {"0000 0000 0110 10", 0, 21},
    {"0000 0000 0110 11", 0, 20},
    {"0000 0000 0111 00", 0, 19},
    {"0000 0000 0111 01", 0, 18},
    {"0000 0000 0111 10", 0, 17},
    {"0000 0000 0111 11", 0, 16},
    {"0000 0000 0010 000", 0, 40},
    {"0000 0000 0010 001", 0, 39},
    {"0000 0000 0010 010", 0, 38},
    {"0000 0000 0010 011", 0, 37},
    {"0000 0000 0010 100", 0, 36},
    {"0000 0000 0010 101", 0, 35},
    {"0000 0000 0010 110", 0, 34},
    {"0000 0000 0010 111", 0, 33},
    {"0000 0000 0011 000", 0, 32},
    {"0000 0000 0011 001", 1, 14},
    {"0000 0000 0011 010", 1, 13},
    {"0000 0000 0011 011", 1, 12},
    {"0000 0000 0011 100", 1, 11},
    {"0000 0000 0011 101", 1, 10},
    {"0000 0000 0011 110", 1, 9},
    {"0000 0000 0011 111", 1, 8},
    {"0000 0000 0001 0000", 1, 18},
    {"0000 0000 0001 0001", 1, 17},
    {"0000 0000 0001 0010", 1, 16},
    {"0000 0000 0001 0011", 1, 15},
    {"0000 0000 0001 0100", 6, 3},
    {"0000 0000 0001 0101", 16, 2},
    {"0000 0000 0001 0110", 15, 2},
    {"0000 0000 0001 0111", 14, 2},
    {"0000 0000 0001 1000", 13, 2},
    {"0000 0000 0001 1001", 12, 2},
    {"0000 0000 0001 1010", 11, 2},
    {"0000 0000 0001 1011", 31, 1},
    {"0000 0000 0001 1100", 30, 1},
    {"0000 0000 0001 1101", 29, 1},
    {"0000 0000 0001 1110", 28, 1},
    {"0000 0000 0001 1111", 27, 1},
}};
VlcDecoder::VlcDecoder(std::span<const VlcEntry> entries) {
  nodes_.emplace_back();
  for (const auto& e : entries) insert(e.code, e.value);
}

void VlcDecoder::insert(const char* code, int value) {
  int node = 0;
  for (const char* p = code; *p != '\0'; ++p) {
    if (*p != '0' && *p != '1') continue;
    const int bit = *p - '0';
    if (nodes_[node].child[bit] < 0) {
      nodes_[node].child[bit] = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
    }
    node = nodes_[node].child[bit];
  }
  nodes_[node].leaf = true;
  nodes_[node].value = value;
}

int VlcDecoder::decode(BitCursor& cursor, const char* what) const {
  const std::uint64_t start = cursor.pos();
  int node = 0;
  while (!nodes_[node].leaf) {
    if (cursor.bits_left() == 0) {
      cursor.seek(start);
      throw SyntaxError(start, std::string(what) + " (truncated)");
    }
    const int next = nodes_[node].child[cursor.read_bits(1)];
    if (next < 0) {
      cursor.seek(start);
      throw SyntaxError(start, what);
    }
    node = next;
  }
  return nodes_[node].value;
}

namespace {

std::vector<VlcEntry> coeff_entries(bool first) {
  std::vector<VlcEntry> out;
  for (const auto& e : kDctCoeff) out.push_back({e.code, pack_run_level(e.run, e.level)});
  out.push_back({kEscapeCode, kTokenEscape});
  if (first) {
    out.push_back({kFirstRun0Level1, pack_run_level(0, 1)});
  } else {
    out.push_back({kNextRun0Level1, pack_run_level(0, 1)});
    out.push_back({kEndOfBlockCode, kTokenEndOfBlock});
  }
  return out;
}

template <std::size_t N>
const char* find_code(const std::array<VlcEntry, N>& table, int value) {
  for (const auto& e : table) {
    if (e.value == value) return e.code;
  }
  return nullptr;
}

}  // namespace

const VlcDecoder& address_increment_decoder() {
  static const VlcDecoder d(kAddressIncrement);
  return d;
}

const VlcDecoder& mb_type_decoder(PictureType type) {
  static const VlcDecoder i(kMbTypeI);
  static const VlcDecoder p(kMbTypeP);
  static const VlcDecoder b(kMbTypeB);
  switch (type) {
    case PictureType::I: return i;
    case PictureType::P: return p;
    case PictureType::B: return b;
  }
  return i;
}

const VlcDecoder& cbp_decoder() {
  static const VlcDecoder d(kCodedBlockPattern);
  return d;
}

const VlcDecoder& motion_code_decoder() {
  static const VlcDecoder d(kMotionCode);
  return d;
}

const VlcDecoder& dc_size_decoder(Component component) {
  static const VlcDecoder luma(kDcSizeLuma);
  static const VlcDecoder chroma(kDcSizeChroma);
  return component == Component::luma ? luma : chroma;
}

const VlcDecoder& coeff_decoder(bool first) {
  static const VlcDecoder first_table(coeff_entries(true));
  static const VlcDecoder next_table(coeff_entries(false));
  return first ? first_table : next_table;
}

const char* address_increment_code(int increment) {
  if (increment < 1 || increment > 33) return nullptr;
  return find_code(kAddressIncrement, increment);
}

const char* mb_type_code(PictureType type, int flags) {
  switch (type) {
    case PictureType::I: return find_code(kMbTypeI, flags);
    case PictureType::P: return find_code(kMbTypeP, flags);
    case PictureType::B: return find_code(kMbTypeB, flags);
  }
  return nullptr;
}

const char* cbp_code(int cbp) { return find_code(kCodedBlockPattern, cbp); }

const char* motion_code(int code) { return find_code(kMotionCode, code); }

const char* dc_size_code(Component component, int size) {
  return component == Component::luma ? find_code(kDcSizeLuma, size)
                                      : find_code(kDcSizeChroma, size);
}

const char* coeff_code(int run, int level_magnitude, bool first) {
  if (run == 0 && level_magnitude == 1) return first ? kFirstRun0Level1 : kNextRun0Level1;
  for (const auto& e : kDctCoeff) {
    if (e.run == run && e.level == level_magnitude) return e.code;
  }
  return nullptr;
}

}  // namespace pvea::vlc
