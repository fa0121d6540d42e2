#pragma once

// Internal VLC tables shared by the parser and the stream forge.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pvea/bitio.hpp"
#include "pvea/flc.hpp"

namespace pvea::vlc {

struct VlcEntry {
  const char* code;
  int value;
};

struct CoeffEntry {
  const char* code;
  int run;
  int level;
};

inline constexpr int kMbQuant = 0x10;
inline constexpr int kMbForward = 0x08;
inline constexpr int kMbBackward = 0x04;
inline constexpr int kMbPattern = 0x02;
inline constexpr int kMbIntra = 0x01;

inline constexpr int kAddressStuffing = 34;
inline constexpr int kAddressEscape = 35;

inline constexpr const char* kEscapeCode = "0000 01";
inline constexpr const char* kEndOfBlockCode = "10";
inline constexpr const char* kFirstRun0Level1 = "1";
inline constexpr const char* kNextRun0Level1 = "11";

extern const std::array<VlcEntry, 35> kAddressIncrement;
extern const std::array<VlcEntry, 2> kMbTypeI;
extern const std::array<VlcEntry, 7> kMbTypeP;
extern const std::array<VlcEntry, 11> kMbTypeB;
extern const std::array<VlcEntry, 63> kCodedBlockPattern;
extern const std::array<VlcEntry, 33> kMotionCode;
extern const std::array<VlcEntry, 9> kDcSizeLuma;
extern const std::array<VlcEntry, 9> kDcSizeChroma;
extern const std::array<CoeffEntry, 110> kDctCoeff;

// Binary-trie prefix decoder.
class VlcDecoder {
 public:
  explicit VlcDecoder(std::span<const VlcEntry> entries);

  /// Returns the decoded value and advances; throws SyntaxError naming
  /// `what` at the code's start offset on an invalid prefix or truncation.
  int decode(BitCursor& cursor, const char* what) const;

 private:
  void insert(const char* code, int value);

  struct Node {
    std::array<int, 2> child{-1, -1};
    int value = 0;
    bool leaf = false;
  };
  std::vector<Node> nodes_;
};

// Coefficient tokens decoded from the run/level table.
inline constexpr int kTokenEndOfBlock = -1;
inline constexpr int kTokenEscape = -2;
inline constexpr int pack_run_level(int run, int level) { return run * 256 + level; }

const VlcDecoder& address_increment_decoder();
const VlcDecoder& mb_type_decoder(PictureType type);
const VlcDecoder& cbp_decoder();
const VlcDecoder& motion_code_decoder();
const VlcDecoder& dc_size_decoder(Component component);
/// `first` selects the table variant used for the first coefficient of a
/// non-intra block, where "1s" means run 0 / level 1 and EOB cannot occur.
const VlcDecoder& coeff_decoder(bool first);

// Encoder-side lookups; return nullptr when no table code exists.
const char* address_increment_code(int increment);
const char* mb_type_code(PictureType type, int flags);
const char* cbp_code(int cbp);
const char* motion_code(int code);
const char* dc_size_code(Component component, int size);
const char* coeff_code(int run, int level_magnitude, bool first);

}  // namespace pvea::vlc
