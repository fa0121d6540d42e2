#include "pvea/attacks.hpp"
#include "pvea/mpeg_syntax.hpp"

namespace pvea {

namespace {

class EcaVisitor : public SyntaxVisitor {
 public:
  EcaVisitor(std::span<std::uint8_t> bytes, EcaScope scope) : bytes_(bytes), scope_(scope) {}

  void on_site(const FlcSite& site) override {
    std::uint32_t value = 0;
    switch (kind_index(site.kind)) {
      case 1:  // CoeffSign
        break;
      case 2: {  // EscapeLevel
        const std::uint32_t field = read_bits_at(bytes_, site.bit_offset, site.bit_length);
        const int level = decode_escape_level(field, site.bit_length);
        value = encode_escape_level(level < 0 ? -level : level, site.bit_length);
        break;
      }
      default:  // IntraDcDiff, MvSign, MvResidual
        if (scope_ != EcaScope::full) return;
        break;
    }
    apply_patch(bytes_, BitPatch{site.bit_offset, site.bit_length, value});
  }

 private:
  std::span<std::uint8_t> bytes_;
  EcaScope scope_;
};

}  // namespace

void eca_in_place(std::span<std::uint8_t> bytes, EcaScope scope) {
  EcaVisitor visitor(bytes, scope);
  parse_stream(bytes, &visitor);
}

std::vector<std::uint8_t> eca(std::span<const std::uint8_t> bytes, EcaScope scope) {
  std::vector<std::uint8_t> out(bytes.begin(), bytes.end());
  eca_in_place(out, scope);
  return out;
}

}  // namespace pvea
