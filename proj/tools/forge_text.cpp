#include "forge_text.hpp"

#include <sstream>

#include "pvea/error.hpp"

namespace pvea::cli {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw Error(Errc::invalid_argument, "forge spec line " + std::to_string(line) + ": " + msg);
}

int to_int(const std::string& s, int line) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    fail(line, "bad number '" + s + "'");
  }
  if (used != s.size()) fail(line, "bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

ForgeMotion parse_motion(const std::string& v, int line) {
  const auto parts = split(v, ',');
  if (parts.size() != 4) fail(line, "motion needs h,hr,v,vr");
  ForgeMotion m;
  for (int axis = 0; axis < 2; ++axis) {
    m[axis].code = to_int(parts[2 * axis], line);
    const int r = to_int(parts[2 * axis + 1], line);
    if (r < 0) fail(line, "motion residual must be non-negative");
    m[axis].residual = static_cast<std::uint32_t>(r);
  }
  return m;
}

}  // namespace

ForgeSpec parse_forge_text(const std::string& text) {
  ForgeSpec spec;
  bool pending_gop = false;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream words(raw);
    std::vector<std::string> w;
    for (std::string t; words >> t;) w.push_back(t);
    if (w.empty()) continue;
    const std::string& op = w[0];
    if (op == "size") {
      if (w.size() != 3) fail(line, "size W H");
      spec.width = static_cast<std::uint32_t>(to_int(w[1], line));
      spec.height = static_cast<std::uint32_t>(to_int(w[2], line));
    } else if (op == "gop") {
      pending_gop = true;
    } else if (op == "picture") {
      if (w.size() < 2) fail(line, "picture I|P|B [f_code [b_code]]");
      ForgePicture p;
      if (w[1] == "I") {
        p.type = PictureType::I;
      } else if (w[1] == "P") {
        p.type = PictureType::P;
      } else if (w[1] == "B") {
        p.type = PictureType::B;
      } else {
        fail(line, "unknown picture type '" + w[1] + "'");
      }
      if (w.size() > 2) p.forward_f_code = to_int(w[2], line);
      if (w.size() > 3) p.backward_f_code = to_int(w[3], line);
      p.new_gop = pending_gop;
      pending_gop = false;
      spec.pictures.push_back(p);
    } else if (op == "slice") {
      if (spec.pictures.empty()) fail(line, "slice before any picture");
      ForgeSlice s;
      for (std::size_t i = 1; i < w.size(); ++i) {
        if (w[i].rfind("q=", 0) == 0) {
          s.quantizer_scale = to_int(w[i].substr(2), line);
        } else if (w[i].rfind("row=", 0) == 0) {
          s.vertical_position = to_int(w[i].substr(4), line);
        } else {
          fail(line, "unknown slice field '" + w[i] + "'");
        }
      }
      spec.pictures.back().slices.push_back(s);
    } else if (op == "mb") {
      if (spec.pictures.empty() || spec.pictures.back().slices.empty()) fail(line, "mb outside a slice");
      ForgeMacroblock mb;
      for (std::size_t i = 1; i < w.size(); ++i) {
        const std::string& t = w[i];
        if (t == "intra") {
          mb.intra = true;
        } else if (t.rfind("inc=", 0) == 0) {
          mb.address_increment = to_int(t.substr(4), line);
        } else if (t.rfind("q=", 0) == 0) {
          mb.quantizer_scale = to_int(t.substr(2), line);
        } else if (t.rfind("fwd=", 0) == 0) {
          mb.forward = parse_motion(t.substr(4), line);
        } else if (t.rfind("bwd=", 0) == 0) {
          mb.backward = parse_motion(t.substr(4), line);
        } else {
          fail(line, "unknown macroblock field '" + t + "'");
        }
      }
      spec.pictures.back().slices.back().macroblocks.push_back(mb);
    } else if (op == "block") {
      if (spec.pictures.empty() || spec.pictures.back().slices.empty() ||
          spec.pictures.back().slices.back().macroblocks.empty()) {
        fail(line, "block outside a macroblock");
      }
      if (w.size() < 2) fail(line, "block INDEX ...");
      const int index = to_int(w[1], line);
      if (index < 0 || index > 5) fail(line, "block index must be 0..5");
      ForgeBlock b;
      for (std::size_t i = 2; i < w.size(); ++i) {
        std::string t = w[i];
        if (t.rfind("dc=", 0) == 0) {
          const auto parts = split(t.substr(3), ':');
          if (parts.size() != 2) fail(line, "dc=SIZE:BITS");
          b.dc_size = to_int(parts[0], line);
          if (static_cast<int>(parts[1].size()) != b.dc_size) fail(line, "dc bits must have SIZE digits");
          b.dc_bits = 0;
          for (char c : parts[1]) {
            if (c != '0' && c != '1') fail(line, "dc bits must be binary");
            b.dc_bits = (b.dc_bits << 1) | static_cast<std::uint32_t>(c - '0');
          }
          continue;
        }
        ForgeEvent e;
        if (!t.empty() && t.back() == '!') {
          e.force_escape = true;
          t.pop_back();
        }
        const auto parts = split(t, ':');
        if (parts.size() != 2) fail(line, "coefficient must be RUN:LEVEL");
        e.run = to_int(parts[0], line);
        e.level = to_int(parts[1], line);
        b.events.push_back(e);
      }
      spec.pictures.back().slices.back().macroblocks.back().blocks[index] = b;
    } else {
      fail(line, "unknown directive '" + op + "'");
    }
  }
  return spec;
}

std::string format_site_list(const std::vector<FlcSite>& sites) {
  std::ostringstream out;
  out << "# offset length kind picture slice macroblock block\n";
  for (const FlcSite& s : sites) {
    out << s.bit_offset << ' ' << s.bit_length << ' ' << kind_name(kind_index(s.kind)) << ' '
        << s.picture_index << ' ' << s.slice_index << ' ' << s.macroblock_address << ' '
        << (s.block_index ? std::to_string(*s.block_index) : std::string("-")) << '\n';
  }
  return out.str();
}

}  // namespace pvea::cli
