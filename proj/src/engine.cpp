#include "pvea/engine.hpp"

#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "pvea/error.hpp"

namespace pvea {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'P', 'V', 'E', 'A'};
constexpr int kArmoredBytes = 30;  // 208 data bits in 7-bit groups

constexpr std::uint8_t kFlagGopKeying = 0x01;
constexpr std::uint8_t kFlagTypical = 0x02;
constexpr std::uint8_t kFlagIntraOnly = 0x04;
constexpr std::uint8_t kFlagSignsOnly = 0x08;

std::string format_factor(std::uint16_t fixed) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%04u", fixed / 10000u, fixed % 10000u);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_uint(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(Errc::invalid_argument, what + ": bad number '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "1" || s == "true" || s == "on") return true;
  if (s == "0" || s == "false" || s == "off") return false;
  throw Error(Errc::invalid_argument, what + ": expected 0 or 1, got '" + s + "'");
}

// Start codes up to the first picture; user data there may hold the header.
std::optional<MetaHeader> scan_meta(std::span<const std::uint8_t> bytes) {
  BitCursor c(bytes);
  while (auto sc = next_start_code(c)) {
    if (sc->code == kPictureStartCode) break;
    if (sc->code != kUserDataStartCode) continue;
    const std::uint64_t begin = sc->byte_offset + 4;
    BitCursor probe(bytes, begin * 8);
    const auto next = next_start_code(probe);
    const std::uint64_t end = next ? next->byte_offset : bytes.size();
    if (auto meta = decode_meta(bytes.subspan(begin, end - begin))) return meta;
  }
  return std::nullopt;
}

class PassVisitor : public SyntaxVisitor {
 public:
  PassVisitor(std::span<std::uint8_t> bytes, const Key& key, const PveaConfig& config,
              const Uid& uid, bool decrypt, EngineStats& stats)
      : bytes_(bytes),
        config_(config),
        selector_(config.factors, config.period, config.strategy, key, uid),
        cipher_(config.cipher, key, uid),
        decrypt_(decrypt),
        stats_(stats) {
    if (config.cipher.mode == CipherMode::cascade) cascade_.emplace(cipher_, decrypt);
  }

  void on_site(const FlcSite& site) override {
    ++stats_.sites_seen;
    if (!schedule_on(config_.schedule, site.picture_index)) return;
    const Category cat = category_of(site.kind);
    if (config_.intra_blocks_only && cat != Category::sr && !site.macroblock_intra) return;
    if (!selector_.next(cat)) return;
    ++stats_.sites_selected;
    ++stats_.selected_per_category[static_cast<int>(cat)];
    if (config_.cipher.gop_keying && site.gop_index != cipher_.gop_index()) {
      finish();
      cipher_.rekey(site.gop_index);
    }
    const std::uint32_t field = read_bits_at(bytes_, site.bit_offset, site.bit_length);
    if (cascade_) {
      const std::size_t id = next_id_++;
      pending_.emplace(id, Pending{site.kind, site.bit_offset, site.bit_length, field});
      patch_ready(cascade_->push(id, extract_payload(site.kind, field, config_.signs_only)));
      return;
    }
    const std::uint32_t out =
        decrypt_ ? cipher_.decrypt_site(site.kind, field, site.bit_length, config_.signs_only)
                 : cipher_.encrypt_site(site.kind, field, site.bit_length, config_.signs_only);
    patch(site.bit_offset, site.bit_length, out);
  }

  void finish() {
    if (cascade_ && cascade_->pending_bits() > 0) {
      ++stats_.cascade_flushes;
      patch_ready(cascade_->flush());
    }
  }

 private:
  struct Pending {
    FlcKind kind;
    std::uint64_t offset;
    int length;
    std::uint32_t field;
  };

  void patch_ready(const std::vector<std::size_t>& ids) {
    for (std::size_t id : ids) {
      const auto it = pending_.find(id);
      const Pending& p = it->second;
      const std::uint32_t out =
          replace_payload(p.kind, p.field, cascade_->take(id), config_.signs_only);
      patch(p.offset, p.length, out);
      pending_.erase(it);
    }
  }

  void patch(std::uint64_t offset, int length, std::uint32_t value) {
    apply_patch(bytes_, BitPatch{offset, length, value});
    stats_.bits_patched += static_cast<std::uint64_t>(length);
  }

  std::span<std::uint8_t> bytes_;
  const PveaConfig& config_;
  Selector selector_;
  CipherState cipher_;
  std::optional<CascadeCipher> cascade_;
  bool decrypt_;
  EngineStats& stats_;
  std::unordered_map<std::size_t, Pending> pending_;
  std::size_t next_id_ = 0;
};

PassResult run_pass(std::span<std::uint8_t> bytes, const Key& key, const PveaConfig& config,
                    std::optional<Uid> uid, bool decrypt) {
  if (config.period == 0 || config.period > 0xFFFF) {
    throw Error(Errc::invalid_argument, "mask period must be 1..65535");
  }
  if (!uid || uid_absent(*uid)) {
    const auto meta = scan_meta(bytes);
    if (!meta) throw Error(Errc::missing_uid, "no UID given and no PVEA header in the stream");
    uid = meta->uid;
  }
  if (!config.schedule.empty()) {
    const std::uint32_t pictures = count_pictures(bytes);
    for (const ScheduleEntry& e : config.schedule) {
      if (e.picture >= pictures) {
        throw Error(Errc::schedule_out_of_range, "picture " + std::to_string(e.picture) +
                                                     " but the stream has " +
                                                     std::to_string(pictures));
      }
    }
  }
  PassResult result;
  PassVisitor visitor(bytes, key, config, *uid, decrypt, result.stats);
  result.map = parse_stream(bytes, &visitor);
  visitor.finish();
  result.stats.bits_parsed = result.map.total_bits;
  if (!decrypt) result.warnings = factor_warnings(result.map, config.factors);
  return result;
}

}  // namespace

Schedule picture_range_schedule(std::uint32_t first, std::uint32_t last) {
  Schedule s;
  if (first > 0) s.push_back({0, false});
  s.push_back({first, true});
  s.push_back({last + 1, false});
  return s;
}

bool schedule_on(const Schedule& schedule, std::uint32_t picture) {
  bool on = true;
  std::uint32_t best = 0;
  bool found = false;
  for (const ScheduleEntry& e : schedule) {
    if (e.picture <= picture && (!found || e.picture >= best)) {
      best = e.picture;
      on = e.on;
      found = true;
    }
  }
  return on;
}

MetaHeader make_meta(const PveaConfig& config, const Uid& uid) {
  if (config.period == 0 || config.period > 0xFFFF) {
    throw Error(Errc::invalid_argument, "mask period must be 1..65535");
  }
  MetaHeader m;
  m.cipher = config.cipher;
  m.strategy = config.strategy;
  m.intra_blocks_only = config.intra_blocks_only;
  m.signs_only = config.signs_only;
  m.factors = config.factors;
  m.period = static_cast<std::uint16_t>(config.period);
  m.uid = uid;
  return m;
}

void apply_meta(const MetaHeader& meta, PveaConfig& config) {
  config.cipher = meta.cipher;
  config.strategy = meta.strategy;
  config.intra_blocks_only = meta.intra_blocks_only;
  config.signs_only = meta.signs_only;
  config.factors = meta.factors;
  config.period = meta.period;
}

std::vector<std::uint8_t> encode_meta(const MetaHeader& meta) {
  std::vector<std::uint8_t> data;
  data.push_back(static_cast<std::uint8_t>(static_cast<int>(meta.cipher.mode) |
                                           ((meta.cipher.block_bits - 1) << 2)));
  std::uint8_t flags = 0;
  if (meta.cipher.gop_keying) flags |= kFlagGopKeying;
  if (meta.strategy == SelectionStrategy::typical) flags |= kFlagTypical;
  if (meta.intra_blocks_only) flags |= kFlagIntraOnly;
  if (meta.signs_only) flags |= kFlagSignsOnly;
  data.push_back(flags);
  for (std::uint16_t f : meta.factors.fixed) {
    data.push_back(static_cast<std::uint8_t>(f >> 8));
    data.push_back(static_cast<std::uint8_t>(f));
  }
  data.push_back(static_cast<std::uint8_t>(meta.period >> 8));
  data.push_back(static_cast<std::uint8_t>(meta.period));
  data.insert(data.end(), meta.uid.begin(), meta.uid.end());

  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(meta.version);
  BitCursor c(data);
  for (int i = 0; i < kArmoredBytes; ++i) {
    out.push_back(static_cast<std::uint8_t>(0x80 | (c.peek_bits_padded(7) & 0x7F)));
    c.seek(std::min<std::uint64_t>(c.pos() + 7, c.size_bits()));
  }
  return out;
}

std::optional<MetaHeader> decode_meta(std::span<const std::uint8_t> payload) {
  if (payload.size() != kMetaPayloadSize) return std::nullopt;
  if (!std::equal(kMagic.begin(), kMagic.end(), payload.begin())) return std::nullopt;
  if (payload[4] != 1) return std::nullopt;
  BitWriter w;
  for (int i = 0; i < kArmoredBytes; ++i) {
    const std::uint8_t b = payload[5 + i];
    if ((b & 0x80) == 0) return std::nullopt;
    w.put_bits(b & 0x7F, 7);
  }
  const std::vector<std::uint8_t>& d = w.bytes();
  MetaHeader m;
  const int mode = d[0] & 3;
  m.cipher.mode = static_cast<CipherMode>(mode);
  m.cipher.block_bits = (d[0] >> 2) + 1;
  const std::uint8_t flags = d[1];
  if ((flags & 0xF0) != 0) return std::nullopt;
  m.cipher.gop_keying = (flags & kFlagGopKeying) != 0;
  m.strategy = (flags & kFlagTypical) != 0 ? SelectionStrategy::typical : SelectionStrategy::se_array;
  m.intra_blocks_only = (flags & kFlagIntraOnly) != 0;
  m.signs_only = (flags & kFlagSignsOnly) != 0;
  for (int i = 0; i < kCategoryCount; ++i) {
    m.factors.fixed[i] = static_cast<std::uint16_t>((d[2 + 2 * i] << 8) | d[3 + 2 * i]);
    if (m.factors.fixed[i] > kFactorScale) return std::nullopt;
  }
  m.period = static_cast<std::uint16_t>((d[8] << 8) | d[9]);
  if (m.period == 0) return std::nullopt;
  std::copy(d.begin() + 10, d.begin() + 26, m.uid.begin());
  return m;
}

std::optional<MetaHeader> find_meta(const StreamMap& map) {
  for (const UserDataSegment& seg : map.user_data) {
    if (auto m = decode_meta(seg.payload)) return m;
  }
  return std::nullopt;
}

std::vector<std::uint8_t> provision(std::span<const std::uint8_t> bytes, const Uid& uid,
                                    const PveaConfig& config) {
  if (uid_absent(uid)) throw Error(Errc::missing_uid, "the all-zero UID is reserved");
  const StreamMap map = parse_stream(bytes);
  if (find_meta(map)) throw Error(Errc::already_provisioned, "stream already carries a PVEA header");
  BitCursor c(bytes, (map.sequence.byte_offset + 4) * 8);
  const auto next = next_start_code(c);
  const std::uint64_t at = next ? next->byte_offset : bytes.size();
  std::vector<std::uint8_t> segment = {0x00, 0x00, 0x01, kUserDataStartCode};
  const std::vector<std::uint8_t> payload = encode_meta(make_meta(config, uid));
  segment.insert(segment.end(), payload.begin(), payload.end());
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(at));
  out.insert(out.end(), segment.begin(), segment.end());
  out.insert(out.end(), bytes.begin() + static_cast<std::ptrdiff_t>(at), bytes.end());
  return out;
}

void update_meta_in_place(std::span<std::uint8_t> bytes, const MetaHeader& meta) {
  BitCursor c(bytes);
  while (auto sc = next_start_code(c)) {
    if (sc->code == kPictureStartCode) break;
    if (sc->code != kUserDataStartCode) continue;
    const std::uint64_t begin = sc->byte_offset + 4;
    if (begin + kMetaPayloadSize > bytes.size()) continue;
    if (!decode_meta(std::span<const std::uint8_t>(bytes).subspan(begin, kMetaPayloadSize))) continue;
    const std::vector<std::uint8_t> payload = encode_meta(meta);
    std::copy(payload.begin(), payload.end(), bytes.begin() + static_cast<std::ptrdiff_t>(begin));
    return;
  }
  throw Error(Errc::missing_uid, "stream carries no PVEA header");
}

std::string format_sidecar(const Sidecar& sidecar) {
  std::ostringstream out;
  if (sidecar.uid) out << "uid=" << to_hex(*sidecar.uid) << "\n";
  if (!sidecar.schedule.empty()) {
    out << "schedule=";
    for (std::size_t i = 0; i < sidecar.schedule.size(); ++i) {
      if (i > 0) out << ",";
      out << sidecar.schedule[i].picture << ":" << (sidecar.schedule[i].on ? "on" : "off");
    }
    out << "\n";
  }
  if (sidecar.config) {
    const PveaConfig& c = *sidecar.config;
    out << "mode=" << mode_name(c.cipher.mode) << "\n";
    out << "block_bits=" << c.cipher.block_bits << "\n";
    out << "gop_keying=" << (c.cipher.gop_keying ? 1 : 0) << "\n";
    out << "factors=" << format_factor(c.factors.fixed[0]) << "," << format_factor(c.factors.fixed[1])
        << "," << format_factor(c.factors.fixed[2]) << "\n";
    out << "period=" << c.period << "\n";
    out << "strategy=" << (c.strategy == SelectionStrategy::typical ? "typical" : "se_array") << "\n";
    out << "intra_blocks_only=" << (c.intra_blocks_only ? 1 : 0) << "\n";
    out << "signs_only=" << (c.signs_only ? 1 : 0) << "\n";
  }
  return out.str();
}

Sidecar parse_sidecar(const std::string& text) {
  Sidecar s;
  std::istringstream in(text);
  std::string line;
  PveaConfig config;
  bool has_config = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::invalid_argument, "sidecar line without '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "uid") {
      s.uid = parse_hex16(value);
    } else if (key == "schedule") {
      std::istringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw Error(Errc::invalid_argument, "schedule item '" + item + "'");
        const std::string state = item.substr(colon + 1);
        if (state != "on" && state != "off") throw Error(Errc::invalid_argument, "schedule item '" + item + "'");
        s.schedule.push_back({static_cast<std::uint32_t>(parse_uint(item.substr(0, colon), "schedule")),
                              state == "on"});
      }
    } else {
      has_config = true;
      if (key == "mode") {
        config.cipher.mode = parse_mode(value);
      } else if (key == "block_bits") {
        config.cipher.block_bits = static_cast<int>(parse_uint(value, key));
      } else if (key == "gop_keying") {
        config.cipher.gop_keying = parse_bool(value, key);
      } else if (key == "factors") {
        std::istringstream items(value);
        std::string item;
        int i = 0;
        while (std::getline(items, item, ',')) {
          if (i >= kCategoryCount) throw Error(Errc::invalid_argument, "too many factors");
          config.factors.fixed[i++] = factor_to_fixed(std::stod(trim(item)));
        }
        if (i != kCategoryCount) throw Error(Errc::invalid_argument, "expected three factors");
      } else if (key == "period") {
        config.period = static_cast<std::uint32_t>(parse_uint(value, key));
      } else if (key == "strategy") {
        if (value == "typical") {
          config.strategy = SelectionStrategy::typical;
        } else if (value == "se_array") {
          config.strategy = SelectionStrategy::se_array;
        } else {
          throw Error(Errc::invalid_argument, "unknown strategy '" + value + "'");
        }
      } else if (key == "intra_blocks_only") {
        config.intra_blocks_only = parse_bool(value, key);
      } else if (key == "signs_only") {
        config.signs_only = parse_bool(value, key);
      } else {
        throw Error(Errc::invalid_argument, "unknown sidecar key '" + key + "'");
      }
    }
  }
  if (has_config) {
    config.schedule = s.schedule;
    s.config = config;
  }
  return s;
}

PassResult encrypt_in_place(std::span<std::uint8_t> bytes, const Key& key,
                            const PveaConfig& config, std::optional<Uid> uid) {
  return run_pass(bytes, key, config, uid, false);
}

PassResult decrypt_in_place(std::span<std::uint8_t> bytes, const Key& key,
                            const PveaConfig& config, std::optional<Uid> uid) {
  return run_pass(bytes, key, config, uid, true);
}

std::vector<std::uint8_t> encrypt(std::span<const std::uint8_t> bytes, const Key& key,
                                  const PveaConfig& config, std::optional<Uid> uid) {
  std::vector<std::uint8_t> out(bytes.begin(), bytes.end());
  encrypt_in_place(out, key, config, uid);
  return out;
}

std::vector<std::uint8_t> decrypt(std::span<const std::uint8_t> bytes, const Key& key,
                                  const PveaConfig& config, std::optional<Uid> uid) {
  std::vector<std::uint8_t> out(bytes.begin(), bytes.end());
  decrypt_in_place(out, key, config, uid);
  return out;
}

std::uint32_t count_pictures(std::span<const std::uint8_t> bytes) {
  BitCursor c(bytes);
  std::uint32_t n = 0;
  while (auto sc = next_start_code(c)) {
    if (sc->code == kPictureStartCode) ++n;
  }
  return n;
}

std::vector<std::string> factor_warnings(const StreamMap& map, const Factors& factors) {
  std::vector<std::string> out;
  const Census cen = census(map);
  for (int c = 0; c < kCategoryCount; ++c) {
    const auto cat = static_cast<Category>(c);
    if (factors[cat] == 0) continue;
    for (std::size_t pic = 0; pic < cen.per_picture.size(); ++pic) {
      const double expected = factors.real(cat) * static_cast<double>(cen.per_picture[pic]);
      if (expected > 0.0 && expected < 100.0) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "p_%s=%s with N=%zu FLCs in picture %zu gives p*N=%.1f < 100; a "
                      "deblocking search may cost less than 2^100",
                      category_name(cat), format_factor(factors[cat]).c_str(),
                      cen.per_picture[pic], pic, expected);
        out.emplace_back(buf);
        break;
      }
    }
  }
  return out;
}

}  // namespace pvea
