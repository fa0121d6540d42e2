#pragma once

// One-pass perceptual encryption of MPEG-1 elementary streams: parse, select,
// transform the selected FLC payloads in place. Only provision() changes the
// stream size.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pvea/cipher.hpp"
#include "pvea/mpeg_syntax.hpp"
#include "pvea/selection.hpp"

namespace pvea {

struct ScheduleEntry {
  std::uint32_t picture = 0;  // switch point
  bool on = true;
  bool operator==(const ScheduleEntry&) const = default;
};
/// Encryption is on until the first switch point; each entry holds from its
/// picture to the next entry.
using Schedule = std::vector<ScheduleEntry>;

struct PveaConfig {
  Factors factors;
  CipherConfig cipher;
  std::uint32_t period = 1024;
  SelectionStrategy strategy = SelectionStrategy::se_array;
  bool intra_blocks_only = false;
  bool signs_only = false;
  Schedule schedule;
};

/// Schedule that encrypts only pictures first..last (inclusive).
Schedule picture_range_schedule(std::uint32_t first, std::uint32_t last);
bool schedule_on(const Schedule& schedule, std::uint32_t picture);

// Public parameters carried in a user_data segment after the sequence header.
struct MetaHeader {
  std::uint8_t version = 1;
  CipherConfig cipher;
  SelectionStrategy strategy = SelectionStrategy::se_array;
  bool intra_blocks_only = false;
  bool signs_only = false;
  Factors factors;
  std::uint16_t period = 1024;
  Uid uid{};
};

inline constexpr std::size_t kMetaPayloadSize = 35;

MetaHeader make_meta(const PveaConfig& config, const Uid& uid);
/// Applies the header's parameters; the schedule is left untouched.
void apply_meta(const MetaHeader& meta, PveaConfig& config);
std::vector<std::uint8_t> encode_meta(const MetaHeader& meta);
/// nullopt unless `payload` is a well-formed header.
std::optional<MetaHeader> decode_meta(std::span<const std::uint8_t> payload);
std::optional<MetaHeader> find_meta(const StreamMap& map);

/// Inserts the header segment after the first sequence header.
/// Throws AlreadyProvisioned, MissingUid for the all-zero UID.
std::vector<std::uint8_t> provision(std::span<const std::uint8_t> bytes, const Uid& uid,
                                    const PveaConfig& config);
/// Rewrites an existing header with new parameters; the size is unchanged.
void update_meta_in_place(std::span<std::uint8_t> bytes, const MetaHeader& meta);

struct Sidecar {
  std::optional<Uid> uid;
  Schedule schedule;
  std::optional<PveaConfig> config;  // full parameters for unprovisioned streams
};

std::string format_sidecar(const Sidecar& sidecar);
Sidecar parse_sidecar(const std::string& text);

struct EngineStats {
  std::uint64_t bits_parsed = 0;
  std::uint64_t bits_patched = 0;
  std::uint64_t sites_seen = 0;
  std::uint64_t sites_selected = 0;
  std::array<std::uint64_t, kCategoryCount> selected_per_category{};
  std::uint64_t cascade_flushes = 0;
};

struct PassResult {
  StreamMap map;  // of the input stream (skeleton identical to the output)
  EngineStats stats;
  std::vector<std::string> warnings;
};

/// `uid` overrides the embedded header; without either, MissingUid.
PassResult encrypt_in_place(std::span<std::uint8_t> bytes, const Key& key,
                            const PveaConfig& config, std::optional<Uid> uid = std::nullopt);
PassResult decrypt_in_place(std::span<std::uint8_t> bytes, const Key& key,
                            const PveaConfig& config, std::optional<Uid> uid = std::nullopt);

std::vector<std::uint8_t> encrypt(std::span<const std::uint8_t> bytes, const Key& key,
                                  const PveaConfig& config, std::optional<Uid> uid = std::nullopt);
std::vector<std::uint8_t> decrypt(std::span<const std::uint8_t> bytes, const Key& key,
                                  const PveaConfig& config, std::optional<Uid> uid = std::nullopt);

/// Counts picture start codes without parsing.
std::uint32_t count_pictures(std::span<const std::uint8_t> bytes);

/// Warnings for categories with 0 < p * N_picture < 100 in some picture.
std::vector<std::string> factor_warnings(const StreamMap& map, const Factors& factors);

}  // namespace pvea
