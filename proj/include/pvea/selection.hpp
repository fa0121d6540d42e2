#pragma once

// Which FLC sites get encrypted: one SE-array mask per category, consulted
// with a per-category running element counter.

#include <array>
#include <cstdint>
#include <vector>

#include "pvea/cipher.hpp"
#include "pvea/flc.hpp"

namespace pvea {

inline constexpr std::uint16_t kFactorScale = 10000;

/// Validates p in [0, 1] and returns round(p * 10000).
std::uint16_t factor_to_fixed(double p);
inline double fixed_to_factor(std::uint16_t fixed) { return fixed / double(kFactorScale); }

struct Factors {
  std::array<std::uint16_t, kCategoryCount> fixed{};  // sr, sd, mv

  static Factors from_real(double p_sr, double p_sd, double p_mv);
  std::uint16_t operator[](Category c) const { return fixed[static_cast<int>(c)]; }
  double real(Category c) const { return fixed_to_factor((*this)[c]); }
  bool operator==(const Factors&) const = default;
};

/// round(N * p) with the factor in fixed point; exact.
std::size_t selected_count(std::size_t period, std::uint16_t p_fixed);

class SelectionMask {
 public:
  SelectionMask() = default;
  SelectionMask(std::vector<std::uint8_t> bits, std::size_t count)
      : bits_(std::move(bits)), count_(count) {}

  std::size_t period() const noexcept { return bits_.size(); }
  std::size_t count() const noexcept { return count_; }
  bool is_selected(std::uint64_t index) const { return bits_[index % bits_.size()] != 0; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
};

/// Exactly round(N * p) ones placed by a partial Fisher-Yates shuffle driven
/// by TestPrf(seed).
SelectionMask build_mask(std::uint16_t p_fixed, std::size_t period, std::uint64_t seed);
SelectionMask build_mask(double p, std::size_t period, std::uint64_t seed);

/// Draws r = (next >> 11) * 2^-53 and returns r <= p.
bool select_typical(double p, WordGenerator& rng);

enum class SelectionStrategy : std::uint8_t { se_array = 0, typical = 1 };

inline constexpr std::uint64_t kMaskTagBase = 0x5345000000000000ull;     // "SE"
inline constexpr std::uint64_t kTypicalTagBase = 0x5459000000000000ull;  // "TY"

/// Mask seed of one category: first output of derive_prf(key, uid, 0, tag).
std::uint64_t mask_seed(const Key& key, const Uid& uid, Category category);

// Stateful per-stream selector.
class Selector {
 public:
  Selector(const Factors& factors, std::size_t period, SelectionStrategy strategy,
           const Key& key, const Uid& uid);

  /// Decides the next element of `category` and advances its counter.
  bool next(Category category);
  std::uint64_t counter(Category category) const { return counters_[static_cast<int>(category)]; }
  const SelectionMask& mask(Category category) const { return masks_[static_cast<int>(category)]; }

 private:
  Factors factors_;
  SelectionStrategy strategy_;
  std::array<SelectionMask, kCategoryCount> masks_;
  std::array<TestPrf, kCategoryCount> typical_{TestPrf(1), TestPrf(1), TestPrf(1)};
  std::array<std::uint64_t, kCategoryCount> counters_{};
};

}  // namespace pvea
