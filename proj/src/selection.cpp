#include "pvea/selection.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "pvea/error.hpp"

namespace pvea {

std::uint16_t factor_to_fixed(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(Errc::invalid_argument, "factor " + std::to_string(p) + " outside [0, 1]");
  }
  return static_cast<std::uint16_t>(std::floor(p * kFactorScale + 0.5));
}

Factors Factors::from_real(double p_sr, double p_sd, double p_mv) {
  Factors f;
  f.fixed = {factor_to_fixed(p_sr), factor_to_fixed(p_sd), factor_to_fixed(p_mv)};
  return f;
}

std::size_t selected_count(std::size_t period, std::uint16_t p_fixed) {
  return (period * p_fixed + kFactorScale / 2) / kFactorScale;
}

SelectionMask build_mask(std::uint16_t p_fixed, std::size_t period, std::uint64_t seed) {
  if (period == 0) throw Error(Errc::invalid_argument, "mask period must be positive");
  if (p_fixed > kFactorScale) throw Error(Errc::invalid_argument, "factor above 1");
  const std::size_t count = selected_count(period, p_fixed);
  std::vector<std::size_t> pool(period);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  TestPrf prf(seed);
  std::vector<std::uint8_t> bits(period, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(prf.next() % (period - i));
    std::swap(pool[i], pool[j]);
    bits[pool[i]] = 1;
  }
  return SelectionMask(std::move(bits), count);
}

SelectionMask build_mask(double p, std::size_t period, std::uint64_t seed) {
  return build_mask(factor_to_fixed(p), period, seed);
}

bool select_typical(double p, WordGenerator& rng) {
  const double r = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
  return r <= p;
}

std::uint64_t mask_seed(const Key& key, const Uid& uid, Category category) {
  TestPrf prf = derive_prf(key, uid, 0, kMaskTagBase | (static_cast<std::uint64_t>(category) + 1));
  return prf.next();
}

Selector::Selector(const Factors& factors, std::size_t period, SelectionStrategy strategy,
                   const Key& key, const Uid& uid)
    : factors_(factors), strategy_(strategy) {
  for (int c = 0; c < kCategoryCount; ++c) {
    const auto cat = static_cast<Category>(c);
    if (strategy_ == SelectionStrategy::se_array) {
      masks_[c] = build_mask(factors_[cat], period, mask_seed(key, uid, cat));
    } else {
      typical_[c] = derive_prf(key, uid, 0, kTypicalTagBase | (static_cast<std::uint64_t>(c) + 1));
    }
  }
}

bool Selector::next(Category category) {
  const int c = static_cast<int>(category);
  const std::uint64_t i = counters_[c]++;
  if (strategy_ == SelectionStrategy::se_array) return masks_[c].is_selected(i);
  return select_typical(factors_.real(category), typical_[c]);
}

}  // namespace pvea
