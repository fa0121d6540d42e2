#include <cmath>
#include <cstdlib>

#include "pvea/attacks.hpp"
#include "pvea/error.hpp"

namespace pvea {

const std::array<std::uint8_t, 64> kWyzSubband = {
    0,  1,  3,  4,  6,  7,  9,  10,  //
    1,  2,  3,  4,  6,  7,  9,  11,  //
    3,  3,  4,  5,  6,  8,  9,  11,  //
    4,  4,  5,  6,  7,  9,  10, 11,  //
    6,  6,  6,  7,  8,  9,  11, 12,  //
    7,  7,  8,  9,  9,  11, 12, 13,  //
    9,  9,  9,  10, 11, 12, 13, 14,  //
    10, 11, 11, 11, 12, 13, 14, 15,
};

namespace {

// a/b < c/d for positive denominators.
bool frac_less(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) { return a * d < c * b; }

void intersect(FractionInterval& cur, std::int64_t lo_num, std::int64_t lo_den, std::int64_t hi_num,
               std::int64_t hi_den) {
  if (frac_less(cur.lo_num, cur.lo_den, lo_num, lo_den)) {
    cur.lo_num = lo_num;
    cur.lo_den = lo_den;
  }
  if (!frac_less(cur.hi_num, cur.hi_den, hi_num, hi_den)) {
    cur.hi_num = hi_num;
    cur.hi_den = hi_den;
    cur.hi_closed = false;
  }
}

}  // namespace

int wyz_band_formula(int u, int v) {
  if (u == 0 && v == 0) return 0;
  const double d = std::hypot(double(u), double(v));
  return 1 + static_cast<int>(std::floor((d - 1.0) * 14.0 / (std::sqrt(98.0) - 1.0) + 0.5));
}

int trunc_toward_zero(double v) { return static_cast<int>(std::trunc(v)); }

std::array<int, kWyzBands> wyz_band_averages(const CoeffBlock& block) {
  std::array<long, kWyzBands> sum{};
  std::array<int, kWyzBands> count{};
  for (int i = 1; i < 64; ++i) {
    sum[kWyzSubband[i]] += block[i];
    ++count[kWyzSubband[i]];
  }
  std::array<int, kWyzBands> a{};
  a[0] = block[0];
  for (int b = 1; b < kWyzBands; ++b) {
    a[b] = static_cast<int>(std::lround(double(sum[b]) / double(count[b])));
  }
  return a;
}

CoeffBlock wyz_encrypt(const CoeffBlock& block, const WyzParams& params, bool encrypt_dc,
                       int dc_sign) {
  CoeffBlock out = block;
  for (int i = 1; i < 64; ++i) {
    const int s = trunc_toward_zero(params.beta * params.a[kWyzSubband[i]]);
    out[i] = block[i] >= 0 ? block[i] - s : block[i] + s;
  }
  if (encrypt_dc) {
    const int s = trunc_toward_zero(params.c * params.beta * params.a[0]);
    out[0] = block[0] + (dc_sign < 0 ? -s : s);
  }
  return out;
}

bool FractionInterval::contains(double x) const {
  if (x * double(lo_den) < double(lo_num)) return false;
  return hi_closed ? x * double(hi_den) <= double(hi_num) : x * double(hi_den) < double(hi_num);
}

bool FractionInterval::empty() const {
  if (frac_less(hi_num, hi_den, lo_num, lo_den)) return true;
  return !hi_closed && !frac_less(lo_num, lo_den, hi_num, hi_den);
}

WyzKpaResult wyz_kpa(const std::vector<WyzPair>& pairs,
                     const std::optional<std::array<int, kWyzBands>>& averages) {
  WyzKpaResult r;
  r.beta = FractionInterval{0, 1, 1, 1, true};
  for (const WyzPair& p : pairs) {
    if (p.band < 0 || p.band >= kWyzBands) {
      throw Error(Errc::invalid_argument, "band " + std::to_string(p.band) + " outside 0..15");
    }
    const int s = p.band == 0 ? std::abs(p.cipher - p.plain)
                              : (p.plain >= 0 ? p.plain - p.cipher : p.cipher - p.plain);
    auto& slot = r.shifts[p.band];
    if (slot && *slot != s) {
      throw Error(Errc::inconsistent_pairs, "band " + std::to_string(p.band) + " implies shifts " +
                                                std::to_string(*slot) + " and " + std::to_string(s));
    }
    slot = s;
  }
  if (!averages) return r;
  for (int b = 1; b < kWyzBands; ++b) {
    if (!r.shifts[b]) continue;
    const int a = (*averages)[b];
    const int s = *r.shifts[b];
    if (a == 0) {
      if (s != 0) {
        throw Error(Errc::inconsistent_pairs, "band " + std::to_string(b) + " has a zero average but shift " +
                                                  std::to_string(s));
      }
      continue;
    }
    if (s != 0 && (s < 0) != (a < 0)) {
      throw Error(Errc::inconsistent_pairs, "band " + std::to_string(b) + ": shift and average differ in sign");
    }
    const std::int64_t sa = std::abs(s);
    const std::int64_t aa = std::abs(a);
    intersect(r.beta, sa, aa, sa + 1, aa);
    ++r.informative_bands;
  }
  return r;
}

}  // namespace pvea
