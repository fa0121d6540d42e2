#pragma once

// Attacks and complexity figures: the error-concealment attack on PVEA
// streams, the deblocking search bound, and cryptanalysis of two legacy
// scrambling schemes on synthetic data.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pvea {

// ---- error-concealment attack --------------------------------------------

enum class EcaScope : std::uint8_t { ac_signs, full };

/// ac_signs: every coefficient sign bit set to 0 and every escape level made
/// positive. full: additionally every intra DC differential, motion sign and
/// motion residual field zeroed.
void eca_in_place(std::span<std::uint8_t> bytes, EcaScope scope);
std::vector<std::uint8_t> eca(std::span<const std::uint8_t> bytes, EcaScope scope);

// ---- deblocking search complexity ----------------------------------------

inline constexpr int kSecurityBits = 100;

struct ComplexityReport {
  std::uint64_t n = 0;
  double p = 0.0;
  std::uint64_t selected = 0;         // round(N * p)
  double log2_binomial = 0.0;
  double log2_complexity = 0.0;       // log2(C(N, k)) + k
  bool meets_threshold = false;       // C(N, k) * 2^k >= 2^100, decided exactly
  std::string binomial_decimal;       // C(N, k) in full
};

ComplexityReport deblock_complexity(std::uint64_t n, double p);
ComplexityReport deblock_complexity_k(std::uint64_t n, std::uint64_t k);
double log2_binomial(std::uint64_t n, std::uint64_t k);

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const { return double(num) / double(den); }
  bool operator==(const Rational&) const = default;
};

struct MinPBound {
  std::uint64_t n = 0;
  Rational conservative;             // 100 / N, reduced
  std::optional<std::uint64_t> k;    // least k with log2 C(N,k) + k >= 100
  std::optional<Rational> refined;   // k / N, reduced
};

MinPBound min_p_bound(std::uint64_t n);

// ---- Pazarci-Dipcin affine scrambling --------------------------------------

struct PdParams {
  int alpha_star = 50;  // alpha = alpha_star / 100
  bool d = false;
  bool n = false;
  int fs = 255;
  double alpha() const { return alpha_star / 100.0; }
  bool operator==(const PdParams&) const = default;
};

struct Image {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<int> pixels;  // row-major
  int& at(std::uint32_t x, std::uint32_t y) { return pixels[std::size_t{y} * width + x]; }
  int at(std::uint32_t x, std::uint32_t y) const { return pixels[std::size_t{y} * width + x]; }
};

/// Exact real-valued affine map of one pixel.
double pd_map(double x, const PdParams& params);
/// Integer form: nearest integer (halves up), clamped to [0, FS].
int pd_map_pixel(int x, const PdParams& params);
Image pd_encrypt(const Image& block, const PdParams& params);
/// Inverse map (real-valued).
double pd_unmap(double y, const PdParams& params);

/// Encrypts the four M x M scrambling blocks of a 2M x 2M image
/// (order: top-left, top-right, bottom-left, bottom-right).
Image pd_encrypt_2x2(const Image& image, const std::array<PdParams, 4>& params);

struct PdEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double alpha = 0.0;
  int alpha_star = 0;  // round(100 * alpha)
  bool d = false;
  bool n = false;
};

/// Least-squares fit of (x_i, x_o) pairs. DegenerateInput when every x_i is
/// equal or fewer than two pairs are given.
PdEstimate pd_kpa(const std::vector<std::pair<double, double>>& pairs, int fs = 255);

// How N relates to D in the brute-force search space.
enum class DnCoupling : std::uint8_t { equal, opposite, free };

struct PdBruteforceOptions {
  int fs = 255;
  int alpha_min = 50;
  int alpha_max = 90;
  DnCoupling coupling = DnCoupling::equal;
  /// Weight of the preference for the smallest feasible alpha, per unit of
  /// alpha_star; breaks the common-scale ambiguity of the boundary cost.
  double alpha_weight = 0.01;
};

struct PdBruteforceResult {
  std::array<PdParams, 4> params{};
  double cost = 0.0;
  std::uint64_t candidates_per_sb = 0;
  double naive_log2 = 0.0;  // log2(candidates^4)
  std::uint64_t evaluated_pairs = 0;
};

/// Ciphertext-only search over every candidate of the four scrambling
/// blocks, scoring trial decryptions by the discontinuity across the four
/// inner SB boundaries. Exact over the joint space, using the ring structure
/// of the 2 x 2 layout.
PdBruteforceResult pd_bruteforce(const Image& cipher, const PdBruteforceOptions& options = {});

/// Boundary discontinuity of a decrypted 2M x 2M image: absolute second
/// difference across the inner SB edges, relative to the slope next to them,
/// so a common rescaling of the image leaves it unchanged.
double pd_boundary_cost(const Image& image);

/// log2(candidates^4) for the joint search.
double pd_joint_log2(std::uint64_t candidates_per_sb);

struct Keyspace {
  std::uint64_t count = 0;
  double log2 = 0.0;
};

/// (3 * (2M/P)^2)^2; InvalidArgument unless P divides M.
Keyspace pd_keyspace(std::uint64_t m, std::uint64_t p);

// ---- Wang-Yu-Zheng sub-band shifting ----------------------------------------

inline constexpr int kWyzBands = 16;
using CoeffBlock = std::array<int, 64>;  // row-major, index v * 8 + u

/// Band of each coefficient position (row-major); band 0 is DC.
extern const std::array<std::uint8_t, 64> kWyzSubband;
/// The rule the table was built from: 0 for DC, else
/// 1 + round((hypot(u, v) - 1) * 14 / (sqrt(98) - 1)).
int wyz_band_formula(int u, int v);

struct WyzParams {
  double beta = 0.0;
  double c = 0.0;
  std::array<int, kWyzBands> a{};
};

/// Rounding toward zero.
int trunc_toward_zero(double v);
/// Rounded (half away from zero) signed mean of each band's AC coefficients;
/// entry 0 is the DC value itself.
std::array<int, kWyzBands> wyz_band_averages(const CoeffBlock& block);

CoeffBlock wyz_encrypt(const CoeffBlock& block, const WyzParams& params, bool encrypt_dc,
                       int dc_sign);

struct WyzPair {
  int band = 0;
  int plain = 0;
  int cipher = 0;
};

struct FractionInterval {
  // [lo_num / lo_den, hi_num / hi_den)
  std::int64_t lo_num = 0;
  std::int64_t lo_den = 1;
  std::int64_t hi_num = 1;
  std::int64_t hi_den = 1;
  bool hi_closed = true;
  double lo() const { return double(lo_num) / double(lo_den); }
  double hi() const { return double(hi_num) / double(hi_den); }
  bool contains(double x) const;
  bool empty() const;
};

struct WyzKpaResult {
  std::array<std::optional<int>, kWyzBands> shifts{};
  /// Bracket for beta from bands with known nonzero averages; starts as [0, 1].
  FractionInterval beta;
  int informative_bands = 0;
};

/// InconsistentPairs when two pairs of one band imply different shifts.
WyzKpaResult wyz_kpa(const std::vector<WyzPair>& pairs,
                     const std::optional<std::array<int, kWyzBands>>& averages = std::nullopt);

}  // namespace pvea
