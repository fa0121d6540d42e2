// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pvea/attacks.hpp"
#include "pvea/decoder.hpp"
#include "pvea/engine.hpp"
#include "pvea/forge.hpp"
#include "support/fixtures.hpp"

using namespace pvea;
using namespace pvea::testing;

namespace {

// Pinned tolerances and sizes.
constexpr int kRoundTripFixtures = 200;
constexpr int kFactorCombos = 20;
constexpr double kRoundTripBudgetSeconds = 60.0;
constexpr double kComplexityLogTolerance = 0.1;
constexpr double kComplexityLogAt009 = 101.9445;  // log2(C(200,18) * 2^18), exact binomial
constexpr double kLegacyLogTolerance = 0.05;
constexpr int kPdKpaPairs = 16;
constexpr int kPdImages = 50;
constexpr int kPdRequired = 48;
constexpr std::uint32_t kPdBlockSize = 32;
constexpr int kPdAlphaTolerance = 1;
constexpr int kWyzDraws = 100;
constexpr int kEcaDraws = 50;
constexpr double kEcaPsnrMargin = 1.0;
constexpr double kMonotoneSlackDb = 0.5;
constexpr int kMonotoneMaxInversions = 1;
constexpr int kMonotoneKeys = 4;
constexpr double kIdctTolerance = 1e-9;
constexpr double kParsevalTolerance = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Line {
  int id;
  const char* title;
  Outcome outcome;
  double seconds;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Uid random_uid(Rng& rng) {
  Uid u{};
  do {
    for (auto& b : u) b = static_cast<std::uint8_t>(rng());
  } while (uid_absent(u));
  return u;
}

// ---- criteria 1-3 -----------------------------------------------------------

struct RoundTripResult {
  Outcome lossless;
  Outcome size;
  Outcome skeleton;
};

bool same_skeleton(const StreamMap& a, const StreamMap& b) {
  if (a.sites.size() != b.sites.size()) return false;
  for (std::size_t i = 0; i < a.sites.size(); ++i) {
    if (a.sites[i].bit_offset != b.sites[i].bit_offset || a.sites[i].bit_length != b.sites[i].bit_length ||
        a.sites[i].kind != b.sites[i].kind) {
      return false;
    }
  }
  return true;
}

// Bits a configuration is allowed to change, from the plaintext site list.
std::vector<std::uint8_t> allowed_bits(const StreamMap& map, const PveaConfig& c) {
  std::vector<std::uint8_t> allowed(map.total_bits, 0);
  for (const FlcSite& s : map.sites) {
    const Category cat = category_of(s.kind);
    if (c.factors[cat] == 0) continue;
    if (c.intra_blocks_only && cat != Category::sr && !s.macroblock_intra) continue;
    const int k = kind_index(s.kind);
    const bool msb_only = c.signs_only && (k == 0 || k == 4);
    const int len = msb_only ? 1 : s.bit_length;
    for (int i = 0; i < len; ++i) allowed[s.bit_offset + static_cast<std::uint64_t>(i)] = 1;
  }
  return allowed;
}

RoundTripResult round_trip_suite() {
  Rng rng(0x5eed0001);
  const double grid[4] = {0.0, 0.2, 0.5, 1.0};
  std::vector<std::array<int, 3>> combos;
  {
    std::vector<std::array<int, 3>> all;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) all.push_back({a, b, c});
    std::shuffle(all.begin(), all.end(), rng);
    combos.assign(all.begin(), all.begin() + kFactorCombos);
  }
  std::uint64_t cases = 0, lossless_fail = 0, size_fail = 0, skeleton_fail = 0, changed = 0;
  for (int f = 0; f < kRoundTripFixtures; ++f) {
    const std::vector<std::uint8_t> plain = forge_stream(random_forge_spec(rng)).bytes;
    const StreamMap map = parse_stream(plain);
    for (int m = 0; m < 4; ++m) {
      for (const auto& combo : combos) {
        PveaConfig c;
        c.factors = Factors::from_real(grid[combo[0]], grid[combo[1]], grid[combo[2]]);
        c.cipher.mode = static_cast<CipherMode>(m);
        c.cipher.block_bits = 1 + static_cast<int>(rng() % 64);
        c.cipher.gop_keying = (rng() & 1) != 0;
        c.period = static_cast<std::uint32_t>(1 + rng() % 2048);
        c.strategy = (rng() % 4 == 0) ? SelectionStrategy::typical : SelectionStrategy::se_array;
        c.intra_blocks_only = rng() % 4 == 0;
        c.signs_only = rng() % 4 == 0;
        const Key key = random_key(rng);
        const Uid uid = random_uid(rng);
        ++cases;
        const std::vector<std::uint8_t> cipher = encrypt(plain, key, c, uid);
        if (cipher != plain) ++changed;
        if (decrypt(cipher, key, c, uid) != plain) ++lossless_fail;

        bool size_ok = cipher.size() == plain.size();
        if (size_ok) {
          const std::vector<std::uint8_t> allowed = allowed_bits(map, c);
          for (std::uint64_t bit : diff_bits(plain, cipher)) {
            if (!allowed[bit]) {
              size_ok = false;
              break;
            }
          }
        }
        if (!size_ok) ++size_fail;

        try {
          if (!same_skeleton(map, parse_stream(cipher))) ++skeleton_fail;
        } catch (const Error&) {
          ++skeleton_fail;
        }
      }
    }
  }
  RoundTripResult r;
  const std::string base = std::to_string(cases) + " cases (" + std::to_string(kRoundTripFixtures) +
                           " fixtures x 4 modes x " + std::to_string(kFactorCombos) + " factor combos)";
  r.lossless = {lossless_fail == 0, base + ", " + std::to_string(lossless_fail) + " mismatches, " +
                                        std::to_string(changed) + " ciphertexts differ from plaintext"};
  r.size = {size_fail == 0, std::to_string(size_fail) + " cases with size change or diff outside selected sites"};
  r.skeleton = {skeleton_fail == 0, std::to_string(skeleton_fail) + " ciphertexts with a different site skeleton"};
  return r;
}

// ---- criteria 4, 5 ------------------------------------------------------------

Outcome deblocking_bounds() {
  const ComplexityReport half = deblock_complexity(200, 0.5);
  const MinPBound bound = min_p_bound(200);
  const ComplexityReport r = deblock_complexity(200, 0.09);
  const bool ok = bound.conservative == Rational{1, 2} && half.selected == 100 && half.meets_threshold &&
                  r.selected == 18 && std::abs(r.log2_complexity - kComplexityLogAt009) <= kComplexityLogTolerance &&
                  r.log2_complexity >= 100.0 && r.meets_threshold;
  return {ok, "conservative p >= " + std::to_string(bound.conservative.num) + "/" +
                  std::to_string(bound.conservative.den) + ", log2 complexity(200, 0.09) = " +
                  fmt("%.4f", r.log2_complexity) + ", refined p >= " +
                  (bound.refined ? std::to_string(bound.refined->num) + "/" + std::to_string(bound.refined->den)
                                 : std::string("none"))};
}

Outcome legacy_anchors() {
  const double l82 = pd_joint_log2(82);
  const double l202 = pd_joint_log2(202);
  const Keyspace half = pd_keyspace(16, 8);
  const Keyspace quarter = pd_keyspace(16, 4);
  const bool ok = std::abs(l82 - 25.43) <= kLegacyLogTolerance && std::abs(l202 - 30.63) <= kLegacyLogTolerance &&
                  half.count == 2304 && quarter.count == 36864;
  return {ok, "log2(82^4) = " + fmt("%.4f", l82) + ", log2(202^4) = " + fmt("%.4f", l202) + ", keyspace " +
                  std::to_string(half.count) + " / " + std::to_string(quarter.count)};
}

// ---- criterion 6 ----------------------------------------------------------------

Outcome pd_known_plaintext() {
  Rng rng(0x5eed0006);
  int total = 0, good = 0;
  for (int a = 50; a <= 90; ++a) {
    for (int dn = 0; dn < 4; ++dn) {
      const PdParams p{a, (dn & 2) != 0, (dn & 1) != 0};
      std::vector<std::pair<double, double>> pairs;
      for (int i = 0; i < kPdKpaPairs; ++i) {
        const double x = static_cast<double>(rng() % 256);
        pairs.emplace_back(x, pd_map(x, p));
      }
      const PdEstimate e = pd_kpa(pairs);
      ++total;
      if (e.alpha_star == a && e.d == p.d && e.n == p.n) ++good;
    }
  }
  return {good == total, std::to_string(good) + "/" + std::to_string(total) + " (alpha*, D, N) recovered exactly"};
}

// ---- criterion 7 ----------------------------------------------------------------

Outcome pd_brute_force() {
  Rng rng(0x5eed0007);
  int exact = 0, alpha_ok = 0, dn_up_to_complement = 0;
  for (int i = 0; i < kPdImages; ++i) {
    const Image plain = smooth_pd_image(rng, kPdBlockSize);
    std::array<PdParams, 4> truth{};
    for (auto& p : truth) {
      p.alpha_star = 50 + static_cast<int>(rng() % 41);
      p.d = (rng() & 1) != 0;
      p.n = p.d;
    }
    const PdBruteforceResult r = pd_bruteforce(pd_encrypt_2x2(plain, truth));
    bool all_alpha = true, all_dn = true, all_flipped = true;
    for (int sb = 0; sb < 4; ++sb) {
      all_alpha &= std::abs(r.params[sb].alpha_star - truth[sb].alpha_star) <= kPdAlphaTolerance;
      all_dn &= r.params[sb].d == truth[sb].d && r.params[sb].n == truth[sb].n;
      all_flipped &= r.params[sb].d != truth[sb].d && r.params[sb].n != truth[sb].n;
    }
    alpha_ok += all_alpha;
    dn_up_to_complement += all_dn || all_flipped;
    exact += all_alpha && all_dn;
  }
  return {exact >= kPdRequired,
          std::to_string(exact) + "/" + std::to_string(kPdImages) + " exact (need " + std::to_string(kPdRequired) +
              "); alpha* within 1 in " + std::to_string(alpha_ok) + ", D/N correct up to global complement in " +
              std::to_string(dn_up_to_complement)};
}

// ---- criterion 8 ----------------------------------------------------------------

Outcome wyz_recovery() {
  Rng rng(0x5eed0008);
  int good = 0;
  for (int draw = 0; draw < kWyzDraws; ++draw) {
    CoeffBlock plain{};
    plain[0] = static_cast<int>(rng() % 2048);
    for (int i = 1; i < 64; ++i) {
      const int span = 1 + 400 / (1 + i / 4);
      plain[i] = static_cast<int>(rng() % (2 * span + 1)) - span;
    }
    WyzParams params;
    params.beta = static_cast<double>(1 + rng() % 10006) / 10007.0;
    params.c = static_cast<double>(rng() % 101) / 100.0;
    params.a = wyz_band_averages(plain);
    const CoeffBlock cipher = wyz_encrypt(plain, params, true, (rng() & 1) ? 1 : -1);

    std::vector<WyzPair> pairs;
    for (int i = 0; i < 64; ++i) pairs.push_back({kWyzSubband[i], plain[i], cipher[i]});
    const WyzKpaResult r = wyz_kpa(pairs, params.a);
    bool ok = r.beta.contains(params.beta);
    for (int b = 1; b < kWyzBands; ++b) {
      const int expected = static_cast<int>(params.beta * params.a[b]);  // the cast truncates toward zero
      ok &= r.shifts[b].has_value() && *r.shifts[b] == expected;
    }
    const int dc_expected = static_cast<int>(params.c * params.beta * params.a[0]);
    ok &= r.shifts[0].has_value() && *r.shifts[0] == dc_expected;
    good += ok;
  }
  return {good == kWyzDraws, std::to_string(good) + "/" + std::to_string(kWyzDraws) +
                                 " draws with every shift exact and beta bracketed"};
}

// ---- criterion 9 ----------------------------------------------------------------

PveaConfig random_config(Rng& rng, bool with_sr_mv) {
  const double grid[5] = {0.0, 0.2, 0.5, 0.75, 1.0};
  PveaConfig c;
  c.factors = Factors::from_real(with_sr_mv ? grid[rng() % 5] : 0.0, grid[rng() % 5], with_sr_mv ? grid[rng() % 5] : 0.0);
  c.cipher.mode = static_cast<CipherMode>(rng() % 4);
  c.cipher.block_bits = 1 + static_cast<int>(rng() % 64);
  c.cipher.gop_keying = (rng() & 1) != 0;
  c.signs_only = rng() % 4 == 0;
  c.intra_blocks_only = rng() % 4 == 0;
  return c;
}

Outcome eca_properties() {
  Rng rng(0x5eed0009);
  int full_ok = 0, signs_ok = 0, idem_ok = 0;
  for (int i = 0; i < kEcaDraws; ++i) {
    const std::vector<std::uint8_t> plain = forge_stream(random_forge_spec(rng)).bytes;
    const Key key = random_key(rng);
    const Uid uid = random_uid(rng);
    const auto full = eca(plain, EcaScope::full);
    full_ok += eca(encrypt(plain, key, random_config(rng, true), uid), EcaScope::full) == full;
    signs_ok += eca(encrypt(plain, key, random_config(rng, false), uid), EcaScope::ac_signs) ==
                eca(plain, EcaScope::ac_signs);
    idem_ok += eca(full, EcaScope::full) == full;
  }
  std::string psnr_text;
  bool psnr_ok = true;
  Rng krng(0x5eed0019);
  for (const ForgeSpec& spec : textured_fixture_specs()) {
    const std::vector<std::uint8_t> plain = forge_stream(spec).bytes;
    PveaConfig c;
    c.factors = Factors::from_real(1, 1, 1);
    const double p_eca = mean_i_psnr(plain, eca(plain, EcaScope::full));
    const double p_enc = mean_i_psnr(plain, encrypt(plain, random_key(krng), c, random_uid(krng)));
    psnr_ok &= p_eca <= p_enc + kEcaPsnrMargin;
    psnr_text += (psnr_text.empty() ? "" : ", ") + fmt("%.2f", p_eca) + "<=" + fmt("%.2f", p_enc);
  }
  const bool ok = full_ok == kEcaDraws && signs_ok == kEcaDraws && idem_ok == kEcaDraws && psnr_ok;
  return {ok, "key-invariant " + std::to_string(full_ok) + "/" + std::to_string(kEcaDraws) + " (full), " +
                  std::to_string(signs_ok) + "/" + std::to_string(kEcaDraws) + " (ac_signs), idempotent " +
                  std::to_string(idem_ok) + "/" + std::to_string(kEcaDraws) + "; PSNR eca vs (1,1,1) dB: " +
                  psnr_text};
}

// ---- criterion 10 -----------------------------------------------------------------

double mean_psnr_over_fixtures(const std::vector<std::vector<std::uint8_t>>& plains, const Factors& factors) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t f = 0; f < plains.size(); ++f) {
    for (int k = 0; k < kMonotoneKeys; ++k) {
      Rng rng(0x5eed0a00 + 97 * f + static_cast<std::uint64_t>(k));
      PveaConfig c;
      c.factors = factors;
      sum += mean_i_psnr(plains[f], encrypt(plains[f], random_key(rng), c, random_uid(rng)));
      ++count;
    }
  }
  return sum / count;
}

Outcome degradation_monotone() {
  std::vector<std::vector<std::uint8_t>> plains;
  for (const ForgeSpec& spec : textured_fixture_specs()) plains.push_back(forge_stream(spec).bytes);
  const double sweep[4] = {0.0, 0.2, 0.5, 1.0};
  bool ok = true;
  std::string text;
  for (int which = 0; which < 2; ++which) {
    std::vector<double> curve;
    for (double p : sweep) {
      curve.push_back(mean_psnr_over_fixtures(
          plains, which == 0 ? Factors::from_real(p, 0, 0) : Factors::from_real(0, p, 0)));
    }
    int inversions = 0;
    double worst = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
      if (curve[i] > curve[i - 1]) {
        ++inversions;
        worst = std::max(worst, curve[i] - curve[i - 1]);
      }
    }
    ok &= inversions <= kMonotoneMaxInversions && worst <= kMonotoneSlackDb;
    text += which == 0 ? "p_sr sweep" : "; p_sd sweep";
    for (double v : curve) text += " " + (std::isinf(v) ? std::string("inf") : fmt("%.2f", v));
    text += " (" + std::to_string(inversions) + " inversions)";
  }
  return {ok, text};
}

// ---- criterion 11 -----------------------------------------------------------------

Outcome dark_stream_weakness() {
  Rng rng(0x5eed000b);
  PveaConfig sr_only;
  sr_only.factors = Factors::from_real(1, 0, 0);
  const std::vector<std::uint8_t> dark = forge_dark_fixture();
  const bool dark_ok = encrypt(dark, random_key(rng), sr_only, random_uid(rng)) == dark;

  const std::vector<std::uint8_t> plain = forge_stream(dc_size_one_spec()).bytes;
  const StreamMap map = parse_stream(plain);
  const std::vector<std::uint8_t> cipher = encrypt(plain, random_key(rng), sr_only, random_uid(rng));
  int dc_sites = 0, flipped = 0, other = 0;
  for (const FlcSite& s : map.sites) {
    if (kind_index(s.kind) != 0) continue;
    ++dc_sites;
    const int before = dc_differential_value(read_bits_at(plain, s.bit_offset, s.bit_length), s.bit_length);
    const int after = dc_differential_value(read_bits_at(cipher, s.bit_offset, s.bit_length), s.bit_length);
    if (after == -before) {
      ++flipped;
    } else if (after != before) {
      ++other;
    }
  }
  const bool ok = dark_ok && dc_sites > 0 && other == 0 && flipped > 0;
  return {ok, std::string("dark fixture ") + (dark_ok ? "unchanged" : "CHANGED") + "; dc_size 1: " +
                  std::to_string(dc_sites) + " differentials, " + std::to_string(flipped) + " flipped, " +
                  std::to_string(other) + " other values"};
}

// ---- criterion 12 -----------------------------------------------------------------

Outcome idct_checks() {
  Rng rng(0x5eed000c);
  std::uniform_real_distribution<double> coeff(-2048.0, 2047.0);
  double worst_direct = 0.0, worst_parseval = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Block8 c{};
    for (double& v : c) v = coeff(rng);
    const Block8 fast = idct_8x8(c);
    const Block8 slow = idct_direct(c);
    double ec = 0.0, es = 0.0;
    for (int k = 0; k < 64; ++k) {
      worst_direct = std::max(worst_direct, std::abs(fast[k] - slow[k]));
      ec += c[k] * c[k];
      es += fast[k] * fast[k];
    }
    worst_parseval = std::max(worst_parseval, std::abs(es - ec) / ec);
  }
  bool flat_ok = true;
  for (int dc = -2048; dc <= 2047; dc += 8) {
    Block8 c{};
    c[0] = dc;
    for (double s : idct_8x8(c)) flat_ok &= s == dc / 8.0;
  }
  const bool ok = worst_direct <= kIdctTolerance && worst_parseval <= kParsevalTolerance && flat_ok;
  return {ok, "max |separable - direct| " + fmt("%.3g", worst_direct) + ", Parseval rel. error " +
                  fmt("%.3g", worst_parseval) + ", DC flat field " + (flat_ok ? "exact" : "inexact")};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  std::vector<Line> lines;
  auto timed = [&lines](int id, const char* title, const std::function<Outcome()>& fn, double budget) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = guarded(fn);
    const double s = seconds_since(t0);
    if (s > budget) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f", budget) + " s budget";
    }
    lines.push_back({id, title, o, s});
  };

  {
    const auto t0 = std::chrono::steady_clock::now();
    RoundTripResult rt;
    try {
      rt = round_trip_suite();
    } catch (const std::exception& e) {
      rt.lossless = rt.size = rt.skeleton = {false, std::string("exception: ") + e.what()};
    }
    const double s = seconds_since(t0);
    if (s > kRoundTripBudgetSeconds) {
      rt.lossless.pass = false;
      rt.lossless.detail += "; over the 60 s budget";
    }
    lines.push_back({1, "round-trip losslessness", rt.lossless, s});
    lines.push_back({2, "strict size preservation", rt.size, s});
    lines.push_back({3, "format compliance", rt.skeleton, s});
  }
  timed(4, "deblocking bound numbers", deblocking_bounds, 1.0);
  timed(5, "legacy complexity anchors", legacy_anchors, 1.0);
  timed(6, "PD known-plaintext recovery", pd_known_plaintext, 5.0);
  timed(7, "PD brute force", pd_brute_force, 120.0);
  timed(8, "WYZ recovery", wyz_recovery, 5.0);
  timed(9, "ECA properties", eca_properties, std::numeric_limits<double>::infinity());
  timed(10, "degradation monotonicity", degradation_monotone, std::numeric_limits<double>::infinity());
  timed(11, "dark-stream weakness", dark_stream_weakness, std::numeric_limits<double>::infinity());
  timed(12, "IDCT numeric checks", idct_checks, std::numeric_limits<double>::infinity());

  int failed = 0;
  for (const Line& l : lines) {
    std::printf("criterion %2d: %s  %s (%.2f s): %s\n", l.id, l.outcome.pass ? "PASS" : "FAIL", l.title, l.seconds,
                l.outcome.detail.c_str());
    failed += !l.outcome.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(lines.size()) - failed, lines.size());
  return failed == 0 ? 0 : 1;
}
