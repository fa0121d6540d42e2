#include <algorithm>
#include <cmath>
#include <limits>

#include "pvea/attacks.hpp"
#include "pvea/error.hpp"

namespace pvea {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRangeSlack = 1.5;
constexpr double kScaleFloor = 0.5;

struct Candidate {
  PdParams params;
};

// Decrypted pixels of one scrambling block along the edges it shares with its
// neighbours: the two outermost columns/rows on each inner side.
struct Strips {
  std::vector<double> right0, right1;   // last column, second-to-last column
  std::vector<double> left0, left1;     // first column, second column
  std::vector<double> bottom0, bottom1;
  std::vector<double> top0, top1;
  bool feasible = false;
};

double edge_cost(const std::vector<double>& a0, const std::vector<double>& a1,
                 const std::vector<double>& b0, const std::vector<double>& b1) {
  double sum = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a0.size(); ++i) {
    const double jump = b0[i] - a0[i];
    const double slope = ((a0[i] - a1[i]) + (b1[i] - b0[i])) / 2.0;
    sum += std::abs(jump - slope);
    scale += (std::abs(a0[i] - a1[i]) + std::abs(b1[i] - b0[i])) / 2.0;
  }
  return sum / (scale + kScaleFloor * static_cast<double>(a0.size()));
}

}  // namespace

double pd_map(double x, const PdParams& p) {
  const double a = p.alpha();
  const double fs = p.fs;
  if (!p.d && !p.n) return a * x;
  if (!p.d && p.n) return fs - a * x;
  if (p.d && !p.n) return fs * (1 - a) + a * x;
  return fs - (fs * (1 - a) + a * x);
}

int pd_map_pixel(int x, const PdParams& p) {
  const std::int64_t a = p.alpha_star;
  const std::int64_t fs = p.fs;
  std::int64_t num = 0;  // 100 * output
  if (!p.d && !p.n) {
    num = a * x;
  } else if (!p.d && p.n) {
    num = 100 * fs - a * x;
  } else if (p.d && !p.n) {
    num = fs * (100 - a) + a * x;
  } else {
    num = a * (fs - x);
  }
  const std::int64_t rounded = num >= 0 ? (num + 50) / 100 : -((-num + 49) / 100);
  return static_cast<int>(std::clamp<std::int64_t>(rounded, 0, fs));
}

double pd_unmap(double y, const PdParams& p) {
  const double a = p.alpha();
  const double fs = p.fs;
  if (!p.d && !p.n) return y / a;
  if (!p.d && p.n) return (fs - y) / a;
  if (p.d && !p.n) return (y - fs * (1 - a)) / a;
  return (a * fs - y) / a;
}

Image pd_encrypt(const Image& block, const PdParams& params) {
  Image out = block;
  for (int& v : out.pixels) v = pd_map_pixel(v, params);
  return out;
}

Image pd_encrypt_2x2(const Image& image, const std::array<PdParams, 4>& params) {
  if (image.width % 2 != 0 || image.height % 2 != 0) {
    throw Error(Errc::invalid_argument, "a 2x2 SB image needs even dimensions");
  }
  Image out = image;
  const std::uint32_t mw = image.width / 2;
  const std::uint32_t mh = image.height / 2;
  for (std::uint32_t y = 0; y < image.height; ++y) {
    for (std::uint32_t x = 0; x < image.width; ++x) {
      const int sb = (y >= mh ? 2 : 0) + (x >= mw ? 1 : 0);
      out.at(x, y) = pd_map_pixel(image.at(x, y), params[sb]);
    }
  }
  return out;
}

PdEstimate pd_kpa(const std::vector<std::pair<double, double>>& pairs, int fs) {
  if (pairs.size() < 2) throw Error(Errc::degenerate_input, "need at least two pairs");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pairs) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pairs.size());
  my /= static_cast<double>(pairs.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pairs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw Error(Errc::degenerate_input, "all plain values are equal");
  PdEstimate e;
  e.slope = sxy / sxx;
  e.intercept = my - e.slope * mx;
  e.n = e.slope < 0;
  e.alpha = std::abs(e.slope);
  e.alpha_star = static_cast<int>(std::lround(100.0 * e.alpha));
  if (!e.n) {
    e.d = e.intercept > fs * (1.0 - e.alpha) / 2.0;
  } else {
    e.d = std::abs(e.intercept - e.alpha * fs) < std::abs(e.intercept - fs);
  }
  return e;
}

double pd_boundary_cost(const Image& image) {
  const std::uint32_t mw = image.width / 2;
  const std::uint32_t mh = image.height / 2;
  if (mw < 2 || mh < 2 || image.width % 2 != 0 || image.height % 2 != 0) {
    throw Error(Errc::invalid_argument, "SBs must be at least 2x2");
  }
  std::vector<double> a0, a1, b0, b1;
  double total = 0.0;
  auto column = [&image](std::uint32_t x, std::uint32_t y0, std::uint32_t h) {
    std::vector<double> v(h);
    for (std::uint32_t i = 0; i < h; ++i) v[i] = image.at(x, y0 + i);
    return v;
  };
  auto row = [&image](std::uint32_t y, std::uint32_t x0, std::uint32_t w) {
    std::vector<double> v(w);
    for (std::uint32_t i = 0; i < w; ++i) v[i] = image.at(x0 + i, y);
    return v;
  };
  for (std::uint32_t y0 : {0u, mh}) {
    total += edge_cost(column(mw - 1, y0, mh), column(mw - 2, y0, mh), column(mw, y0, mh),
                       column(mw + 1, y0, mh));
  }
  for (std::uint32_t x0 : {0u, mw}) {
    total += edge_cost(row(mh - 1, x0, mw), row(mh - 2, x0, mw), row(mh, x0, mw), row(mh + 1, x0, mw));
  }
  return total;
}

PdBruteforceResult pd_bruteforce(const Image& cipher, const PdBruteforceOptions& options) {
  const std::uint32_t mw = cipher.width / 2;
  const std::uint32_t mh = cipher.height / 2;
  if (mw < 2 || mh < 2 || cipher.width % 2 != 0 || cipher.height % 2 != 0) {
    throw Error(Errc::invalid_argument, "cipher image must hold four SBs of at least 2x2");
  }
  if (options.alpha_min < 0 || options.alpha_max > 100 || options.alpha_min > options.alpha_max) {
    throw Error(Errc::invalid_argument, "alpha range must lie within 0..100");
  }

  std::vector<Candidate> cands;
  for (int a = options.alpha_min; a <= options.alpha_max; ++a) {
    for (int d = 0; d < 2; ++d) {
      for (int n = 0; n < 2; ++n) {
        if (options.coupling == DnCoupling::equal && n != d) continue;
        if (options.coupling == DnCoupling::opposite && n == d) continue;
        cands.push_back({PdParams{a, d != 0, n != 0, options.fs}});
      }
    }
  }
  const std::size_t nc = cands.size();

  // Per-SB trial decryptions of the boundary strips, plus range feasibility.
  std::array<std::vector<Strips>, 4> strips;
  for (int sb = 0; sb < 4; ++sb) {
    const std::uint32_t x0 = (sb & 1) != 0 ? mw : 0;
    const std::uint32_t y0 = (sb & 2) != 0 ? mh : 0;
    int lo = options.fs, hi = 0;
    for (std::uint32_t y = 0; y < mh; ++y) {
      for (std::uint32_t x = 0; x < mw; ++x) {
        lo = std::min(lo, cipher.at(x0 + x, y0 + y));
        hi = std::max(hi, cipher.at(x0 + x, y0 + y));
      }
    }
    strips[sb].resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      const PdParams& p = cands[c].params;
      Strips& s = strips[sb][c];
      if (p.alpha_star == 0) continue;  // every pixel maps to one value: not invertible
      const double u1 = pd_unmap(lo, p);
      const double u2 = pd_unmap(hi, p);
      s.feasible = std::min(u1, u2) >= -kRangeSlack && std::max(u1, u2) <= options.fs + kRangeSlack;
      auto col = [&](std::uint32_t x) {
        std::vector<double> v(mh);
        for (std::uint32_t i = 0; i < mh; ++i) v[i] = pd_unmap(cipher.at(x0 + x, y0 + i), p);
        return v;
      };
      auto row = [&](std::uint32_t y) {
        std::vector<double> v(mw);
        for (std::uint32_t i = 0; i < mw; ++i) v[i] = pd_unmap(cipher.at(x0 + i, y0 + y), p);
        return v;
      };
      s.right0 = col(mw - 1);
      s.right1 = col(mw - 2);
      s.left0 = col(0);
      s.left1 = col(1);
      s.bottom0 = row(mh - 1);
      s.bottom1 = row(mh - 2);
      s.top0 = row(0);
      s.top1 = row(1);
    }
  }

  auto unary = [&](int sb, std::size_t c) {
    return strips[sb][c].feasible ? options.alpha_weight * cands[c].params.alpha_star : kInf;
  };

  // Pairwise edge tables for the ring 0-1, 1-3, 0-2, 2-3.
  PdBruteforceResult result;
  auto table = [&](int a, int b, bool vertical_edge) {
    std::vector<double> t(nc * nc, kInf);
    for (std::size_t i = 0; i < nc; ++i) {
      if (!strips[a][i].feasible) continue;
      for (std::size_t j = 0; j < nc; ++j) {
        if (!strips[b][j].feasible) continue;
        const Strips& sa = strips[a][i];
        const Strips& sb = strips[b][j];
        t[i * nc + j] = vertical_edge ? edge_cost(sa.right0, sa.right1, sb.left0, sb.left1)
                                      : edge_cost(sa.bottom0, sa.bottom1, sb.top0, sb.top1);
        ++result.evaluated_pairs;
      }
    }
    return t;
  };
  const std::vector<double> e01 = table(0, 1, true);
  const std::vector<double> e23 = table(2, 3, true);
  const std::vector<double> e02 = table(0, 2, false);
  const std::vector<double> e13 = table(1, 3, false);

  double best = kInf;
  std::array<std::size_t, 4> best_idx{};
  for (std::size_t c0 = 0; c0 < nc; ++c0) {
    const double u0 = unary(0, c0);
    if (u0 == kInf) continue;
    for (std::size_t c3 = 0; c3 < nc; ++c3) {
      const double u3 = unary(3, c3);
      if (u3 == kInf) continue;
      double b1 = kInf, b2 = kInf;
      std::size_t i1 = 0, i2 = 0;
      for (std::size_t c = 0; c < nc; ++c) {
        const double v1 = e01[c0 * nc + c] + e13[c * nc + c3] + unary(1, c);
        if (v1 < b1) {
          b1 = v1;
          i1 = c;
        }
        const double v2 = e02[c0 * nc + c] + e23[c * nc + c3] + unary(2, c);
        if (v2 < b2) {
          b2 = v2;
          i2 = c;
        }
      }
      const double total = u0 + u3 + b1 + b2;
      if (total < best) {
        best = total;
        best_idx = {c0, i1, i2, c3};
      }
    }
  }
  if (best == kInf) throw Error(Errc::degenerate_input, "no candidate decrypts into the pixel range");
  for (int sb = 0; sb < 4; ++sb) result.params[sb] = cands[best_idx[sb]].params;
  result.cost = best;
  result.candidates_per_sb = nc;
  result.naive_log2 = pd_joint_log2(nc);
  return result;
}

double pd_joint_log2(std::uint64_t candidates_per_sb) {
  return 4.0 * std::log2(static_cast<double>(candidates_per_sb));
}

Keyspace pd_keyspace(std::uint64_t m, std::uint64_t p) {
  if (m == 0 || p == 0 || m % p != 0) {
    throw Error(Errc::invalid_argument, "subblock size P must divide SB size M");
  }
  const std::uint64_t r = 2 * m / p;
  const std::uint64_t inner = 3 * r * r;
  Keyspace k;
  k.count = inner * inner;
  k.log2 = std::log2(static_cast<double>(k.count));
  return k;
}

}  // namespace pvea
