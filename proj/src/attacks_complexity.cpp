#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <numeric>

#include "pvea/attacks.hpp"
#include "pvea/error.hpp"
#include "pvea/selection.hpp"

namespace pvea {

namespace {

using boost::multiprecision::cpp_int;

cpp_int binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  cpp_int r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

double log2_of(const cpp_int& v) {
  if (v <= 0) return -INFINITY;
  const std::size_t msb = boost::multiprecision::msb(v);
  if (msb < 53) return std::log2(v.convert_to<double>());
  const std::size_t shift = msb - 52;
  const cpp_int top = v >> shift;
  return std::log2(top.convert_to<double>()) + static_cast<double>(shift);
}

Rational reduced(std::uint64_t num, std::uint64_t den) {
  const std::uint64_t g = std::gcd(num, den);
  return g == 0 ? Rational{num, den} : Rational{num / g, den / g};
}

}  // namespace

double log2_binomial(std::uint64_t n, std::uint64_t k) { return log2_of(binomial(n, k)); }

ComplexityReport deblock_complexity_k(std::uint64_t n, std::uint64_t k) {
  if (n == 0) throw Error(Errc::invalid_argument, "N must be at least 1");
  if (k > n) throw Error(Errc::invalid_argument, "k exceeds N");
  ComplexityReport r;
  r.n = n;
  r.selected = k;
  r.p = double(k) / double(n);
  const cpp_int b = binomial(n, k);
  r.binomial_decimal = b.str();
  r.log2_binomial = log2_of(b);
  r.log2_complexity = r.log2_binomial + static_cast<double>(k);
  const cpp_int total = b << static_cast<unsigned>(k);
  r.meets_threshold = total >= (cpp_int(1) << kSecurityBits);
  return r;
}

ComplexityReport deblock_complexity(std::uint64_t n, double p) {
  const std::uint16_t fixed = factor_to_fixed(p);
  ComplexityReport r = deblock_complexity_k(n, selected_count(n, fixed));
  r.p = p;
  return r;
}

MinPBound min_p_bound(std::uint64_t n) {
  if (n == 0) throw Error(Errc::invalid_argument, "N must be at least 1");
  MinPBound m;
  m.n = n;
  m.conservative = reduced(kSecurityBits, n);
  const cpp_int bar = cpp_int(1) << kSecurityBits;
  cpp_int b = 1;  // C(n, k), updated incrementally
  for (std::uint64_t k = 0; k <= n; ++k) {
    if (k > 0) {
      b *= n - k + 1;
      b /= k;
    }
    if ((b << static_cast<unsigned>(k)) >= bar) {
      m.k = k;
      m.refined = reduced(k, n);
      break;
    }
  }
  return m;
}

}  // namespace pvea
