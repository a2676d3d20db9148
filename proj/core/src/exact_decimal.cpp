// Exact decimal arithmetic on binary32 values.
//
// A finite float is m * 2^E with m < 2^24. Every operation below is a floor or
// a round-to-nearest of a rational built from m, powers of two and powers of
// ten, evaluated in unsigned 128-bit integers when the operands provably fit
// and in boost::multiprecision::cpp_int otherwise.

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

#include "nnrw/error.hpp"
#include "nnrw/host_codec.hpp"

namespace nnrw {
namespace {

using BigInt = boost::multiprecision::cpp_int;
__extension__ typedef unsigned __int128 u128;

struct Dyadic {
  std::uint32_t mantissa = 0;  // nonzero
  int exponent2 = 0;           // value = mantissa * 2^exponent2
  int sign = 1;
};

Dyadic decompose(float w) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(w);
  const std::uint32_t field = (bits >> 23) & 0xFFu;
  const std::uint32_t frac = bits & 0x7FFFFFu;
  Dyadic d;
  d.sign = (bits >> 31) ? -1 : 1;
  if (field == 0) {
    d.mantissa = frac;
    d.exponent2 = -149;
  } else {
    d.mantissa = frac | 0x800000u;
    d.exponent2 = static_cast<int>(field) - 150;
  }
  return d;
}

void require_usable(float w) {
  if (!is_usable_carrier(w)) throw Error(ErrorCode::ZeroOrNonFinite, "digit operations need a finite nonzero value");
}

constexpr std::array<u128, 39> make_pow10() {
  std::array<u128, 39> p{};
  p[0] = 1;
  for (std::size_t i = 1; i < p.size(); ++i) p[i] = p[i - 1] * 10;
  return p;
}
constexpr auto kPow10 = make_pow10();

const BigInt& big_pow10(unsigned n) {
  static const std::array<BigInt, 128> table = [] {
    std::array<BigInt, 128> t;
    t[0] = 1;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * 10;
    return t;
  }();
  if (n >= table.size()) throw Error(ErrorCode::InvalidConfig, "decimal scale out of range");
  return table[n];
}

// Upper bound on bit length of 10^n.
constexpr int pow10_bits(int n) { return n <= 0 ? 1 : (n * 3322) / 1000 + 1; }

int bit_length(u128 x) {
  const auto hi = static_cast<std::uint64_t>(x >> 64);
  if (hi != 0) return 64 + std::bit_width(hi);
  return std::bit_width(static_cast<std::uint64_t>(x));
}
int bit_length(const BigInt& x) { return x == 0 ? 0 : static_cast<int>(boost::multiprecision::msb(x)) + 1; }

// floor(m * 2^e2 * 10^s)
template <class Int>
Int floor_scaled_impl(std::uint32_t m, int e2, int s) {
  Int num = m;
  if (e2 > 0) num <<= e2;
  if (s > 0) {
    if constexpr (std::is_same_v<Int, u128>) {
      num *= kPow10[static_cast<std::size_t>(s)];
    } else {
      num *= big_pow10(static_cast<unsigned>(s));
    }
  }
  if (s < 0) {
    if constexpr (std::is_same_v<Int, u128>) {
      if (-s >= 39) return 0;
      num /= kPow10[static_cast<std::size_t>(-s)];
    } else {
      num /= big_pow10(static_cast<unsigned>(-s));
    }
  }
  if (e2 < 0) {
    if constexpr (std::is_same_v<Int, u128>) {
      if (-e2 >= 128) return 0;
    }
    num >>= -e2;
  }
  return num;
}

bool fits_fast(std::uint32_t m, int e2, int s) {
  const int bits = std::bit_width(m) + (e2 > 0 ? e2 : 0) + (s > 0 ? pow10_bits(s) : 0);
  return bits <= 126 && s <= 38;
}

// floor(m * 2^e2 * 10^s) mod 100, and whether the floor is >= 1.
struct Scaled {
  unsigned mod100;
  bool at_least_one;
};

Scaled floor_scaled(std::uint32_t m, int e2, int s) {
  if (fits_fast(m, e2, s)) {
    const u128 v = floor_scaled_impl<u128>(m, e2, s);
    return {static_cast<unsigned>(v % 100), v >= 1};
  }
  const BigInt v = floor_scaled_impl<BigInt>(m, e2, s);
  return {static_cast<unsigned>(static_cast<unsigned>(v % 100)), v >= 1};
}

bool at_least_pow10(const Dyadic& d, int e) { return floor_scaled(d.mantissa, d.exponent2, -e).at_least_one; }

int exponent_of(const Dyadic& d) {
  const int b = std::bit_width(d.mantissa) - 1 + d.exponent2;  // 2^b <= |w| < 2^(b+1)
  // floor(b * log10(2)), possibly off by one; corrected exactly below.
  const long long scaled = static_cast<long long>(b) * 30103LL;
  int e = static_cast<int>(scaled >= 0 ? scaled / 100000 : -((-scaled + 99999) / 100000));
  while (!at_least_pow10(d, e)) --e;
  while (at_least_pow10(d, e + 1)) ++e;
  return e;
}

// Round the positive rational num/den to the nearest binary32 (ties to even);
// returns the magnitude bit pattern (may be +inf or zero).
template <class Int>
std::uint32_t round_to_binary32(Int num, Int den) {
  int t = bit_length(num) - bit_length(den);
  // Normalize so 2^t <= num/den < 2^(t+1).
  auto ge_pow2 = [&](int k) {
    if (k >= 0) return num >= (den << k);
    return (num << -k) >= den;
  };
  if (!ge_pow2(t)) --t;
  const int q = std::max(t - 23, -149);
  if (q < 0) {
    num <<= -q;
  } else {
    den <<= q;
  }
  Int quotient = num / den;
  const Int remainder = num - quotient * den;
  const Int twice = remainder << 1;
  if (twice > den || (twice == den && (quotient & 1) != 0)) quotient += 1;
  int exp = q;
  auto qv = static_cast<std::uint64_t>(quotient);
  if (qv == (std::uint64_t{1} << 24)) {
    qv >>= 1;
    exp += 1;
  }
  if (qv >= (std::uint64_t{1} << 23)) {
    const int biased = exp + 150;
    if (biased >= 255) return 0x7F800000u;
    return static_cast<std::uint32_t>(biased) << 23 | static_cast<std::uint32_t>(qv - (std::uint64_t{1} << 23));
  }
  return static_cast<std::uint32_t>(qv);  // subnormal or zero, exp == -149
}

// sign * (|w| + delta * 10^k) rounded to binary32.
float add_units(const Dyadic& d, int k, int delta) {
  const int dw = d.exponent2 < 0 ? -d.exponent2 : 0;
  const int bw = std::bit_width(d.mantissa) + (d.exponent2 > 0 ? d.exponent2 : 0);
  const int unit_num_bits = k > 0 ? pow10_bits(k) : 1;
  const int unit_den_bits = k < 0 ? pow10_bits(-k) : 1;
  const int p_bits = std::max(bw + unit_den_bits, 8 + unit_num_bits + dw) + 1;
  const int d_bits = dw + unit_den_bits;
  const unsigned abs_delta = static_cast<unsigned>(delta < 0 ? -delta : delta);

  std::uint32_t magnitude = 0;
  auto compute = [&]<class Int>(Int) {
    Int num_w = d.mantissa;
    if (d.exponent2 > 0) num_w <<= d.exponent2;
    Int den_w = 1;
    if (dw > 0) den_w <<= dw;
    Int num_u = 1;
    Int den_u = 1;
    if constexpr (std::is_same_v<Int, u128>) {
      if (k > 0) num_u = kPow10[static_cast<std::size_t>(k)];
      if (k < 0) den_u = kPow10[static_cast<std::size_t>(-k)];
    } else {
      if (k > 0) num_u = big_pow10(static_cast<unsigned>(k));
      if (k < 0) den_u = big_pow10(static_cast<unsigned>(-k));
    }
    const Int base = num_w * den_u;
    const Int step = Int(abs_delta) * num_u * den_w;
    if (delta < 0 && step >= base) {
      magnitude = 0;  // non-positive result; unreachable for |delta| <= 99
      return;
    }
    const Int num = delta < 0 ? Int(base - step) : Int(base + step);
    magnitude = round_to_binary32<Int>(num, den_w * den_u);
  };
  if (p_bits <= 126 && d_bits + 26 <= 126 && k <= 38 && -k <= 38) {
    compute(u128{});
  } else {
    compute(BigInt{});
  }
  const std::uint32_t sign_bit = d.sign < 0 ? 0x80000000u : 0u;
  return std::bit_cast<float>(magnitude | sign_bit);
}

}  // namespace

std::uint32_t float_bits(float w) noexcept { return std::bit_cast<std::uint32_t>(w); }
float bits_float(std::uint32_t bits) noexcept { return std::bit_cast<float>(bits); }
float with_lsb(float w, unsigned bit) noexcept {
  return std::bit_cast<float>((std::bit_cast<std::uint32_t>(w) & ~1u) | (bit & 1u));
}

int decimal_exponent(float w) {
  require_usable(w);
  return exponent_of(decompose(w));
}

DigitView digit_view(float w) {
  require_usable(w);
  const Dyadic d = decompose(w);
  BigInt integer = d.mantissa;
  int pow10 = 0;  // |w| == integer * 10^pow10
  if (d.exponent2 >= 0) {
    integer <<= d.exponent2;
  } else {
    integer *= boost::multiprecision::pow(BigInt(5), static_cast<unsigned>(-d.exponent2));
    pow10 = d.exponent2;
  }
  std::string text = integer.str();
  DigitView view;
  view.sign = d.sign;
  view.exponent = static_cast<int>(text.size()) - 1 + pow10;
  while (text.size() > 1 && text.back() == '0') text.pop_back();
  view.digits.reserve(text.size());
  for (char ch : text) view.digits.push_back(static_cast<std::uint8_t>(ch - '0'));
  return view;
}

int pair_value(float w, int c) {
  require_usable(w);
  if (c < 1) throw Error(ErrorCode::InvalidConfig, "digit position must be >= 1");
  const Dyadic d = decompose(w);
  const int e = exponent_of(d);
  return static_cast<int>(floor_scaled(d.mantissa, d.exponent2, c - e).mod100);
}

int host_symbol(float w, int c, int offset) {
  const int pair = pair_value(w, c);
  return (std::signbit(w) ? -pair : pair) + offset;
}

float add_pair_units(float w, int c, int delta) {
  require_usable(w);
  const Dyadic d = decompose(w);
  return add_units(d, exponent_of(d) - c, delta);
}

float shift_pair_unchecked(float w, int c, int new_pair) {
  require_usable(w);
  const Dyadic d = decompose(w);
  const int e = exponent_of(d);
  const int old_pair = static_cast<int>(floor_scaled(d.mantissa, d.exponent2, c - e).mod100);
  return add_units(d, e - c, new_pair - old_pair);
}

std::optional<float> write_pair(float w, int c, int new_pair) {
  require_usable(w);
  if (new_pair < 0 || new_pair > 99) {
    throw Error(ErrorCode::PairOutOfRange, "pair " + std::to_string(new_pair) + " outside [0,99]");
  }
  const Dyadic d = decompose(w);
  const int e = exponent_of(d);
  const int old_pair = static_cast<int>(floor_scaled(d.mantissa, d.exponent2, c - e).mod100);
  if (new_pair == old_pair) return w;

  const float written = add_units(d, e - c, new_pair - old_pair);
  if (!is_usable_carrier(written) || std::signbit(written) != std::signbit(w)) return std::nullopt;
  const Dyadic dw = decompose(written);
  const int e_written = exponent_of(dw);
  if (e_written != e) return std::nullopt;
  if (static_cast<int>(floor_scaled(dw.mantissa, dw.exponent2, c - e).mod100) != new_pair) return std::nullopt;
  const float back = add_units(dw, e - c, old_pair - new_pair);
  if (std::bit_cast<std::uint32_t>(back) != std::bit_cast<std::uint32_t>(w)) return std::nullopt;
  return written;
}

}  // namespace nnrw
