#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sdqi {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kEulerGamma = 0.57721566490153286061;
inline const cplx kI{0.0, 1.0};
// nu = exp(-i pi/4), the line of mid-edges whose east neighbour is dual
inline const cplx kNu{std::numbers::sqrt2 / 2, -std::numbers::sqrt2 / 2};

enum class ErrorKind {
  invalid_input,
  marked_point,
  pole,
  quadrature,
  singular,
  no_samples,
  degenerate,
  corrupt,
  ill_posed,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline void require(bool ok, const std::string& msg, ErrorKind k = ErrorKind::invalid_input) {
  if (!ok) fail(k, msg);
}

// exp(i k pi/4) for integer k, from a table so that phases never accumulate rounding.
inline cplx eighth_root(long k) {
  constexpr double h = std::numbers::sqrt2 / 2;
  static const std::array<cplx, 8> table = {cplx{1, 0},  cplx{h, h},   cplx{0, 1},  cplx{-h, h},
                                            cplx{-1, 0}, cplx{-h, -h}, cplx{0, -1}, cplx{h, -h}};
  long r = k % 8;
  if (r < 0) r += 8;
  return table[static_cast<std::size_t>(r)];
}

// Philox4x32-10 counter-based generator. A stream is fixed by (seed, stream id,
// sample index); successive draws bump the inner counter only, so any sample can
// be regenerated without replaying the ones before it.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::uint64_t k = splitmix(splitmix(seed) ^ stream);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    ctr_ = {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0u, 0u};
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ >= 2) refill();
    result_type v = (static_cast<result_type>(out_[2 * used_]) << 32) | out_[2 * used_ + 1];
    ++used_;
    return v;
  }

  // uniform on the open interval (0, 1)
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

 private:
  void refill() {
    std::array<std::uint32_t, 4> c = ctr_;
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      std::array<std::uint32_t, 4> n = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0],
                                        static_cast<std::uint32_t>(p1),
                                        static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1],
                                        static_cast<std::uint32_t>(p0)};
      c = n;
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    out_ = c;
    used_ = 0;
    if (++ctr_[2] == 0) ++ctr_[3];
  }

  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 4> out_{};
  int used_ = 2;
};

inline double sq(double x) { return x * x; }

}  // namespace sdqi
