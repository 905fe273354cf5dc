#include "levyhomog/fft.hpp"

#include <cmath>

#include "levyhomog/errors.hpp"

namespace levyhomog {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

static void fft_impl(std::vector<std::complex<double>>& a, int sign) {
  const std::size_t n = a.size();
  if (n == 0) return;
  if (!is_power_of_two(static_cast<int>(n)))
    throw ValidationError("fft: length must be a power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

void fft(std::vector<std::complex<double>>& a) { fft_impl(a, -1); }

void ifft(std::vector<std::complex<double>>& a) {
  fft_impl(a, +1);
  const double inv = 1.0 / static_cast<double>(a.size());
  for (auto& z : a) z *= inv;
}

}  // namespace levyhomog
