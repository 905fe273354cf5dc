#pragma once

#include <complex>
#include <vector>

namespace levyhomog {

/// In-place radix-2 FFT, forward (sign -1). Length must be a power of two.
void fft(std::vector<std::complex<double>>& a);
/// Inverse transform, normalized by 1/n.
void ifft(std::vector<std::complex<double>>& a);

bool is_power_of_two(int n);

}  // namespace levyhomog
