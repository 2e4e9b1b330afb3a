#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace nsq {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 transform, power-of-two sizes only.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const int n = static_cast<int>(a.size());
  if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
  }
  const double pi = 3.14159265358979323846;
  for (int len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * pi / len * (inverse ? 1.0 : -1.0);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        std::complex<double>& u = a[static_cast<std::size_t>(i + k)];
        std::complex<double>& v = a[static_cast<std::size_t>(i + k + len / 2)];
        std::complex<double> t = v * w;
        v = u - t;
        u = u + t;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

// One-sided transform of a real frame: returns n/2 + 1 bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& frame) {
  const int n = static_cast<int>(frame.size());
  std::vector<std::complex<double>> a(frame.begin(), frame.end());
  fft_inplace(a, false);
  a.resize(static_cast<std::size_t>(n / 2 + 1));
  return a;
}

// Inverse of rfft; reconstructs the full spectrum by conjugate symmetry.
inline std::vector<double> irfft(const std::vector<std::complex<double>>& half, int n) {
  if (static_cast<int>(half.size()) != n / 2 + 1)
    throw std::invalid_argument("irfft: bin count inconsistent with length");
  std::vector<std::complex<double>> a(static_cast<std::size_t>(n));
  for (int k = 0; k <= n / 2; ++k) a[static_cast<std::size_t>(k)] = half[static_cast<std::size_t>(k)];
  for (int k = n / 2 + 1; k < n; ++k)
    a[static_cast<std::size_t>(k)] = std::conj(half[static_cast<std::size_t>(n - k)]);
  fft_inplace(a, true);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)].real();
  return out;
}

}  // namespace nsq
