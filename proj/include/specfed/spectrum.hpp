#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace specfed {

// Flattened model weights in deterministic order: layers in forward order,
// each layer's weight matrix row-major, then its bias vector.
using ParamVector = std::vector<double>;

// DFT output; conjugate-symmetric for real input.
using ComplexSpectrum = std::vector<std::complex<double>>;

// Non-negative DFT magnitudes of a ParamVector. `truncated` marks a vector
// cut down to its first ceil(tau * d) entries.
struct SpectrumVector {
  std::vector<double> values;
  double tau = 1.0;
  bool truncated = false;

  std::size_t size() const { return values.size(); }
};

// Number of entries kept when truncating a length-d spectrum at ratio tau.
std::size_t truncated_length(std::size_t d, double tau);

// Forward DFT of a real vector: z_k = sum_j w_j exp(-2*pi*i*k*j/d).
// O(d log d) for arbitrary d (radix-2 for powers of two, Bluestein otherwise).
ComplexSpectrum dft(const ParamVector& w);

// Forward DFT of a complex vector, same convention and cost.
ComplexSpectrum dft(const ComplexSpectrum& v);

// Spectrum vector s(w): elementwise magnitudes of dft(w).
SpectrumVector spectrum(const ParamVector& w);

// Keeps the first ceil(tau * d) entries of a full spectrum. tau = 1 is the
// identity (the result keeps kind full).
SpectrumVector truncate(const SpectrumVector& s, double tau);

// Divergence D(p||q) = sum_i p_i log p_i - p_i log q_i, with 0 log 0 := 0
// and both log arguments floored at eps. Entries with p_i == 0 contribute
// exactly 0. With `normalize`, p and q are scaled to sum 1 first (off by
// default; raw magnitudes are the defined behavior).
double divergence(const SpectrumVector& p, const SpectrumVector& q, double eps,
                  bool normalize = false);

// Analytic gradient of w -> D(truncate(spectrum(w), tau) || q).
// With z = dft(w) and p_k = |z_k|:
//   g_k = log(max(p_k, eps)) + 1 - log(max(q_k, eps))   for k < ceil(tau*d)
//   v_k = g_k * conj(z_k) / |z_k|                        (0 when |z_k| < eps)
//   grad = Re(dft(v))
// q's kind must match tau: full when tau = 1, truncated(tau) otherwise.
ParamVector divergence_grad(const ParamVector& w, const SpectrumVector& q,
                            double tau, double eps);

}  // namespace specfed
