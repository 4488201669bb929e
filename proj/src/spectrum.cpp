#include "specfed/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace specfed {

namespace {

using cd = std::complex<double>;

bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place. inverse = conjugate transform
// without the 1/n scale (callers scale when needed).
void fft_pow2(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const cd wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cd u = a[i + j];
        const cd v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Precomputed Bluestein machinery for one transform length. The chirp
// exponent uses k^2 mod 2n so the phase argument stays small and accurate
// for large k.
struct BluesteinPlan {
  std::size_t n = 0;
  std::size_t m = 0;                 // padded power-of-two length >= 2n-1
  std::vector<cd> chirp;             // w_k = exp(-i*pi*k^2/n), k < n
  std::vector<cd> kernel_fft;        // FFT of conj-chirp kernel, length m
};

std::shared_ptr<const BluesteinPlan> bluestein_plan(std::size_t n) {
  static std::mutex mtx;
  static std::unordered_map<std::size_t, std::shared_ptr<const BluesteinPlan>> cache;
  {
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
  }

  auto plan = std::make_shared<BluesteinPlan>();
  plan->n = n;
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  plan->m = m;

  plan->chirp.resize(n);
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t r = (static_cast<std::uint64_t>(k) % two_n);
    const std::uint64_t sq = (r * r) % two_n;
    const double ang = -std::numbers::pi * static_cast<double>(sq) / static_cast<double>(n);
    plan->chirp[k] = cd(std::cos(ang), std::sin(ang));
  }

  std::vector<cd> kernel(m, cd(0.0, 0.0));
  kernel[0] = std::conj(plan->chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    kernel[k] = std::conj(plan->chirp[k]);
    kernel[m - k] = kernel[k];
  }
  fft_pow2(kernel, false);
  plan->kernel_fft = std::move(kernel);

  {
    std::lock_guard<std::mutex> lock(mtx);
    cache.emplace(n, plan);
  }
  return plan;
}

std::vector<cd> transform(std::vector<cd> a) {
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("dft: empty input");
  if (n == 1) return a;
  if (is_pow2(n)) {
    fft_pow2(a, false);
    return a;
  }

  // Bluestein: X_k = w_k * sum_j (x_j w_j) conj(w_{k-j}); the sum is a
  // circular convolution of length m done with power-of-two FFTs.
  const auto plan = bluestein_plan(n);
  std::vector<cd> buf(plan->m, cd(0.0, 0.0));
  for (std::size_t j = 0; j < n; ++j) buf[j] = a[j] * plan->chirp[j];
  fft_pow2(buf, false);
  for (std::size_t j = 0; j < plan->m; ++j) buf[j] *= plan->kernel_fft[j];
  fft_pow2(buf, true);
  const double scale = 1.0 / static_cast<double>(plan->m);
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = buf[k] * plan->chirp[k] * scale;
  return out;
}

void check_finite(const ParamVector& w, const char* what) {
  for (const double x : w) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

bool kinds_match(const SpectrumVector& a, const SpectrumVector& b) {
  if (a.truncated != b.truncated) return false;
  if (a.truncated && a.tau != b.tau) return false;
  return a.values.size() == b.values.size();
}

}  // namespace

std::size_t truncated_length(std::size_t d, double tau) {
  return static_cast<std::size_t>(std::ceil(tau * static_cast<double>(d)));
}

ComplexSpectrum dft(const ParamVector& w) {
  if (w.empty()) throw std::invalid_argument("dft: empty input");
  check_finite(w, "dft");
  std::vector<cd> a(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) a[j] = cd(w[j], 0.0);
  return transform(std::move(a));
}

ComplexSpectrum dft(const ComplexSpectrum& v) {
  if (v.empty()) throw std::invalid_argument("dft: empty input");
  return transform(v);
}

SpectrumVector spectrum(const ParamVector& w) {
  const ComplexSpectrum z = dft(w);
  SpectrumVector s;
  s.values.resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) s.values[k] = std::abs(z[k]);
  return s;
}

SpectrumVector truncate(const SpectrumVector& s, double tau) {
  if (s.truncated) throw std::invalid_argument("truncate: input must be a full spectrum");
  if (!(tau > 0.0) || tau > 1.0) throw std::invalid_argument("truncate: tau must be in (0, 1]");
  if (tau == 1.0) return s;
  const std::size_t m = truncated_length(s.values.size(), tau);
  SpectrumVector out;
  out.values.assign(s.values.begin(), s.values.begin() + static_cast<std::ptrdiff_t>(m));
  out.tau = tau;
  out.truncated = true;
  return out;
}

double divergence(const SpectrumVector& p, const SpectrumVector& q, double eps,
                  bool normalize) {
  if (!(eps > 0.0)) throw std::invalid_argument("divergence: eps must be > 0");
  if (!kinds_match(p, q)) throw std::invalid_argument("divergence: length/kind mismatch");

  double p_scale = 1.0, q_scale = 1.0;
  if (normalize) {
    double sp = 0.0, sq = 0.0;
    for (double v : p.values) sp += v;
    for (double v : q.values) sq += v;
    if (sp > 0.0) p_scale = 1.0 / sp;
    if (sq > 0.0) q_scale = 1.0 / sq;
  }

  double acc = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double pi = p.values[i] * p_scale;
    if (pi == 0.0) continue;  // 0 log 0 := 0, whole term vanishes
    const double pf = std::max(pi, eps);
    const double qf = std::max(q.values[i] * q_scale, eps);
    acc += pf * (std::log(pf) - std::log(qf));
  }
  return acc;
}

ParamVector divergence_grad(const ParamVector& w, const SpectrumVector& q,
                            double tau, double eps) {
  if (!(tau > 0.0) || tau > 1.0) throw std::invalid_argument("divergence_grad: tau must be in (0, 1]");
  if (!(eps > 0.0)) throw std::invalid_argument("divergence_grad: eps must be > 0");
  const std::size_t d = w.size();
  const std::size_t m = truncated_length(d, tau);
  const bool want_truncated = tau < 1.0;
  if (q.truncated != want_truncated || (want_truncated && q.tau != tau) || q.values.size() != m) {
    throw std::invalid_argument("divergence_grad: teacher kind/tau mismatch");
  }

  const ComplexSpectrum z = dft(w);
  ComplexSpectrum v(d, std::complex<double>(0.0, 0.0));
  for (std::size_t k = 0; k < m; ++k) {
    const double pk = std::abs(z[k]);
    if (pk < eps) continue;  // subgradient 0 at the magnitude singularity
    const double gk = std::log(std::max(pk, eps)) + 1.0 - std::log(std::max(q.values[k], eps));
    v[k] = gk * std::conj(z[k]) / pk;
  }

  const ComplexSpectrum gz = dft(v);
  ParamVector grad(d);
  for (std::size_t j = 0; j < d; ++j) grad[j] = gz[j].real();
  return grad;
}

}  // namespace specfed
