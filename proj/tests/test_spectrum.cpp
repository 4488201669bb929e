#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "specfed/rng.hpp"
#include "specfed/spectrum.hpp"
#include "support/oracles.hpp"

using namespace specfed;

namespace {

ParamVector random_vector(Rng& rng, std::size_t d, double scale = 1.0) {
  ParamVector w(d);
  for (auto& x : w) x = scale * rng.normal();
  return w;
}

// A random vector whose spectrum magnitudes stay clear of zero, so the
// divergence is smooth there and finite differences are valid.
ParamVector well_conditioned_vector(Rng& rng, std::size_t d) {
  for (;;) {
    ParamVector w = random_vector(rng, d);
    const SpectrumVector s = spectrum(w);
    double lo = 1e300;
    for (double m : s.values) lo = std::min(lo, m);
    if (lo > 1e-2) return w;
  }
}

}  // namespace

TEST_CASE("dft of constant signal has only the DC component") {
  const auto z = dft(ParamVector{1.0, 1.0, 1.0, 1.0});
  CHECK(std::abs(z[0] - std::complex<double>(4.0, 0.0)) < 1e-12);
  for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(z[k]) < 1e-12);
}

TEST_CASE("dft of unit impulse is flat") {
  const auto z = dft(ParamVector{1.0, 0.0, 0.0, 0.0});
  for (const auto& zk : z) CHECK(std::abs(zk - std::complex<double>(1.0, 0.0)) < 1e-12);
}

TEST_CASE("dft rejects empty and non-finite input") {
  CHECK_THROWS_AS(dft(ParamVector{}), std::invalid_argument);
  CHECK_THROWS_AS(dft(ParamVector{1.0, std::nan("")}), std::invalid_argument);
}

TEST_CASE("dft matches the naive O(d^2) oracle across lengths") {
  Rng rng(101);
  for (std::size_t d : {1, 2, 3, 5, 7, 16, 31, 64, 97, 128, 255, 500, 1000, 1024}) {
    const ParamVector w = random_vector(rng, d);
    const auto got = dft(w);
    const auto want = oracles::naive_dft(w);
    CAPTURE(d);
    CHECK(oracles::max_rel_elem_error(got, want) < 1e-10);
  }
}

TEST_CASE("dft of complex input matches the oracle") {
  Rng rng(77);
  for (std::size_t d : {3, 13, 97, 180}) {
    ComplexSpectrum v(d);
    for (auto& z : v) z = {rng.normal(), rng.normal()};
    const auto got = dft(v);
    const auto want = oracles::naive_dft(v);
    CAPTURE(d);
    CHECK(oracles::max_rel_elem_error(got, want) < 1e-10);
  }
}

TEST_CASE("Parseval identity holds across lengths") {
  Rng rng(202);
  for (std::size_t d : {1, 2, 7, 64, 97, 1000}) {
    const ParamVector w = random_vector(rng, d);
    const auto z = dft(w);
    double lhs = 0.0, rhs = 0.0;
    for (const auto& zk : z) lhs += std::norm(zk);
    for (double x : w) rhs += x * x;
    rhs *= static_cast<double>(d);
    CAPTURE(d);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, rhs));
  }
}

TEST_CASE("dft is linear") {
  Rng rng(303);
  const std::size_t d = 93;
  const ParamVector u = random_vector(rng, d), v = random_vector(rng, d);
  const double a = 1.7, b = -0.4;
  ParamVector combo(d);
  for (std::size_t i = 0; i < d; ++i) combo[i] = a * u[i] + b * v[i];
  const auto zc = dft(combo);
  const auto zu = dft(u);
  const auto zv = dft(v);
  double scale = 0.0;
  for (const auto& z : zc) scale = std::max(scale, std::abs(z));
  for (std::size_t k = 0; k < d; ++k) {
    CHECK(std::abs(zc[k] - (a * zu[k] + b * zv[k])) <= 1e-9 * std::max(1.0, scale));
  }
}

TEST_CASE("conjugate symmetry for real input") {
  Rng rng(404);
  for (std::size_t d : {6, 97, 256}) {
    const ParamVector w = random_vector(rng, d);
    const auto z = dft(w);
    double scale = 0.0;
    for (const auto& zk : z) scale = std::max(scale, std::abs(zk));
    for (std::size_t k = 1; k < d; ++k) {
      CHECK(std::abs(z[k] - std::conj(z[d - k])) <= 1e-9 * scale);
    }
    const SpectrumVector s = spectrum(w);
    for (std::size_t k = 1; k < d; ++k) {
      CHECK(s.values[k] == doctest::Approx(s.values[d - k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("spectrum of known signals") {
  SUBCASE("constant") {
    const SpectrumVector s = spectrum(ParamVector{1.0, 1.0, 1.0, 1.0});
    CHECK(s.values[0] == doctest::Approx(4.0));
    CHECK(s.values[1] < 1e-12);
    CHECK_FALSE(s.truncated);
  }
  SUBCASE("zero vector") {
    const SpectrumVector s = spectrum(ParamVector(8, 0.0));
    for (double m : s.values) CHECK(m == 0.0);
  }
  SUBCASE("alternating pairs [1,0,-1,0]") {
    const SpectrumVector s = spectrum(ParamVector{1.0, 0.0, -1.0, 0.0});
    CHECK(s.values[0] < 1e-12);
    CHECK(s.values[1] == doctest::Approx(2.0));
    CHECK(s.values[2] < 1e-12);
    CHECK(s.values[3] == doctest::Approx(2.0));
  }
}

TEST_CASE("truncate keeps the literal first ceil(tau*d) entries") {
  Rng rng(505);
  SUBCASE("d=10 tau=0.5 gives 5") {
    const SpectrumVector s = spectrum(random_vector(rng, 10));
    const SpectrumVector t = truncate(s, 0.5);
    REQUIRE(t.size() == 5);
    CHECK(t.truncated);
    CHECK(t.tau == 0.5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(t.values[i] == s.values[i]);
  }
  SUBCASE("tau=1 is the identity") {
    const SpectrumVector s = spectrum(random_vector(rng, 10));
    const SpectrumVector t = truncate(s, 1.0);
    CHECK(t.size() == 10);
    CHECK_FALSE(t.truncated);
    CHECK(t.values == s.values);
  }
  SUBCASE("d=7 tau=0.3 gives ceil(2.1)=3") {
    const SpectrumVector s = spectrum(random_vector(rng, 7));
    CHECK(truncate(s, 0.3).size() == 3);
  }
  SUBCASE("invalid tau rejected") {
    const SpectrumVector s = spectrum(random_vector(rng, 10));
    CHECK_THROWS_AS(truncate(s, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(truncate(s, -0.2), std::invalid_argument);
    CHECK_THROWS_AS(truncate(s, 1.5), std::invalid_argument);
  }
  SUBCASE("double truncation rejected") {
    const SpectrumVector s = spectrum(random_vector(rng, 10));
    const SpectrumVector t = truncate(s, 0.5);
    CHECK_THROWS_AS(truncate(t, 0.5), std::invalid_argument);
  }
}

TEST_CASE("divergence basics") {
  const double eps = 1e-12;
  SUBCASE("identical arguments give exactly zero") {
    SpectrumVector p;
    p.values = {1.0, 2.0, 3.0};
    CHECK(divergence(p, p, eps) == 0.0);
  }
  SUBCASE("0 log 0 convention") {
    SpectrumVector p, q;
    p.values = {0.0, 1.0};
    q.values = {1.0, 1.0};
    CHECK(divergence(p, q, eps) == 0.0);
  }
  SUBCASE("KL of Bernoulli-like vectors") {
    SpectrumVector p, q;
    p.values = {0.5, 0.5};
    q.values = {0.9, 0.1};
    const double want = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
    CHECK(divergence(p, q, eps) == doctest::Approx(want).epsilon(1e-12));
    CHECK(divergence(p, q, eps) == doctest::Approx(0.5108).epsilon(1e-4));
  }
  SUBCASE("length and kind mismatches rejected") {
    SpectrumVector p, q, t;
    p.values = {1.0, 2.0};
    q.values = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(divergence(p, q, eps), std::invalid_argument);
    t.values = {1.0, 2.0};
    t.truncated = true;
    t.tau = 0.5;
    CHECK_THROWS_AS(divergence(p, t, eps), std::invalid_argument);
  }
  SUBCASE("normalize flag reduces to probability-vector KL") {
    SpectrumVector p, q;
    p.values = {1.0, 1.0};   // normalizes to [0.5, 0.5]
    q.values = {4.5, 0.5};   // normalizes to [0.9, 0.1]
    const double want = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
    CHECK(divergence(p, q, eps, true) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("Gibbs inequality for normalized vectors above eps") {
  Rng rng(606);
  const double eps = 1e-12;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + rng.bounded(30);
    SpectrumVector p, q;
    p.values.resize(d);
    q.values.resize(d);
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      p.values[i] = rng.uniform(0.01, 1.0);
      q.values[i] = rng.uniform(0.01, 1.0);
      sp += p.values[i];
      sq += q.values[i];
    }
    for (std::size_t i = 0; i < d; ++i) {
      p.values[i] /= sp;
      q.values[i] /= sq;
    }
    CHECK(divergence(p, q, eps) >= -1e-15);
  }
}

TEST_CASE("divergence_grad hand example d=4 impulse") {
  const ParamVector w{1.0, 0.0, 0.0, 0.0};
  SpectrumVector q;
  q.values = {1.0, 1.0, 1.0, 1.0};
  const ParamVector g = divergence_grad(w, q, 1.0, 1e-12);
  REQUIRE(g.size() == 4);
  CHECK(g[0] == doctest::Approx(4.0).epsilon(1e-12));
  for (std::size_t i = 1; i < 4; ++i) CHECK(std::abs(g[i]) < 1e-12);
}

TEST_CASE("divergence_grad teacher kind checks") {
  Rng rng(707);
  const ParamVector w = random_vector(rng, 10);
  const SpectrumVector full = spectrum(w);
  const SpectrumVector trunc = truncate(full, 0.5);
  CHECK_THROWS_AS(divergence_grad(w, trunc, 1.0, 1e-12), std::invalid_argument);
  CHECK_THROWS_AS(divergence_grad(w, full, 0.5, 1e-12), std::invalid_argument);
  CHECK_THROWS_AS(divergence_grad(w, trunc, 0.3, 1e-12), std::invalid_argument);
  CHECK_NOTHROW(divergence_grad(w, trunc, 0.5, 1e-12));
  CHECK_NOTHROW(divergence_grad(w, full, 1.0, 1e-12));
}

TEST_CASE("divergence_grad matches finite differences, q = s(w)") {
  Rng rng(808);
  const std::size_t d = 24;
  const ParamVector w = well_conditioned_vector(rng, d);
  const SpectrumVector q = spectrum(w);
  const double eps = 1e-12;
  const auto f = [&](const ParamVector& x) {
    return divergence(spectrum(x), q, eps);
  };
  const ParamVector got = divergence_grad(w, q, 1.0, eps);
  const ParamVector want = oracles::finite_difference_grad(f, w);
  CHECK(oracles::rel_error(got, want) < 1e-5);
}

TEST_CASE("divergence_grad matches finite differences on random triples") {
  Rng rng(909);
  const double eps = 1e-12;
  int checked = 0;
  while (checked < 100) {
    const std::size_t d = 4 + rng.bounded(253);  // up to 256
    const double tau_pick[] = {0.1, 0.25, 0.5, 0.75, 1.0};
    const double tau = tau_pick[rng.bounded(5)];
    const ParamVector w = well_conditioned_vector(rng, d);
    SpectrumVector q = spectrum(well_conditioned_vector(rng, d));
    q = truncate(q, tau);
    const auto f = [&](const ParamVector& x) {
      return divergence(truncate(spectrum(x), tau), q, eps);
    };
    const ParamVector got = divergence_grad(w, q, tau, eps);
    const ParamVector want = oracles::finite_difference_grad(f, w);
    CAPTURE(d);
    CAPTURE(tau);
    CHECK(oracles::rel_error(got, want) < 1e-5);
    ++checked;
  }
}
