#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "specfed/losses.hpp"
#include "specfed/rng.hpp"
#include "support/model_oracle.hpp"
#include "support/oracles.hpp"

using namespace specfed;

namespace {

struct Instance {
  MlpSpec spec;
  ParamVector w;
  ParamVector teacher_w;
  LabeledBatch batch;
};

// Instances with ReLU pre-activations and spectrum magnitudes away from their
// kinks, so finite differences on the composite loss are valid.
Instance random_instance(Rng& rng, std::vector<int> sizes, std::size_t n) {
  Instance inst;
  inst.spec.layer_sizes = std::move(sizes);
  for (;;) {
    inst.spec.seed = rng.next_u64();
    inst.w = init_model(inst.spec);
    for (auto& x : inst.w) x += 0.05 * rng.normal();
    inst.teacher_w = inst.w;
    for (auto& x : inst.teacher_w) x += 0.3 * rng.normal();
    inst.batch.in_dim = inst.spec.layer_sizes.front();
    inst.batch.inputs.assign(n * static_cast<std::size_t>(inst.batch.in_dim), 0.0);
    for (auto& x : inst.batch.inputs) x = rng.normal();
    inst.batch.labels.resize(n);
    for (auto& l : inst.batch.labels) {
      l = static_cast<int>(rng.bounded(inst.spec.layer_sizes.back()));
    }
    const auto tr = oracles::mlp_forward(inst.w, inst.spec.layer_sizes,
                                         inst.batch.inputs, n);
    if (tr.min_abs_preactivation < 1e-3) continue;
    double lo = 1e300, lo_t = 1e300;
    for (double m : spectrum(inst.w).values) lo = std::min(lo, m);
    for (double m : spectrum(inst.teacher_w).values) lo_t = std::min(lo_t, m);
    if (lo > 1e-2 && lo_t > 1e-2) return inst;
  }
}

}  // namespace

TEST_CASE("lambda_p = 0 reduces pm loss to plain cross-entropy") {
  Rng rng(1);
  const auto inst = random_instance(rng, {4, 6, 3}, 4);
  DistillCoefficients coeffs;
  coeffs.lambda_p = 0.0;
  SpectrumVector empty_teacher;  // must not be touched when lambda_p = 0
  const auto composite =
      pm_loss_and_grad(inst.w, empty_teacher, inst.spec, inst.batch, coeffs);
  const auto ce = ce_loss_and_grad(inst.w, inst.spec, inst.batch);
  CHECK(composite.loss == ce.loss);
  CHECK(composite.reg == 0.0);
  CHECK(composite.grad == ce.grad);
}

TEST_CASE("pm loss with teacher equal to student has zero divergence term") {
  Rng rng(2);
  const auto inst = random_instance(rng, {4, 5, 3}, 4);
  DistillCoefficients coeffs;
  const SpectrumVector teacher = spectrum(inst.w);
  const auto composite =
      pm_loss_and_grad(inst.w, teacher, inst.spec, inst.batch, coeffs);
  const auto ce = ce_loss_and_grad(inst.w, inst.spec, inst.batch);
  CHECK(composite.reg == 0.0);
  CHECK(composite.loss == doctest::Approx(ce.loss).epsilon(1e-15));
}

TEST_CASE("pm loss rejects truncated teacher") {
  Rng rng(3);
  const auto inst = random_instance(rng, {3, 4, 2}, 3);
  DistillCoefficients coeffs;
  const SpectrumVector trunc = truncate(spectrum(inst.teacher_w), 0.5);
  CHECK_THROWS_AS(pm_loss_and_grad(inst.w, trunc, inst.spec, inst.batch, coeffs),
                  std::invalid_argument);
}

TEST_CASE("gm loss rejects kind/tau mismatch") {
  Rng rng(4);
  const auto inst = random_instance(rng, {3, 4, 2}, 3);
  DistillCoefficients coeffs;
  coeffs.tau = 0.5;
  const SpectrumVector full = spectrum(inst.teacher_w);
  CHECK_THROWS_AS(gm_loss_and_grad(inst.w, full, inst.spec, inst.batch, coeffs),
                  std::invalid_argument);
  const SpectrumVector wrong_tau = truncate(full, 0.25);
  CHECK_THROWS_AS(
      gm_loss_and_grad(inst.w, wrong_tau, inst.spec, inst.batch, coeffs),
      std::invalid_argument);
}

TEST_CASE("lambda_g = 0 reduces gm loss to plain cross-entropy") {
  Rng rng(5);
  const auto inst = random_instance(rng, {4, 6, 3}, 4);
  DistillCoefficients coeffs;
  coeffs.lambda_g = 0.0;
  SpectrumVector empty_teacher;
  const auto composite =
      gm_loss_and_grad(inst.w, empty_teacher, inst.spec, inst.batch, coeffs);
  const auto ce = ce_loss_and_grad(inst.w, inst.spec, inst.batch);
  CHECK(composite.loss == ce.loss);
  CHECK(composite.grad == ce.grad);
}

TEST_CASE("tau = 1 gm regularizer equals the full-spectrum pm regularizer") {
  Rng rng(6);
  const auto inst = random_instance(rng, {4, 5, 3}, 4);
  DistillCoefficients coeffs;
  coeffs.lambda_p = coeffs.lambda_g = 0.7;
  coeffs.tau = 1.0;
  const SpectrumVector teacher = spectrum(inst.teacher_w);
  const auto pm = pm_loss_and_grad(inst.w, teacher, inst.spec, inst.batch, coeffs);
  const auto gm = gm_loss_and_grad(inst.w, teacher, inst.spec, inst.batch, coeffs);
  CHECK(pm.reg == gm.reg);
  CHECK(pm.loss == gm.loss);
  CHECK(pm.grad == gm.grad);
}

TEST_CASE("divergence is asymmetric in general") {
  Rng rng(7);
  const auto inst = random_instance(rng, {4, 5, 3}, 4);
  const SpectrumVector a = spectrum(inst.w);
  const SpectrumVector b = spectrum(inst.teacher_w);
  const double ab = divergence(a, b, 1e-12);
  const double ba = divergence(b, a, 1e-12);
  CHECK(ab != ba);
}

TEST_CASE("pm composite gradient matches finite differences") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(rng, {4, 6, 3}, 4);
    DistillCoefficients coeffs;
    coeffs.lambda_p = 0.5;
    const SpectrumVector teacher = spectrum(inst.teacher_w);
    const auto composite =
        pm_loss_and_grad(inst.w, teacher, inst.spec, inst.batch, coeffs);
    const auto f = [&](const ParamVector& x) {
      return pm_loss_and_grad(x, teacher, inst.spec, inst.batch, coeffs).loss;
    };
    const auto fd = oracles::finite_difference_grad(f, inst.w);
    CHECK(oracles::rel_error(composite.grad, fd) < 1e-5);
  }
}

TEST_CASE("gm composite gradient matches finite differences") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(rng, {4, 6, 3}, 4);
    DistillCoefficients coeffs;
    coeffs.lambda_g = 0.5;
    coeffs.tau = 0.4;
    const SpectrumVector teacher = truncate(spectrum(inst.teacher_w), coeffs.tau);
    const auto composite =
        gm_loss_and_grad(inst.w, teacher, inst.spec, inst.batch, coeffs);
    const auto f = [&](const ParamVector& x) {
      return gm_loss_and_grad(x, teacher, inst.spec, inst.batch, coeffs).loss;
    };
    const auto fd = oracles::finite_difference_grad(f, inst.w);
    CHECK(oracles::rel_error(composite.grad, fd) < 1e-5);
  }
}

TEST_CASE("loss decreases monotonically under small-step descent") {
  Rng rng(10);
  const auto inst = random_instance(rng, {4, 6, 3}, 6);
  DistillCoefficients coeffs;
  coeffs.lambda_p = 0.5;
  const SpectrumVector teacher = spectrum(inst.teacher_w);
  ParamVector w = inst.w;
  double prev = pm_loss_and_grad(w, teacher, inst.spec, inst.batch, coeffs).loss;
  const double eta = 1e-3;
  for (int step = 0; step < 20; ++step) {
    const auto res = pm_loss_and_grad(w, teacher, inst.spec, inst.batch, coeffs);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * res.grad[i];
    const double cur =
        pm_loss_and_grad(w, teacher, inst.spec, inst.batch, coeffs).loss;
    CHECK(cur <= prev + 1e-8);
    prev = cur;
  }
}

TEST_CASE("coefficient validation") {
  DistillCoefficients bad;
  bad.tau = 1.5;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.tau = 0.2;
  bad.eps = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.eps = 1e-12;
  bad.lambda_p = -1.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}
