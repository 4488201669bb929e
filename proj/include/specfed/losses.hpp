#pragma once

#include "specfed/model.hpp"
#include "specfed/spectrum.hpp"

namespace specfed {

struct DistillCoefficients {
  double lambda_p = 1.0;  // personalized-model distillation weight, >= 0
  double lambda_g = 0.1;  // generic-model distillation weight, >= 0
  double tau = 0.2;       // truncation ratio in (0, 1]
  double eps = 1e-12;     // log floor, > 0
};

void validate(const DistillCoefficients& c);

struct CompositeLoss {
  double loss = 0.0;  // ce + reg
  double ce = 0.0;
  double reg = 0.0;   // weighted regularizer contribution (lambda * divergence)
  ParamVector grad;
};

// Personalized loss: CE + lambda_p * D(s(w_p) || teacher), teacher being the
// full spectrum of the client's updated generic model, frozen for the round.
// With lambda_p = 0 the spectral path is skipped entirely, so values and
// trajectories are bit-identical to plain cross-entropy.
CompositeLoss pm_loss_and_grad(const ParamVector& w_p,
                               const SpectrumVector& teacher_spectrum,
                               const MlpSpec& spec, const LabeledBatch& batch,
                               const DistillCoefficients& coeffs);

// Generic loss: CE + lambda_g * D(truncate(s(w_g), tau) || teacher), teacher
// being the truncated spectrum of the client's personalized model.
CompositeLoss gm_loss_and_grad(const ParamVector& w_g,
                               const SpectrumVector& teacher_trunc_spectrum,
                               const MlpSpec& spec, const LabeledBatch& batch,
                               const DistillCoefficients& coeffs);

}  // namespace specfed
