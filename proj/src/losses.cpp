#include "specfed/losses.hpp"

#include <stdexcept>

namespace specfed {

void validate(const DistillCoefficients& c) {
  if (c.lambda_p < 0.0) throw std::invalid_argument("lambda_p must be >= 0");
  if (c.lambda_g < 0.0) throw std::invalid_argument("lambda_g must be >= 0");
  if (!(c.tau > 0.0) || c.tau > 1.0) throw std::invalid_argument("tau must be in (0, 1]");
  if (!(c.eps > 0.0)) throw std::invalid_argument("eps must be > 0");
}

CompositeLoss pm_loss_and_grad(const ParamVector& w_p,
                               const SpectrumVector& teacher_spectrum,
                               const MlpSpec& spec, const LabeledBatch& batch,
                               const DistillCoefficients& coeffs) {
  validate(coeffs);
  CeResult ce = ce_loss_and_grad(w_p, spec, batch);
  CompositeLoss out;
  out.ce = ce.loss;
  out.grad = std::move(ce.grad);
  if (coeffs.lambda_p > 0.0) {
    if (teacher_spectrum.truncated) {
      throw std::invalid_argument("pm_loss_and_grad: teacher spectrum must be full");
    }
    if (teacher_spectrum.size() != w_p.size()) {
      throw std::invalid_argument("pm_loss_and_grad: teacher spectrum length mismatch");
    }
    const double div = divergence(spectrum(w_p), teacher_spectrum, coeffs.eps);
    out.reg = coeffs.lambda_p * div;
    const ParamVector dg = divergence_grad(w_p, teacher_spectrum, 1.0, coeffs.eps);
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      out.grad[i] += coeffs.lambda_p * dg[i];
    }
  }
  out.loss = out.ce + out.reg;
  return out;
}

CompositeLoss gm_loss_and_grad(const ParamVector& w_g,
                               const SpectrumVector& teacher_trunc_spectrum,
                               const MlpSpec& spec, const LabeledBatch& batch,
                               const DistillCoefficients& coeffs) {
  validate(coeffs);
  CeResult ce = ce_loss_and_grad(w_g, spec, batch);
  CompositeLoss out;
  out.ce = ce.loss;
  out.grad = std::move(ce.grad);
  if (coeffs.lambda_g > 0.0) {
    const std::size_t m = truncated_length(w_g.size(), coeffs.tau);
    const bool want_truncated = coeffs.tau < 1.0;
    if (teacher_trunc_spectrum.truncated != want_truncated ||
        (want_truncated && teacher_trunc_spectrum.tau != coeffs.tau) ||
        teacher_trunc_spectrum.size() != m) {
      throw std::invalid_argument("gm_loss_and_grad: teacher spectrum kind/tau mismatch");
    }
    const SpectrumVector student = truncate(spectrum(w_g), coeffs.tau);
    const double div = divergence(student, teacher_trunc_spectrum, coeffs.eps);
    out.reg = coeffs.lambda_g * div;
    const ParamVector dg =
        divergence_grad(w_g, teacher_trunc_spectrum, coeffs.tau, coeffs.eps);
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      out.grad[i] += coeffs.lambda_g * dg[i];
    }
  }
  out.loss = out.ce + out.reg;
  return out;
}

}  // namespace specfed
