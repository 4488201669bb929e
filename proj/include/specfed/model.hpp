#pragma once

#include <cstdint>
#include <vector>

#include "specfed/spectrum.hpp"

namespace specfed {

// Multilayer perceptron shape: affine + ReLU per hidden layer, final layer
// affine. Activation is fixed to ReLU.
struct MlpSpec {
  std::vector<int> layer_sizes;  // [in, h1, ..., out], at least 2 entries
  std::uint64_t seed = 0;
};

struct LabeledBatch {
  std::vector<double> inputs;  // batch x in_dim, row-major
  std::vector<int> labels;     // each in [0, num_classes)
  int in_dim = 0;

  std::size_t size() const { return labels.size(); }
};

// Flattening offsets for one layer inside a ParamVector.
struct LayerLayout {
  int in = 0;
  int out = 0;
  std::size_t w_off = 0;  // out x in weights, row-major
  std::size_t b_off = 0;  // out biases
};

std::vector<LayerLayout> layer_layout(const MlpSpec& spec);

// Total parameter count d = sum over layers of (in*out + out).
std::size_t param_count(const MlpSpec& spec);

// Xavier-uniform weights, zero biases, drawn from a counter-based stream
// keyed by spec.seed. Identical spec gives bit-identical output.
ParamVector init_model(const MlpSpec& spec);

// Logits for a batch, row-major (batch x out).
std::vector<double> forward(const ParamVector& w, const MlpSpec& spec,
                            const std::vector<double>& inputs, std::size_t batch);

struct CeResult {
  double loss = 0.0;
  ParamVector grad;
};

// Mean cross-entropy over the batch and its gradient by backpropagation.
// Softmax uses max-subtraction for stability.
CeResult ce_loss_and_grad(const ParamVector& w, const MlpSpec& spec,
                          const LabeledBatch& batch);

}  // namespace specfed
