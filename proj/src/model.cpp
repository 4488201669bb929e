#include "specfed/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "specfed/rng.hpp"

namespace specfed {

namespace {

void check_spec(const MlpSpec& spec) {
  if (spec.layer_sizes.size() < 2) {
    throw std::invalid_argument("MlpSpec: need at least input and output sizes");
  }
  for (int s : spec.layer_sizes) {
    if (s <= 0) throw std::invalid_argument("MlpSpec: layer sizes must be positive");
  }
}

}  // namespace

std::vector<LayerLayout> layer_layout(const MlpSpec& spec) {
  check_spec(spec);
  std::vector<LayerLayout> layers;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    LayerLayout lay;
    lay.in = spec.layer_sizes[l];
    lay.out = spec.layer_sizes[l + 1];
    lay.w_off = off;
    off += static_cast<std::size_t>(lay.in) * lay.out;
    lay.b_off = off;
    off += static_cast<std::size_t>(lay.out);
    layers.push_back(lay);
  }
  return layers;
}

std::size_t param_count(const MlpSpec& spec) {
  const auto layers = layer_layout(spec);
  const auto& last = layers.back();
  return last.b_off + static_cast<std::size_t>(last.out);
}

ParamVector init_model(const MlpSpec& spec) {
  const auto layers = layer_layout(spec);
  ParamVector w(param_count(spec), 0.0);
  Rng rng(spec.seed);
  for (const auto& lay : layers) {
    const double limit = std::sqrt(6.0 / (lay.in + lay.out));
    const std::size_t n = static_cast<std::size_t>(lay.in) * lay.out;
    for (std::size_t i = 0; i < n; ++i) w[lay.w_off + i] = rng.uniform(-limit, limit);
    // biases stay zero
  }
  return w;
}

std::vector<double> forward(const ParamVector& w, const MlpSpec& spec,
                            const std::vector<double>& inputs, std::size_t batch) {
  const auto layers = layer_layout(spec);
  if (w.size() != param_count(spec)) {
    throw std::invalid_argument("forward: weight length does not match spec");
  }
  const std::size_t in_dim = static_cast<std::size_t>(spec.layer_sizes.front());
  if (inputs.size() != batch * in_dim) {
    throw std::invalid_argument("forward: input size does not match batch x in_dim");
  }

  std::vector<double> act = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lay = layers[l];
    std::vector<double> next(batch * static_cast<std::size_t>(lay.out));
    for (std::size_t b = 0; b < batch; ++b) {
      const double* x = act.data() + b * lay.in;
      double* y = next.data() + b * lay.out;
      for (int o = 0; o < lay.out; ++o) {
        double acc = w[lay.b_off + o];
        const double* row = w.data() + lay.w_off + static_cast<std::size_t>(o) * lay.in;
        for (int i = 0; i < lay.in; ++i) acc += row[i] * x[i];
        y[o] = acc;
      }
    }
    if (l + 1 < layers.size()) {
      for (auto& v : next) v = std::max(v, 0.0);
    }
    act = std::move(next);
  }
  return act;
}

CeResult ce_loss_and_grad(const ParamVector& w, const MlpSpec& spec,
                          const LabeledBatch& batch) {
  const auto layers = layer_layout(spec);
  if (w.size() != param_count(spec)) {
    throw std::invalid_argument("ce_loss_and_grad: weight length does not match spec");
  }
  if (batch.in_dim != spec.layer_sizes.front()) {
    throw std::invalid_argument("ce_loss_and_grad: input width does not match spec");
  }
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("ce_loss_and_grad: empty batch");
  if (batch.inputs.size() != n * static_cast<std::size_t>(batch.in_dim)) {
    throw std::invalid_argument("ce_loss_and_grad: inputs/labels size mismatch");
  }
  const int num_classes = spec.layer_sizes.back();
  for (int lbl : batch.labels) {
    if (lbl < 0 || lbl >= num_classes) {
      throw std::invalid_argument("ce_loss_and_grad: label out of range");
    }
  }

  // Forward pass, caching pre-ReLU activations per layer.
  std::vector<std::vector<double>> post;  // post[l] = input to layer l
  post.reserve(layers.size() + 1);
  post.push_back(batch.inputs);
  std::vector<std::vector<double>> pre(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lay = layers[l];
    const auto& x_all = post.back();
    std::vector<double> z(n * static_cast<std::size_t>(lay.out));
    for (std::size_t b = 0; b < n; ++b) {
      const double* x = x_all.data() + b * lay.in;
      double* y = z.data() + b * lay.out;
      for (int o = 0; o < lay.out; ++o) {
        double acc = w[lay.b_off + o];
        const double* row = w.data() + lay.w_off + static_cast<std::size_t>(o) * lay.in;
        for (int i = 0; i < lay.in; ++i) acc += row[i] * x[i];
        y[o] = acc;
      }
    }
    pre[l] = z;
    if (l + 1 < layers.size()) {
      for (auto& v : z) v = std::max(v, 0.0);
      post.push_back(std::move(z));
    }
  }

  // Softmax cross-entropy on the logits; delta = (softmax - onehot) / n.
  const auto& logits = pre.back();
  const int C = num_classes;
  double loss = 0.0;
  std::vector<double> delta(n * static_cast<std::size_t>(C));
  for (std::size_t b = 0; b < n; ++b) {
    const double* row = logits.data() + b * C;
    double mx = row[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (int c = 0; c < C; ++c) sum += std::exp(row[c] - mx);
    const double log_sum = std::log(sum) + mx;
    loss += log_sum - row[batch.labels[b]];
    double* dl = delta.data() + b * C;
    for (int c = 0; c < C; ++c) dl[c] = std::exp(row[c] - log_sum);
    dl[batch.labels[b]] -= 1.0;
  }
  loss /= static_cast<double>(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto& v : delta) v *= inv_n;

  // Backward pass.
  CeResult res;
  res.loss = loss;
  res.grad.assign(w.size(), 0.0);
  std::vector<double> dcur = std::move(delta);
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& lay = layers[li];
    const auto& x_all = post[li];
    for (std::size_t b = 0; b < n; ++b) {
      const double* x = x_all.data() + b * lay.in;
      const double* dy = dcur.data() + b * lay.out;
      for (int o = 0; o < lay.out; ++o) {
        const double g = dy[o];
        if (g == 0.0) continue;
        double* grow = res.grad.data() + lay.w_off + static_cast<std::size_t>(o) * lay.in;
        for (int i = 0; i < lay.in; ++i) grow[i] += g * x[i];
        res.grad[lay.b_off + o] += g;
      }
    }
    if (li == 0) break;
    // Propagate through the previous ReLU: dx = W^T dy, masked by pre > 0.
    const auto& prev_pre = pre[li - 1];
    std::vector<double> dx(n * static_cast<std::size_t>(lay.in), 0.0);
    for (std::size_t b = 0; b < n; ++b) {
      const double* dy = dcur.data() + b * lay.out;
      double* dxb = dx.data() + b * lay.in;
      for (int o = 0; o < lay.out; ++o) {
        const double g = dy[o];
        if (g == 0.0) continue;
        const double* row = w.data() + lay.w_off + static_cast<std::size_t>(o) * lay.in;
        for (int i = 0; i < lay.in; ++i) dxb[i] += g * row[i];
      }
      const double* zp = prev_pre.data() + b * lay.in;
      for (int i = 0; i < lay.in; ++i) {
        if (zp[i] <= 0.0) dxb[i] = 0.0;
      }
    }
    dcur = std::move(dx);
  }
  return res;
}

}  // namespace specfed
