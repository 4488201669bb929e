#include "specfed/experiment_config.hpp"

#include <cmath>
#include <stdexcept>

namespace specfed {

const char* to_string(StrategyVariant v) {
  switch (v) {
    case StrategyVariant::spectral_codistill: return "spectral_codistill";
    case StrategyVariant::fedavg: return "fedavg";
    case StrategyVariant::local_only: return "local_only";
    case StrategyVariant::ditto_l2: return "ditto_l2";
  }
  return "unknown";
}

StrategyVariant strategy_from_string(const std::string& s) {
  if (s == "spectral_codistill") return StrategyVariant::spectral_codistill;
  if (s == "fedavg") return StrategyVariant::fedavg;
  if (s == "local_only") return StrategyVariant::local_only;
  if (s == "ditto_l2") return StrategyVariant::ditto_l2;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

const char* to_string(Protocol p) {
  return p == Protocol::compute_and_wait ? "compute_and_wait" : "wait_free";
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "compute_and_wait") return Protocol::compute_and_wait;
  if (s == "wait_free") return Protocol::wait_free;
  throw std::invalid_argument("unknown protocol '" + s + "'");
}

namespace {

void check_timing_list(const std::vector<double>& v, int n_clients, const char* key) {
  if (v.size() != 1 && v.size() != static_cast<std::size_t>(n_clients)) {
    throw std::invalid_argument(std::string(key) +
                                ": expected 1 value or one per client");
  }
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument(std::string(key) + ": values must be finite and >= 0");
    }
  }
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const auto& d = cfg.dataset;
  if (d.kind != "gaussian_blobs" && d.kind != "two_spirals" && d.kind != "csv") {
    throw std::invalid_argument("dataset: unknown kind '" + d.kind + "'");
  }
  if (d.kind == "csv" && d.path.empty()) {
    throw std::invalid_argument("dataset_path: required for csv datasets");
  }
  if (d.kind != "csv") {
    if (d.classes < 1) throw std::invalid_argument("classes: must be >= 1");
    if (d.samples < static_cast<std::size_t>(d.classes)) {
      throw std::invalid_argument("samples: must be >= classes");
    }
    if (d.input_dim < 2) throw std::invalid_argument("input_dim: must be >= 2");
    if (d.noise < 0.0) throw std::invalid_argument("noise: must be >= 0");
  }
  if (cfg.n_clients < 1) throw std::invalid_argument("clients: must be >= 1");
  if (cfg.rounds < 0) throw std::invalid_argument("rounds: must be >= 0");
  if (!(cfg.participation > 0.0) || cfg.participation > 1.0) {
    throw std::invalid_argument("participation: must be in (0, 1]");
  }
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument("alpha: must be > 0");
  if (!(cfg.test_fraction > 0.0) || !(cfg.test_fraction < 0.5)) {
    throw std::invalid_argument("test_fraction: must be in (0, 0.5)");
  }
  for (int h : cfg.hidden) {
    if (h < 1) throw std::invalid_argument("hidden: layer widths must be >= 1");
  }
  if (!(cfg.eta_g > 0.0)) throw std::invalid_argument("eta_g: must be > 0");
  if (!(cfg.eta_p > 0.0)) throw std::invalid_argument("eta_p: must be > 0");
  if (cfg.e_g < 0) throw std::invalid_argument("e_g: must be >= 0");
  if (cfg.e_p < 0) throw std::invalid_argument("e_p: must be >= 0");
  try {
    validate(cfg.coeffs);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(e.what()));
  }
  if (cfg.mu_ditto < 0.0) throw std::invalid_argument("mu_ditto: must be >= 0");
  if (!(cfg.target_acc >= 0.0) || cfg.target_acc > 1.0) {
    throw std::invalid_argument("target_acc: must be in [0, 1]");
  }
  if (cfg.protocols.empty()) throw std::invalid_argument("protocols: need at least one");
  check_timing_list(cfg.timing.t_gm_epoch, cfg.n_clients, "t_gm_epoch");
  check_timing_list(cfg.timing.t_pm_epoch, cfg.n_clients, "t_pm_epoch");
  check_timing_list(cfg.timing.t_up, cfg.n_clients, "t_up");
  check_timing_list(cfg.timing.t_down, cfg.n_clients, "t_down");
  if (!(cfg.timing.t_agg >= 0.0) || !std::isfinite(cfg.timing.t_agg)) {
    throw std::invalid_argument("t_agg: must be finite and >= 0");
  }
}

std::vector<ClientTiming> client_timings(const TimingConfig& timing, int n_clients) {
  auto at = [](const std::vector<double>& v, int i) {
    return v.size() == 1 ? v[0] : v[static_cast<std::size_t>(i)];
  };
  std::vector<ClientTiming> out(n_clients);
  for (int i = 0; i < n_clients; ++i) {
    out[i].t_gm_epoch = at(timing.t_gm_epoch, i);
    out[i].t_pm_epoch = at(timing.t_pm_epoch, i);
    out[i].t_up = at(timing.t_up, i);
    out[i].t_down = at(timing.t_down, i);
  }
  return out;
}

}  // namespace specfed
