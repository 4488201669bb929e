#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specfed/losses.hpp"
#include "specfed/timing.hpp"

namespace specfed {

enum class StrategyVariant { spectral_codistill, fedavg, local_only, ditto_l2 };

const char* to_string(StrategyVariant v);
StrategyVariant strategy_from_string(const std::string& s);
const char* to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

struct DatasetConfig {
  std::string kind = "gaussian_blobs";  // gaussian_blobs | two_spirals | csv
  std::string path;                     // csv only
  std::string label_column = "label";   // csv only; name or 0-based index
  std::size_t samples = 2000;
  int classes = 10;
  int input_dim = 16;
  double noise = 0.5;
};

// Scalar entries apply to every client; length-N lists give per-client values.
struct TimingConfig {
  std::vector<double> t_gm_epoch{1.0};
  std::vector<double> t_pm_epoch{1.0};
  std::vector<double> t_up{0.5};
  std::vector<double> t_down{0.5};
  double t_agg = 0.0;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  int n_clients = 10;
  int rounds = 20;
  double participation = 1.0;  // C in (0, 1]
  double alpha = 0.1;
  double test_fraction = 0.2;

  std::vector<int> hidden{64, 32};  // hidden layer widths

  double eta_g = 0.05;
  double eta_p = 0.05;
  int e_g = 1;
  int e_p = 1;
  std::size_t batch = 0;  // 0 = full batch

  DistillCoefficients coeffs;  // lambda_p, lambda_g, tau, eps
  StrategyVariant strategy = StrategyVariant::spectral_codistill;
  double mu_ditto = 0.1;

  TimingConfig timing;
  std::vector<Protocol> protocols{Protocol::compute_and_wait, Protocol::wait_free};
  double target_acc = 0.8;

  std::uint64_t seed_data = 1;
  std::uint64_t seed_init = 2;
  std::uint64_t seed_sample = 3;
};

// Throws std::invalid_argument naming the offending field.
void validate(const ExperimentConfig& cfg);

// Expands the (scalar or per-client) timing lists to one entry per client.
std::vector<ClientTiming> client_timings(const TimingConfig& timing, int n_clients);

}  // namespace specfed
