#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "specfed/data.hpp"
#include "specfed/experiment_config.hpp"
#include "specfed/losses.hpp"
#include "specfed/model.hpp"
#include "specfed/rng.hpp"
#include "specfed/timing.hpp"

namespace specfed {

struct ClientState {
  int id = 0;
  Dataset train;
  Dataset test;
  ParamVector w_p;        // personalized model, never aggregated
  ParamVector w_g_local;  // locally updated generic model
  ClientTiming timing;

  std::size_t n_train() const { return train.size(); }
};

struct ServerState {
  ParamVector w_g;
  int round = 0;  // completed rounds
};

struct Strategy {
  StrategyVariant variant = StrategyVariant::spectral_codistill;
  DistillCoefficients coeffs;
  double mu_ditto = 0.1;  // only used by ditto_l2
};

struct RoundRecord {
  int round = 0;  // 1-based
  double gm_global_acc = 0.0;
  double pm_weighted_acc = 0.0;
  double gm_ce = 0.0;
  double gm_reg = 0.0;  // weighted regularizer contribution
  double pm_ce = 0.0;
  double pm_reg = 0.0;
  std::vector<int> participants;
  double t_sim_cw = 0.0;  // cumulative simulated seconds at round end
  double t_sim_wf = 0.0;
};

struct LocalHyper {
  double eta = 0.05;
  int epochs = 1;
  std::size_t batch = 0;  // 0 = full batch
};

// Mean per-step loss components observed during one client's local phase.
struct PhaseStats {
  double mean_ce = 0.0;
  double mean_reg = 0.0;
  int steps = 0;
};

// Local generic-model training from the broadcast weights. Teacher is the
// truncated spectrum of the client's personalized model, computed once and
// frozen across epochs. Non-spectral variants run plain cross-entropy.
// The result is stored in client.w_g_local.
PhaseStats gm_update(ClientState& client, const ParamVector& w_g_broadcast,
                     const Strategy& strategy, const MlpSpec& spec,
                     const LocalHyper& hyper, Rng& rng);

// Local personalized-model training from client.w_p. Teacher is the full
// spectrum of w_g_updated (the client's own locally updated generic model,
// not the post-aggregation global model), frozen across epochs. local_only
// runs plain cross-entropy; ditto_l2 adds mu/2 * ||w - w_g_updated||^2.
// The result is stored in client.w_p.
PhaseStats pm_update(ClientState& client, const ParamVector& w_g_updated,
                     const Strategy& strategy, const MlpSpec& spec,
                     const LocalHyper& hyper, Rng& rng);

// FedAvg: sum of p_i * w_i with p_i = n_i / sum(n_k).
ParamVector aggregate(const std::vector<std::pair<const ParamVector*, std::size_t>>& updates);

// Uniform sample without replacement of ceil(C * n_clients) ids, deterministic
// per (seed, round), returned in ascending order.
std::vector<int> sample_participants(int n_clients, double fraction,
                                     std::uint64_t seed, int round);

// Fraction of correct argmax predictions; ties break toward the lowest class.
double evaluate_generic(const ParamVector& w_g, const Dataset& global_test,
                        const MlpSpec& spec);

// Weighted average of per-client accuracies on local test sets, weights
// n_i / n from local train counts. For fedavg the generic model stands in
// for every personalized model.
double evaluate_personalized(const std::vector<ClientState>& clients,
                             const MlpSpec& spec, StrategyVariant variant,
                             const ParamVector& w_g_server);

struct FineTuneResult {
  ParamVector w;
  double accuracy = 0.0;
};

// New-client adaptation: copy the generic model and run plain cross-entropy
// epochs on the client's train split.
FineTuneResult fine_tune_new_client(const ParamVector& w_g, const Dataset& train,
                                    const Dataset& test, const MlpSpec& spec,
                                    const LocalHyper& hyper, std::uint64_t seed);

struct ClientData {
  Dataset train;
  Dataset test;
};

struct PreparedData {
  std::vector<ClientData> clients;
  Dataset global_test;
  std::vector<int> fallback_clients;
  int input_dim = 0;
  int num_classes = 0;
};

// Dataset generation/loading, Dirichlet partitioning and local splits, all
// derived from cfg.seed_data.
PreparedData prepare_data(const ExperimentConfig& cfg);

struct RunResult {
  ServerState server;
  std::vector<ClientState> clients;
  std::vector<RoundRecord> records;
  MlpSpec model_spec;
  std::vector<int> fallback_clients;
};

using RoundObserver = std::function<void(const RoundRecord&, const ServerState&,
                                         const std::vector<ClientState>&)>;

// Full training loop: broadcast, per-client gm_update, aggregate, per-client
// pm_update, evaluation, with simulated clocks for every requested protocol.
// Client updates within a round may run on `threads` workers; results are
// identical for any thread count. Aborts with the round index on NaN.
RunResult run_training(const ExperimentConfig& cfg, const PreparedData& data,
                       int threads = 1, const RoundObserver& observer = nullptr);
RunResult run_training(const ExperimentConfig& cfg, int threads = 1,
                       const RoundObserver& observer = nullptr);

}  // namespace specfed
