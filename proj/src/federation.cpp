#include "specfed/federation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

namespace specfed {

namespace {

bool all_finite(const ParamVector& w) {
  for (double x : w) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Stream key for (seed, round, client, phase); phase 0 = GM, 1 = PM.
std::uint64_t stream_key(std::uint64_t seed, int round, int client, int phase) {
  std::uint64_t k = Rng::derive(seed, static_cast<std::uint64_t>(round));
  k = Rng::derive(k, static_cast<std::uint64_t>(client) + 1);
  return Rng::derive(k, static_cast<std::uint64_t>(phase) + 17);
}

LabeledBatch make_batch(const Dataset& ds, const std::vector<int>& rows,
                        std::size_t begin, std::size_t end) {
  LabeledBatch b;
  b.in_dim = ds.in_dim;
  b.inputs.reserve((end - begin) * static_cast<std::size_t>(ds.in_dim));
  b.labels.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const int r = rows[i];
    const double* src = ds.inputs.data() + static_cast<std::size_t>(r) * ds.in_dim;
    b.inputs.insert(b.inputs.end(), src, src + ds.in_dim);
    b.labels.push_back(ds.labels[r]);
  }
  return b;
}

template <typename Step>
PhaseStats descend(ParamVector& w, const Dataset& train, const LocalHyper& hyper,
                   Rng& rng, const Step& step) {
  PhaseStats stats;
  const std::size_t n = train.size();
  if (n == 0) throw std::invalid_argument("local update: client has no training data");
  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  const bool full_batch = hyper.batch == 0 || hyper.batch >= n;
  double sum_ce = 0.0, sum_reg = 0.0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    if (!full_batch) rng.shuffle(rows);
    const std::size_t chunk = full_batch ? n : hyper.batch;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
      const std::size_t end = std::min(begin + chunk, n);
      const LabeledBatch batch = make_batch(train, rows, begin, end);
      const CompositeLoss res = step(w, batch);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= hyper.eta * res.grad[i];
      sum_ce += res.ce;
      sum_reg += res.reg;
      ++stats.steps;
    }
  }
  if (stats.steps > 0) {
    stats.mean_ce = sum_ce / stats.steps;
    stats.mean_reg = sum_reg / stats.steps;
  }
  return stats;
}

// Runs fn(i) for i in [0, n); work items must be independent.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error = nullptr;
  std::mutex err_mtx;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = static_cast<std::size_t>(t); i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mtx);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

PhaseStats gm_update(ClientState& client, const ParamVector& w_g_broadcast,
                     const Strategy& strategy, const MlpSpec& spec,
                     const LocalHyper& hyper, Rng& rng) {
  if (w_g_broadcast.size() != param_count(spec)) {
    throw std::invalid_argument("gm_update: broadcast weight length mismatch");
  }
  ParamVector w = w_g_broadcast;
  const bool spectral = strategy.variant == StrategyVariant::spectral_codistill &&
                        strategy.coeffs.lambda_g > 0.0;
  PhaseStats stats;
  if (hyper.epochs > 0) {
    if (spectral) {
      // Teacher spectrum frozen for the whole phase.
      const SpectrumVector teacher =
          truncate(spectrum(client.w_p), strategy.coeffs.tau);
      stats = descend(w, client.train, hyper, rng,
                      [&](const ParamVector& x, const LabeledBatch& b) {
                        return gm_loss_and_grad(x, teacher, spec, b, strategy.coeffs);
                      });
    } else {
      stats = descend(w, client.train, hyper, rng,
                      [&](const ParamVector& x, const LabeledBatch& b) {
                        CeResult ce = ce_loss_and_grad(x, spec, b);
                        CompositeLoss out;
                        out.loss = out.ce = ce.loss;
                        out.grad = std::move(ce.grad);
                        return out;
                      });
    }
  }
  client.w_g_local = std::move(w);
  return stats;
}

PhaseStats pm_update(ClientState& client, const ParamVector& w_g_updated,
                     const Strategy& strategy, const MlpSpec& spec,
                     const LocalHyper& hyper, Rng& rng) {
  if (strategy.variant == StrategyVariant::fedavg) {
    return {};  // no personalized model; the generic model stands in
  }
  if (w_g_updated.size() != param_count(spec) || client.w_p.size() != w_g_updated.size()) {
    throw std::invalid_argument("pm_update: weight length mismatch");
  }
  if (hyper.epochs == 0) return {};

  ParamVector w = client.w_p;
  PhaseStats stats;
  switch (strategy.variant) {
    case StrategyVariant::spectral_codistill: {
      if (strategy.coeffs.lambda_p > 0.0) {
        const SpectrumVector teacher = spectrum(w_g_updated);  // full, frozen
        stats = descend(w, client.train, hyper, rng,
                        [&](const ParamVector& x, const LabeledBatch& b) {
                          return pm_loss_and_grad(x, teacher, spec, b, strategy.coeffs);
                        });
        break;
      }
      [[fallthrough]];  // lambda_p = 0 trains exactly like local_only
    }
    case StrategyVariant::local_only: {
      stats = descend(w, client.train, hyper, rng,
                      [&](const ParamVector& x, const LabeledBatch& b) {
                        CeResult ce = ce_loss_and_grad(x, spec, b);
                        CompositeLoss out;
                        out.loss = out.ce = ce.loss;
                        out.grad = std::move(ce.grad);
                        return out;
                      });
      break;
    }
    case StrategyVariant::ditto_l2: {
      const double mu = strategy.mu_ditto;
      stats = descend(w, client.train, hyper, rng,
                      [&](const ParamVector& x, const LabeledBatch& b) {
                        CeResult ce = ce_loss_and_grad(x, spec, b);
                        CompositeLoss out;
                        out.ce = ce.loss;
                        out.grad = std::move(ce.grad);
                        double prox = 0.0;
                        for (std::size_t i = 0; i < x.size(); ++i) {
                          const double diff = x[i] - w_g_updated[i];
                          prox += diff * diff;
                          out.grad[i] += mu * diff;
                        }
                        out.reg = 0.5 * mu * prox;
                        out.loss = out.ce + out.reg;
                        return out;
                      });
      break;
    }
    case StrategyVariant::fedavg:
      break;  // unreachable
  }
  client.w_p = std::move(w);
  return stats;
}

ParamVector aggregate(const std::vector<std::pair<const ParamVector*, std::size_t>>& updates) {
  if (updates.empty()) throw std::invalid_argument("aggregate: empty update list");
  const std::size_t d = updates.front().first->size();
  std::size_t total = 0;
  for (const auto& [w, n] : updates) {
    if (w->size() != d) throw std::invalid_argument("aggregate: weight length mismatch");
    total += n;
  }
  if (total == 0) throw std::invalid_argument("aggregate: zero total sample count");
  ParamVector out(d, 0.0);
  for (const auto& [w, n] : updates) {
    const double p = static_cast<double>(n) / static_cast<double>(total);
    for (std::size_t i = 0; i < d; ++i) out[i] += p * (*w)[i];
  }
  return out;
}

std::vector<int> sample_participants(int n_clients, double fraction,
                                     std::uint64_t seed, int round) {
  if (n_clients < 1) throw std::invalid_argument("sample_participants: n_clients must be >= 1");
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("sample_participants: fraction must be in (0, 1]");
  }
  const double exact = fraction * static_cast<double>(n_clients);
  int m = static_cast<int>(std::ceil(exact - 1e-9));
  m = std::max(1, std::min(n_clients, m));

  std::vector<int> ids(n_clients);
  std::iota(ids.begin(), ids.end(), 0);
  if (m < n_clients) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(round)));
    for (int i = 0; i < m; ++i) {
      const int j = i + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n_clients - i)));
      std::swap(ids[i], ids[j]);
    }
    ids.resize(m);
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

double evaluate_generic(const ParamVector& w_g, const Dataset& global_test,
                        const MlpSpec& spec) {
  const std::size_t n = global_test.size();
  if (n == 0) throw std::invalid_argument("evaluate_generic: empty test set");
  const std::vector<double> logits = forward(w_g, spec, global_test.inputs, n);
  const int C = spec.layer_sizes.back();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * C;
    int best = 0;
    for (int c = 1; c < C; ++c) {
      if (row[c] > row[best]) best = c;  // ties keep the lowest class index
    }
    if (best == global_test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double evaluate_personalized(const std::vector<ClientState>& clients,
                             const MlpSpec& spec, StrategyVariant variant,
                             const ParamVector& w_g_server) {
  if (clients.empty()) throw std::invalid_argument("evaluate_personalized: no clients");
  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& client : clients) {
    const ParamVector& w =
        variant == StrategyVariant::fedavg ? w_g_server : client.w_p;
    const double acc = evaluate_generic(w, client.test, spec);
    weighted += static_cast<double>(client.n_train()) * acc;
    total += client.n_train();
  }
  return weighted / static_cast<double>(total);
}

FineTuneResult fine_tune_new_client(const ParamVector& w_g, const Dataset& train,
                                    const Dataset& test, const MlpSpec& spec,
                                    const LocalHyper& hyper, std::uint64_t seed) {
  FineTuneResult res;
  res.w = w_g;
  Rng rng(seed);
  if (hyper.epochs > 0) {
    descend(res.w, train, hyper, rng,
            [&](const ParamVector& x, const LabeledBatch& b) {
              CeResult ce = ce_loss_and_grad(x, spec, b);
              CompositeLoss out;
              out.loss = out.ce = ce.loss;
              out.grad = std::move(ce.grad);
              return out;
            });
  }
  res.accuracy = evaluate_generic(res.w, test, spec);
  return res;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  validate(cfg);
  Dataset ds;
  if (cfg.dataset.kind == "csv") {
    ds = load_csv(cfg.dataset.path, cfg.dataset.label_column);
  } else {
    const SyntheticKind kind = cfg.dataset.kind == "gaussian_blobs"
                                   ? SyntheticKind::gaussian_blobs
                                   : SyntheticKind::two_spirals;
    ds = gen_synthetic(kind, cfg.dataset.samples, cfg.dataset.classes,
                       cfg.dataset.input_dim, cfg.dataset.noise, cfg.seed_data);
  }
  const Partition part =
      dirichlet_partition(ds, cfg.n_clients, cfg.alpha, Rng::derive(cfg.seed_data, 1));
  LocalSplit split =
      split_local(part, ds, cfg.test_fraction, Rng::derive(cfg.seed_data, 2));

  PreparedData out;
  out.input_dim = ds.in_dim;
  out.num_classes = ds.num_classes;
  out.global_test = std::move(split.global_test);
  out.fallback_clients = std::move(split.fallback_clients);
  out.clients.resize(cfg.n_clients);
  for (int k = 0; k < cfg.n_clients; ++k) {
    out.clients[k].train = std::move(split.train[k]);
    out.clients[k].test = std::move(split.test[k]);
  }
  return out;
}

RunResult run_training(const ExperimentConfig& cfg, const PreparedData& data,
                       int threads, const RoundObserver& observer) {
  validate(cfg);
  const int n_clients = static_cast<int>(data.clients.size());
  if (n_clients < 1) throw std::invalid_argument("run_training: no client data");

  RunResult result;
  result.fallback_clients = data.fallback_clients;
  result.model_spec.layer_sizes.push_back(data.input_dim);
  for (int h : cfg.hidden) result.model_spec.layer_sizes.push_back(h);
  result.model_spec.layer_sizes.push_back(data.num_classes);
  result.model_spec.seed = Rng::derive(cfg.seed_init, 0);
  const MlpSpec& spec = result.model_spec;

  Strategy strategy;
  strategy.variant = cfg.strategy;
  strategy.coeffs = cfg.coeffs;
  strategy.mu_ditto = cfg.mu_ditto;

  result.server.w_g = init_model(spec);
  const auto timings = client_timings(cfg.timing, n_clients);
  result.clients.resize(n_clients);
  for (int k = 0; k < n_clients; ++k) {
    ClientState& c = result.clients[k];
    c.id = k;
    c.train = data.clients[k].train;
    c.test = data.clients[k].test;
    MlpSpec pm_spec = spec;
    pm_spec.seed = Rng::derive(cfg.seed_init, static_cast<std::uint64_t>(k) + 1);
    c.w_p = init_model(pm_spec);
    c.w_g_local = result.server.w_g;
    c.timing = timings[k];
  }

  // The participant schedule is deterministic up front, so simulated clocks
  // can be computed before the training loop runs.
  Schedule schedule;
  schedule.n_clients = n_clients;
  schedule.e_g = cfg.e_g;
  schedule.e_p = cfg.e_p;
  for (int t = 1; t <= cfg.rounds; ++t) {
    schedule.participants.push_back(
        sample_participants(n_clients, cfg.participation, cfg.seed_sample, t));
  }
  Timeline tl_cw, tl_wf;
  bool have_cw = false, have_wf = false;
  if (cfg.rounds > 0) {
    for (Protocol proto : cfg.protocols) {
      if (proto == Protocol::compute_and_wait) {
        tl_cw = simulate(schedule, timings, cfg.timing.t_agg, proto);
        have_cw = true;
      } else {
        tl_wf = simulate(schedule, timings, cfg.timing.t_agg, proto);
        have_wf = true;
      }
    }
  }

  const LocalHyper gm_hyper{cfg.eta_g, cfg.e_g, cfg.batch};
  const LocalHyper pm_hyper{cfg.eta_p, cfg.e_p, cfg.batch};

  for (int t = 1; t <= cfg.rounds; ++t) {
    const std::vector<int>& parts = schedule.participants[t - 1];
    const std::size_t P = parts.size();
    std::vector<PhaseStats> gm_stats(P), pm_stats(P);

    parallel_for(P, threads, [&](std::size_t i) {
      const int k = parts[i];
      Rng rng(stream_key(cfg.seed_sample, t, k, 0));
      gm_stats[i] = gm_update(result.clients[k], result.server.w_g, strategy,
                              spec, gm_hyper, rng);
    });
    for (std::size_t i = 0; i < P; ++i) {
      if (!std::isfinite(gm_stats[i].mean_ce) || !std::isfinite(gm_stats[i].mean_reg) ||
          !all_finite(result.clients[parts[i]].w_g_local)) {
        throw std::runtime_error("NaN in generic-model update at round " +
                                 std::to_string(t) + " (client " +
                                 std::to_string(parts[i]) + ")");
      }
    }

    std::vector<std::pair<const ParamVector*, std::size_t>> updates;
    updates.reserve(P);
    for (int k : parts) {
      updates.emplace_back(&result.clients[k].w_g_local, result.clients[k].n_train());
    }
    result.server.w_g = aggregate(updates);
    result.server.round = t;
    if (!all_finite(result.server.w_g)) {
      throw std::runtime_error("NaN in aggregated model at round " + std::to_string(t));
    }

    if (cfg.strategy != StrategyVariant::fedavg) {
      parallel_for(P, threads, [&](std::size_t i) {
        const int k = parts[i];
        Rng rng(stream_key(cfg.seed_sample, t, k, 1));
        pm_stats[i] = pm_update(result.clients[k], result.clients[k].w_g_local,
                                strategy, spec, pm_hyper, rng);
      });
      for (std::size_t i = 0; i < P; ++i) {
        if (!std::isfinite(pm_stats[i].mean_ce) || !std::isfinite(pm_stats[i].mean_reg) ||
            !all_finite(result.clients[parts[i]].w_p)) {
          throw std::runtime_error("NaN in personalized-model update at round " +
                                   std::to_string(t) + " (client " +
                                   std::to_string(parts[i]) + ")");
        }
      }
    }

    RoundRecord rec;
    rec.round = t;
    rec.participants = parts;
    for (std::size_t i = 0; i < P; ++i) {
      rec.gm_ce += gm_stats[i].mean_ce;
      rec.gm_reg += gm_stats[i].mean_reg;
      rec.pm_ce += pm_stats[i].mean_ce;
      rec.pm_reg += pm_stats[i].mean_reg;
    }
    rec.gm_ce /= static_cast<double>(P);
    rec.gm_reg /= static_cast<double>(P);
    rec.pm_ce /= static_cast<double>(P);
    rec.pm_reg /= static_cast<double>(P);
    rec.gm_global_acc = evaluate_generic(result.server.w_g, data.global_test, spec);
    rec.pm_weighted_acc =
        evaluate_personalized(result.clients, spec, cfg.strategy, result.server.w_g);
    if (have_cw) rec.t_sim_cw = tl_cw.rounds[t - 1].end;
    if (have_wf) rec.t_sim_wf = tl_wf.rounds[t - 1].end;
    result.records.push_back(std::move(rec));
    if (observer) observer(result.records.back(), result.server, result.clients);
  }
  return result;
}

RunResult run_training(const ExperimentConfig& cfg, int threads,
                       const RoundObserver& observer) {
  const PreparedData data = prepare_data(cfg);
  return run_training(cfg, data, threads, observer);
}

}  // namespace specfed
