#pragma once

#include <cstddef>
#include <vector>

namespace specfed {

// Per-client cost model: seconds per local epoch and per transfer. These
// parameterize the protocol comparison; only relative magnitudes matter.
struct ClientTiming {
  double t_gm_epoch = 1.0;
  double t_pm_epoch = 1.0;
  double t_up = 0.5;
  double t_down = 0.5;
};

enum class Protocol { compute_and_wait, wait_free };

// Realized training schedule: which clients act each round, and how many
// local epochs each phase runs.
struct Schedule {
  int n_clients = 0;
  int e_g = 1;
  int e_p = 1;
  std::vector<std::vector<int>> participants;  // per round, ascending ids
};

struct RoundTimeline {
  double start = 0.0;                      // earliest participant start
  double end = 0.0;                        // all clients ready for next round
  std::vector<double> upload_complete;     // aligned with the participant list
  double aggregation_complete = 0.0;
  std::vector<double> broadcast_complete;  // per client id (all receive)
};

struct Timeline {
  Protocol protocol = Protocol::compute_and_wait;
  std::vector<RoundTimeline> rounds;
  double total = 0.0;  // end of the last round
};

// Event-driven replay of the schedule under one protocol.
//
// compute_and_wait: upload starts after both local phases
//   (start + e_g*t_gm + e_p*t_pm); aggregation waits for every participant's
//   upload, then each client's broadcast lands t_down later; the next round
//   starts at broadcast-complete.
// wait_free: upload starts right after the GM phase (start + e_g*t_gm); PM
//   training runs concurrently with upload/aggregation/broadcast; the next
//   round starts at max(broadcast-complete, PM-complete).
Timeline simulate(const Schedule& schedule,
                  const std::vector<ClientTiming>& timings, double t_agg,
                  Protocol protocol);

// Homogeneous-client per-round length; analytic counterpart of simulate.
double closed_form_round_time(const ClientTiming& timing, int e_g, int e_p,
                              double t_agg, Protocol protocol);

struct SpeedupReport {
  bool reached = false;
  int rounds_to_target = -1;  // 1-based; -1 when the target was never reached
  double zeta_baseline = 0.0;
  double zeta_waitfree = 0.0;
  double speedup = 0.0;       // zeta_baseline / zeta_waitfree
};

// First round whose accuracy meets the target, and the simulated time both
// protocols need to get there.
SpeedupReport speedup_report(const Timeline& baseline, const Timeline& waitfree,
                             const std::vector<double>& accuracy_trace,
                             double target_acc);

}  // namespace specfed
