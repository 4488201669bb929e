#include "specfed/timing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>

namespace specfed {

namespace {

enum class EventKind { upload_done, pm_done, agg_done, broadcast_done };

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;  // tie-breaker so processing order is total
  EventKind kind = EventKind::upload_done;
  int client = -1;
  int round = 0;  // 0-based
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

void check_timing(const ClientTiming& t) {
  const double vals[] = {t.t_gm_epoch, t.t_pm_epoch, t.t_up, t.t_down};
  for (double v : vals) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("timing parameters must be finite and >= 0");
    }
  }
}

}  // namespace

Timeline simulate(const Schedule& schedule,
                  const std::vector<ClientTiming>& timings, double t_agg,
                  Protocol protocol) {
  const int n = schedule.n_clients;
  const std::size_t n_rounds = schedule.participants.size();
  if (n_rounds < 1) throw std::invalid_argument("simulate: schedule needs >= 1 round");
  if (n < 1) throw std::invalid_argument("simulate: need >= 1 client");
  if (timings.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("simulate: one ClientTiming per client required");
  }
  if (!(t_agg >= 0.0) || !std::isfinite(t_agg)) {
    throw std::invalid_argument("simulate: t_agg must be finite and >= 0");
  }
  for (const auto& t : timings) check_timing(t);
  if (schedule.e_g < 0 || schedule.e_p < 0) {
    throw std::invalid_argument("simulate: epoch counts must be >= 0");
  }
  for (const auto& round : schedule.participants) {
    if (round.empty()) throw std::invalid_argument("simulate: empty participant set");
    for (int id : round) {
      if (id < 0 || id >= n) throw std::invalid_argument("simulate: participant id out of range");
    }
  }

  Timeline tl;
  tl.protocol = protocol;
  tl.rounds.resize(n_rounds);
  for (std::size_t r = 0; r < n_rounds; ++r) {
    tl.rounds[r].upload_complete.assign(schedule.participants[r].size(), 0.0);
    tl.rounds[r].broadcast_complete.assign(n, 0.0);
  }

  std::priority_queue<Event, std::vector<Event>, EventLater> queue;
  std::uint64_t seq = 0;

  std::vector<double> ready(n, 0.0);     // earliest start of the client's next round
  std::vector<double> pm_busy(n, 0.0);   // PM-training completion of the latest round
  std::vector<std::size_t> uploads_pending(n_rounds, 0);

  auto begin_round = [&](std::size_t r) {
    auto& round = tl.rounds[r];
    const auto& parts = schedule.participants[r];
    uploads_pending[r] = parts.size();
    round.start = ready[parts.front()];
    for (int id : parts) round.start = std::min(round.start, ready[id]);
    for (int id : parts) {
      const ClientTiming& t = timings[id];
      const double s = ready[id];
      const double gm_done = s + schedule.e_g * t.t_gm_epoch;
      if (protocol == Protocol::compute_and_wait) {
        const double pm_done = gm_done + schedule.e_p * t.t_pm_epoch;
        queue.push({pm_done + t.t_up, ++seq, EventKind::upload_done, id,
                    static_cast<int>(r)});
      } else {
        queue.push({gm_done + t.t_up, ++seq, EventKind::upload_done, id,
                    static_cast<int>(r)});
        const double pm_done = gm_done + schedule.e_p * t.t_pm_epoch;
        pm_busy[id] = pm_done;
        queue.push({pm_done, ++seq, EventKind::pm_done, id, static_cast<int>(r)});
      }
    }
  };

  begin_round(0);
  std::size_t rounds_finished = 0;
  std::vector<int> broadcasts_pending(n_rounds, 0);

  while (!queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    auto& round = tl.rounds[ev.round];
    switch (ev.kind) {
      case EventKind::upload_done: {
        const auto& parts = schedule.participants[ev.round];
        const auto slot = std::find(parts.begin(), parts.end(), ev.client) - parts.begin();
        round.upload_complete[slot] = ev.time;
        if (--uploads_pending[ev.round] == 0) {
          queue.push({ev.time + t_agg, ++seq, EventKind::agg_done, -1, ev.round});
        }
        break;
      }
      case EventKind::agg_done: {
        round.aggregation_complete = ev.time;
        broadcasts_pending[ev.round] = n;
        for (int id = 0; id < n; ++id) {
          queue.push({ev.time + timings[id].t_down, ++seq,
                      EventKind::broadcast_done, id, ev.round});
        }
        break;
      }
      case EventKind::broadcast_done: {
        round.broadcast_complete[ev.client] = ev.time;
        ready[ev.client] = std::max(ev.time, pm_busy[ev.client]);
        round.end = std::max(round.end, ready[ev.client]);
        if (--broadcasts_pending[ev.round] == 0) {
          ++rounds_finished;
          if (rounds_finished < n_rounds) begin_round(rounds_finished);
        }
        break;
      }
      case EventKind::pm_done:
        round.end = std::max(round.end, ev.time);
        break;
    }
  }

  tl.total = tl.rounds.back().end;
  return tl;
}

double closed_form_round_time(const ClientTiming& timing, int e_g, int e_p,
                              double t_agg, Protocol protocol) {
  check_timing(timing);
  const double gm = e_g * timing.t_gm_epoch;
  const double pm = e_p * timing.t_pm_epoch;
  const double comm = timing.t_up + t_agg + timing.t_down;
  if (protocol == Protocol::compute_and_wait) return gm + pm + comm;
  return gm + std::max(pm, comm);
}

SpeedupReport speedup_report(const Timeline& baseline, const Timeline& waitfree,
                             const std::vector<double>& accuracy_trace,
                             double target_acc) {
  if (accuracy_trace.empty()) {
    throw std::invalid_argument("speedup_report: empty accuracy trace");
  }
  SpeedupReport rep;
  for (std::size_t r = 0; r < accuracy_trace.size(); ++r) {
    if (accuracy_trace[r] >= target_acc) {
      rep.reached = true;
      rep.rounds_to_target = static_cast<int>(r) + 1;
      rep.zeta_baseline = baseline.rounds.at(r).end;
      rep.zeta_waitfree = waitfree.rounds.at(r).end;
      if (rep.zeta_waitfree > 0.0) rep.speedup = rep.zeta_baseline / rep.zeta_waitfree;
      break;
    }
  }
  return rep;
}

}  // namespace specfed
