#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "pbr/scenario.hpp"
#include "pbr/ticks.hpp"

namespace pbr {

// One receive-side noise draw in seconds: Gaussian plus, with probability
// p_nlos, a positive Exponential excess. Fixed draw order per call keeps
// traces reproducible for a given (config, seed).
double sample_noise(const NoiseModel& model, std::mt19937_64& rng);

// One round of the periodic exchange between a local/remote pair, all
// timestamps in integer ticks of the owning vehicle's clock:
//   t_D  local departure      s_A  arrival at the remote
//   s_D  remote departure     t_A  arrival back at the local vehicle
// True distances are evaluated at the true event instants; time of flight
// enters the timestamps but not the event schedule.
struct ExchangeRecord {
  std::int64_t n = 0;
  Tick t_D = 0;
  Tick s_A = 0;
  Tick s_D = 0;
  Tick t_A = 0;
  std::optional<double> true_d_D_m;
  std::optional<double> true_d_A_m;
};

// N-vehicle broadcast timeline. dep[v][n] is vehicle v's own stamp of its
// n-th departure; arr[v][u][n] is v's stamp of the arrival of u's n-th
// message (empty when dropped); dist[v][u][n] is the true distance at that
// event's instant.
struct MultiTrace {
  std::size_t vehicles = 0;
  std::int64_t periods = 0;
  std::vector<std::vector<Tick>> dep;
  std::vector<std::vector<std::vector<std::optional<Tick>>>> arr;
  std::vector<std::vector<std::vector<double>>> dist;
};

MultiTrace simulate_multi(const ScenarioConfig& cfg);

// Pairwise record stream between cfg vehicles "local" (index 0) and
// "remote" (index 1). Periods that lost either message are omitted.
std::vector<ExchangeRecord> simulate_trace(const ScenarioConfig& cfg);

// Pairwise view of a multi-vehicle trace: local vehicle a ranging to b.
// Remote departures pair with the first b-message after b heard a's n-th.
std::vector<ExchangeRecord> pair_records(const MultiTrace& t, std::size_t a,
                                         std::size_t b,
                                         const ScenarioConfig& cfg);

}  // namespace pbr
