#include "pbr/simulate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "pbr/clock.hpp"
#include "pbr/trajectory.hpp"

namespace pbr {

double sample_noise(const NoiseModel& model, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double z_m = gauss(rng) * model.sigma_m;
  const double u = uniform(rng);
  if (u < model.p_nlos && model.nlos_mean_m > 0.0) {
    std::exponential_distribution<double> excess(1.0 / model.nlos_mean_m);
    z_m += excess(rng);
  }
  return z_m / kSpeedOfLightMps;
}

namespace {

std::uint64_t clock_seed(std::uint64_t base, std::size_t v) {
  return base ^ (0x9e3779b97f4a7c15ULL * (v + 1));
}

std::size_t vehicle_index(const ScenarioConfig& cfg, const std::string& name) {
  for (std::size_t i = 0; i < cfg.vehicles.size(); ++i) {
    if (cfg.vehicles[i].name == name) return i;
  }
  throw std::invalid_argument("pairwise scenario needs a vehicle named '" +
                              name + "'");
}

}  // namespace

MultiTrace simulate_multi(const ScenarioConfig& cfg) {
  cfg.validate();
  const std::size_t nveh = cfg.vehicles.size();
  const Tick period_ticks = seconds_to_ticks(cfg.period_s);
  const std::int64_t periods =
      static_cast<std::int64_t>(std::floor(cfg.duration_s / cfg.period_s));

  std::vector<Trajectory> traj;
  std::vector<Clock> clocks;
  std::vector<Tick> offset_ticks;
  for (std::size_t v = 0; v < nveh; ++v) {
    traj.emplace_back(cfg.vehicles[v].waypoints, cfg.max_speed_mps);
    clocks.emplace_back(cfg.vehicles[v].clock, clock_seed(cfg.seed, v));
    offset_ticks.push_back(seconds_to_ticks(cfg.transmit_offset_s(v)));
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> jitter(-cfg.jitter_s, cfg.jitter_s);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  MultiTrace out;
  out.vehicles = nveh;
  out.periods = periods;
  out.dep.assign(nveh, {});
  out.arr.assign(nveh, std::vector<std::vector<std::optional<Tick>>>(nveh));
  out.dist.assign(nveh, std::vector<std::vector<double>>(nveh));

  // Transmit offsets increase with the vehicle index, so walking v across
  // 0..nveh-1 inside each period visits events in true-time order and every
  // clock sees monotone queries. Clocks are read even for dropped messages
  // so drift evolution does not depend on loss outcomes.
  for (std::int64_t n = 0; n < periods; ++n) {
    for (std::size_t v = 0; v < nveh; ++v) {
      const Tick tau = n * period_ticks + offset_ticks[v] +
                       seconds_to_ticks(jitter(rng));
      const double tau_s = ticks_to_seconds(tau);
      out.dep[v].push_back(clocks[v].to_local(tau));
      for (std::size_t u = 0; u < nveh; ++u) {
        if (u == v) continue;
        const double d = distance_between(traj[u], traj[v], tau_s);
        const double z = sample_noise(cfg.noise, rng);
        const bool dropped = unit(rng) < cfg.p_drop;
        const Tick stamp =
            clocks[u].to_local(tau, d / kSpeedOfLightMps + z);
        out.dist[u][v].push_back(d);
        out.arr[u][v].push_back(dropped ? std::nullopt
                                        : std::optional<Tick>(stamp));
      }
    }
  }
  return out;
}

std::vector<ExchangeRecord> simulate_trace(const ScenarioConfig& cfg) {
  cfg.validate();
  const std::size_t local = vehicle_index(cfg, "local");
  const std::size_t remote = vehicle_index(cfg, "remote");
  if (cfg.vehicles.size() != 2) {
    throw std::invalid_argument("pairwise trace needs exactly two vehicles");
  }

  const Tick period_ticks = seconds_to_ticks(cfg.period_s);
  const double offset_s =
      cfg.remote_offset_s >= 0.0 ? cfg.remote_offset_s : 0.5 * cfg.period_s;
  const Tick offset_ticks = seconds_to_ticks(offset_s);
  const std::int64_t periods =
      static_cast<std::int64_t>(std::floor(cfg.duration_s / cfg.period_s));

  Trajectory traj_l(cfg.vehicles[local].waypoints, cfg.max_speed_mps);
  Trajectory traj_r(cfg.vehicles[remote].waypoints, cfg.max_speed_mps);
  Clock clk_l(cfg.vehicles[local].clock, clock_seed(cfg.seed, 0));
  Clock clk_r(cfg.vehicles[remote].clock, clock_seed(cfg.seed, 1));

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> jitter(-cfg.jitter_s, cfg.jitter_s);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<ExchangeRecord> records;
  records.reserve(static_cast<std::size_t>(periods));
  for (std::int64_t n = 0; n < periods; ++n) {
    const Tick tau_d = n * period_ticks + seconds_to_ticks(jitter(rng));
    const Tick tau_s = n * period_ticks + offset_ticks +
                       seconds_to_ticks(jitter(rng));
    const double d_d = distance_between(traj_l, traj_r,
                                        ticks_to_seconds(tau_d));
    const double d_a = distance_between(traj_l, traj_r,
                                        ticks_to_seconds(tau_s));
    const double z_a = sample_noise(cfg.noise, rng);
    const double z_d = sample_noise(cfg.noise, rng);
    const bool drop_out = unit(rng) < cfg.p_drop;
    const bool drop_back = unit(rng) < cfg.p_drop;

    ExchangeRecord rec;
    rec.n = n;
    rec.t_D = clk_l.to_local(tau_d);
    rec.s_A = clk_r.to_local(tau_d, d_d / kSpeedOfLightMps + z_a);
    rec.s_D = clk_r.to_local(tau_s, z_d);
    rec.t_A = clk_l.to_local(tau_s, d_a / kSpeedOfLightMps);
    rec.true_d_D_m = d_d;
    rec.true_d_A_m = d_a;
    if (!drop_out && !drop_back) records.push_back(rec);
  }
  return records;
}

std::vector<ExchangeRecord> pair_records(const MultiTrace& t, std::size_t a,
                                         std::size_t b,
                                         const ScenarioConfig& cfg) {
  if (a >= t.vehicles || b >= t.vehicles || a == b) {
    throw std::invalid_argument("pair_records needs two distinct vehicles");
  }
  // b's reply to a's n-th message is b's first departure after hearing it.
  const std::int64_t reply_shift =
      cfg.transmit_offset_s(b) > cfg.transmit_offset_s(a) ? 0 : 1;
  std::vector<ExchangeRecord> records;
  for (std::int64_t n = 0; n < t.periods; ++n) {
    const std::int64_t k = n + reply_shift;
    if (k >= t.periods) break;
    const auto& s_a = t.arr[b][a][static_cast<std::size_t>(n)];
    const auto& t_a = t.arr[a][b][static_cast<std::size_t>(k)];
    if (!s_a || !t_a) continue;
    ExchangeRecord rec;
    rec.n = n;
    rec.t_D = t.dep[a][static_cast<std::size_t>(n)];
    rec.s_A = *s_a;
    rec.s_D = t.dep[b][static_cast<std::size_t>(k)];
    rec.t_A = *t_a;
    rec.true_d_D_m = t.dist[b][a][static_cast<std::size_t>(n)];
    rec.true_d_A_m = t.dist[a][b][static_cast<std::size_t>(k)];
    records.push_back(rec);
  }
  return records;
}

}  // namespace pbr
