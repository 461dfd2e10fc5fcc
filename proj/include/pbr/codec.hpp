#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pbr/ticks.hpp"

namespace pbr {

// A timestamp difference reduced to its L low bits. The receiver restores
// the discarded high bits from the near-constant ratio of consecutive
// differences of the same stream.
struct CompressedDelta {
  std::uint64_t value = 0;  // delta mod 2^L
  int L = 0;                // 1..48
};

// rho bounds the relative prediction error of one incremental step
// (flight-time change, noise, rounding, drift drift). rho_tilde bounds the
// total relative deviation of any compliant delta from its nominal period
// (offsets, jitter, and drift together). Requires 0 < rho < rho_tilde < 1.
struct CodecBounds {
  double rho = 300.0 / kSpeedOfLightMps;
  double rho_tilde = 5e-5;
};

// delta must be non-negative.
CompressedDelta compress(Tick delta, int L);

// Smallest L such that an incremental prediction within rho*dt of the true
// delta rounds to the correct high bits: 2^L > 2*rho*dt. Throws when no
// L <= 48 suffices.
int required_bits(double rho, Tick dt);

// Restore a delta from its low bits and a prediction prev_delta*dt_n/dt_prev
// (exact integer arithmetic, ties round up). Negative high bits mean the
// prediction and the low bits are irreconcilable: throws
// std::runtime_error("implausible delta").
Tick decompress_incremental(const CompressedDelta& c, Tick prev_delta,
                            Tick dt_n, Tick dt_prev);

// All k >= 0 with |(value + k*2^L)/dt - 1| <= rho_tilde, in ascending
// order (a contiguous range). Boundary comparisons are exact. Throws
// std::runtime_error("bounds exclude all candidates") when empty.
std::vector<Tick> candidate_set(const CompressedDelta& c, Tick dt,
                                double rho_tilde);

struct BootstrapResult {
  Tick delta1 = 0;
  Tick delta2 = 0;
  // Second-best candidate pair within rho*dt1*dt2 of the best in the
  // cross-product objective |x1*dt2 - x2*dt1|. Resolution is still the
  // minimizer; this flags how much margin it won by.
  bool ambiguous = false;
};

// Joint resolution of two consecutive compressed deltas of one stream
// against the matching differences dt1, dt2 of the mirror stream: the
// candidate pair minimizing |x1*dt2 - x2*dt1| (smallest k1, then k2, on
// ties). Both candidate sets come from bounds.rho_tilde.
BootstrapResult bootstrap_decompress(const CompressedDelta& c1,
                                     const CompressedDelta& c2, Tick dt1,
                                     Tick dt2, const CodecBounds& bounds);

// Stateful decoder for one delta stream, predicting each delta from the
// previous one scaled by the mirror stream's differences. After a lost
// message the next two contiguous deltas re-synchronize via
// bootstrap_decompress.
class DeltaDecoder {
 public:
  DeltaDecoder(int bits, CodecBounds bounds);

  // Prime the predictor with an uncompressed delta (dt > 0 its mirror).
  void seed_full(Tick delta, Tick dt);

  // Feed the next compressed delta and its mirror difference. Returns the
  // recovered deltas, oldest first: one when synchronized, none or two
  // around a re-synchronization.
  std::vector<Tick> push(const CompressedDelta& c, Tick dt);

  // The next delta spans a gap the predictor cannot bridge.
  void mark_lost();

  bool synced() const { return synced_; }
  int resyncs() const { return resyncs_; }

 private:
  int bits_;
  CodecBounds bounds_;
  bool synced_ = false;
  Tick prev_delta_ = 0;
  Tick prev_dt_ = 0;
  bool have_pending_ = false;  // first delta of a bootstrap pair
  CompressedDelta pending_{};
  Tick pending_dt_ = 0;
  int resyncs_ = 0;
};

}  // namespace pbr
