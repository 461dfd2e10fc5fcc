#include "pbr/codec.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pbr {

namespace {

using i128 = __int128;
using u128 = unsigned __int128;

void check_width(int L) {
  if (L < 1 || L > 48) throw std::invalid_argument("bit width out of range");
}

void check_value(const CompressedDelta& c) {
  check_width(c.L);
  if (c.value >> c.L)
    throw std::invalid_argument("compressed value exceeds bit width");
}

// floor(a / b) for b > 0 and any sign of a.
i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if (a % b != 0 && a < 0) --q;
  return q;
}

// Exact |a| <= rho * b for b > 0 and any double rho >= 0. Splits rho into
// an integer mantissa and a power of two, then compares 128-bit products
// with explicit shift-overflow handling.
bool abs_le_scaled(i128 a, double rho, Tick b) {
  if (rho < 0.0 || !std::isfinite(rho))
    throw std::invalid_argument("bound must be finite and non-negative");
  u128 mag = a < 0 ? u128(0) - u128(a) : u128(a);
  if (rho == 0.0) return mag == 0;

  int exp = 0;
  const double frac = std::frexp(rho, &exp);  // rho = frac * 2^exp
  const auto mantissa = static_cast<u128>(std::ldexp(frac, 53));
  const int shift = exp - 53;  // rho = mantissa * 2^shift

  u128 rhs = mantissa * static_cast<u128>(b);
  if (shift >= 0) {
    if (shift >= 128 || (shift > 0 && (rhs >> (128 - shift)) != 0))
      return true;  // rhs overflows 128 bits, certainly exceeds |a|
    return mag <= (rhs << shift);
  }
  const int up = -shift;  // compare mag * 2^up <= rhs
  if (up >= 128) return mag == 0;
  if ((mag >> (128 - up)) != 0) return false;  // lhs overflows
  return (mag << up) <= rhs;
}

}  // namespace

CompressedDelta compress(Tick delta, int L) {
  check_width(L);
  if (delta < 0) throw std::invalid_argument("negative delta");
  CompressedDelta c;
  c.L = L;
  c.value = static_cast<std::uint64_t>(delta) & ((std::uint64_t{1} << L) - 1);
  return c;
}

int required_bits(double rho, Tick dt) {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw std::invalid_argument("bound must be positive and finite");
  if (dt <= 0) throw std::invalid_argument("difference must be positive");
  const long double bound = 2.0L * static_cast<long double>(rho) *
                            static_cast<long double>(dt);
  for (int L = 1; L <= 48; ++L)
    if (exp2l(L) > bound) return L;
  throw std::invalid_argument("no bit width up to 48 suffices");
}

Tick decompress_incremental(const CompressedDelta& c, Tick prev_delta,
                            Tick dt_n, Tick dt_prev) {
  check_value(c);
  if (prev_delta < 0) throw std::invalid_argument("negative delta");
  if (dt_n <= 0 || dt_prev <= 0)
    throw std::invalid_argument("differences must be positive");

  // k_hat = round_half_up((prev_delta*dt_n/dt_prev - value) / 2^L), exact
  // in 128 bits. den <= 2^111, remainder < den, so 2*rem cannot overflow.
  const i128 num = i128(prev_delta) * dt_n - i128(c.value) * dt_prev;
  const i128 den = i128(dt_prev) << c.L;
  i128 k_hat = floor_div(num, den);
  const i128 rem = num - k_hat * den;
  if (2 * rem >= den) ++k_hat;
  if (k_hat < 0) throw std::runtime_error("implausible delta");

  const i128 delta = i128(c.value) + (k_hat << c.L);
  if (delta > std::numeric_limits<Tick>::max())
    throw std::runtime_error("implausible delta");
  return static_cast<Tick>(delta);
}

std::vector<Tick> candidate_set(const CompressedDelta& c, Tick dt,
                                double rho_tilde) {
  check_value(c);
  if (dt <= 0) throw std::invalid_argument("difference must be positive");
  if (!(rho_tilde > 0.0 && rho_tilde < 1.0))
    throw std::invalid_argument("bound must be in (0, 1)");

  // |value + k*2^L - dt| <= rho_tilde*dt: estimate the admissible k range
  // in floating point, then confirm each boundary exactly.
  const long double step = exp2l(c.L);
  const long double center =
      (static_cast<long double>(dt) - static_cast<long double>(c.value)) / step;
  const long double halfwidth =
      static_cast<long double>(rho_tilde) * static_cast<long double>(dt) / step;

  Tick k = static_cast<Tick>(floorl(center - halfwidth)) - 2;
  if (k < 0) k = 0;
  const Tick k_stop = static_cast<Tick>(ceill(center + halfwidth)) + 2;

  auto admissible = [&](Tick kk) {
    const i128 x = i128(c.value) + (i128(kk) << c.L);
    return abs_le_scaled(x - dt, rho_tilde, dt);
  };

  std::vector<Tick> out;
  while (k <= k_stop && !admissible(k)) ++k;
  if (k > k_stop) throw std::runtime_error("bounds exclude all candidates");
  // The admissible set is a contiguous interval and bounded above.
  for (; admissible(k); ++k) out.push_back(k);
  return out;
}

BootstrapResult bootstrap_decompress(const CompressedDelta& c1,
                                     const CompressedDelta& c2, Tick dt1,
                                     Tick dt2, const CodecBounds& bounds) {
  if (!(bounds.rho > 0.0 && bounds.rho < bounds.rho_tilde &&
        bounds.rho_tilde < 1.0))
    throw std::invalid_argument("bounds must satisfy 0 < rho < rho_tilde < 1");
  const std::vector<Tick> ks1 = candidate_set(c1, dt1, bounds.rho_tilde);
  const std::vector<Tick> ks2 = candidate_set(c2, dt2, bounds.rho_tilde);

  // Minimize |x1/dt1 - x2/dt2| = |x1*dt2 - x2*dt1| / (dt1*dt2); the
  // denominator is common, so the scaled integer objective decides.
  auto objective = [&](Tick k1, Tick k2) {
    const i128 x1 = i128(c1.value) + (i128(k1) << c1.L);
    const i128 x2 = i128(c2.value) + (i128(k2) << c2.L);
    const i128 d = x1 * dt2 - x2 * dt1;
    return d < 0 ? u128(0) - u128(d) : u128(d);
  };

  bool have_best = false;
  u128 best = 0, second = 0;
  Tick best_k1 = 0, best_k2 = 0;
  for (Tick k1 : ks1) {
    for (Tick k2 : ks2) {
      const u128 obj = objective(k1, k2);
      if (!have_best) {
        have_best = true;
        best = obj;
        second = ~u128{0};
        best_k1 = k1;
        best_k2 = k2;
      } else if (obj < best) {
        second = best;
        best = obj;
        best_k1 = k1;
        best_k2 = k2;
      } else if (obj < second) {
        second = obj;
      }
    }
  }

  BootstrapResult r;
  r.delta1 = static_cast<Tick>(i128(c1.value) + (i128(best_k1) << c1.L));
  r.delta2 = static_cast<Tick>(i128(c2.value) + (i128(best_k2) << c2.L));
  if (second != ~u128{0}) {
    // Diagnostic margin check; the ratio-domain gap (second-best) compares
    // against rho. Float precision suffices for a flag.
    const long double gap = static_cast<long double>(second - best);
    const long double scale = static_cast<long double>(dt1) *
                              static_cast<long double>(dt2) *
                              static_cast<long double>(bounds.rho);
    r.ambiguous = gap <= scale;
  }
  return r;
}

DeltaDecoder::DeltaDecoder(int bits, CodecBounds bounds)
    : bits_(bits), bounds_(bounds) {
  check_width(bits);
  if (!(bounds.rho > 0.0 && bounds.rho < bounds.rho_tilde &&
        bounds.rho_tilde < 1.0))
    throw std::invalid_argument("bounds must satisfy 0 < rho < rho_tilde < 1");
}

void DeltaDecoder::seed_full(Tick delta, Tick dt) {
  if (delta < 0) throw std::invalid_argument("negative delta");
  if (dt <= 0) throw std::invalid_argument("mirror difference must be positive");
  prev_delta_ = delta;
  prev_dt_ = dt;
  synced_ = true;
  have_pending_ = false;
}

std::vector<Tick> DeltaDecoder::push(const CompressedDelta& c, Tick dt) {
  check_value(c);
  if (c.L != bits_) throw std::invalid_argument("bit width mismatch");
  if (dt <= 0) throw std::invalid_argument("mirror difference must be positive");

  if (synced_) {
    try {
      const Tick delta = decompress_incremental(c, prev_delta_, dt, prev_dt_);
      prev_delta_ = delta;
      prev_dt_ = dt;
      return {delta};
    } catch (const std::runtime_error&) {
      // Prediction state is wrong; drop to bootstrap with this delta as
      // the first of the pair.
      synced_ = false;
      pending_ = c;
      pending_dt_ = dt;
      have_pending_ = true;
      return {};
    }
  }

  if (!have_pending_) {
    pending_ = c;
    pending_dt_ = dt;
    have_pending_ = true;
    return {};
  }

  try {
    const BootstrapResult r =
        bootstrap_decompress(pending_, c, pending_dt_, dt, bounds_);
    synced_ = true;
    have_pending_ = false;
    prev_delta_ = r.delta2;
    prev_dt_ = dt;
    ++resyncs_;
    return {r.delta1, r.delta2};
  } catch (const std::runtime_error&) {
    pending_ = c;  // stale pair half; retry with the next delta
    pending_dt_ = dt;
    return {};
  }
}

void DeltaDecoder::mark_lost() {
  // Drop any held pair half too: the bootstrap pair must be two adjacent
  // deltas, otherwise a consumer of the paired result would attribute the
  // first recovered delta to the wrong message.
  synced_ = false;
  have_pending_ = false;
}

}  // namespace pbr
