#include "pbr/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace pbr {

namespace {

constexpr std::uint8_t kMagic[4] = {0x50, 0x42, 0x52, 0x31};  // "PBR1"
constexpr std::uint64_t kFullDeltaLimit = std::uint64_t{1} << 48;
constexpr std::uint16_t kBootstrapFlag = 0x8000;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u48(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 6; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::size_t remaining() const { return b_.size() - pos_; }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u48() {
    need(6);
    std::uint64_t v = 0;
    for (int i = 0; i < 6; ++i) v |= std::uint64_t{b_[pos_ + i]} << (8 * i);
    pos_ += 6;
    return v;
  }

 private:
  void need(std::size_t n) {
    if (remaining() < n) throw std::runtime_error("truncated message");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_message(const BroadcastMessage& msg) {
  if (msg.version != 1) throw std::invalid_argument("unsupported version");
  if (msg.entries.empty() || msg.entries.front().peer_id != msg.vehicle_id)
    throw std::invalid_argument("first entry must be the sender's own");
  if (msg.entries.size() > 255) throw std::invalid_argument("too many entries");
  for (std::size_t i = 0; i < msg.entries.size(); ++i) {
    const PiggybackEntry& e = msg.entries[i];
    for (std::size_t j = i + 1; j < msg.entries.size(); ++j)
      if (msg.entries[j].peer_id == e.peer_id)
        throw std::invalid_argument("duplicate peer entry");
    if (e.bootstrap) {
      if (e.compressed != 0)
        throw std::invalid_argument("bootstrap entry with compressed payload");
      if (e.full_delta >= kFullDeltaLimit)
        throw std::invalid_argument("full delta exceeds 48 bits");
    } else if (e.compressed & kBootstrapFlag) {
      throw std::invalid_argument("compressed payload exceeds 15 bits");
    }
  }

  std::vector<std::uint8_t> out;
  out.reserve(14 + msg.entries.size() * 12);
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(msg.version);
  put_u32(out, msg.vehicle_id);
  put_u32(out, msg.seq);
  out.push_back(static_cast<std::uint8_t>(msg.entries.size()));
  for (const PiggybackEntry& e : msg.entries) {
    put_u32(out, e.peer_id);
    if (e.bootstrap) {
      put_u16(out, kBootstrapFlag);
      put_u48(out, e.full_delta);
    } else {
      put_u16(out, e.compressed);
    }
  }
  return out;
}

BroadcastMessage decode_message(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin()))
    throw std::runtime_error(bytes.size() < 4 ? "truncated message"
                                              : "bad magic");
  r.u32();  // magic, validated above
  BroadcastMessage msg;
  msg.version = r.u8();
  if (msg.version != 1) throw std::runtime_error("version mismatch");
  msg.vehicle_id = r.u32();
  msg.seq = r.u32();
  const std::uint8_t count = r.u8();
  msg.entries.reserve(count);
  for (int i = 0; i < count; ++i) {
    PiggybackEntry e;
    e.peer_id = r.u32();
    const std::uint16_t word = r.u16();
    if (word & kBootstrapFlag) {
      if (word != kBootstrapFlag)
        throw std::runtime_error("malformed bootstrap entry");
      e.bootstrap = true;
      e.full_delta = r.u48();
    } else {
      e.compressed = word;
    }
    for (const PiggybackEntry& prev : msg.entries)
      if (prev.peer_id == e.peer_id)
        throw std::runtime_error("duplicate peer_id");
    msg.entries.push_back(e);
  }
  if (r.remaining() != 0) throw std::runtime_error("trailing bytes");
  if (msg.entries.empty() || msg.entries.front().peer_id != msg.vehicle_id)
    throw std::runtime_error("no self entry");
  return msg;
}

ProtocolEndpoint::ProtocolEndpoint(std::uint32_t vehicle_id,
                                   ProtocolConfig pcfg, EstimatorConfig ecfg)
    : id_(vehicle_id), pcfg_(pcfg), ecfg_(ecfg) {
  if (pcfg_.bits < 1 || pcfg_.bits > 15)
    throw std::invalid_argument("compressed width must be 1..15 bits");
  if (ecfg_.w < 2) throw std::invalid_argument("window size must be at least 2");
}

BroadcastMessage ProtocolEndpoint::build_message(Tick dep_stamp) {
  if (!own_deps_.empty() && dep_stamp <= own_deps_.back())
    throw std::invalid_argument("departure stamps must increase");

  BroadcastMessage msg;
  msg.vehicle_id = id_;
  msg.seq = static_cast<std::uint32_t>(next_seq_);

  PiggybackEntry self;
  self.peer_id = id_;
  if (next_seq_ < 2) {
    self.bootstrap = true;  // no departure difference exists yet
  } else {
    const Tick delta = own_deps_[next_seq_ - 1] - own_deps_[next_seq_ - 2];
    if (static_cast<std::uint64_t>(delta) >= kFullDeltaLimit)
      throw std::invalid_argument("departure difference exceeds 48 bits");
    if (next_seq_ < 4) {
      self.bootstrap = true;
      self.full_delta = static_cast<std::uint64_t>(delta);
    } else {
      self.compressed =
          static_cast<std::uint16_t>(compress(delta, pcfg_.bits).value);
    }
  }
  msg.entries.push_back(self);

  for (auto& [pid, h] : heard_) {
    if (!h.heard_since_build) continue;
    h.heard_since_build = false;
    if (next_seq_ == 0) continue;  // nothing to reference the arrival against
    const Tick v = h.latest_arr - own_deps_[next_seq_ - 1];
    if (v < 0) continue;  // arrival predates the reference departure
    if (static_cast<std::uint64_t>(v) >= kFullDeltaLimit)
      throw std::invalid_argument("arrival delta exceeds 48 bits");
    PiggybackEntry e;
    e.peer_id = pid;
    if (h.entries_sent < 2) {
      e.bootstrap = true;
      e.full_delta = static_cast<std::uint64_t>(v);
    } else {
      e.compressed = static_cast<std::uint16_t>(compress(v, pcfg_.bits).value);
    }
    ++h.entries_sent;
    msg.entries.push_back(e);
  }

  own_deps_.push_back(dep_stamp);
  ++next_seq_;
  ++stats_.messages_built;
  return msg;
}

void ProtocolEndpoint::complete_ready(
    PeerSession& s, std::uint32_t sender,
    std::vector<std::pair<std::uint32_t, RangeEstimate>>& out) {
  for (auto it = s.pendings.begin(); it != s.pendings.end();) {
    if (it->epoch != s.epoch || it->reply_seq != s.chain_seq) {
      ++it;
      continue;
    }
    ExchangeRecord rec;
    rec.n = it->own_seq;
    rec.t_D = own_deps_[it->own_seq];
    rec.s_A = it->arr_delta + s.chain_prev_val;
    rec.s_D = s.chain_val;
    rec.t_A = it->t_A;
    it = s.pendings.erase(it);

    const bool contiguous =
        !s.records.empty() && rec.n == s.records.back().n + 1 &&
        rec.t_D > s.records.back().t_D && s.record_epochs.back() == s.epoch;
    s.run = contiguous ? s.run + 1 : 1;
    s.records.push_back(rec);
    s.record_epochs.push_back(s.epoch);
    ++stats_.records_completed;

    if (s.run >= static_cast<std::size_t>(ecfg_.w) + 1) {
      try {
        out.emplace_back(
            sender,
            robust_fit(build_window(s.records, s.records.size() - 1, ecfg_.w),
                       ecfg_));
        ++stats_.estimates_emitted;
      } catch (const std::runtime_error&) {
        // degenerate window; wait for the next record
      }
    }
  }
}

void ProtocolEndpoint::extend_chain(
    PeerSession& s, std::int64_t link_seq, Tick delta, std::uint32_t sender,
    std::vector<std::pair<std::uint32_t, RangeEstimate>>& out) {
  if (!s.anchored) {
    s.anchored = true;
    s.chain_seq = link_seq - 1;
    s.chain_val = 0;
    // No value exists one step behind a fresh anchor, so any pending
    // reply at or before it is unrecoverable.
    std::erase_if(s.pendings, [&](const PeerSession::Pending& p) {
      return p.reply_seq <= s.chain_seq;
    });
  }
  if (link_seq != s.chain_seq + 1) return;  // disconnected link, unusable
  s.chain_prev_val = s.chain_val;
  s.chain_val += delta;
  s.chain_seq = link_seq;
  complete_ready(s, sender, out);
}

std::vector<std::pair<std::uint32_t, RangeEstimate>> ProtocolEndpoint::ingest(
    const BroadcastMessage& msg, Tick arr_stamp) {
  std::vector<std::pair<std::uint32_t, RangeEstimate>> out;
  if (msg.vehicle_id == id_) return out;  // own broadcast reflected back

  auto sit = sessions_.try_emplace(msg.vehicle_id,
                                   PeerSession(pcfg_.bits, pcfg_.bounds))
                 .first;
  PeerSession& s = sit->second;
  const std::int64_t seq = msg.seq;
  if (seq <= s.last_seq) return out;  // duplicate or reordered: drop
  ++stats_.messages_ingested;

  if (s.last_seq >= 0 && seq != s.last_seq + 1) {
    // Lost at least one message: the departure chain cannot be bridged
    // (its differences rode on the lost messages), so restart anchoring.
    ++s.epoch;
    s.anchored = false;
    s.pendings.clear();
    s.dep_dec.mark_lost();
    s.arr_dec.mark_lost();
    s.dep_pending = false;
    s.arr_pending = false;
  }

  const bool dep_mirror_ok = s.prev1_seq == seq - 1 &&
                             s.prev2_seq == seq - 2 &&
                             s.prev1_arr > s.prev2_arr;
  const Tick dep_mirror = s.prev1_arr - s.prev2_arr;

  const PiggybackEntry* self_entry = nullptr;
  const PiggybackEntry* my_entry = nullptr;
  for (const PiggybackEntry& e : msg.entries) {
    if (e.peer_id == msg.vehicle_id) self_entry = &e;
    if (e.peer_id == id_) my_entry = &e;
  }
  if (self_entry == nullptr) throw std::invalid_argument("no self entry");

  // Departure difference of the sender's previous pair of messages.
  if (seq >= 2) {
    const std::int64_t link_seq = seq - 1;
    if (self_entry->bootstrap) {
      const Tick delta = static_cast<Tick>(self_entry->full_delta);
      if (dep_mirror_ok)
        s.dep_dec.seed_full(delta, dep_mirror);
      else
        s.dep_dec.mark_lost();
      s.dep_pending = false;
      extend_chain(s, link_seq, delta, msg.vehicle_id, out);
    } else if (!dep_mirror_ok) {
      s.dep_dec.mark_lost();
      s.dep_pending = false;
    } else {
      CompressedDelta c;
      c.value = self_entry->compressed;
      c.L = pcfg_.bits;
      const std::vector<Tick> got = s.dep_dec.push(c, dep_mirror);
      if (got.empty()) {
        s.dep_pending = true;
        s.dep_pending_seq = seq;
      } else if (got.size() == 1) {
        extend_chain(s, link_seq, got[0], msg.vehicle_id, out);
      } else {
        ++stats_.resyncs;
        extend_chain(s, s.dep_pending_seq - 1, got[0], msg.vehicle_id, out);
        extend_chain(s, link_seq, got[1], msg.vehicle_id, out);
        s.dep_pending = false;
      }
    }
  }

  // Arrival stamp of one of our own messages, relative to the sender's
  // previous departure.
  if (my_entry != nullptr) {
    // Which of our messages it acknowledges: the last one departing
    // before this broadcast reached us (flight time is far below the
    // schedule's transmit-slot separation).
    const auto up = std::upper_bound(own_deps_.begin(), own_deps_.end(),
                                     arr_stamp - 1);
    const std::int64_t m = static_cast<std::int64_t>(up - own_deps_.begin()) - 1;
    const bool arr_mirror_ok =
        m >= 0 && s.prev1_seq == seq - 1 && own_deps_[m] > s.prev1_arr;
    const Tick arr_mirror = m >= 0 ? own_deps_[m] - s.prev1_arr : 0;

    if (m < 0) {
      s.arr_dec.mark_lost();
      s.arr_pending = false;
    } else if (my_entry->bootstrap) {
      const Tick v = static_cast<Tick>(my_entry->full_delta);
      if (arr_mirror_ok)
        s.arr_dec.seed_full(v, arr_mirror);
      else
        s.arr_dec.mark_lost();
      s.arr_pending = false;
      s.pendings.push_back({m, seq, s.epoch, v, arr_stamp});
    } else if (!arr_mirror_ok) {
      s.arr_dec.mark_lost();
      s.arr_pending = false;
    } else {
      CompressedDelta c;
      c.value = my_entry->compressed;
      c.L = pcfg_.bits;
      const std::vector<Tick> got = s.arr_dec.push(c, arr_mirror);
      if (got.empty()) {
        s.arr_pending = true;
        s.arr_pending_seq = seq;
        s.arr_pending_stamp = arr_stamp;
        s.arr_pending_own = m;
      } else if (got.size() == 1) {
        s.pendings.push_back({m, seq, s.epoch, got[0], arr_stamp});
      } else {
        ++stats_.resyncs;
        s.pendings.push_back({s.arr_pending_own, s.arr_pending_seq, s.epoch,
                              got[0], s.arr_pending_stamp});
        s.pendings.push_back({m, seq, s.epoch, got[1], arr_stamp});
        s.arr_pending = false;
      }
    }
    // A late-resolved arrival may reference the chain value we already
    // reached this message.
    complete_ready(s, msg.vehicle_id, out);
  }

  s.prev2_seq = s.prev1_seq;
  s.prev2_arr = s.prev1_arr;
  s.prev1_seq = seq;
  s.prev1_arr = arr_stamp;
  s.last_seq = seq;

  HeardPeer& h = heard_[msg.vehicle_id];
  h.heard_since_build = true;
  h.latest_arr = arr_stamp;
  return out;
}

const std::vector<ExchangeRecord>& ProtocolEndpoint::records(
    std::uint32_t peer) const {
  static const std::vector<ExchangeRecord> empty;
  auto it = sessions_.find(peer);
  return it == sessions_.end() ? empty : it->second.records;
}

}  // namespace pbr
