#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "pbr/codec.hpp"
#include "pbr/estimator.hpp"
#include "pbr/simulate.hpp"
#include "pbr/ticks.hpp"

namespace pbr {

// One timestamp-delta slot of a broadcast. The self entry (peer_id equal
// to the sender) carries the sender's previous departure-to-departure
// difference; a peer entry carries the sender's arrival stamp of that
// peer's latest message, expressed relative to the sender's previous
// departure. Referencing both stream's values to the departure chain keeps
// every reconstructed remote stamp on one common (unknown) offset, which
// the window estimator cancels.
struct PiggybackEntry {
  std::uint32_t peer_id = 0;
  bool bootstrap = false;        // full 48-bit form instead of compressed
  std::uint16_t compressed = 0;  // 15-bit modular delta when !bootstrap
  std::uint64_t full_delta = 0;  // < 2^48, ticks, when bootstrap
};

struct BroadcastMessage {
  std::uint8_t version = 1;
  std::uint32_t vehicle_id = 0;
  std::uint32_t seq = 0;
  std::vector<PiggybackEntry> entries;  // self entry first
};

// Little-endian wire image: magic "PBR1", version u8, vehicle_id u32,
// seq u32, count u8, then per entry peer_id u32 and a u16 whose bit 15
// selects the bootstrap form; bootstrap entries append a 6-byte full
// delta and leave the u16's low 15 bits zero. No padding.
std::vector<std::uint8_t> encode_message(const BroadcastMessage& msg);

// Inverse of encode_message. Throws std::runtime_error with one of the
// distinct reasons: "bad magic", "truncated message", "version mismatch",
// "malformed bootstrap entry", "trailing bytes", "no self entry",
// "duplicate peer_id".
BroadcastMessage decode_message(const std::vector<std::uint8_t>& bytes);

struct ProtocolConfig {
  int bits = 15;  // compressed payload width; the wire slot allows <= 15
  CodecBounds bounds;
};

// One vehicle's protocol state: message construction on the transmit side
// and, per heard peer, delta decoding, exchange-record reconstruction, and
// a sliding-window range estimator.
class ProtocolEndpoint {
 public:
  struct Stats {
    std::size_t messages_built = 0;
    std::size_t messages_ingested = 0;
    std::size_t records_completed = 0;
    std::size_t estimates_emitted = 0;
    std::size_t resyncs = 0;  // successful joint re-synchronizations
  };

  ProtocolEndpoint(std::uint32_t vehicle_id, ProtocolConfig pcfg = {},
                   EstimatorConfig ecfg = {});

  // Builds the broadcast departing at dep_stamp (own clock) and commits
  // that departure. The message never contains dep_stamp itself: the
  // departure difference rides on the NEXT broadcast. The first two
  // broadcasts carry placeholder self entries; each peer's first two
  // arrival entries (and the first two real departure differences) use
  // the 48-bit form.
  BroadcastMessage build_message(Tick dep_stamp);

  // Processes one received broadcast stamped arr_stamp (own clock).
  // Returns the fresh estimates this message unlocked, as (sender id,
  // estimate) pairs; duplicates and stale sequence numbers are ignored.
  // Sequence gaps reset the sender's reconstruction chain; the decoders
  // re-synchronize from the next two decodable messages.
  std::vector<std::pair<std::uint32_t, RangeEstimate>> ingest(
      const BroadcastMessage& msg, Tick arr_stamp);

  // Reconstructed exchange records with the given peer, oldest first.
  // Remote stamps are exact up to one constant per reconstruction epoch.
  const std::vector<ExchangeRecord>& records(std::uint32_t peer) const;

  Stats stats() const { return stats_; }
  std::uint32_t vehicle_id() const { return id_; }

 private:
  struct PeerSession {
    // receive bookkeeping for the sender's stream
    std::int64_t last_seq = -1;
    std::int64_t prev1_seq = -2, prev2_seq = -2;  // last two arrivals
    Tick prev1_arr = 0, prev2_arr = 0;
    std::uint64_t epoch = 0;

    // departure chain: value of the sender's departure stamp at
    // chain_seq, relative to the epoch's arbitrary anchor
    bool anchored = false;
    std::int64_t chain_seq = -1;
    Tick chain_val = 0;
    Tick chain_prev_val = 0;  // value at chain_seq - 1

    DeltaDecoder dep_dec;
    DeltaDecoder arr_dec;
    bool dep_pending = false;  // decoder holds half a bootstrap pair
    std::int64_t dep_pending_seq = -1;
    bool arr_pending = false;
    std::int64_t arr_pending_seq = -1;
    Tick arr_pending_stamp = 0;
    std::int64_t arr_pending_own = -1;

    // records waiting for the departure chain to reach reply_seq
    struct Pending {
      std::int64_t own_seq;
      std::int64_t reply_seq;
      std::uint64_t epoch;
      Tick arr_delta;  // arrival stamp minus sender's previous departure
      Tick t_A;
    };
    std::vector<Pending> pendings;

    std::vector<ExchangeRecord> records;
    std::vector<std::uint64_t> record_epochs;
    std::size_t run = 0;  // trailing same-epoch, consecutive-n records

    PeerSession(int bits, CodecBounds b) : dep_dec(bits, b), arr_dec(bits, b) {}
  };

  void complete_ready(PeerSession& s, std::uint32_t sender,
                      std::vector<std::pair<std::uint32_t, RangeEstimate>>& out);
  void extend_chain(PeerSession& s, std::int64_t link_seq, Tick delta,
                    std::uint32_t sender,
                    std::vector<std::pair<std::uint32_t, RangeEstimate>>& out);

  std::uint32_t id_;
  ProtocolConfig pcfg_;
  EstimatorConfig ecfg_;

  // transmit side
  std::int64_t next_seq_ = 0;
  std::vector<Tick> own_deps_;  // departure stamp by own seq
  struct HeardPeer {
    bool heard_since_build = false;
    Tick latest_arr = 0;
    std::size_t entries_sent = 0;  // first two use the 48-bit form
  };
  std::map<std::uint32_t, HeardPeer> heard_;

  std::map<std::uint32_t, PeerSession> sessions_;
  Stats stats_;
};

}  // namespace pbr
