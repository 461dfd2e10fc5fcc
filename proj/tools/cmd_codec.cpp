#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "pbr/codec.hpp"
#include "pbr/trace_io.hpp"

namespace {

struct StreamStats {
  std::size_t total = 0;  // compressed deltas pushed (first two are seeds)
  std::size_t exact = 0;
  int resyncs = 0;
};

// Encode-then-decode one delta stream against its mirror. The decoder's
// prediction divides out the clock-rate factor because the mirror spans
// the same pair of physical events through the other clock.
StreamStats roundtrip(const std::vector<pbr::Tick>& deltas,
                      const std::vector<pbr::Tick>& mirror, int bits) {
  StreamStats st;
  if (deltas.size() < 3) return st;
  pbr::DeltaDecoder dec(bits, pbr::CodecBounds{});
  dec.seed_full(deltas[0], mirror[0]);
  dec.seed_full(deltas[1], mirror[1]);

  bool awaiting = false;
  pbr::Tick awaited_truth = 0;
  for (std::size_t i = 2; i < deltas.size(); ++i) {
    ++st.total;
    const auto got = dec.push(pbr::compress(deltas[i], bits), mirror[i]);
    if (got.empty()) {
      awaiting = true;  // held as the first half of a bootstrap pair
      awaited_truth = deltas[i];
    } else if (got.size() == 1) {
      if (got[0] == deltas[i]) ++st.exact;
    } else {
      if (awaiting && got[0] == awaited_truth) ++st.exact;
      if (got[1] == deltas[i]) ++st.exact;
      awaiting = false;
    }
  }
  st.resyncs = dec.resyncs();
  return st;
}

}  // namespace

void register_codec(CLI::App& app) {
  struct Opts {
    std::string trace;
    std::string out;
    int bits = 15;
  };
  auto opts = std::make_shared<Opts>();

  CLI::App* cmd = app.add_subcommand(
      "codec", "compress/decompress every delta stream of a trace");
  cmd->add_option("trace", opts->trace, "input trace CSV")->required();
  cmd->add_option("-b,--bits", opts->bits, "compressed width")
      ->check(CLI::Range(1, 48))
      ->capture_default_str();
  cmd->add_option("-o,--out", opts->out, "write the JSON report here");

  cmd->callback([opts] {
    const auto records = pbr::read_trace_csv(opts->trace);
    if (records.size() < 4)
      throw std::invalid_argument("trace too short for codec round-trip");

    const std::size_t n = records.size() - 1;
    std::vector<pbr::Tick> dt_D(n), ds_A(n), dt_A(n), ds_D(n);
    for (std::size_t i = 1; i < records.size(); ++i) {
      dt_D[i - 1] = records[i].t_D - records[i - 1].t_D;
      ds_A[i - 1] = records[i].s_A - records[i - 1].s_A;
      dt_A[i - 1] = records[i].t_D - records[i - 1].t_A;
      ds_D[i - 1] = records[i].s_A - records[i - 1].s_D;
    }

    nlohmann::json streams;
    bool all_exact = true;
    const std::pair<const char*, std::pair<const std::vector<pbr::Tick>*,
                                           const std::vector<pbr::Tick>*>>
        plan[] = {
            {"ds_A", {&ds_A, &dt_D}},
            {"ds_D", {&ds_D, &dt_A}},
            {"dt_D", {&dt_D, &ds_A}},
            {"dt_A", {&dt_A, &ds_D}},
        };
    for (const auto& [name, pair] : plan) {
      const StreamStats st = roundtrip(*pair.first, *pair.second, opts->bits);
      streams[name] = {
          {"total", st.total}, {"exact", st.exact}, {"resyncs", st.resyncs}};
      if (st.exact != st.total) all_exact = false;
    }

    nlohmann::json j;
    j["bits"] = opts->bits;
    j["records"] = records.size();
    j["streams"] = streams;
    j["all_exact"] = all_exact;
    const std::string text = j.dump(2) + "\n";
    if (opts->out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(opts->out);
      if (!out)
        throw std::runtime_error("cannot open for writing: " + opts->out);
      out << text;
      std::cout << (all_exact ? "all streams exact\n" : "inexact streams\n");
    }
  });
}
