#include <iostream>
#include <memory>
#include <string>

#include "commands.hpp"
#include "pbr/scenario.hpp"
#include "pbr/simulate.hpp"
#include "pbr/trace_io.hpp"

void register_simulate(CLI::App& app) {
  struct Opts {
    std::string config;
    std::string out;
  };
  auto opts = std::make_shared<Opts>();

  CLI::App* cmd =
      app.add_subcommand("simulate", "generate a pairwise exchange trace");
  cmd->add_option("config", opts->config, "scenario file (key = value)")
      ->required();
  cmd->add_option("-o,--out", opts->out, "output trace CSV")->required();

  cmd->callback([opts] {
    const pbr::ScenarioConfig cfg = pbr::load_scenario(opts->config);
    const auto records = pbr::simulate_trace(cfg);
    pbr::write_trace_csv(opts->out, records);
    std::cout << "wrote " << records.size() << " records to " << opts->out
              << "\n";
  });
}
