#pragma once

#include <CLI11.hpp>

// Each register_* attaches one subcommand with its flags and callback.
// Callbacks throw: std::invalid_argument for semantic validation problems
// (exit 1), anything else for I/O and malformed-content problems (exit 2).
void register_simulate(CLI::App& app);
void register_estimate(CLI::App& app);
void register_montecarlo(CLI::App& app);
void register_codec(CLI::App& app);
