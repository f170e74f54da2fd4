#pragma once

#include <filesystem>
#include <string>

#include "config.hpp"

namespace homlab {

struct CommandResult {
  std::filesystem::path run_dir;
};

// Each command validates its inputs, then writes into a fresh run directory
// <out>/<utc-stamp>-<config-hash>/ containing config.snapshot, log.txt and
// the command's artifacts (weights/, tables/, images/ as applicable). No
// command overwrites prior outputs.

CommandResult CmdGssGen(const RunConfig& cfg);
CommandResult CmdPairsGen(const RunConfig& cfg);
CommandResult CmdTrain(const RunConfig& cfg);
CommandResult CmdEval(const RunConfig& cfg);
CommandResult CmdBaseline(const RunConfig& cfg);
CommandResult CmdVisualize(const RunConfig& cfg);
CommandResult CmdExperiment(const RunConfig& cfg, const std::string& which);

}  // namespace homlab
