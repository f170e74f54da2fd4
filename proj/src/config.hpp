#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "baseline.hpp"
#include "datagen.hpp"
#include "train.hpp"

namespace homlab {

// Flat key=value configuration with built-in defaults, profile presets and
// strict key validation (unknown keys are hard errors). Precedence is
// caller-driven: defaults, then ApplyProfile / LoadFile / Set in the order
// invoked; the CLI applies file first, then flags.
class RunConfig {
 public:
  RunConfig();

  // "fast" (desk-scale: patch 64, rho 16, half-width channels) or "paper"
  // (the built-in full-scale defaults).
  void ApplyProfile(const std::string& name);

  // Plain text, one key=value per line, '#' comments. A profile key in the
  // file is applied before the other file keys.
  void LoadFile(const std::filesystem::path& path);

  // Throws kUnknownKey for unknown keys, kInvalidValue for unparsable
  // values.
  void Set(const std::string& key, const std::string& value);

  std::string Get(const std::string& key) const;

  // Sorted key=value lines; re-running from a snapshot reproduces outputs.
  std::string Snapshot() const;
  uint64_t Hash() const;

  // Cross-field validation (module invariants). Throws kInvalidValue.
  void Validate() const;

  // Resolved module configs. "auto" rules: border_margin 0 resolves to
  // ceil(rho); loss_scale 0 resolves to rho.
  GenConfig Gen() const;
  GssConfig Gss() const;
  TrainConfig Train() const;
  BaselineConfig Baseline() const;

  uint64_t Seed() const;
  int Threads() const;
  int64_t Samples() const;
  int64_t GssCount() const;
  double WidthScale() const;
  double KeepFraction() const;
  double OverlayAlpha() const;
  std::string OutDir() const;
  std::string WeightsPath() const;
  std::string ResumePath() const;
  std::string VisualizeSource() const;
  std::vector<int> ShapeCounts() const;
  std::vector<std::string> CorpusDirs() const;
  CorpusSplit TrainSplit() const;
  CorpusSplit EvalSplit() const;
  int64_t CheckpointEvery() const;
  int64_t LogEvery() const;

 private:
  int64_t GetInt(const std::string& key) const;
  double GetReal(const std::string& key) const;
  uint64_t GetU64(const std::string& key) const;

  std::map<std::string, std::string> values_;
};

}  // namespace homlab
