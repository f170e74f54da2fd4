#pragma once

#include <filesystem>
#include <span>

#include "model.hpp"
#include "model_io.hpp"
#include "thread_pool.hpp"

namespace homlab {

enum class OptimizerKind { kAdam, kSgdMomentum };

struct TrainConfig {
  double learning_rate = 1e-3;
  double lr_min = 1e-5;
  int batch_size = 32;
  int64_t total_steps = 20000;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  uint64_t seed = 0;
  double loss_scale = 32.0;  // offset normalization constant, rho by default
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double momentum = 0.9;

  void Validate() const;
};

// Cosine decay from learning_rate to lr_min over total_steps.
double CosineLr(const TrainConfig& cfg, int64_t step);

// First-order update rules over the flat parameter vector (weights then
// bias, layer by layer). State is carried in single precision, the update
// arithmetic in double.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, size_t param_count, const TrainConfig& cfg);

  void Step(HenModel<float>& model, std::span<const double> grads, double lr);

  int64_t step_count() const { return t_; }

  // Checkpoint sidecar (magic "HENO"): step counter plus the state vectors,
  // CRC-protected like the weight file.
  void SaveState(const std::filesystem::path& path) const;
  static Optimizer LoadState(const std::filesystem::path& path, const TrainConfig& cfg);

 private:
  OptimizerKind kind_;
  double beta1_, beta2_, eps_, momentum_;
  int64_t t_ = 0;
  std::vector<float> m_;  // Adam first moment, or SGD velocity
  std::vector<float> v_;  // Adam second moment (empty for SGD)
};

struct StepResult {
  double loss = 0.0;
  double lr = 0.0;
};

// One supervised step: draws batch sample indices [step*B, (step+1)*B) from
// the source, runs forward/backward in parallel with per-sample gradient
// buffers, reduces them in sample order (bitwise deterministic for any
// thread count) and applies the optimizer.
// Loss is the MSE between predicted and true offsets, both divided by
// loss_scale. Throws kNonFiniteLoss with diagnostics if it degenerates.
class Trainer {
 public:
  Trainer(HenModel<float>* model, const PairSource* source, const TrainConfig& cfg,
          ThreadPool* pool);

  StepResult Step(int64_t step_index);

  Optimizer& optimizer() { return optimizer_; }
  const TrainConfig& config() const { return cfg_; }

  // Restores optimizer state when resuming from a checkpoint.
  void RestoreOptimizer(Optimizer opt) { optimizer_ = std::move(opt); }

 private:
  HenModel<float>* model_;
  const PairSource* source_;
  TrainConfig cfg_;
  ThreadPool* pool_;
  Optimizer optimizer_;
  std::vector<std::vector<float>> sample_grads_;
  std::vector<double> loss_parts_;
  std::vector<double> grad_acc_;
  std::vector<ForwardTrace<float>> traces_;
  std::vector<BackwardScratch<float>> scratch_;
};

// Mean squared error over the batch in normalized offset units, plus the
// per-sample GAP gradient seed.
template <typename T>
double SampleLossAndGapGrad(const std::array<T, kHenOutputs>& gap,
                            const FourPointOffsets& target, double loss_scale, int batch_size,
                            std::array<T, kHenOutputs>* gap_grad) {
  double sq_sum = 0.0;
  const double denom = static_cast<double>(batch_size) * kHenOutputs;
  for (int k = 0; k < kHenOutputs; ++k) {
    const double diff = static_cast<double>(gap[k]) - target.d[k] / loss_scale;
    sq_sum += diff * diff;
    (*gap_grad)[k] = static_cast<T>(2.0 * diff / denom);
  }
  return sq_sum / denom;
}

struct GradientCheckReport {
  double max_rel_err_float = 0.0;   // float analytic vs double finite differences
  double max_rel_err_double = 0.0;  // double analytic vs double finite differences
  double min_preact_margin = 0.0;   // min |pre-activation| feeding a ReLU
  uint64_t seed_used = 0;
  bool pass = false;
};

// Finite-difference verification on a reduced model (two feature layers +
// projection on an 8x8 input). Seeds are searched deterministically until
// every ReLU pre-activation is at least 1e-2 from zero, so the h-step never
// crosses a kink.
GradientCheckReport RunGradientCheck(double tol_float = 1e-3, double tol_double = 1e-6,
                                     uint64_t base_seed = 1);

}  // namespace homlab
