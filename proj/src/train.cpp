#include "train.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace homlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

void AppendU32(std::vector<uint8_t>& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void AppendU64(std::vector<uint8_t>& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void AppendF32(std::vector<uint8_t>& buf, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  AppendU32(buf, bits);
}

constexpr char kStateMagic[4] = {'H', 'E', 'N', 'O'};

}  // namespace

void TrainConfig::Validate() const {
  // learning_rate 0 is allowed (freezes the parameters).
  if (learning_rate < 0.0 || lr_min < 0.0 || batch_size < 1 || total_steps < 1 ||
      loss_scale <= 0.0) {
    Fail(ErrorKind::kInvalidValue, "training config requires positive rates, sizes and scale");
  }
}

double CosineLr(const TrainConfig& cfg, int64_t step) {
  const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.total_steps));
  return cfg.lr_min + 0.5 * (cfg.learning_rate - cfg.lr_min) * (1.0 + std::cos(kPi * t));
}

Optimizer::Optimizer(OptimizerKind kind, size_t param_count, const TrainConfig& cfg)
    : kind_(kind),
      beta1_(cfg.adam_beta1),
      beta2_(cfg.adam_beta2),
      eps_(cfg.adam_eps),
      momentum_(cfg.momentum) {
  m_.assign(param_count, 0.0f);
  if (kind_ == OptimizerKind::kAdam) v_.assign(param_count, 0.0f);
}

void Optimizer::Step(HenModel<float>& model, std::span<const double> grads, double lr) {
  if (grads.size() != m_.size()) {
    Fail(ErrorKind::kShapeMismatch, "gradient size does not match optimizer state");
  }
  ++t_;
  size_t i = 0;
  const auto update = [&](float& p) {
    const double g = grads[i];
    if (kind_ == OptimizerKind::kAdam) {
      const double m = beta1_ * m_[i] + (1.0 - beta1_) * g;
      const double v = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
      m_[i] = static_cast<float>(m);
      v_[i] = static_cast<float>(v);
      const double m_hat = m / (1.0 - std::pow(beta1_, static_cast<double>(t_)));
      const double v_hat = v / (1.0 - std::pow(beta2_, static_cast<double>(t_)));
      p = static_cast<float>(p - lr * m_hat / (std::sqrt(v_hat) + eps_));
    } else {
      const double vel = momentum_ * m_[i] + g;
      m_[i] = static_cast<float>(vel);
      p = static_cast<float>(p - lr * vel);
    }
    ++i;
  };
  for (auto& layer : model.layers()) {
    for (float& w : layer.weights) update(w);
    for (float& b : layer.bias) update(b);
  }
}

void Optimizer::SaveState(const std::filesystem::path& path) const {
  std::vector<uint8_t> payload;
  AppendU32(payload, 1);  // version
  payload.push_back(kind_ == OptimizerKind::kAdam ? 0 : 1);
  AppendU64(payload, static_cast<uint64_t>(t_));
  AppendU32(payload, static_cast<uint32_t>(m_.size()));
  for (float x : m_) AppendF32(payload, x);
  for (float x : v_) AppendF32(payload, x);

  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot create " + path.string());
  out.write(kStateMagic, 4);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  std::vector<uint8_t> crc;
  AppendU32(crc, Crc32(payload.data(), payload.size()));
  out.write(reinterpret_cast<const char*>(crc.data()), 4);
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

Optimizer Optimizer::LoadState(const std::filesystem::path& path, const TrainConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kStateMagic, 4) != 0) {
    Fail(ErrorKind::kFormatVersionMismatch, path.string() + ": not an optimizer state file");
  }
  const size_t payload_size = bytes.size() - 8;
  const uint32_t stored_crc = static_cast<uint32_t>(bytes[bytes.size() - 4]) |
                              (static_cast<uint32_t>(bytes[bytes.size() - 3]) << 8) |
                              (static_cast<uint32_t>(bytes[bytes.size() - 2]) << 16) |
                              (static_cast<uint32_t>(bytes[bytes.size() - 1]) << 24);
  if (stored_crc != Crc32(bytes.data() + 4, payload_size)) {
    Fail(ErrorKind::kChecksumMismatch, path.string() + ": checksum mismatch");
  }

  size_t pos = 4;
  const auto u32 = [&]() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos++]) << (8 * i);
    return v;
  };
  if (u32() != 1) {
    Fail(ErrorKind::kFormatVersionMismatch, path.string() + ": unsupported state version");
  }
  const uint8_t kind_byte = bytes[pos++];
  uint64_t t = 0;
  for (int i = 0; i < 8; ++i) t |= static_cast<uint64_t>(bytes[pos++]) << (8 * i);
  const uint32_t n = u32();

  const OptimizerKind kind = kind_byte == 0 ? OptimizerKind::kAdam : OptimizerKind::kSgdMomentum;
  Optimizer opt(kind, n, cfg);
  opt.t_ = static_cast<int64_t>(t);
  const size_t vectors = kind == OptimizerKind::kAdam ? 2 : 1;
  if (payload_size != 4 + 1 + 8 + 4 + vectors * n * 4ull) {
    Fail(ErrorKind::kChecksumMismatch, path.string() + ": state size mismatch");
  }
  const auto f32 = [&]() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  };
  for (uint32_t i = 0; i < n; ++i) opt.m_[i] = f32();
  if (kind == OptimizerKind::kAdam) {
    for (uint32_t i = 0; i < n; ++i) opt.v_[i] = f32();
  }
  return opt;
}

Trainer::Trainer(HenModel<float>* model, const PairSource* source, const TrainConfig& cfg,
                 ThreadPool* pool)
    : model_(model),
      source_(source),
      cfg_(cfg),
      pool_(pool),
      optimizer_(cfg.optimizer, model->FlatParamSize(), cfg) {
  cfg_.Validate();
  sample_grads_.assign(cfg_.batch_size, std::vector<float>(model_->FlatParamSize(), 0.0f));
  loss_parts_.assign(cfg_.batch_size, 0.0);
  grad_acc_.assign(model_->FlatParamSize(), 0.0);
  traces_.resize(pool_->size());
  scratch_.resize(pool_->size());
}

StepResult Trainer::Step(int64_t step_index) {
  const int batch = cfg_.batch_size;
  pool_->ParallelFor(batch, [&](int64_t j, int slot) {
    const PairSample sample =
        source_->Sample(static_cast<uint64_t>(step_index) * batch + static_cast<uint64_t>(j));
    const std::vector<float> input = MakeModelInput(sample);
    ForwardTrace<float>& trace = traces_[slot];
    model_->ForwardInto(input, trace);
    std::array<float, kHenOutputs> gap_grad;
    loss_parts_[j] =
        SampleLossAndGapGrad(trace.gap, sample.target, cfg_.loss_scale, batch, &gap_grad);
    std::vector<float>& grads = sample_grads_[j];
    std::fill(grads.begin(), grads.end(), 0.0f);
    model_->Backward(trace, gap_grad, grads, scratch_[slot]);
  });

  // Sample-order reduction keeps the result independent of thread count.
  std::fill(grad_acc_.begin(), grad_acc_.end(), 0.0);
  double loss = 0.0;
  for (int j = 0; j < batch; ++j) {
    loss += loss_parts_[j];
    const std::vector<float>& g = sample_grads_[j];
    for (size_t i = 0; i < grad_acc_.size(); ++i) grad_acc_[i] += g[i];
  }

  if (!std::isfinite(loss)) {
    Fail(ErrorKind::kNonFiniteLoss, "non-finite loss at step " + std::to_string(step_index) +
                                        " (loss=" + std::to_string(loss) +
                                        ", lr=" + std::to_string(CosineLr(cfg_, step_index)) + ")");
  }

  const double lr = CosineLr(cfg_, step_index);
  optimizer_.Step(*model_, grad_acc_, lr);
  return StepResult{loss, lr};
}

GradientCheckReport RunGradientCheck(double tol_float, double tol_double, uint64_t base_seed) {
  constexpr int kPatch = 8;
  constexpr int kBatch = 2;
  constexpr double kScale = 8.0;
  constexpr double kMargin = 1e-2;

  HenLayout layout;
  layout.feature_channels = {4, 4};

  GradientCheckReport report;
  HenModel<double> model;
  std::vector<std::vector<double>> inputs;
  std::vector<FourPointOffsets> targets;

  // Deterministic seed search: accept the first model/batch combination
  // whose ReLU pre-activations all sit at least kMargin from zero.
  for (uint64_t seed = base_seed;; ++seed) {
    model = HenModel<double>::RandomInit(layout, kPatch, kScale, seed);
    inputs.clear();
    targets.clear();
    Rng data_rng(Mix(seed, 0xDA7Aull));
    for (int b = 0; b < kBatch; ++b) {
      std::vector<double> in(2 * kPatch * kPatch);
      for (double& x : in) x = data_rng.Uniform();
      inputs.push_back(std::move(in));
      FourPointOffsets t;
      for (double& x : t.d) x = data_rng.Uniform(-kScale, kScale);
      targets.push_back(t);
    }
    double margin = 1e30;
    ForwardTrace<double> trace;
    for (const auto& in : inputs) {
      model.ForwardInto(in, trace);
      for (size_t l = 0; l + 1 < model.layers().size(); ++l) {
        for (double x : trace.conv_out[l].data) margin = std::min(margin, std::abs(x));
      }
    }
    if (margin >= kMargin) {
      report.min_preact_margin = margin;
      report.seed_used = seed;
      break;
    }
  }

  const auto batch_loss = [&](HenModel<double>& m) {
    ForwardTrace<double> trace;
    double loss = 0.0;
    for (int b = 0; b < kBatch; ++b) {
      m.ForwardInto(inputs[b], trace);
      std::array<double, kHenOutputs> unused;
      loss += SampleLossAndGapGrad(trace.gap, targets[b], kScale, kBatch, &unused);
    }
    return loss;
  };

  // Analytic gradients, double and float.
  const size_t n_params = model.FlatParamSize();
  std::vector<double> analytic_double(n_params, 0.0);
  {
    ForwardTrace<double> trace;
    BackwardScratch<double> scratch;
    for (int b = 0; b < kBatch; ++b) {
      model.ForwardInto(inputs[b], trace);
      std::array<double, kHenOutputs> gap_grad;
      SampleLossAndGapGrad(trace.gap, targets[b], kScale, kBatch, &gap_grad);
      model.Backward(trace, gap_grad, analytic_double, scratch);
    }
  }
  HenModel<float> fmodel = model.Cast<float>();
  std::vector<float> analytic_float(n_params, 0.0f);
  {
    ForwardTrace<float> trace;
    BackwardScratch<float> scratch;
    for (int b = 0; b < kBatch; ++b) {
      std::vector<float> in(inputs[b].begin(), inputs[b].end());
      fmodel.ForwardInto(in, trace);
      std::array<float, kHenOutputs> gap_grad;
      FourPointOffsets t = targets[b];
      SampleLossAndGapGrad(trace.gap, t, kScale, kBatch, &gap_grad);
      fmodel.Backward(trace, gap_grad, analytic_float, scratch);
    }
  }

  // Central differences on the double model, h = 1e-3.
  const double h = 1e-3;
  for (size_t i = 0; i < n_params; ++i) {
    double& p = model.ParamRef(i);
    const double saved = p;
    p = saved + h;
    const double up = batch_loss(model);
    p = saved - h;
    const double down = batch_loss(model);
    p = saved;
    const double numeric = (up - down) / (2.0 * h);

    const double rd =
        std::abs(analytic_double[i] - numeric) / std::max(1e-8, std::abs(analytic_double[i]) + std::abs(numeric));
    const double rf = std::abs(static_cast<double>(analytic_float[i]) - numeric) /
                      std::max(1e-8, std::abs(static_cast<double>(analytic_float[i])) + std::abs(numeric));
    report.max_rel_err_double = std::max(report.max_rel_err_double, rd);
    report.max_rel_err_float = std::max(report.max_rel_err_float, rf);
  }

  report.pass =
      report.max_rel_err_float < tol_float && report.max_rel_err_double < tol_double;
  return report;
}

}  // namespace homlab
