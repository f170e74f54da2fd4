#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace homlab {

namespace {

enum class ValueKind { kInt, kU64, kReal, kString, kIntList, kRealList, kEnum };

struct KeySpec {
  ValueKind kind;
  const char* default_value;
  const char* choices;  // comma list for kEnum, nullptr otherwise
};

const std::map<std::string, KeySpec>& Registry() {
  static const std::map<std::string, KeySpec> registry = {
      {"profile", {ValueKind::kEnum, "", ",fast,paper"}},
      {"seed", {ValueKind::kU64, "0", nullptr}},
      {"out", {ValueKind::kString, "runs", nullptr}},
      {"threads", {ValueKind::kInt, "0", nullptr}},
      {"corpus", {ValueKind::kString, "", nullptr}},
      {"weights", {ValueKind::kString, "", nullptr}},
      {"resume", {ValueKind::kString, "", nullptr}},
      {"samples", {ValueKind::kInt, "1000", nullptr}},
      {"corpus_split", {ValueKind::kEnum, "none", "none,hash"}},
      {"patch_size", {ValueKind::kInt, "128", nullptr}},
      {"rho", {ValueKind::kReal, "32", nullptr}},
      {"border_margin", {ValueKind::kInt, "0", nullptr}},  // 0 = auto (rho)
      {"width_scale", {ValueKind::kReal, "1", nullptr}},
      {"gss_count", {ValueKind::kInt, "100", nullptr}},
      {"gss_image_size", {ValueKind::kInt, "320", nullptr}},
      {"gss_n_shapes", {ValueKind::kInt, "8", nullptr}},
      {"gss_size_min", {ValueKind::kReal, "16", nullptr}},
      {"gss_size_max", {ValueKind::kReal, "96", nullptr}},
      {"gss_intensity_levels", {ValueKind::kRealList, "0.25,0.5,0.75,1.0", nullptr}},
      {"gss_outline_probability", {ValueKind::kReal, "0.5", nullptr}},
      {"gss_outline_width", {ValueKind::kReal, "2", nullptr}},
      {"lr", {ValueKind::kReal, "0.001", nullptr}},
      {"lr_min", {ValueKind::kReal, "0.00001", nullptr}},
      {"batch_size", {ValueKind::kInt, "32", nullptr}},
      {"total_steps", {ValueKind::kInt, "20000", nullptr}},
      {"optimizer", {ValueKind::kEnum, "adam", "adam,sgd"}},
      {"loss_scale", {ValueKind::kReal, "0", nullptr}},  // 0 = auto (rho)
      {"checkpoint_every", {ValueKind::kInt, "0", nullptr}},
      {"log_every", {ValueKind::kInt, "25", nullptr}},
      {"ransac_iterations", {ValueKind::kInt, "2000", nullptr}},
      {"ransac_inlier_threshold", {ValueKind::kReal, "3.0", nullptr}},
      {"ransac_min_inliers", {ValueKind::kInt, "8", nullptr}},
      {"max_keypoints", {ValueKind::kInt, "500", nullptr}},
      {"fast_threshold", {ValueKind::kReal, "0.06", nullptr}},
      {"match_ratio", {ValueKind::kReal, "0.8", nullptr}},
      {"keep_fraction", {ValueKind::kReal, "0.8", nullptr}},
      {"shape_counts", {ValueKind::kIntList, "1,5,9,15", nullptr}},
      {"visualize_source", {ValueKind::kEnum, "gss", "gss,corpus"}},
      {"overlay_alpha", {ValueKind::kReal, "0.5", nullptr}},
  };
  return registry;
}

std::vector<std::string> SplitList(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void CheckParsable(const std::string& key, const KeySpec& spec, const std::string& value) {
  const auto parse_int = [&](const std::string& v) {
    size_t pos = 0;
    try {
      (void)std::stoll(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v.size() || v.empty()) {
      Fail(ErrorKind::kInvalidValue, "key '" + key + "': expected integer, got '" + v + "'");
    }
  };
  const auto parse_real = [&](const std::string& v) {
    size_t pos = 0;
    try {
      (void)std::stod(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v.size() || v.empty()) {
      Fail(ErrorKind::kInvalidValue, "key '" + key + "': expected number, got '" + v + "'");
    }
  };
  switch (spec.kind) {
    case ValueKind::kInt:
    case ValueKind::kU64:
      parse_int(value);
      break;
    case ValueKind::kReal:
      parse_real(value);
      break;
    case ValueKind::kIntList:
      for (const auto& item : SplitList(value, ',')) parse_int(item);
      break;
    case ValueKind::kRealList:
      for (const auto& item : SplitList(value, ',')) parse_real(item);
      break;
    case ValueKind::kEnum: {
      if (value.empty() && std::string(spec.default_value).empty()) break;
      bool ok = false;
      for (const auto& c : SplitList(spec.choices, ',')) ok = ok || c == value;
      if (!ok) {
        Fail(ErrorKind::kInvalidValue,
             "key '" + key + "': '" + value + "' not in {" + spec.choices + "}");
      }
      break;
    }
    case ValueKind::kString:
      break;
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& [key, spec] : Registry()) values_[key] = spec.default_value;
}

void RunConfig::ApplyProfile(const std::string& name) {
  if (name == "fast") {
    Set("patch_size", "64");
    Set("rho", "16");
    Set("width_scale", "0.5");
    Set("gss_image_size", "160");
    Set("gss_size_min", "8");
    Set("gss_size_max", "48");
  } else if (name == "paper") {
    Set("patch_size", "128");
    Set("rho", "32");
    Set("width_scale", "1");
    Set("gss_image_size", "320");
    Set("gss_size_min", "16");
    Set("gss_size_max", "96");
  } else {
    Fail(ErrorKind::kInvalidValue, "unknown profile '" + name + "' (fast or paper)");
  }
  values_["profile"] = name;
}

void RunConfig::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kConfigParse, "cannot open config file " + path.string());
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorKind::kConfigParse,
           path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    pairs.emplace_back(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
  for (const auto& [k, v] : pairs) {
    if (k == "profile" && !v.empty()) ApplyProfile(v);
  }
  for (const auto& [k, v] : pairs) {
    if (k != "profile") Set(k, v);
  }
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  const auto it = Registry().find(key);
  if (it == Registry().end()) {
    Fail(ErrorKind::kUnknownKey, "unknown config key '" + key + "'");
  }
  CheckParsable(key, it->second, value);
  values_[key] = value;
}

std::string RunConfig::Get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) Fail(ErrorKind::kUnknownKey, "unknown config key '" + key + "'");
  return it->second;
}

std::string RunConfig::Snapshot() const {
  std::string out;
  for (const auto& [key, value] : values_) {  // std::map iterates sorted
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

uint64_t RunConfig::Hash() const {
  const std::string snap = Snapshot();
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : snap) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

int64_t RunConfig::GetInt(const std::string& key) const { return std::stoll(Get(key)); }
double RunConfig::GetReal(const std::string& key) const { return std::stod(Get(key)); }
uint64_t RunConfig::GetU64(const std::string& key) const {
  return static_cast<uint64_t>(std::stoll(Get(key)));
}

void RunConfig::Validate() const {
  Gen().Validate();
  Gss().Validate();
  Train().Validate();
  const BaselineConfig b = Baseline();
  if (b.ransac.iterations < 1 || b.ransac.inlier_threshold <= 0.0) {
    Fail(ErrorKind::kInvalidValue, "ransac config invalid");
  }
  if (!(KeepFraction() > 0.0 && KeepFraction() <= 1.0)) {
    Fail(ErrorKind::kInvalidValue, "keep_fraction must lie in (0, 1]");
  }
  if (Samples() < 1) Fail(ErrorKind::kInvalidValue, "samples must be >= 1");
  if (WidthScale() <= 0.0) Fail(ErrorKind::kInvalidValue, "width_scale must be > 0");
}

GenConfig RunConfig::Gen() const {
  GenConfig g;
  g.patch_size = static_cast<int>(GetInt("patch_size"));
  g.rho = GetReal("rho");
  const int64_t margin = GetInt("border_margin");
  g.border_margin = margin > 0 ? static_cast<int>(margin)
                               : static_cast<int>(std::ceil(g.rho));
  g.seed = Seed();
  return g;
}

GssConfig RunConfig::Gss() const {
  GssConfig g;
  g.image_size = static_cast<int>(GetInt("gss_image_size"));
  g.n_shapes = static_cast<int>(GetInt("gss_n_shapes"));
  g.size_min = GetReal("gss_size_min");
  g.size_max = GetReal("gss_size_max");
  g.intensity_levels.clear();
  for (const auto& item : SplitList(Get("gss_intensity_levels"), ',')) {
    g.intensity_levels.push_back(std::stof(item));
  }
  g.outline_probability = GetReal("gss_outline_probability");
  g.outline_width = GetReal("gss_outline_width");
  g.seed = Seed();
  return g;
}

TrainConfig RunConfig::Train() const {
  TrainConfig t;
  t.learning_rate = GetReal("lr");
  t.lr_min = GetReal("lr_min");
  t.batch_size = static_cast<int>(GetInt("batch_size"));
  t.total_steps = GetInt("total_steps");
  t.optimizer = Get("optimizer") == "sgd" ? OptimizerKind::kSgdMomentum : OptimizerKind::kAdam;
  t.seed = Seed();
  const double scale = GetReal("loss_scale");
  t.loss_scale = scale > 0.0 ? scale : GetReal("rho");
  return t;
}

BaselineConfig RunConfig::Baseline() const {
  BaselineConfig b;
  b.ransac.iterations = static_cast<int>(GetInt("ransac_iterations"));
  b.ransac.inlier_threshold = GetReal("ransac_inlier_threshold");
  b.ransac.min_inliers = static_cast<int>(GetInt("ransac_min_inliers"));
  b.ransac.seed = Seed();
  b.max_keypoints = static_cast<int>(GetInt("max_keypoints"));
  b.fast_threshold = GetReal("fast_threshold");
  b.match_ratio = GetReal("match_ratio");
  return b;
}

uint64_t RunConfig::Seed() const { return GetU64("seed"); }
int RunConfig::Threads() const { return static_cast<int>(GetInt("threads")); }
int64_t RunConfig::Samples() const { return GetInt("samples"); }
int64_t RunConfig::GssCount() const { return GetInt("gss_count"); }
double RunConfig::WidthScale() const { return GetReal("width_scale"); }
double RunConfig::KeepFraction() const { return GetReal("keep_fraction"); }
double RunConfig::OverlayAlpha() const { return GetReal("overlay_alpha"); }
std::string RunConfig::OutDir() const { return Get("out"); }
std::string RunConfig::WeightsPath() const { return Get("weights"); }
std::string RunConfig::ResumePath() const { return Get("resume"); }
std::string RunConfig::VisualizeSource() const { return Get("visualize_source"); }

std::vector<int> RunConfig::ShapeCounts() const {
  std::vector<int> out;
  for (const auto& item : SplitList(Get("shape_counts"), ',')) {
    out.push_back(std::stoi(item));
  }
  return out;
}

std::vector<std::string> RunConfig::CorpusDirs() const { return SplitList(Get("corpus"), ';'); }

CorpusSplit RunConfig::TrainSplit() const {
  return Get("corpus_split") == "hash" ? CorpusSplit::kTrainHalf : CorpusSplit::kAll;
}

CorpusSplit RunConfig::EvalSplit() const {
  return Get("corpus_split") == "hash" ? CorpusSplit::kEvalHalf : CorpusSplit::kAll;
}

int64_t RunConfig::CheckpointEvery() const { return GetInt("checkpoint_every"); }
int64_t RunConfig::LogEvery() const { return GetInt("log_every"); }

}  // namespace homlab
