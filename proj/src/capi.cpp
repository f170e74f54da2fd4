#include "homlab.h"

#include <cstring>
#include <string>

#include "commands.hpp"
#include "config.hpp"
#include "image_io.hpp"
#include "model_io.hpp"

namespace {

thread_local std::string g_last_error;

homlab_status StatusOf(const homlab::Error& e) {
  return static_cast<homlab_status>(static_cast<int>(e.category()));
}

// Runs fn, capturing exceptions into the thread-local error slot.
template <typename Fn>
homlab_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return HOMLAB_OK;
  } catch (const homlab::Error& e) {
    g_last_error = e.what();
    return StatusOf(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HOMLAB_ERR_NUMERIC;
  }
}

template <typename Fn>
auto GuardPtr(Fn&& fn) -> decltype(fn()) {
  try {
    auto* p = fn();
    g_last_error.clear();
    return p;
  } catch (const homlab::Error& e) {
    g_last_error = e.what();
    return nullptr;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return nullptr;
  }
}

homlab_status RequireArgs(bool ok) {
  if (!ok) {
    g_last_error = "null argument";
    return HOMLAB_ERR_CONFIG;
  }
  return HOMLAB_OK;
}

void CopyPath(const std::filesystem::path& p, char* buf, size_t n) {
  if (!buf || n == 0) return;
  const std::string s = p.string();
  const size_t len = std::min(s.size(), n - 1);
  std::memcpy(buf, s.data(), len);
  buf[len] = '\0';
}

homlab::HomographyMatrix FromArray(const double h[9]) {
  homlab::HomographyMatrix m;
  std::memcpy(m.h.data(), h, 9 * sizeof(double));
  return m;
}

homlab::CornerSet CornersFromArray(const double c[8]) {
  homlab::CornerSet cs;
  for (int i = 0; i < 4; ++i) cs.pts[i] = {c[2 * i], c[2 * i + 1]};
  return cs;
}

}  // namespace

struct homlab_image {
  homlab::GrayImage img;
};

struct homlab_config {
  homlab::RunConfig cfg;
};

struct homlab_model {
  homlab::HenModel<float> model;
};

extern "C" {

const char* homlab_version(void) { return "homlab 0.1.0"; }

const char* homlab_last_error(void) { return g_last_error.c_str(); }

homlab_status homlab_project_point(const double h[9], double u, double v, double* out_u,
                                   double* out_v) {
  if (auto s = RequireArgs(h && out_u && out_v); s != HOMLAB_OK) return s;
  return Guard([&] {
    const homlab::Point2 p = homlab::ProjectPoint(FromArray(h), {u, v});
    *out_u = p.u;
    *out_v = p.v;
  });
}

homlab_status homlab_homography_from_offsets(const double corners[8], const double offsets[8],
                                             double out_h[9]) {
  if (auto s = RequireArgs(corners && offsets && out_h); s != HOMLAB_OK) return s;
  return Guard([&] {
    homlab::FourPointOffsets off;
    std::memcpy(off.d.data(), offsets, 8 * sizeof(double));
    const auto h = homlab::OffsetsToHomography(CornersFromArray(corners), off);
    std::memcpy(out_h, h.h.data(), 9 * sizeof(double));
  });
}

homlab_status homlab_offsets_from_homography(const double h[9], const double corners[8],
                                             double out_offsets[8]) {
  if (auto s = RequireArgs(h && corners && out_offsets); s != HOMLAB_OK) return s;
  return Guard([&] {
    const auto off = homlab::HomographyToOffsets(FromArray(h), CornersFromArray(corners));
    std::memcpy(out_offsets, off.d.data(), 8 * sizeof(double));
  });
}

homlab_status homlab_homography_invert(const double h[9], double out_h[9]) {
  if (auto s = RequireArgs(h && out_h); s != HOMLAB_OK) return s;
  return Guard([&] {
    const auto inv = homlab::Invert(FromArray(h));
    std::memcpy(out_h, inv.h.data(), 9 * sizeof(double));
  });
}

homlab_status homlab_homography_compose(const double a[9], const double b[9], double out_h[9]) {
  if (auto s = RequireArgs(a && b && out_h); s != HOMLAB_OK) return s;
  return Guard([&] {
    const auto c = homlab::Compose(FromArray(a), FromArray(b));
    std::memcpy(out_h, c.h.data(), 9 * sizeof(double));
  });
}

homlab_status homlab_homography_dlt(const double* src_uv, const double* dst_uv, size_t n,
                                    double out_h[9]) {
  if (auto s = RequireArgs(src_uv && dst_uv && out_h); s != HOMLAB_OK) return s;
  return Guard([&] {
    std::vector<homlab::PointPair> pairs(n);
    for (size_t i = 0; i < n; ++i) {
      pairs[i] = {{src_uv[2 * i], src_uv[2 * i + 1]}, {dst_uv[2 * i], dst_uv[2 * i + 1]}};
    }
    const auto h = homlab::DltLeastSquares(pairs);
    std::memcpy(out_h, h.h.data(), 9 * sizeof(double));
  });
}

homlab_image* homlab_image_create(int width, int height) {
  return GuardPtr([&]() -> homlab_image* {
    return new homlab_image{homlab::GrayImage(width, height)};
  });
}

homlab_image* homlab_image_read(const char* path) {
  if (!path) {
    g_last_error = "null path";
    return nullptr;
  }
  return GuardPtr([&]() -> homlab_image* { return new homlab_image{homlab::ReadImage(path)}; });
}

void homlab_image_destroy(homlab_image* img) { delete img; }

int homlab_image_width(const homlab_image* img) { return img ? img->img.width : 0; }
int homlab_image_height(const homlab_image* img) { return img ? img->img.height : 0; }

const float* homlab_image_pixels(const homlab_image* img) {
  return img ? img->img.data.data() : nullptr;
}

float* homlab_image_pixels_mut(homlab_image* img) { return img ? img->img.data.data() : nullptr; }

homlab_status homlab_image_write_pgm(const homlab_image* img, const char* path) {
  if (auto s = RequireArgs(img && path); s != HOMLAB_OK) return s;
  return Guard([&] { homlab::WritePgm(img->img, path); });
}

homlab_image* homlab_image_warp(const homlab_image* img, const double h[9]) {
  if (!img || !h) {
    g_last_error = "null argument";
    return nullptr;
  }
  return GuardPtr([&]() -> homlab_image* {
    return new homlab_image{homlab::WarpByHomography(img->img, FromArray(h))};
  });
}

homlab_image* homlab_image_blur3(const homlab_image* img) {
  if (!img) {
    g_last_error = "null argument";
    return nullptr;
  }
  return GuardPtr(
      [&]() -> homlab_image* { return new homlab_image{homlab::GaussianBlur3x3(img->img)}; });
}

homlab_config* homlab_config_create(void) {
  return GuardPtr([]() -> homlab_config* { return new homlab_config{}; });
}

void homlab_config_destroy(homlab_config* cfg) { delete cfg; }

homlab_status homlab_config_apply_profile(homlab_config* cfg, const char* name) {
  if (auto s = RequireArgs(cfg && name); s != HOMLAB_OK) return s;
  return Guard([&] { cfg->cfg.ApplyProfile(name); });
}

homlab_status homlab_config_load_file(homlab_config* cfg, const char* path) {
  if (auto s = RequireArgs(cfg && path); s != HOMLAB_OK) return s;
  return Guard([&] { cfg->cfg.LoadFile(path); });
}

homlab_status homlab_config_set(homlab_config* cfg, const char* key, const char* value) {
  if (auto s = RequireArgs(cfg && key && value); s != HOMLAB_OK) return s;
  return Guard([&] { cfg->cfg.Set(key, value); });
}

homlab_status homlab_config_get(const homlab_config* cfg, const char* key, char* buf,
                                size_t buf_size) {
  if (auto s = RequireArgs(cfg && key && buf && buf_size > 0); s != HOMLAB_OK) return s;
  return Guard([&] {
    const std::string v = cfg->cfg.Get(key);
    const size_t len = std::min(v.size(), buf_size - 1);
    std::memcpy(buf, v.data(), len);
    buf[len] = '\0';
  });
}

homlab_image* homlab_gss_generate(const homlab_config* cfg, uint64_t index) {
  if (!cfg) {
    g_last_error = "null config";
    return nullptr;
  }
  return GuardPtr([&]() -> homlab_image* {
    const homlab::GssConfig gss = cfg->cfg.Gss();
    homlab::Rng rng(homlab::Mix(gss.seed, index));
    return new homlab_image{homlab::GenerateGssImage(gss, rng)};
  });
}

homlab_model* homlab_model_create(const homlab_config* cfg) {
  if (!cfg) {
    g_last_error = "null config";
    return nullptr;
  }
  return GuardPtr([&]() -> homlab_model* {
    const auto layout = homlab::HenLayout::Scaled(cfg->cfg.WidthScale());
    return new homlab_model{homlab::HenModel<float>::RandomInit(
        layout, cfg->cfg.Gen().patch_size, cfg->cfg.Train().loss_scale, cfg->cfg.Seed())};
  });
}

homlab_model* homlab_model_load(const char* path, int patch_size, double loss_scale) {
  if (!path) {
    g_last_error = "null path";
    return nullptr;
  }
  return GuardPtr([&]() -> homlab_model* {
    return new homlab_model{homlab::LoadWeights(path, patch_size, loss_scale)};
  });
}

homlab_status homlab_model_save(const homlab_model* model, const char* path) {
  if (auto s = RequireArgs(model && path); s != HOMLAB_OK) return s;
  return Guard([&] { homlab::SaveWeights(model->model, path); });
}

void homlab_model_destroy(homlab_model* model) { delete model; }

size_t homlab_model_param_count(const homlab_model* model) {
  return model ? model->model.ParamCount() : 0;
}

homlab_status homlab_model_forward(const homlab_model* model, const float* input, int patch_size,
                                   double out_offsets[8]) {
  if (auto s = RequireArgs(model && input && out_offsets); s != HOMLAB_OK) return s;
  return Guard([&] {
    if (patch_size != model->model.patch_size()) {
      homlab::Fail(homlab::ErrorKind::kShapeMismatch,
                   "patch size does not match the loaded model");
    }
    const size_t n = 2ull * patch_size * patch_size;
    const auto result = model->model.Forward(std::span<const float>(input, n));
    std::memcpy(out_offsets, result.offsets_px.data(), 8 * sizeof(double));
  });
}

#define HOMLAB_DEFINE_CMD(fn, impl)                                                   \
  homlab_status fn(const homlab_config* cfg, char* run_dir_buf, size_t buf_size) {    \
    if (auto s = RequireArgs(cfg != nullptr); s != HOMLAB_OK) return s;               \
    return Guard([&] {                                                                \
      const homlab::CommandResult r = impl(cfg->cfg);                                 \
      CopyPath(r.run_dir, run_dir_buf, buf_size);                                     \
    });                                                                               \
  }

HOMLAB_DEFINE_CMD(homlab_cmd_gss_gen, homlab::CmdGssGen)
HOMLAB_DEFINE_CMD(homlab_cmd_pairs_gen, homlab::CmdPairsGen)
HOMLAB_DEFINE_CMD(homlab_cmd_train, homlab::CmdTrain)
HOMLAB_DEFINE_CMD(homlab_cmd_eval, homlab::CmdEval)
HOMLAB_DEFINE_CMD(homlab_cmd_baseline, homlab::CmdBaseline)
HOMLAB_DEFINE_CMD(homlab_cmd_visualize, homlab::CmdVisualize)

#undef HOMLAB_DEFINE_CMD

homlab_status homlab_cmd_experiment(const homlab_config* cfg, const char* which,
                                    char* run_dir_buf, size_t buf_size) {
  if (auto s = RequireArgs(cfg && which); s != HOMLAB_OK) return s;
  return Guard([&] {
    const homlab::CommandResult r = homlab::CmdExperiment(cfg->cfg, which);
    CopyPath(r.run_dir, run_dir_buf, buf_size);
  });
}

}  // extern "C"
