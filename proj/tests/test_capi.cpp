// Black-box exercise of the shared library through the public C header.
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "homlab.h"

namespace {

struct CTempDir {
  std::filesystem::path path;
  CTempDir() {
    path = std::filesystem::temp_directory_path() /
           ("homlab-capi-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~CTempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

constexpr double kIdentity[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::string(homlab_version()).find("homlab") != std::string::npos);

  double out[9];
  CHECK(homlab_homography_invert(nullptr, out) == HOMLAB_ERR_CONFIG);
  CHECK(std::string(homlab_last_error()).empty() == false);

  CHECK(homlab_homography_invert(kIdentity, out) == HOMLAB_OK);
  CHECK(std::string(homlab_last_error()).empty());
}

TEST_CASE("homography algebra through the C surface") {
  double u, v;
  REQUIRE(homlab_project_point(kIdentity, 17.5, -3.0, &u, &v) == HOMLAB_OK);
  CHECK(u == doctest::Approx(17.5));
  CHECK(v == doctest::Approx(-3.0));

  const double corners[8] = {0, 0, 127, 0, 127, 127, 0, 127};
  const double offsets[8] = {4, -2, 4, -2, 4, -2, 4, -2};
  double h[9];
  REQUIRE(homlab_homography_from_offsets(corners, offsets, h) == HOMLAB_OK);
  CHECK(h[2] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(h[5] == doctest::Approx(-2.0).epsilon(1e-9));

  double back[8];
  REQUIRE(homlab_offsets_from_homography(h, corners, back) == HOMLAB_OK);
  for (int i = 0; i < 8; ++i) CHECK(back[i] == doctest::Approx(offsets[i]).epsilon(1e-9));

  double inv[9], prod[9];
  REQUIRE(homlab_homography_invert(h, inv) == HOMLAB_OK);
  REQUIRE(homlab_homography_compose(h, inv, prod) == HOMLAB_OK);
  for (int i = 0; i < 9; ++i) CHECK(prod[i] == doctest::Approx(kIdentity[i]).epsilon(1e-9));

  // DLT from 6 exact correspondences under h.
  std::vector<double> src, dst;
  for (int i = 0; i < 6; ++i) {
    const double x = 10.0 + 19.0 * i, y = 5.0 + 13.0 * ((i * i) % 7);
    double xu, xv;
    homlab_project_point(h, x, y, &xu, &xv);
    src.push_back(x);
    src.push_back(y);
    dst.push_back(xu);
    dst.push_back(xv);
  }
  double rec[9];
  REQUIRE(homlab_homography_dlt(src.data(), dst.data(), 6, rec) == HOMLAB_OK);
  for (int i = 0; i < 9; ++i) CHECK(rec[i] == doctest::Approx(h[i]).epsilon(1e-8));

  // Degenerate input surfaces as a numeric error.
  const double collinear_src[8] = {0, 0, 1, 0, 2, 0, 3, 0};
  const double collinear_dst[8] = {0, 1, 1, 2, 2, 1, 3, 5};
  CHECK(homlab_homography_dlt(collinear_src, collinear_dst, 4, rec) == HOMLAB_ERR_NUMERIC);
}

TEST_CASE("image lifecycle through the C surface") {
  CTempDir tmp;

  homlab_image* img = homlab_image_create(8, 6);
  REQUIRE(img != nullptr);
  CHECK(homlab_image_width(img) == 8);
  CHECK(homlab_image_height(img) == 6);
  float* px = homlab_image_pixels_mut(img);
  for (int i = 0; i < 48; ++i) px[i] = (i % 16) / 15.0f;

  const auto path = (tmp.path / "img.pgm").string();
  REQUIRE(homlab_image_write_pgm(img, path.c_str()) == HOMLAB_OK);
  homlab_image* back = homlab_image_read(path.c_str());
  REQUIRE(back != nullptr);
  const float* qx = homlab_image_pixels(back);
  for (int i = 0; i < 48; ++i) CHECK(std::abs(qx[i] - px[i]) <= 1.0f / 510.0f);

  homlab_image* blurred = homlab_image_blur3(back);
  REQUIRE(blurred != nullptr);

  const double shift[9] = {1, 0, 2, 0, 1, 0, 0, 0, 1};
  homlab_image* warped = homlab_image_warp(img, shift);
  REQUIRE(warped != nullptr);
  CHECK(homlab_image_pixels(warped)[2] == px[0]);

  CHECK(homlab_image_read((tmp.path / "missing.pgm").string().c_str()) == nullptr);
  CHECK(std::string(homlab_last_error()).find("missing") != std::string::npos);

  homlab_image_destroy(img);
  homlab_image_destroy(back);
  homlab_image_destroy(blurred);
  homlab_image_destroy(warped);
}

TEST_CASE("config handles: profiles, keys, validation") {
  homlab_config* cfg = homlab_config_create();
  REQUIRE(cfg != nullptr);

  char buf[64];
  REQUIRE(homlab_config_get(cfg, "patch_size", buf, sizeof(buf)) == HOMLAB_OK);
  CHECK(std::string(buf) == "128");

  REQUIRE(homlab_config_apply_profile(cfg, "fast") == HOMLAB_OK);
  REQUIRE(homlab_config_get(cfg, "patch_size", buf, sizeof(buf)) == HOMLAB_OK);
  CHECK(std::string(buf) == "64");

  CHECK(homlab_config_set(cfg, "bogus", "1") == HOMLAB_ERR_CONFIG);
  CHECK(homlab_config_set(cfg, "total_steps", "not-a-number") == HOMLAB_ERR_CONFIG);
  CHECK(homlab_config_apply_profile(cfg, "warp9") == HOMLAB_ERR_CONFIG);
  CHECK(homlab_config_set(cfg, "seed", "42") == HOMLAB_OK);

  homlab_config_destroy(cfg);
}

TEST_CASE("gss generation is deterministic per config and index") {
  homlab_config* cfg = homlab_config_create();
  REQUIRE(homlab_config_apply_profile(cfg, "fast") == HOMLAB_OK);
  REQUIRE(homlab_config_set(cfg, "seed", "9") == HOMLAB_OK);

  homlab_image* a = homlab_gss_generate(cfg, 3);
  homlab_image* b = homlab_gss_generate(cfg, 3);
  homlab_image* c = homlab_gss_generate(cfg, 4);
  REQUIRE(a != nullptr);
  REQUIRE(b != nullptr);
  REQUIRE(c != nullptr);
  const int n = homlab_image_width(a) * homlab_image_height(a);
  CHECK(homlab_image_width(a) == 160);
  CHECK(std::memcmp(homlab_image_pixels(a), homlab_image_pixels(b), n * sizeof(float)) == 0);
  CHECK(std::memcmp(homlab_image_pixels(a), homlab_image_pixels(c), n * sizeof(float)) != 0);

  homlab_image_destroy(a);
  homlab_image_destroy(b);
  homlab_image_destroy(c);
  homlab_config_destroy(cfg);
}

TEST_CASE("model create, save, load, forward through the C surface") {
  CTempDir tmp;
  homlab_config* cfg = homlab_config_create();
  REQUIRE(homlab_config_apply_profile(cfg, "fast") == HOMLAB_OK);
  REQUIRE(homlab_config_set(cfg, "seed", "21") == HOMLAB_OK);

  homlab_model* model = homlab_model_create(cfg);
  REQUIRE(model != nullptr);
  CHECK(homlab_model_param_count(model) == 78152);

  const auto path = (tmp.path / "m.weights").string();
  REQUIRE(homlab_model_save(model, path.c_str()) == HOMLAB_OK);
  homlab_model* loaded = homlab_model_load(path.c_str(), 64, 16.0);
  REQUIRE(loaded != nullptr);

  std::vector<float> input(2 * 64 * 64);
  for (size_t i = 0; i < input.size(); ++i) input[i] = (i % 97) / 96.0f;
  double out_a[8], out_b[8];
  REQUIRE(homlab_model_forward(model, input.data(), 64, out_a) == HOMLAB_OK);
  REQUIRE(homlab_model_forward(loaded, input.data(), 64, out_b) == HOMLAB_OK);
  for (int k = 0; k < 8; ++k) CHECK(out_a[k] == out_b[k]);

  CHECK(homlab_model_forward(model, input.data(), 32, out_a) == HOMLAB_ERR_DATA);
  CHECK(homlab_model_load((tmp.path / "none.weights").string().c_str(), 64, 16.0) == nullptr);

  homlab_model_destroy(model);
  homlab_model_destroy(loaded);
  homlab_config_destroy(cfg);
}

TEST_CASE("gss-gen command through the C surface") {
  CTempDir tmp;
  homlab_config* cfg = homlab_config_create();
  REQUIRE(homlab_config_apply_profile(cfg, "fast") == HOMLAB_OK);
  REQUIRE(homlab_config_set(cfg, "out", (tmp.path / "runs").string().c_str()) == HOMLAB_OK);
  REQUIRE(homlab_config_set(cfg, "gss_count", "2") == HOMLAB_OK);
  REQUIRE(homlab_config_set(cfg, "seed", "5") == HOMLAB_OK);

  char run_dir[1024] = {0};
  REQUIRE(homlab_cmd_gss_gen(cfg, run_dir, sizeof(run_dir)) == HOMLAB_OK);
  CHECK(std::filesystem::exists(std::filesystem::path(run_dir) / "manifest.csv"));
  CHECK(std::filesystem::exists(std::filesystem::path(run_dir) / "images" / "gss_000001.pgm"));

  // Missing corpus surfaces as a data error through the command layer.
  REQUIRE(homlab_config_set(cfg, "corpus", (tmp.path / "nothing").string().c_str()) ==
          HOMLAB_OK);
  CHECK(homlab_cmd_train(cfg, run_dir, sizeof(run_dir)) == HOMLAB_ERR_DATA);

  homlab_config_destroy(cfg);
}
