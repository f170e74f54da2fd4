/* homlab — homography estimation laboratory, public C API.
 *
 * All functions return homlab_status (0 on success); the failure message of
 * the most recent error on the calling thread is available through
 * homlab_last_error(). Objects are opaque handles owned by the caller and
 * released with the matching _destroy function.
 *
 * Status values double as process exit codes: 2 configuration error,
 * 3 data error, 4 numeric failure.
 */
#ifndef HOMLAB_H
#define HOMLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HOMLAB_API __declspec(dllexport)
#else
#define HOMLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum homlab_status {
  HOMLAB_OK = 0,
  HOMLAB_ERR_CONFIG = 2,
  HOMLAB_ERR_DATA = 3,
  HOMLAB_ERR_NUMERIC = 4
} homlab_status;

HOMLAB_API const char* homlab_version(void);

/* Message for the last failure on this thread; empty string if none. */
HOMLAB_API const char* homlab_last_error(void);

/* ---- homography algebra ------------------------------------------------
 * Matrices are row-major double[9] (H11..H33), canonical H33 = 1 on output.
 * Corner and offset arrays are double[8]: u1,v1,...,u4,v4 ordered top-left,
 * top-right, bottom-right, bottom-left.
 */
HOMLAB_API homlab_status homlab_project_point(const double h[9], double u, double v,
                                              double* out_u, double* out_v);
HOMLAB_API homlab_status homlab_homography_from_offsets(const double corners[8],
                                                        const double offsets[8],
                                                        double out_h[9]);
HOMLAB_API homlab_status homlab_offsets_from_homography(const double h[9],
                                                        const double corners[8],
                                                        double out_offsets[8]);
HOMLAB_API homlab_status homlab_homography_invert(const double h[9], double out_h[9]);
HOMLAB_API homlab_status homlab_homography_compose(const double a[9], const double b[9],
                                                   double out_h[9]);
/* Least-squares DLT from n >= 4 correspondences; src/dst are u,v pairs. */
HOMLAB_API homlab_status homlab_homography_dlt(const double* src_uv, const double* dst_uv,
                                               size_t n, double out_h[9]);

/* ---- images ------------------------------------------------------------ */
typedef struct homlab_image homlab_image;

HOMLAB_API homlab_image* homlab_image_create(int width, int height);
HOMLAB_API homlab_image* homlab_image_read(const char* path);
HOMLAB_API void homlab_image_destroy(homlab_image* img);
HOMLAB_API int homlab_image_width(const homlab_image* img);
HOMLAB_API int homlab_image_height(const homlab_image* img);
/* Row-major intensities in [0,1]; valid until the image is destroyed. */
HOMLAB_API const float* homlab_image_pixels(const homlab_image* img);
HOMLAB_API float* homlab_image_pixels_mut(homlab_image* img);
HOMLAB_API homlab_status homlab_image_write_pgm(const homlab_image* img, const char* path);
HOMLAB_API homlab_image* homlab_image_warp(const homlab_image* img, const double h[9]);
HOMLAB_API homlab_image* homlab_image_blur3(const homlab_image* img);

/* ---- configuration ------------------------------------------------------
 * Key=value store with strict key validation. Keys mirror the config file
 * format; see the project README for the key list.
 */
typedef struct homlab_config homlab_config;

HOMLAB_API homlab_config* homlab_config_create(void);
HOMLAB_API void homlab_config_destroy(homlab_config* cfg);
HOMLAB_API homlab_status homlab_config_apply_profile(homlab_config* cfg, const char* name);
HOMLAB_API homlab_status homlab_config_load_file(homlab_config* cfg, const char* path);
HOMLAB_API homlab_status homlab_config_set(homlab_config* cfg, const char* key,
                                           const char* value);
HOMLAB_API homlab_status homlab_config_get(const homlab_config* cfg, const char* key, char* buf,
                                           size_t buf_size);

/* Fresh GSS image per the config's gss_* keys; index selects the stream
 * element (deterministic under a fixed seed). */
HOMLAB_API homlab_image* homlab_gss_generate(const homlab_config* cfg, uint64_t index);

/* ---- estimator ---------------------------------------------------------- */
typedef struct homlab_model homlab_model;

/* Freshly initialized model per the config (width_scale, patch_size, rho,
 * seed). */
HOMLAB_API homlab_model* homlab_model_create(const homlab_config* cfg);
HOMLAB_API homlab_model* homlab_model_load(const char* path, int patch_size, double loss_scale);
HOMLAB_API homlab_status homlab_model_save(const homlab_model* model, const char* path);
HOMLAB_API void homlab_model_destroy(homlab_model* model);
HOMLAB_API size_t homlab_model_param_count(const homlab_model* model);
/* input is the stacked pair, 2 * patch * patch floats (source patch first);
 * out_offsets receives the eight predicted offsets in pixels. */
HOMLAB_API homlab_status homlab_model_forward(const homlab_model* model, const float* input,
                                              int patch_size, double out_offsets[8]);

/* ---- commands ------------------------------------------------------------
 * Each command runs end-to-end per the config and writes a fresh run
 * directory; its path is copied into run_dir_buf (when non-NULL).
 */
HOMLAB_API homlab_status homlab_cmd_gss_gen(const homlab_config* cfg, char* run_dir_buf,
                                            size_t buf_size);
HOMLAB_API homlab_status homlab_cmd_pairs_gen(const homlab_config* cfg, char* run_dir_buf,
                                              size_t buf_size);
HOMLAB_API homlab_status homlab_cmd_train(const homlab_config* cfg, char* run_dir_buf,
                                          size_t buf_size);
HOMLAB_API homlab_status homlab_cmd_eval(const homlab_config* cfg, char* run_dir_buf,
                                         size_t buf_size);
HOMLAB_API homlab_status homlab_cmd_baseline(const homlab_config* cfg, char* run_dir_buf,
                                             size_t buf_size);
HOMLAB_API homlab_status homlab_cmd_visualize(const homlab_config* cfg, char* run_dir_buf,
                                              size_t buf_size);
/* which: "domain", "shapes", "blur" or "selected2gap". */
HOMLAB_API homlab_status homlab_cmd_experiment(const homlab_config* cfg, const char* which,
                                               char* run_dir_buf, size_t buf_size);

#ifdef __cplusplus
}
#endif

#endif /* HOMLAB_H */
