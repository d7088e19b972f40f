/*
 * dgm.h - C interface to the dual-graph regularized moving object detector.
 *
 * All objects are opaque handles created by dgm_*_create / load / generate
 * functions and released with the matching dgm_*_free. Every fallible call
 * returns a dgm_status; on failure a human readable message is available
 * from dgm_last_error() on the calling thread until the next failing call.
 *
 * Video matrices are n x m with n = n1 * n2 pixels per frame, stored
 * column-major; pixel (r, c) of frame j (all 0-based) is element
 * [j * n + c * n1 + r].
 */
#ifndef DGM_DGM_H
#define DGM_DGM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define DGM_API __declspec(dllexport)
#else
#  define DGM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dgm_status {
  DGM_OK = 0,
  DGM_ERR_INVALID_ARGUMENT = 1,
  DGM_ERR_IO = 2,
  DGM_ERR_NUMERIC = 3,
  DGM_ERR_INSUFFICIENT_DATA = 4,
  DGM_ERR_INTERNAL = 5
} dgm_status;

typedef struct dgm_video dgm_video;
typedef struct dgm_laplacian dgm_laplacian;
typedef struct dgm_result dgm_result;
typedef struct dgm_masks dgm_masks;

DGM_API const char* dgm_version(void);
DGM_API const char* dgm_last_error(void);
DGM_API const char* dgm_status_name(dgm_status status);

/* ---- video --------------------------------------------------------------- */

/* Loads every file in `dir` matching the glob `pattern` (NULL = "*.pgm"). */
DGM_API dgm_status dgm_video_load(const char* dir, const char* pattern, dgm_video** out);
DGM_API dgm_status dgm_video_from_data(const double* data, size_t n1, size_t n2, size_t m, dgm_video** out);
DGM_API dgm_status dgm_video_read_dump(const char* path, dgm_video** out);
DGM_API dgm_status dgm_video_write_dump(const dgm_video* video, const char* path);
DGM_API void dgm_video_free(dgm_video* video);

DGM_API dgm_status dgm_video_shape(const dgm_video* video, size_t* n1, size_t* n2, size_t* m);
/* Borrowed pointer to the n*m column-major data, valid until the handle is freed. */
DGM_API const double* dgm_video_data(const dgm_video* video);

/* Keeps frame 0 and every frame whose L1 distance to the last kept frame is
 * >= threshold. `kept` (capacity kept_cap) receives 0-based original indices;
 * `n_kept` the count, which may exceed kept_cap. */
DGM_API dgm_status dgm_video_remove_motionless(const dgm_video* video, double threshold, dgm_video** out,
                                               size_t* kept, size_t kept_cap, size_t* n_kept);

/* Mean over frames, returned as a one-frame video. */
DGM_API dgm_status dgm_video_mean_background(const dgm_video* video, dgm_video** out);

/* Frames as <dir>/<prefix>0001.pgm ...; values outside [0,1] are clamped and
 * counted in *clamped (may be NULL). With `absolute` nonzero |v| is written. */
DGM_API dgm_status dgm_video_write_frames(const dgm_video* video, const char* dir, const char* prefix, int absolute,
                                          size_t* clamped);
/* A single PGM/PPM image as a one-frame video. */
DGM_API dgm_status dgm_image_read(const char* path, dgm_video** out);
/* One-frame video (or frame 0) as a single PGM. */
DGM_API dgm_status dgm_video_write_pgm(const dgm_video* video, const char* path);

/* ---- graph --------------------------------------------------------------- */

typedef struct dgm_graph_config {
  double h_s;
  double h_t;
  int patch;
  int knn;
  double presmooth_sigma;
} dgm_graph_config;

DGM_API void dgm_graph_config_default(dgm_graph_config* cfg);

DGM_API dgm_status dgm_laplacian_spatial(const dgm_video* video, const dgm_graph_config* cfg, dgm_laplacian** out);
DGM_API dgm_status dgm_laplacian_temporal(const dgm_video* video, const dgm_graph_config* cfg, dgm_laplacian** out);
DGM_API void dgm_laplacian_free(dgm_laplacian* lap);

DGM_API dgm_status dgm_laplacian_info(const dgm_laplacian* lap, size_t* dim, size_t* nnz);
/* "SPSYM <dim> <nnz>" text dump, 1-based upper triangle. */
DGM_API dgm_status dgm_laplacian_write(const dgm_laplacian* lap, const char* path);
DGM_API dgm_status dgm_laplacian_read(const char* path, dgm_laplacian** out);
DGM_API dgm_status dgm_laplacian_spectrum(const dgm_laplacian* lap, int iterations, double* min_eig,
                                          double* max_eig);

/* ---- solver -------------------------------------------------------------- */

typedef enum dgm_update_mode { DGM_UPDATE_PAPER = 0, DGM_UPDATE_CONSISTENT = 1 } dgm_update_mode;

typedef struct dgm_solver_config {
  double lambda1;
  double lambda2;
  double gamma1;
  double gamma2;
  double rho1;
  double rho2;
  double dt;          /* <= 0: 0.9 / (2 gamma1 + 2 gamma2 + rho1 + rho2) */
  double sigma_scale; /* <= 0: 2 * largest singular value of D */
  int t_out;
  int t_in;
  double tol;
  dgm_update_mode update_mode;
} dgm_solver_config;

/* Defaults for an n x m problem (lambda1 depends on max(n, m)). */
DGM_API void dgm_solver_config_default(size_t n, size_t m, dgm_solver_config* cfg);
/* FNV-1a hash (16 hex chars + NUL) of the canonical config; t_out excluded. */
DGM_API dgm_status dgm_solver_config_hash(const dgm_solver_config* cfg, char out[17]);

/* checkpoint_dir may be NULL; otherwise the run continues from it. */
DGM_API dgm_status dgm_separate(const dgm_video* video, const dgm_laplacian* phi_s, const dgm_laplacian* phi_t,
                                const dgm_solver_config* cfg, const char* checkpoint_dir, dgm_result** out);
DGM_API void dgm_result_free(dgm_result* result);

DGM_API dgm_status dgm_result_info(const dgm_result* result, int* iterations, int* converged, double* sigma_scale);
DGM_API dgm_status dgm_result_background(const dgm_result* result, dgm_video** out);
DGM_API dgm_status dgm_result_foreground(const dgm_result* result, dgm_video** out);
/* CSV: iter,rel_dL,rel_dS,residual_UL,residual_DLSV,objective */
DGM_API dgm_status dgm_result_write_history(const dgm_result* result, const char* path);
DGM_API dgm_status dgm_result_write_checkpoint(const dgm_result* result, const dgm_solver_config* cfg,
                                               const char* dir);

/* ---- metrics ------------------------------------------------------------- */

enum {
  DGM_FLAG_PRECISION_UNDEFINED = 1,
  DGM_FLAG_RECALL_UNDEFINED = 2,
  DGM_FLAG_FMEASURE_UNDEFINED = 4
};

typedef struct dgm_detection {
  double precision;
  double recall;
  double f_measure;
  uint64_t tp, fp, fn;
  uint32_t flags;
} dgm_detection;

DGM_API dgm_status dgm_masks_threshold(const dgm_video* foreground, double theta, dgm_masks** out);
DGM_API dgm_status dgm_masks_load(const char* dir, const char* pattern, dgm_masks** out);
DGM_API dgm_status dgm_masks_write(const dgm_masks* masks, const char* dir, const char* prefix);
DGM_API dgm_status dgm_masks_shape(const dgm_masks* masks, size_t* n1, size_t* n2, size_t* m);
DGM_API void dgm_masks_free(dgm_masks* masks);

/* Both videos are reduced to their mean frame before comparison. */
DGM_API dgm_status dgm_background_metrics(const dgm_video* estimate, const dgm_video* truth, double* re,
                                          double* psnr);
DGM_API dgm_status dgm_detection_metrics(const dgm_masks* predicted, const dgm_masks* truth, int per_frame,
                                         dgm_detection* out);
/* "re,psnr,precision,recall,f_measure" row (no newline), %.6g, "inf"/"nan". */
DGM_API dgm_status dgm_format_metrics(double re, double psnr, double precision, double recall, double f_measure,
                                      char* buf, size_t cap);

/* ---- synthetic fixtures ------------------------------------------------- */

typedef struct dgm_synth_spec {
  size_t n1, n2, m;
  int bg_rank;
  size_t object_h, object_w;
  long start_row, start_col; /* top-left of the object in frame 0 */
  long vel_row, vel_col;     /* per-frame displacement */
  double object_intensity_delta;
  double outlier_fraction;
  double outlier_magnitude;
  uint64_t seed;
} dgm_synth_spec;

/* The 40x40x12 benchmark fixture. */
DGM_API void dgm_synth_spec_default(dgm_synth_spec* spec);
/* Any output pointer may be NULL. */
DGM_API dgm_status dgm_synth_generate(const dgm_synth_spec* spec, dgm_video** video, dgm_video** background,
                                      dgm_video** foreground, dgm_masks** masks);

#ifdef __cplusplus
}
#endif

#endif /* DGM_DGM_H */
