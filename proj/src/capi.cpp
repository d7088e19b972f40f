#include "dgm/dgm.h"

#include "dgm/error.hpp"
#include "dgm/graph.hpp"
#include "dgm/metrics.hpp"
#include "dgm/solver.hpp"
#include "dgm/synth.hpp"
#include "dgm/video_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#ifndef DGM_VERSION_STRING
#define DGM_VERSION_STRING "0.0.0"
#endif

struct dgm_video {
  dgm::VideoMatrix v;
};
struct dgm_laplacian {
  dgm::SparseSymMatrix phi;
};
struct dgm_result {
  dgm::SeparationResult r;
  dgm::VideoMatrix D;
};
struct dgm_masks {
  dgm::MaskSequence m;
};

namespace {

thread_local std::string g_last_error;

dgm_status set_error(dgm_status status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <class F>
dgm_status guarded(F&& fn) {
  try {
    fn();
    return DGM_OK;
  } catch (const dgm::Error& e) {
    return set_error(static_cast<dgm_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(DGM_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(DGM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(DGM_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(DGM_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (!p) dgm::fail(dgm::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

dgm::GraphConfig to_cpp(const dgm_graph_config* c) {
  dgm::GraphConfig g;
  if (c) {
    g.h_s = c->h_s;
    g.h_t = c->h_t;
    g.patch = c->patch;
    g.knn = c->knn;
    g.presmooth_sigma = c->presmooth_sigma;
  }
  return g;
}

dgm::SolverConfig to_cpp(const dgm_solver_config& c) {
  dgm::SolverConfig s;
  s.lambda1 = c.lambda1;
  s.lambda2 = c.lambda2;
  s.gamma1 = c.gamma1;
  s.gamma2 = c.gamma2;
  s.rho1 = c.rho1;
  s.rho2 = c.rho2;
  if (c.dt > 0.0) s.dt = c.dt;
  if (c.sigma_scale > 0.0) s.sigma_scale = c.sigma_scale;
  s.t_out = c.t_out;
  s.t_in = c.t_in;
  s.tol = c.tol;
  switch (c.update_mode) {
    case DGM_UPDATE_PAPER: s.update_mode = dgm::UpdateMode::Paper; break;
    case DGM_UPDATE_CONSISTENT: s.update_mode = dgm::UpdateMode::Consistent; break;
    default: dgm::fail(dgm::ErrorCode::InvalidArgument, "unknown update mode");
  }
  return s;
}

dgm_video* wrap(dgm::VideoMatrix v) { return new dgm_video{std::move(v)}; }

dgm::Image frame_image(const dgm::VideoMatrix& v, Eigen::Index j) {
  return v.data.col(j).reshaped(v.n1, v.n2);
}

}  // namespace

extern "C" {

const char* dgm_version(void) { return DGM_VERSION_STRING; }

const char* dgm_last_error(void) { return g_last_error.c_str(); }

const char* dgm_status_name(dgm_status status) {
  switch (status) {
    case DGM_OK: return "ok";
    case DGM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DGM_ERR_IO: return "i/o error";
    case DGM_ERR_NUMERIC: return "numeric error";
    case DGM_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case DGM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

// ---- video ------------------------------------------------------------------

dgm_status dgm_video_load(const char* dir, const char* pattern, dgm_video** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = wrap(dgm::to_matrix(dgm::load_frames(dir, pattern ? pattern : "*.pgm")));
  });
}

dgm_status dgm_video_from_data(const double* data, size_t n1, size_t n2, size_t m, dgm_video** out) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    dgm::require(n1 > 0 && n2 > 0 && m > 0, "video dimensions must be positive");
    const auto n = static_cast<Eigen::Index>(n1 * n2);
    dgm::VideoMatrix v{Eigen::Map<const Eigen::MatrixXd>(data, n, static_cast<Eigen::Index>(m)),
                       static_cast<Eigen::Index>(n1), static_cast<Eigen::Index>(n2)};
    *out = wrap(std::move(v));
  });
}

dgm_status dgm_video_read_dump(const char* path, dgm_video** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap(dgm::read_dump(path));
  });
}

dgm_status dgm_video_write_dump(const dgm_video* video, const char* path) {
  return guarded([&] {
    need(video, "video");
    need(path, "path");
    dgm::write_dump(path, video->v);
  });
}

void dgm_video_free(dgm_video* video) { delete video; }

dgm_status dgm_video_shape(const dgm_video* video, size_t* n1, size_t* n2, size_t* m) {
  return guarded([&] {
    need(video, "video");
    if (n1) *n1 = static_cast<size_t>(video->v.n1);
    if (n2) *n2 = static_cast<size_t>(video->v.n2);
    if (m) *m = static_cast<size_t>(video->v.m());
  });
}

const double* dgm_video_data(const dgm_video* video) { return video ? video->v.data.data() : nullptr; }

dgm_status dgm_video_remove_motionless(const dgm_video* video, double threshold, dgm_video** out, size_t* kept,
                                       size_t kept_cap, size_t* n_kept) {
  return guarded([&] {
    need(video, "video");
    need(out, "out");
    auto filtered = dgm::remove_motionless(video->v, threshold);
    if (kept)
      for (size_t i = 0; i < std::min(kept_cap, filtered.kept.size()); ++i)
        kept[i] = static_cast<size_t>(filtered.kept[i]);
    if (n_kept) *n_kept = filtered.kept.size();
    *out = wrap(std::move(filtered.video));
  });
}

dgm_status dgm_video_mean_background(const dgm_video* video, dgm_video** out) {
  return guarded([&] {
    need(video, "video");
    need(out, "out");
    const dgm::Image bg = dgm::mean_background(video->v);
    *out = wrap({bg.reshaped(), video->v.n1, video->v.n2});
  });
}

dgm_status dgm_video_write_frames(const dgm_video* video, const char* dir, const char* prefix, int absolute,
                                  size_t* clamped) {
  return guarded([&] {
    need(video, "video");
    need(dir, "dir");
    std::filesystem::create_directories(dir);
    size_t c = 0;
    if (absolute) {
      const dgm::VideoMatrix a{video->v.data.cwiseAbs(), video->v.n1, video->v.n2};
      c = dgm::write_frames(dir, prefix ? prefix : "", a);
    } else {
      c = dgm::write_frames(dir, prefix ? prefix : "", video->v);
    }
    if (clamped) *clamped = c;
  });
}

dgm_status dgm_image_read(const char* path, dgm_video** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const dgm::Image img = dgm::read_pnm(path);
    *out = wrap({img.reshaped(), img.rows(), img.cols()});
  });
}

dgm_status dgm_video_write_pgm(const dgm_video* video, const char* path) {
  return guarded([&] {
    need(video, "video");
    need(path, "path");
    dgm::require(video->v.m() >= 1, "video has no frames");
    dgm::write_pgm(path, frame_image(video->v, 0));
  });
}

// ---- graph ------------------------------------------------------------------

void dgm_graph_config_default(dgm_graph_config* cfg) {
  if (!cfg) return;
  const dgm::GraphConfig g;
  *cfg = {g.h_s, g.h_t, g.patch, g.knn, g.presmooth_sigma};
}

dgm_status dgm_laplacian_spatial(const dgm_video* video, const dgm_graph_config* cfg, dgm_laplacian** out) {
  return guarded([&] {
    need(video, "video");
    need(out, "out");
    *out = new dgm_laplacian{dgm::normalized_laplacian(dgm::spatial_adjacency(video->v, to_cpp(cfg)))};
  });
}

dgm_status dgm_laplacian_temporal(const dgm_video* video, const dgm_graph_config* cfg, dgm_laplacian** out) {
  return guarded([&] {
    need(video, "video");
    need(out, "out");
    *out = new dgm_laplacian{dgm::normalized_laplacian(dgm::temporal_adjacency(video->v, to_cpp(cfg)))};
  });
}

void dgm_laplacian_free(dgm_laplacian* lap) { delete lap; }

dgm_status dgm_laplacian_info(const dgm_laplacian* lap, size_t* dim, size_t* nnz) {
  return guarded([&] {
    need(lap, "laplacian");
    if (dim) *dim = static_cast<size_t>(lap->phi.dim());
    if (nnz) *nnz = static_cast<size_t>(lap->phi.nnz());
  });
}

dgm_status dgm_laplacian_write(const dgm_laplacian* lap, const char* path) {
  return guarded([&] {
    need(lap, "laplacian");
    need(path, "path");
    dgm::write_spsym(path, lap->phi);
  });
}

dgm_status dgm_laplacian_read(const char* path, dgm_laplacian** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new dgm_laplacian{dgm::read_spsym(path)};
  });
}

dgm_status dgm_laplacian_spectrum(const dgm_laplacian* lap, int iterations, double* min_eig, double* max_eig) {
  return guarded([&] {
    need(lap, "laplacian");
    const auto b = dgm::laplacian_spectrum_bounds(lap->phi, iterations > 0 ? iterations : 500);
    if (min_eig) *min_eig = b.min_eigenvalue;
    if (max_eig) *max_eig = b.max_eigenvalue;
  });
}

// ---- solver -----------------------------------------------------------------

void dgm_solver_config_default(size_t n, size_t m, dgm_solver_config* cfg) {
  if (!cfg) return;
  const auto s = dgm::SolverConfig::defaults_for(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  *cfg = {s.lambda1, s.lambda2, s.gamma1, s.gamma2, s.rho1, s.rho2, 0.0, 0.0,
          s.t_out,   s.t_in,    s.tol,    DGM_UPDATE_PAPER};
}

dgm_status dgm_solver_config_hash(const dgm_solver_config* cfg, char out[17]) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    const std::string h = dgm::config_hash(to_cpp(*cfg));
    std::memset(out, 0, 17);
    std::memcpy(out, h.data(), std::min<size_t>(h.size(), 16));
  });
}

dgm_status dgm_separate(const dgm_video* video, const dgm_laplacian* phi_s, const dgm_laplacian* phi_t,
                        const dgm_solver_config* cfg, const char* checkpoint_dir, dgm_result** out) {
  return guarded([&] {
    need(video, "video");
    need(phi_s, "spatial laplacian");
    need(phi_t, "temporal laplacian");
    need(cfg, "config");
    need(out, "out");
    const dgm::SolverConfig c = to_cpp(*cfg);
    std::optional<dgm::SolverState> resume;
    if (checkpoint_dir) resume = dgm::load_checkpoint(checkpoint_dir, c);
    auto r = dgm::run(video->v, phi_s->phi, phi_t->phi, c, std::move(resume));
    *out = new dgm_result{std::move(r), video->v};
  });
}

void dgm_result_free(dgm_result* result) { delete result; }

dgm_status dgm_result_info(const dgm_result* result, int* iterations, int* converged, double* sigma_scale) {
  return guarded([&] {
    need(result, "result");
    if (iterations) *iterations = result->r.iterations;
    if (converged) *converged = result->r.converged ? 1 : 0;
    if (sigma_scale) *sigma_scale = result->r.sigma_scale;
  });
}

dgm_status dgm_result_background(const dgm_result* result, dgm_video** out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    *out = wrap({result->r.L, result->D.n1, result->D.n2});
  });
}

dgm_status dgm_result_foreground(const dgm_result* result, dgm_video** out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    *out = wrap({result->r.S, result->D.n1, result->D.n2});
  });
}

dgm_status dgm_result_write_history(const dgm_result* result, const char* path) {
  return guarded([&] {
    need(result, "result");
    need(path, "path");
    dgm::write_history_csv(path, result->r.history);
  });
}

dgm_status dgm_result_write_checkpoint(const dgm_result* result, const dgm_solver_config* cfg, const char* dir) {
  return guarded([&] {
    need(result, "result");
    need(cfg, "config");
    need(dir, "dir");
    dgm::save_checkpoint(dir, result->r.state, to_cpp(*cfg), result->D);
  });
}

// ---- metrics ----------------------------------------------------------------

dgm_status dgm_masks_threshold(const dgm_video* foreground, double theta, dgm_masks** out) {
  return guarded([&] {
    need(foreground, "foreground");
    need(out, "out");
    *out = new dgm_masks{dgm::threshold_mask(foreground->v, theta)};
  });
}

dgm_status dgm_masks_load(const char* dir, const char* pattern, dgm_masks** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new dgm_masks{dgm::load_masks(dir, pattern ? pattern : "*.pgm")};
  });
}

dgm_status dgm_masks_write(const dgm_masks* masks, const char* dir, const char* prefix) {
  return guarded([&] {
    need(masks, "masks");
    need(dir, "dir");
    std::filesystem::create_directories(dir);
    dgm::write_masks(dir, prefix ? prefix : "", masks->m);
  });
}

dgm_status dgm_masks_shape(const dgm_masks* masks, size_t* n1, size_t* n2, size_t* m) {
  return guarded([&] {
    need(masks, "masks");
    if (n1) *n1 = static_cast<size_t>(masks->m.n1);
    if (n2) *n2 = static_cast<size_t>(masks->m.n2);
    if (m) *m = static_cast<size_t>(masks->m.m());
  });
}

void dgm_masks_free(dgm_masks* masks) { delete masks; }

dgm_status dgm_background_metrics(const dgm_video* estimate, const dgm_video* truth, double* re, double* psnr) {
  return guarded([&] {
    need(estimate, "estimate");
    need(truth, "truth");
    dgm::require(estimate->v.n1 == truth->v.n1 && estimate->v.n2 == truth->v.n2, "frame size mismatch");
    const dgm::Image a = dgm::mean_background(estimate->v);
    const dgm::Image b = dgm::mean_background(truth->v);
    if (re) *re = dgm::relative_error(a, b);
    if (psnr) *psnr = dgm::psnr(a, b);
  });
}

dgm_status dgm_detection_metrics(const dgm_masks* predicted, const dgm_masks* truth, int per_frame,
                                 dgm_detection* out) {
  return guarded([&] {
    need(predicted, "predicted");
    need(truth, "truth");
    need(out, "out");
    const auto r = dgm::detection_metrics(predicted->m, truth->m,
                                          per_frame ? dgm::Averaging::PerFrame : dgm::Averaging::Pooled);
    *out = {r.precision, r.recall, r.f_measure, r.tp, r.fp, r.fn, r.flags};
  });
}

dgm_status dgm_format_metrics(double re, double psnr, double precision, double recall, double f_measure, char* buf,
                              size_t cap) {
  return guarded([&] {
    need(buf, "buf");
    const std::string row = dgm::format_metrics_row({re, psnr, precision, recall, f_measure});
    dgm::require(row.size() < cap, "buffer too small");
    std::memcpy(buf, row.c_str(), row.size() + 1);
  });
}

// ---- synth ------------------------------------------------------------------

void dgm_synth_spec_default(dgm_synth_spec* spec) {
  if (!spec) return;
  const auto s = dgm::SynthSpec::benchmark();
  const auto [r0, c0] = s.trajectory.at(0);
  const auto [r1, c1] = s.trajectory.at(1);
  *spec = {static_cast<size_t>(s.n1), static_cast<size_t>(s.n2), static_cast<size_t>(s.m),
           s.bg_rank,
           static_cast<size_t>(s.object_h), static_cast<size_t>(s.object_w),
           static_cast<long>(r0), static_cast<long>(c0),
           static_cast<long>(r1 - r0), static_cast<long>(c1 - c0),
           s.object_intensity_delta, s.outlier_fraction, s.outlier_magnitude, s.rng_seed};
}

dgm_status dgm_synth_generate(const dgm_synth_spec* spec, dgm_video** video, dgm_video** background,
                              dgm_video** foreground, dgm_masks** masks) {
  return guarded([&] {
    need(spec, "spec");
    dgm::SynthSpec s;
    s.n1 = static_cast<Eigen::Index>(spec->n1);
    s.n2 = static_cast<Eigen::Index>(spec->n2);
    s.m = static_cast<Eigen::Index>(spec->m);
    s.bg_rank = spec->bg_rank;
    s.object_h = static_cast<Eigen::Index>(spec->object_h);
    s.object_w = static_cast<Eigen::Index>(spec->object_w);
    s.trajectory = dgm::linear_trajectory({spec->start_row, spec->start_col}, {spec->vel_row, spec->vel_col}, s.m);
    s.object_intensity_delta = spec->object_intensity_delta;
    s.outlier_fraction = spec->outlier_fraction;
    s.outlier_magnitude = spec->outlier_magnitude;
    s.rng_seed = spec->seed;
    auto g = dgm::generate(s);
    if (video) *video = wrap(std::move(g.D));
    if (background) *background = wrap(std::move(g.L_true));
    if (foreground) *foreground = wrap(std::move(g.S_true));
    if (masks) *masks = new dgm_masks{std::move(g.masks)};
  });
}

}  // extern "C"
