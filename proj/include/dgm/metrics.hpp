#pragma once

// Background quality (RE, PSNR) and foreground detection (precision, recall,
// F-measure) metrics.

#include "dgm/video_io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace dgm {

// n x m, column-major like the video matrix; true = foreground.
struct MaskSequence {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> masks;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;

  Eigen::Index m() const { return masks.cols(); }
};

double relative_error(const Image& estimate, const Image& truth);

// 20 log10(1 / RMSE) with peak intensity 1; +inf for identical images.
double psnr(const Image& estimate, const Image& truth);

// True where |S_ij| > theta.
MaskSequence threshold_mask(const VideoMatrix& S, double theta);

enum DegenerateFlag : std::uint32_t {
  kPrecisionUndefined = 1u << 0,  // TP + FP == 0
  kRecallUndefined = 1u << 1,     // TP + FN == 0
  kFMeasureUndefined = 1u << 2,   // Pr + Re == 0
};

struct DetectionReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  std::uint64_t tp = 0, fp = 0, fn = 0;
  std::uint32_t flags = 0;  // DegenerateFlag bits; undefined ratios read as 0
};

enum class Averaging { Pooled, PerFrame };

// Pooled: one confusion matrix over all pixels of all frames. PerFrame: the
// three ratios averaged over frames (counts are still pooled totals).
DetectionReport detection_metrics(const MaskSequence& predicted, const MaskSequence& truth,
                                  Averaging mode = Averaging::Pooled);

struct MetricsReport {
  double re = 0.0;
  double psnr = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

// "re,psnr,precision,recall,f_measure" values, 6 significant digits, "inf"
// for infinities and "nan" for metrics that were not computed.
std::string format_metrics_row(const MetricsReport& r);
std::string metrics_csv_header();

// Frames matching `pattern` in `dir`; intensity > 127 (of 255) is foreground.
MaskSequence load_masks(const std::filesystem::path& dir, const std::string& pattern = "*.pgm");
void write_masks(const std::filesystem::path& dir, const std::string& prefix, const MaskSequence& masks);

}  // namespace dgm
