#include "dgm/metrics.hpp"

#include "dgm/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace dgm {
namespace {

void require_same_shape(const Image& a, const Image& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "image size mismatch: " + std::to_string(a.cols()) + "x" + std::to_string(a.rows()) + " vs " +
              std::to_string(b.cols()) + "x" + std::to_string(b.rows()));
}

double ratio(std::uint64_t num, std::uint64_t den, std::uint32_t flag, std::uint32_t& flags) {
  if (den == 0) {
    flags |= flag;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

struct Ratios {
  double pr, re, fm;
};

Ratios ratios_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint32_t& flags) {
  Ratios r{};
  r.pr = ratio(tp, tp + fp, kPrecisionUndefined, flags);
  r.re = ratio(tp, tp + fn, kRecallUndefined, flags);
  if (r.pr + r.re > 0.0) {
    r.fm = 2.0 * r.pr * r.re / (r.pr + r.re);
  } else {
    flags |= kFMeasureUndefined;
    r.fm = 0.0;
  }
  return r;
}

void format_value(char* buf, std::size_t cap, double v) {
  if (std::isnan(v))
    std::snprintf(buf, cap, "nan");
  else if (std::isinf(v))
    std::snprintf(buf, cap, v > 0 ? "inf" : "-inf");
  else
    std::snprintf(buf, cap, "%.6g", v);
}

}  // namespace

double relative_error(const Image& estimate, const Image& truth) {
  require_same_shape(estimate, truth);
  const double denom = truth.norm();
  if (!(denom > 0.0)) fail(ErrorCode::InvalidArgument, "relative error undefined for an all-zero truth image");
  return (truth - estimate).norm() / denom;
}

double psnr(const Image& estimate, const Image& truth) {
  require_same_shape(estimate, truth);
  require(truth.size() > 0, "empty image");
  const double mse = (estimate - truth).squaredNorm() / static_cast<double>(truth.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(1.0 / std::sqrt(mse));
}

MaskSequence threshold_mask(const VideoMatrix& S, double theta) {
  require(theta >= 0.0, "mask threshold must be nonnegative");
  return {S.data.array().abs() > theta, S.n1, S.n2};
}

DetectionReport detection_metrics(const MaskSequence& predicted, const MaskSequence& truth, Averaging mode) {
  require(predicted.masks.rows() == truth.masks.rows() && predicted.masks.cols() == truth.masks.cols() &&
              predicted.n1 == truth.n1 && predicted.n2 == truth.n2,
          "mask dimension mismatch");
  DetectionReport rep;
  const auto& p = predicted.masks;
  const auto& t = truth.masks;
  rep.tp = static_cast<std::uint64_t>((p && t).count());
  rep.fp = static_cast<std::uint64_t>((p && !t).count());
  rep.fn = static_cast<std::uint64_t>((!p && t).count());

  if (mode == Averaging::Pooled) {
    const Ratios r = ratios_from_counts(rep.tp, rep.fp, rep.fn, rep.flags);
    rep.precision = r.pr;
    rep.recall = r.re;
    rep.f_measure = r.fm;
    return rep;
  }

  require(predicted.m() > 0, "no frames to average over");
  double pr = 0.0, re = 0.0, fm = 0.0;
  for (Eigen::Index j = 0; j < predicted.m(); ++j) {
    const auto pc = p.col(j);
    const auto tc = t.col(j);
    const Ratios r = ratios_from_counts(static_cast<std::uint64_t>((pc && tc).count()),
                                        static_cast<std::uint64_t>((pc && !tc).count()),
                                        static_cast<std::uint64_t>((!pc && tc).count()), rep.flags);
    pr += r.pr;
    re += r.re;
    fm += r.fm;
  }
  const double inv = 1.0 / static_cast<double>(predicted.m());
  rep.precision = pr * inv;
  rep.recall = re * inv;
  rep.f_measure = fm * inv;
  return rep;
}

std::string metrics_csv_header() { return "re,psnr,precision,recall,f_measure"; }

std::string format_metrics_row(const MetricsReport& r) {
  std::string out;
  char buf[32];
  for (double v : {r.re, r.psnr, r.precision, r.recall, r.f_measure}) {
    format_value(buf, sizeof(buf), v);
    if (!out.empty()) out += ',';
    out += buf;
  }
  return out;
}

MaskSequence load_masks(const std::filesystem::path& dir, const std::string& pattern) {
  const FrameSequence seq = load_frames(dir, pattern);
  const VideoMatrix V = to_matrix(seq);
  // read_pnm scales by maxval; 127/255 is the 8-bit cut.
  return {V.data.array() > 127.0 / 255.0, V.n1, V.n2};
}

void write_masks(const std::filesystem::path& dir, const std::string& prefix, const MaskSequence& masks) {
  write_frames(dir, prefix, {masks.masks.cast<double>().matrix(), masks.n1, masks.n2});
}

}  // namespace dgm
