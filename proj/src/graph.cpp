#include "dgm/graph.hpp"

#include "dgm/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

namespace dgm {
namespace {

using Triplet = Eigen::Triplet<double, Eigen::Index>;

// Frames padded by `radius` pixels of edge replication on every side.
std::vector<Image> pad_frames(const VideoMatrix& D, int radius) {
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(D.m()));
  const Eigen::Index h = D.n1 + 2 * radius, w = D.n2 + 2 * radius;
  for (Eigen::Index t = 0; t < D.m(); ++t) {
    auto frame = D.data.col(t).reshaped(D.n1, D.n2);
    Image p(h, w);
    for (Eigen::Index c = 0; c < w; ++c) {
      const Eigen::Index sc = std::clamp<Eigen::Index>(c - radius, 0, D.n2 - 1);
      for (Eigen::Index r = 0; r < h; ++r) p(r, c) = frame(std::clamp<Eigen::Index>(r - radius, 0, D.n1 - 1), sc);
    }
    out.push_back(std::move(p));
  }
  return out;
}

double patch_distance_sq(const std::vector<Image>& padded, int radius, Eigen::Index ri, Eigen::Index ci,
                         Eigen::Index rj, Eigen::Index cj) {
  const int p = 2 * radius + 1;
  double acc = 0.0;
  for (const Image& f : padded) {
    // Padded coordinates: pixel (r, c) sits at (r + radius, c + radius); the
    // window's top-left is therefore (r, c).
    for (int b = 0; b < p; ++b)
      for (int a = 0; a < p; ++a) {
        const double d = f(ri + a, ci + b) - f(rj + a, cj + b);
        acc += d * d;
      }
  }
  return acc;
}

}  // namespace

SparseSymMatrix SparseSymMatrix::from_entries(Eigen::Index dim, const std::vector<Entry>& entries) {
  std::vector<Triplet> triplets;
  triplets.reserve(entries.size());
  for (const auto& e : entries) {
    require(e.i >= 0 && e.j >= 0 && e.i < dim && e.j < dim, "sparse entry index out of range");
    require(std::isfinite(e.value), "sparse entry is not finite");
    triplets.emplace_back(std::min(e.i, e.j), std::max(e.i, e.j), e.value);
  }
  SparseSymMatrix out(dim);
  out.upper_.setFromTriplets(triplets.begin(), triplets.end());
  out.upper_.prune(0.0, 0.0);
  out.upper_.makeCompressed();
  return out;
}

double SparseSymMatrix::coeff(Eigen::Index i, Eigen::Index j) const {
  return upper_.coeff(std::min(i, j), std::max(i, j));
}

Eigen::VectorXd SparseSymMatrix::row_sums() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(dim());
  for (Eigen::Index col = 0; col < upper_.outerSize(); ++col)
    for (Storage::InnerIterator it(upper_, col); it; ++it) {
      d(it.row()) += it.value();
      if (it.row() != it.col()) d(it.col()) += it.value();
    }
  return d;
}

Eigen::MatrixXd SparseSymMatrix::multiply(const Eigen::MatrixXd& X) const {
  require(X.rows() == dim(), "sparse product dimension mismatch");
  return upper_.selfadjointView<Eigen::Upper>() * X;
}

Eigen::MatrixXd SparseSymMatrix::multiply_right(const Eigen::MatrixXd& X) const {
  require(X.cols() == dim(), "sparse product dimension mismatch");
  Eigen::MatrixXd Xt = X.transpose();
  Eigen::MatrixXd prod = upper_.selfadjointView<Eigen::Upper>() * Xt;
  return prod.transpose();
}

Eigen::MatrixXd SparseSymMatrix::to_dense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(dim(), dim());
  for (const auto& e : entries()) {
    dense(e.i, e.j) = e.value;
    dense(e.j, e.i) = e.value;
  }
  return dense;
}

std::vector<SparseSymMatrix::Entry> SparseSymMatrix::entries() const {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(nnz()));
  for (Eigen::Index col = 0; col < upper_.outerSize(); ++col)
    for (Storage::InnerIterator it(upper_, col); it; ++it) out.push_back({it.row(), it.col(), it.value()});
  return out;
}

void GraphConfig::validate() const {
  require(h_s > 0.0 && std::isfinite(h_s), "h_s must be positive");
  require(h_t > 0.0 && std::isfinite(h_t), "h_t must be positive");
  require(patch >= 1 && patch % 2 == 1, "patch size must be a positive odd integer");
  require(knn >= 1, "knn must be at least 1");
  require(presmooth_sigma >= 0.0, "presmooth sigma must be nonnegative");
}

Eigen::MatrixXd extract_patch(const VideoMatrix& D, Eigen::Index pixel, int p) {
  require(p >= 1 && p % 2 == 1, "patch size must be a positive odd integer");
  require(pixel >= 0 && pixel < D.n(), "pixel index out of range");
  if (p >= 2 * std::min(D.n1, D.n2)) fail(ErrorCode::InvalidArgument, "patch exceeds image");

  const int radius = p / 2;
  const Eigen::Index r0 = pixel % D.n1, c0 = pixel / D.n1;
  Eigen::MatrixXd patch(static_cast<Eigen::Index>(p) * p, D.m());
  Eigen::Index row = 0;
  for (int b = -radius; b <= radius; ++b) {
    const Eigen::Index c = std::clamp<Eigen::Index>(c0 + b, 0, D.n2 - 1);
    for (int a = -radius; a <= radius; ++a, ++row) {
      const Eigen::Index r = std::clamp<Eigen::Index>(r0 + a, 0, D.n1 - 1);
      patch.row(row) = D.data.row(r + c * D.n1);
    }
  }
  return patch;
}

std::vector<std::pair<int, int>> spatial_stencil(int k) {
  require(k >= 1, "knn must be at least 1");
  const int reach = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k)))) + 1;
  std::vector<std::tuple<int, int, int>> cand;
  for (int dr = -reach; dr <= reach; ++dr)
    for (int dc = -reach; dc <= reach; ++dc)
      if (dr != 0 || dc != 0) cand.emplace_back(dr * dr + dc * dc, dr, dc);
  std::sort(cand.begin(), cand.end());
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < k; ++i) out.emplace_back(std::get<1>(cand[i]), std::get<2>(cand[i]));
  return out;
}

SparseSymMatrix temporal_adjacency(const VideoMatrix& D, const GraphConfig& cfg) {
  cfg.validate();
  require(D.m() >= 2, "temporal graph needs at least 2 frames");
  const Eigen::Index reach = (cfg.knn + 1) / 2;
  const double inv_h2 = 1.0 / (cfg.h_t * cfg.h_t);
  std::vector<SparseSymMatrix::Entry> entries;
  for (Eigen::Index i = 0; i < D.m(); ++i)
    for (Eigen::Index off = 1; off <= reach && i + off < D.m(); ++off) {
      const double d2 = (D.data.col(i) - D.data.col(i + off)).squaredNorm();
      entries.push_back({i, i + off, std::exp(-d2 * inv_h2)});
    }
  return SparseSymMatrix::from_entries(D.m(), entries);
}

SparseSymMatrix spatial_adjacency(const VideoMatrix& D, const GraphConfig& cfg) {
  cfg.validate();
  require(D.n1 >= cfg.patch && D.n2 >= cfg.patch, "image smaller than the patch size");

  const int radius = cfg.patch / 2;
  const auto padded =
      cfg.presmooth_sigma > 0.0 ? pad_frames(gaussian_smooth(D, cfg.presmooth_sigma), radius) : pad_frames(D, radius);
  const auto stencil = spatial_stencil(cfg.knn);

  // Union of every pixel's neighbour selection, as ordered pairs (lo, hi).
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
  edges.reserve(static_cast<std::size_t>(D.n()) * stencil.size());
  for (Eigen::Index c = 0; c < D.n2; ++c)
    for (Eigen::Index r = 0; r < D.n1; ++r) {
      const Eigen::Index i = r + c * D.n1;
      for (const auto& [dr, dc] : stencil) {
        const Eigen::Index rr = r + dr, cc = c + dc;
        if (rr < 0 || cc < 0 || rr >= D.n1 || cc >= D.n2) continue;
        const Eigen::Index j = rr + cc * D.n1;
        edges.emplace_back(std::min(i, j), std::max(i, j));
      }
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const double inv_h2 = 1.0 / (cfg.h_s * cfg.h_s);
  std::vector<SparseSymMatrix::Entry> entries;
  entries.reserve(edges.size());
  for (const auto& [i, j] : edges) {
    const double d2 = patch_distance_sq(padded, radius, i % D.n1, i / D.n1, j % D.n1, j / D.n1);
    entries.push_back({i, j, std::exp(-d2 * inv_h2)});
  }
  return SparseSymMatrix::from_entries(D.n(), entries);
}

SparseSymMatrix normalized_laplacian(const SparseSymMatrix& A) {
  const Eigen::VectorXd deg = A.row_sums();
  for (Eigen::Index i = 0; i < deg.size(); ++i)
    if (!(deg(i) > 0.0))
      fail(ErrorCode::Numeric, "graph node " + std::to_string(i) + " has zero degree; Laplacian undefined");
  const Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();

  std::vector<SparseSymMatrix::Entry> entries;
  entries.reserve(static_cast<std::size_t>(A.nnz() + A.dim()));
  for (Eigen::Index i = 0; i < A.dim(); ++i) entries.push_back({i, i, 1.0});
  for (const auto& e : A.entries()) {
    require(e.value >= 0.0, "adjacency weights must be nonnegative");
    entries.push_back({e.i, e.j, -e.value * inv_sqrt(e.i) * inv_sqrt(e.j)});
  }
  return SparseSymMatrix::from_entries(A.dim(), entries);
}

double laplacian_quadratic(const SparseSymMatrix& phi, const Eigen::MatrixXd& L, Side side) {
  if (side == Side::Left) {
    require(phi.dim() == L.rows(), "left Laplacian must be n x n");
    return L.cwiseProduct(phi.multiply(L)).sum();
  }
  require(phi.dim() == L.cols(), "right Laplacian must be m x m");
  return L.cwiseProduct(phi.multiply_right(L)).sum();
}

VideoMatrix gaussian_smooth(const VideoMatrix& D, double sigma) {
  require(sigma > 0.0, "smoothing sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  Eigen::VectorXd kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k) kernel(k + radius) = std::exp(-0.5 * k * k / (sigma * sigma));
  kernel /= kernel.sum();

  VideoMatrix out = D;
  Image tmp(D.n1, D.n2);
  for (Eigen::Index t = 0; t < D.m(); ++t) {
    auto src = D.data.col(t).reshaped(D.n1, D.n2);
    for (Eigen::Index c = 0; c < D.n2; ++c)
      for (Eigen::Index r = 0; r < D.n1; ++r) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel(k + radius) * src(std::clamp<Eigen::Index>(r + k, 0, D.n1 - 1), c);
        tmp(r, c) = acc;
      }
    auto dst = out.data.col(t).reshaped(D.n1, D.n2);
    for (Eigen::Index c = 0; c < D.n2; ++c)
      for (Eigen::Index r = 0; r < D.n1; ++r) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel(k + radius) * tmp(r, std::clamp<Eigen::Index>(c + k, 0, D.n2 - 1));
        dst(r, c) = acc;
      }
  }
  return out;
}

SpectrumBounds laplacian_spectrum_bounds(const SparseSymMatrix& phi, int iterations) {
  require(phi.dim() >= 1, "empty Laplacian");
  const Eigen::Index n = phi.dim();
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i) start(i) = 1.0 + 0.5 * std::sin(1.0 + 3.7 * static_cast<double>(i));
  start.normalize();

  auto power = [&](auto apply) {
    Eigen::VectorXd v = start;
    double rayleigh = 0.0;
    for (int it = 0; it < iterations; ++it) {
      Eigen::VectorXd w = apply(v);
      rayleigh = v.dot(w);
      const double norm = w.norm();
      if (norm == 0.0) break;
      v = w / norm;
    }
    return rayleigh;
  };

  const double lmax = power([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return phi.multiply(v); });
  const double shifted = power([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return 2.0 * v - phi.multiply(v); });
  return {2.0 - shifted, lmax};
}

void write_spsym(const std::filesystem::path& path, const SparseSymMatrix& A) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write Laplacian dump: " + path.string());
  out << "SPSYM " << A.dim() << ' ' << A.nnz() << '\n';
  char buf[64];
  for (const auto& e : A.entries()) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.value);
    out << (e.i + 1) << ' ' << (e.j + 1) << ' ' << buf << '\n';
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

SparseSymMatrix read_spsym(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open Laplacian dump: " + path.string());
  std::string tag;
  Eigen::Index dim = 0, nnz = 0;
  if (!(in >> tag >> dim >> nnz) || tag != "SPSYM" || dim < 0 || nnz < 0)
    fail(ErrorCode::Io, "bad SPSYM header in " + path.string());
  std::vector<SparseSymMatrix::Entry> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (Eigen::Index k = 0; k < nnz; ++k) {
    Eigen::Index i, j;
    double v;
    if (!(in >> i >> j >> v) || i < 1 || j < i || j > dim)
      fail(ErrorCode::Io, "bad SPSYM entry " + std::to_string(k + 1) + " in " + path.string());
    entries.push_back({i - 1, j - 1, v});
  }
  return SparseSymMatrix::from_entries(dim, entries);
}

}  // namespace dgm
