#pragma once

// Spatial and temporal similarity graphs over a video matrix and their
// symmetrically normalized Laplacians  Phi = I - W^{-1/2} A W^{-1/2}.

#include "dgm/video_io.hpp"

#include <Eigen/Sparse>

#include <cstddef>
#include <filesystem>
#include <vector>

namespace dgm {

// Symmetric sparse matrix holding only its upper triangle (diagonal included)
// in compressed-column form. Stored entries are finite and nonzero.
class SparseSymMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::ColMajor, Eigen::Index>;

  SparseSymMatrix() = default;
  explicit SparseSymMatrix(Eigen::Index dim) : upper_(dim, dim) {}

  struct Entry {
    Eigen::Index i, j;
    double value;
  };
  // Entries may be given in either triangle; (i, j) and (j, i) name the same
  // slot. Duplicates are summed, zeros are dropped.
  static SparseSymMatrix from_entries(Eigen::Index dim, const std::vector<Entry>& entries);

  Eigen::Index dim() const { return upper_.rows(); }
  Eigen::Index nnz() const { return upper_.nonZeros(); }
  const Storage& upper() const { return upper_; }

  double coeff(Eigen::Index i, Eigen::Index j) const;
  Eigen::VectorXd row_sums() const;

  // this * X and X * this.
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd multiply_right(const Eigen::MatrixXd& X) const;

  Eigen::MatrixXd to_dense() const;
  std::vector<Entry> entries() const;  // upper triangle, column-major order

 private:
  Storage upper_;
};

struct GraphConfig {
  double h_s = 1.0;
  double h_t = 1.0;
  int patch = 3;  // odd side length p
  int knn = 4;
  double presmooth_sigma = 0.0;  // 0 disables Gaussian pre-smoothing

  void validate() const;
};

// p^2 x m block of the video around `pixel` (0-based flattened index). Rows
// follow the same column-major window order as pixels; positions outside the
// frame replicate the nearest edge.
Eigen::MatrixXd extract_patch(const VideoMatrix& D, Eigen::Index pixel, int p);

// Grid offsets (dr, dc) of the k location-nearest neighbours, ordered by
// distance with a fixed tie-break. k = 4 gives the 4-connected stencil,
// k = 8 the 8-connected one.
std::vector<std::pair<int, int>> spatial_stencil(int k);

// Frame offsets 1..ceil(k/2) on each side; k = 4 links frames at |i-j| <= 2.
SparseSymMatrix temporal_adjacency(const VideoMatrix& D, const GraphConfig& cfg);
SparseSymMatrix spatial_adjacency(const VideoMatrix& D, const GraphConfig& cfg);

SparseSymMatrix normalized_laplacian(const SparseSymMatrix& A);

enum class Side { Left, Right };

// tr(L^T Phi L) for Side::Left (Phi is n x n), tr(L Phi L^T) for Side::Right.
double laplacian_quadratic(const SparseSymMatrix& phi, const Eigen::MatrixXd& L, Side side);

// Separable Gaussian blur of each frame, edges replicated.
VideoMatrix gaussian_smooth(const VideoMatrix& D, double sigma);

struct SpectrumBounds {
  double min_eigenvalue;
  double max_eigenvalue;
};
// Power-iteration estimates; the minimum comes from the shifted operator 2I - Phi.
SpectrumBounds laplacian_spectrum_bounds(const SparseSymMatrix& phi, int iterations = 500);

// "SPSYM <dim> <nnz>" then one "i j value" line per upper-triangle entry,
// 1-based, 17 significant digits.
void write_spsym(const std::filesystem::path& path, const SparseSymMatrix& A);
SparseSymMatrix read_spsym(const std::filesystem::path& path);

}  // namespace dgm
