#pragma once

// Frame sequences, the video matrix, and the on-disk formats that carry them
// (binary PGM/PPM frames and "DGM1" matrix dumps).
//
// Pixel flattening is column-major over the n1 x n2 grid: pixel (r, c) of a
// frame (0-based) lands in row r + c * n1 of the video matrix. This is the
// native Eigen storage order, so to_matrix/from_matrix are plain copies.

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace dgm {

using Image = Eigen::MatrixXd;  // n1 x n2, intensities in [0, 1]

struct FrameSequence {
  std::vector<Image> frames;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;

  Eigen::Index m() const { return static_cast<Eigen::Index>(frames.size()); }
};

struct VideoMatrix {
  Eigen::MatrixXd data;  // n x m, column j = frame j
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;

  Eigen::Index n() const { return data.rows(); }
  Eigen::Index m() const { return data.cols(); }
};

struct Reshaped {
  FrameSequence seq;
  std::size_t clamped = 0;  // entries pulled back into [0, 1]
};

struct MotionFiltered {
  VideoMatrix video;
  std::vector<Eigen::Index> kept;  // 0-based original column indices
};

// Reads every regular file in `dir` whose name matches the shell glob
// `pattern`, in lexicographic order. Accepts binary PGM (P5) and PPM (P6),
// 8- or 16-bit. Colour frames are reduced to BT.601 luma.
FrameSequence load_frames(const std::filesystem::path& dir, const std::string& pattern = "*.pgm");

VideoMatrix to_matrix(const FrameSequence& seq);
Reshaped from_matrix(const Eigen::MatrixXd& M, Eigen::Index n1, Eigen::Index n2);

// Drops frame j when ||D_j - D_last_kept||_1 < threshold. Frame 0 is always kept.
MotionFiltered remove_motionless(const VideoMatrix& D, double threshold);

Image mean_background(const VideoMatrix& L);

// Single-image helpers.
Image read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Image& img);

// Writes frame j as <dir>/<prefix>NNNN.pgm (1-based, zero padded to 4).
// Returns the number of entries clamped into [0, 1].
std::size_t write_frames(const std::filesystem::path& dir, const std::string& prefix, const VideoMatrix& V);

// "DGM1" dump: magic, u64 n, m, n1, n2 (little endian), then n*m f64 LE column-major.
void write_dump(const std::filesystem::path& path, const VideoMatrix& V);
VideoMatrix read_dump(const std::filesystem::path& path);

}  // namespace dgm
