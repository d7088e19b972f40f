#include "dgm/video_io.hpp"

#include "dgm/error.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fs = std::filesystem;

namespace dgm {
namespace {

constexpr std::array<char, 4> kDumpMagic = {'D', 'G', 'M', '1'};

// Reads one whitespace-delimited header token, skipping '#' comments.
bool next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c) && c != '#') {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  // The single whitespace byte after maxval has been consumed here.
  return !tok.empty();
}

long parse_positive(const std::string& tok, const fs::path& path, const char* what) {
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (tok.empty() || *end != '\0' || v <= 0)
    fail(ErrorCode::Io, "corrupt image header (" + std::string(what) + ") in " + path.string());
  return v;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), bytes.size());
  } else {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <typename T>
T get_le(std::istream& in, const fs::path& path) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) fail(ErrorCode::Io, "truncated matrix dump: " + path.string());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

Image read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open image: " + path.string());

  std::string magic, tw, th, tmax;
  if (!next_token(in, magic) || (magic != "P5" && magic != "P6"))
    fail(ErrorCode::Io, "unsupported or corrupt image (expected binary P5/P6): " + path.string());
  if (!next_token(in, tw) || !next_token(in, th) || !next_token(in, tmax))
    fail(ErrorCode::Io, "corrupt image header: " + path.string());

  const long width = parse_positive(tw, path, "width");
  const long height = parse_positive(th, path, "height");
  const long maxval = parse_positive(tmax, path, "maxval");
  if (maxval > 65535) fail(ErrorCode::Io, "maxval out of range in " + path.string());

  const int channels = magic == "P6" ? 3 : 1;
  const int bytes_per_sample = maxval < 256 ? 1 : 2;
  const std::size_t samples = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> raw(samples * bytes_per_sample);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    fail(ErrorCode::Io, "truncated pixel data in " + path.string());

  auto sample = [&](std::size_t k) -> double {
    double v = bytes_per_sample == 1 ? raw[k] : static_cast<double>((raw[2 * k] << 8) | raw[2 * k + 1]);
    return std::min(v, static_cast<double>(maxval));
  };

  Image img(height, width);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (long r = 0; r < height; ++r) {
    for (long c = 0; c < width; ++c) {
      const std::size_t px = static_cast<std::size_t>(r) * width + c;
      double v;
      if (channels == 1) {
        v = sample(px);
      } else {
        v = 0.299 * sample(3 * px) + 0.587 * sample(3 * px + 1) + 0.114 * sample(3 * px + 2);
      }
      img(r, c) = std::clamp(v * scale, 0.0, 1.0);
    }
  }
  return img;
}

void write_pgm(const fs::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write image: " + path.string());
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.cols()));
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c)
      row[c] = static_cast<unsigned char>(std::lround(std::clamp(img(r, c), 0.0, 1.0) * 255.0));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

FrameSequence load_frames(const fs::path& dir, const std::string& pattern) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::Io, "input directory not found: " + dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (::fnmatch(pattern.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() < 2)
    fail(ErrorCode::InsufficientData,
         "at least 2 frames required (found " + std::to_string(files.size()) + " matching '" + pattern + "' in " +
             dir.string() + ")");

  FrameSequence seq;
  for (const auto& f : files) {
    Image img = read_pnm(f);
    if (seq.frames.empty()) {
      seq.n1 = img.rows();
      seq.n2 = img.cols();
    } else if (img.rows() != seq.n1 || img.cols() != seq.n2) {
      fail(ErrorCode::InvalidArgument, "frame size mismatch in " + f.string() + ": expected " +
                                           std::to_string(seq.n2) + "x" + std::to_string(seq.n1) + ", got " +
                                           std::to_string(img.cols()) + "x" + std::to_string(img.rows()));
    }
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

VideoMatrix to_matrix(const FrameSequence& seq) {
  require(seq.m() >= 1, "empty frame sequence");
  VideoMatrix V;
  V.n1 = seq.n1;
  V.n2 = seq.n2;
  V.data.resize(seq.n1 * seq.n2, seq.m());
  for (Eigen::Index j = 0; j < seq.m(); ++j) {
    const Image& f = seq.frames[j];
    require(f.rows() == seq.n1 && f.cols() == seq.n2, "frame " + std::to_string(j) + " has inconsistent size");
    V.data.col(j) = f.reshaped();
  }
  return V;
}

Reshaped from_matrix(const Eigen::MatrixXd& M, Eigen::Index n1, Eigen::Index n2) {
  require(n1 > 0 && n2 > 0 && M.rows() == n1 * n2,
          "matrix has " + std::to_string(M.rows()) + " rows, expected n1*n2 = " + std::to_string(n1 * n2));
  Reshaped out;
  out.seq.n1 = n1;
  out.seq.n2 = n2;
  out.seq.frames.reserve(static_cast<std::size_t>(M.cols()));
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    Image f = M.col(j).reshaped(n1, n2);
    for (double& v : f.reshaped()) {
      if (v < 0.0 || v > 1.0) {
        v = std::clamp(v, 0.0, 1.0);
        ++out.clamped;
      }
    }
    out.seq.frames.push_back(std::move(f));
  }
  return out;
}

MotionFiltered remove_motionless(const VideoMatrix& D, double threshold) {
  require(D.m() >= 2, "remove_motionless needs at least 2 frames");
  require(threshold >= 0.0, "motion threshold must be nonnegative");

  MotionFiltered out;
  out.kept.push_back(0);
  for (Eigen::Index j = 1; j < D.m(); ++j) {
    const double change = (D.data.col(j) - D.data.col(out.kept.back())).lpNorm<1>();
    if (!(change < threshold)) out.kept.push_back(j);
  }
  if (out.kept.size() < 2)
    fail(ErrorCode::InsufficientData, "insufficient motion: only 1 frame survives threshold " + std::to_string(threshold));

  out.video.n1 = D.n1;
  out.video.n2 = D.n2;
  out.video.data.resize(D.n(), static_cast<Eigen::Index>(out.kept.size()));
  for (std::size_t k = 0; k < out.kept.size(); ++k) out.video.data.col(static_cast<Eigen::Index>(k)) = D.data.col(out.kept[k]);
  return out;
}

Image mean_background(const VideoMatrix& L) {
  require(L.m() >= 1 && L.n() == L.n1 * L.n2, "invalid video matrix");
  Eigen::VectorXd mean = L.data.rowwise().mean();
  return mean.reshaped(L.n1, L.n2);
}

std::size_t write_frames(const fs::path& dir, const std::string& prefix, const VideoMatrix& V) {
  fs::create_directories(dir);
  Reshaped r = from_matrix(V.data, V.n1, V.n2);
  for (std::size_t j = 0; j < r.seq.frames.size(); ++j) {
    char name[32];
    std::snprintf(name, sizeof(name), "%04zu.pgm", j + 1);
    write_pgm(dir / (prefix + name), r.seq.frames[j]);
  }
  return r.clamped;
}

void write_dump(const fs::path& path, const VideoMatrix& V) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write matrix dump: " + path.string());
  out.write(kDumpMagic.data(), kDumpMagic.size());
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(V.n()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(V.m()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(V.n1));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(V.n2));
  for (Eigen::Index k = 0; k < V.data.size(); ++k) put_le<double>(out, V.data.data()[k]);
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

VideoMatrix read_dump(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open matrix dump: " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kDumpMagic)
    fail(ErrorCode::Io, "not a DGM1 matrix dump: " + path.string());
  const auto n = get_le<std::uint64_t>(in, path);
  const auto m = get_le<std::uint64_t>(in, path);
  const auto n1 = get_le<std::uint64_t>(in, path);
  const auto n2 = get_le<std::uint64_t>(in, path);
  if (n != n1 * n2 || n > (1ull << 40) || m > (1ull << 32))
    fail(ErrorCode::Io, "inconsistent DGM1 header in " + path.string());

  VideoMatrix V;
  V.n1 = static_cast<Eigen::Index>(n1);
  V.n2 = static_cast<Eigen::Index>(n2);
  V.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index k = 0; k < V.data.size(); ++k) V.data.data()[k] = get_le<double>(in, path);
  return V;
}

}  // namespace dgm
