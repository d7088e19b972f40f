#include "dgm/solver.hpp"

#include "dgm/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dgm {
namespace {

double relative_change(const Eigen::MatrixXd& next, const Eigen::MatrixXd& prev) {
  const double delta = (next - prev).norm();
  const double base = prev.norm();
  if (base > 0.0) return delta / base;
  return delta > 0.0 ? 1.0 : 0.0;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json config_to_json(const SolverConfig& cfg) {
  json j;
  j["lambda1"] = cfg.lambda1;
  j["lambda2"] = cfg.lambda2;
  j["gamma1"] = cfg.gamma1;
  j["gamma2"] = cfg.gamma2;
  j["rho1"] = cfg.rho1;
  j["rho2"] = cfg.rho2;
  j["dt"] = cfg.step_size();  // resolved, so an explicit default hashes like an implicit one
  j["sigma-scale"] = cfg.sigma_scale ? json(*cfg.sigma_scale) : json(nullptr);
  j["tout"] = cfg.t_out;
  j["tin"] = cfg.t_in;
  j["tol"] = cfg.tol;
  j["update-mode"] = to_string(cfg.update_mode);
  return j;
}

VideoMatrix as_video(const Eigen::MatrixXd& M, const VideoMatrix& like) { return {M, like.n1, like.n2}; }

}  // namespace

const char* to_string(UpdateMode mode) { return mode == UpdateMode::Paper ? "paper" : "consistent"; }

UpdateMode parse_update_mode(const std::string& s) {
  if (s == "paper") return UpdateMode::Paper;
  if (s == "consistent") return UpdateMode::Consistent;
  fail(ErrorCode::InvalidArgument, "unknown update mode '" + s + "' (expected paper|consistent)");
}

SolverConfig SolverConfig::defaults_for(Eigen::Index n, Eigen::Index m) {
  SolverConfig cfg;
  cfg.lambda1 = 0.5 * std::sqrt(static_cast<double>(std::max(n, m)));
  return cfg;
}

void SolverConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  require(positive(lambda1), "lambda1 must be positive");
  require(lambda2 >= 0.0 && std::isfinite(lambda2), "lambda2 must be nonnegative");
  require(gamma1 >= 0.0 && gamma2 >= 0.0, "gamma1 and gamma2 must be nonnegative");
  require(positive(rho1) && positive(rho2), "rho1 and rho2 must be positive");
  require(!dt || positive(*dt), "dt must be positive");
  require(!sigma_scale || positive(*sigma_scale), "sigma scale must be positive");
  require(t_out >= 0 && t_in >= 0, "iteration counts must be nonnegative");
  require(tol > 0.0 && tol < 1.0, "tol must lie in (0, 1)");
}

double SolverConfig::step_size() const {
  return dt.value_or(0.9 / (2.0 * gamma1 + 2.0 * gamma2 + rho1 + rho2));
}

SolverState SolverState::initial(const VideoMatrix& D) {
  SolverState st;
  st.L = D.data;
  st.S = Eigen::MatrixXd::Zero(D.n(), D.m());
  st.U = st.L;
  st.V = st.S;
  st.U_tilde = st.S;
  st.V_tilde = st.S;
  st.weights = WeightVector::uniform(std::min(D.n(), D.m()));
  return st;
}

double model_objective(const SolverState& st, const VideoMatrix& D, const SparseSymMatrix& phi_s,
                       const SparseSymMatrix& phi_t, const SolverConfig& cfg) {
  const double fidelity = (D.data - st.L - st.S).lpNorm<1>();
  const double wnn = weighted_nuclear_norm(st.L, st.weights);
  double graph = 0.0;
  if (cfg.gamma1 != 0.0) graph += 0.5 * cfg.gamma1 * laplacian_quadratic(phi_s, st.L, Side::Left);
  if (cfg.gamma2 != 0.0) graph += 0.5 * cfg.gamma2 * laplacian_quadratic(phi_t, st.L, Side::Right);
  return fidelity + cfg.lambda1 * wnn + cfg.lambda2 * st.S.lpNorm<1>() + graph;
}

Eigen::MatrixXd gradient_L(const SolverState& st, const VideoMatrix& D, const SparseSymMatrix& phi_s,
                           const SparseSymMatrix& phi_t, const SolverConfig& cfg) {
  Eigen::MatrixXd g = cfg.rho1 * (st.L - st.U - st.U_tilde) + cfg.rho2 * (st.L - D.data + st.S - st.V - st.V_tilde);
  if (cfg.gamma1 != 0.0) g.noalias() += cfg.gamma1 * phi_s.multiply(st.L);
  if (cfg.gamma2 != 0.0) g.noalias() += cfg.gamma2 * phi_t.multiply_right(st.L);
  return g;
}

Eigen::MatrixXd update_L(const SolverState& st, const VideoMatrix& D, const SparseSymMatrix& phi_s,
                         const SparseSymMatrix& phi_t, const SolverConfig& cfg) {
  const double dt = cfg.step_size();
  require(dt > 0.0, "dt must be positive");
  SolverState work = st;
  for (int k = 0; k < cfg.t_in; ++k) {
    work.L -= dt * gradient_L(work, D, phi_s, phi_t, cfg);
    if (!work.L.allFinite()) fail(ErrorCode::Numeric, "divergent L-update, reduce dt");
  }
  return std::move(work.L);
}

Eigen::MatrixXd update_S(const SolverState& st, const VideoMatrix& D, const SolverConfig& cfg) {
  if (cfg.update_mode == UpdateMode::Paper) return shrink(D.data - st.L, cfg.lambda2);
  return shrink(D.data - st.L + st.V + st.V_tilde, cfg.lambda2 / cfg.rho2);
}

UUpdate update_U(const SolverState& st, const SolverConfig& cfg, double sigma_scale) {
  SvtResult svt = weighted_svt(st.L - st.U_tilde, st.weights, cfg.lambda1 / cfg.rho1);
  UUpdate out;
  out.U = std::move(svt.value);
  out.singulars = std::move(svt.factors.singulars);
  out.weights = compute_weights(out.singulars, sigma_scale);
  // Keep the vector full length when L^ has fewer singular values than the
  // rank budget (cannot happen for a thin SVD, but resumed states may differ).
  if (out.weights.size() < st.weights.size()) {
    Eigen::VectorXd w = Eigen::VectorXd::Ones(st.weights.size());
    w.head(out.weights.size()) = out.weights.w;
    out.weights.w = std::move(w);
  }
  return out;
}

Eigen::MatrixXd update_V(const SolverState& st, const VideoMatrix& D, const SolverConfig& cfg) {
  return shrink(st.L + st.S - D.data - st.V_tilde, 1.0 / cfg.rho2);
}

Multipliers update_multipliers(const SolverState& st, const VideoMatrix& D) {
  return {st.U_tilde + (st.U - st.L), st.V_tilde + (D.data - st.L - st.S + st.V)};
}

bool converged(const Eigen::MatrixXd& L_prev, const Eigen::MatrixXd& S_prev, const Eigen::MatrixXd& L,
               const Eigen::MatrixXd& S, double tol) {
  const double nl = L_prev.norm(), ns = S_prev.norm();
  if (!(nl > 0.0) || !(ns > 0.0)) return false;
  return (L - L_prev).norm() / nl < tol && (S - S_prev).norm() / ns < tol;
}

double default_sigma_scale(const VideoMatrix& D) {
  const Eigen::VectorXd s = thin_svd(D.data).singulars;
  require(s.size() > 0, "empty video matrix");
  if (!(s(0) > 0.0)) fail(ErrorCode::Numeric, "video matrix is zero; pass an explicit sigma scale");
  return 2.0 * s(0);
}

SeparationResult run(const VideoMatrix& D, const SparseSymMatrix& phi_s, const SparseSymMatrix& phi_t,
                     const SolverConfig& cfg, std::optional<SolverState> resume) {
  cfg.validate();
  require(D.n() >= 1 && D.m() >= 1, "empty video matrix");
  require(phi_s.dim() == D.n(), "spatial Laplacian must be n x n");
  require(phi_t.dim() == D.m(), "temporal Laplacian must be m x m");
  if (!D.data.allFinite()) fail(ErrorCode::Numeric, "input video contains non-finite entries");

  const double sigma = cfg.sigma_scale ? *cfg.sigma_scale : default_sigma_scale(D);

  SeparationResult res;
  res.sigma_scale = sigma;
  SolverState st = resume ? std::move(*resume) : SolverState::initial(D);
  if (resume) {
    require(st.L.rows() == D.n() && st.L.cols() == D.m(), "checkpoint does not match the video dimensions");
  }

  while (st.iter < cfg.t_out) {
    const Eigen::MatrixXd L_prev = st.L;
    const Eigen::MatrixXd S_prev = st.S;
    try {
      st.L = update_L(st, D, phi_s, phi_t, cfg);
      st.S = update_S(st, D, cfg);
      UUpdate u = update_U(st, cfg, sigma);
      st.U = std::move(u.U);
      st.weights = std::move(u.weights);
      st.V = update_V(st, D, cfg);
      Multipliers mult = update_multipliers(st, D);
      st.U_tilde = std::move(mult.U_tilde);
      st.V_tilde = std::move(mult.V_tilde);
    } catch (const Error& e) {
      fail(e.code(), "iteration " + std::to_string(st.iter + 1) + ": " + e.what());
    }
    ++st.iter;

    IterationRecord rec{st.iter,
                        relative_change(st.L, L_prev),
                        relative_change(st.S, S_prev),
                        (st.U - st.L).norm(),
                        (D.data - st.L - st.S + st.V).norm(),
                        model_objective(st, D, phi_s, phi_t, cfg)};
    const bool finite = std::isfinite(rec.rel_dL) && std::isfinite(rec.rel_dS) && std::isfinite(rec.residual_UL) &&
                        std::isfinite(rec.residual_DLSV) && std::isfinite(rec.objective);
    if (!finite || !st.U_tilde.allFinite() || !st.V_tilde.allFinite())
      fail(ErrorCode::Numeric, "iteration " + std::to_string(st.iter) + ": solver state diverged (non-finite values)");
    res.history.push_back(rec);

    if (converged(L_prev, S_prev, st.L, st.S, cfg.tol)) {
      res.converged = true;
      break;
    }
  }

  res.L = st.L;
  res.S = st.S;
  res.iterations = static_cast<int>(res.history.size());
  res.state = std::move(st);
  return res;
}

std::string config_json(const SolverConfig& cfg) { return config_to_json(cfg).dump(); }

std::string config_hash(const SolverConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("tout");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

void save_checkpoint(const fs::path& dir, const SolverState& st, const SolverConfig& cfg, const VideoMatrix& D) {
  fs::create_directories(dir);
  write_dump(dir / "L.dgm", as_video(st.L, D));
  write_dump(dir / "S.dgm", as_video(st.S, D));
  write_dump(dir / "U.dgm", as_video(st.U, D));
  write_dump(dir / "V.dgm", as_video(st.V, D));
  write_dump(dir / "U_tilde.dgm", as_video(st.U_tilde, D));
  write_dump(dir / "V_tilde.dgm", as_video(st.V_tilde, D));

  json meta;
  meta["iter"] = st.iter;
  meta["weights"] = std::vector<double>(st.weights.w.begin(), st.weights.w.end());
  meta["sigma_scale"] = std::isfinite(st.weights.sigma_scale) ? json(st.weights.sigma_scale) : json(nullptr);
  meta["config_hash"] = config_hash(cfg);
  std::ofstream out(dir / "checkpoint.json");
  if (!out) fail(ErrorCode::Io, "cannot write checkpoint metadata in " + dir.string());
  out << meta.dump(2) << '\n';
}

SolverState load_checkpoint(const fs::path& dir, const SolverConfig& cfg) {
  std::ifstream in(dir / "checkpoint.json");
  if (!in) fail(ErrorCode::Io, "no checkpoint.json in " + dir.string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    fail(ErrorCode::Io, "corrupt checkpoint.json: " + std::string(e.what()));
  }
  if (meta.value("config_hash", std::string()) != config_hash(cfg))
    fail(ErrorCode::InvalidArgument, "checkpoint in " + dir.string() + " was written with a different configuration");

  SolverState st;
  st.L = read_dump(dir / "L.dgm").data;
  st.S = read_dump(dir / "S.dgm").data;
  st.U = read_dump(dir / "U.dgm").data;
  st.V = read_dump(dir / "V.dgm").data;
  st.U_tilde = read_dump(dir / "U_tilde.dgm").data;
  st.V_tilde = read_dump(dir / "V_tilde.dgm").data;
  const auto w = meta.at("weights").get<std::vector<double>>();
  st.weights.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  st.weights.sigma_scale =
      meta["sigma_scale"].is_null() ? std::numeric_limits<double>::infinity() : meta["sigma_scale"].get<double>();
  st.iter = meta.at("iter").get<int>();
  return st;
}

void write_history_csv(const fs::path& path, const std::vector<IterationRecord>& history) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write history: " + path.string());
  out << "iter,rel_dL,rel_dS,residual_UL,residual_DLSV,objective\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.iter, r.rel_dL, r.rel_dS, r.residual_UL,
                  r.residual_DLSV, r.objective);
    out << buf;
  }
}

}  // namespace dgm
