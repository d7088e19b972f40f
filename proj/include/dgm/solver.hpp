#pragma once

// ADMM for the dual-graph regularized low-rank + sparse split
//
//   min  ||V||_1 + lambda1 ||U||_{W,*} + lambda2 ||S||_1
//        + gamma1/2 tr(L^T Phi_s L) + gamma2/2 tr(L Phi_t L^T)
//   s.t. U = L,  D - L - S = V
//
// with scaled multipliers U~, V~ entering the augmented Lagrangian as
//   rho1/2 ||U - L + U~||^2 + rho2/2 ||D - L - S + V + V~||^2.
//
// Each outer iteration runs, in order: T_in gradient steps on L, the S
// update, the weighted-SVT U update (which also refreshes the singular value
// weights used by the *next* iteration), the V update, both multiplier
// ascents and the relative-change stopping test.

#include "dgm/graph.hpp"
#include "dgm/prox.hpp"
#include "dgm/video_io.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dgm {

enum class UpdateMode {
  Paper,       // S <- shrink(D - L, lambda2)
  Consistent,  // S <- shrink(D - L + V + V~, lambda2 / rho2)
};

const char* to_string(UpdateMode mode);
UpdateMode parse_update_mode(const std::string& s);

struct SolverConfig {
  double lambda1 = 1.0;
  double lambda2 = 0.3;
  double gamma1 = 0.1;
  double gamma2 = 0.1;
  double rho1 = 1.0;
  double rho2 = 1.0;
  std::optional<double> dt;           // default 0.9 / (2 gamma1 + 2 gamma2 + rho1 + rho2)
  std::optional<double> sigma_scale;  // default 2 * largest singular value of D
  int t_out = 200;
  int t_in = 5;
  double tol = 1e-4;
  UpdateMode update_mode = UpdateMode::Paper;

  // Defaults tuned on the synthetic benchmark for [0,1]-scaled video;
  // lambda1 = 0.5 sqrt(max(n, m)).
  static SolverConfig defaults_for(Eigen::Index n, Eigen::Index m);

  void validate() const;
  double step_size() const;  // dt or its default
};

struct SolverState {
  Eigen::MatrixXd L, S, U, V;
  Eigen::MatrixXd U_tilde, V_tilde;
  WeightVector weights;
  int iter = 0;

  // L = D, S = V = U~ = V~ = 0, U = L, unit weights.
  static SolverState initial(const VideoMatrix& D);
};

struct IterationRecord {
  int iter;
  double rel_dL;
  double rel_dS;
  double residual_UL;    // ||U - L||_F
  double residual_DLSV;  // ||D - L - S + V||_F, the residual the V~ ascent accumulates
  double objective;
};

struct SeparationResult {
  Eigen::MatrixXd L, S;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> history;
  SolverState state;
  double sigma_scale = 0.0;
};

// Model objective with the state's current weights (diagnostic only).
double model_objective(const SolverState& st, const VideoMatrix& D, const SparseSymMatrix& phi_s,
                       const SparseSymMatrix& phi_t, const SolverConfig& cfg);

Eigen::MatrixXd gradient_L(const SolverState& st, const VideoMatrix& D, const SparseSymMatrix& phi_s,
                           const SparseSymMatrix& phi_t, const SolverConfig& cfg);

// T_in steps of L <- L - dt * grad f(L).
Eigen::MatrixXd update_L(const SolverState& st, const VideoMatrix& D, const SparseSymMatrix& phi_s,
                         const SparseSymMatrix& phi_t, const SolverConfig& cfg);

Eigen::MatrixXd update_S(const SolverState& st, const VideoMatrix& D, const SolverConfig& cfg);

struct UUpdate {
  Eigen::MatrixXd U;
  WeightVector weights;  // for the next outer iteration
  Eigen::VectorXd singulars;
};
UUpdate update_U(const SolverState& st, const SolverConfig& cfg, double sigma_scale);

// shrink(L + S - D - V~, 1 / rho2)
Eigen::MatrixXd update_V(const SolverState& st, const VideoMatrix& D, const SolverConfig& cfg);

struct Multipliers {
  Eigen::MatrixXd U_tilde, V_tilde;
};
Multipliers update_multipliers(const SolverState& st, const VideoMatrix& D);

// Both relative Frobenius changes below tol. A zero previous iterate never
// counts as converged.
bool converged(const Eigen::MatrixXd& L_prev, const Eigen::MatrixXd& S_prev, const Eigen::MatrixXd& L,
               const Eigen::MatrixXd& S, double tol);

// 2 * sigma_1(D), the default weight scale. Scales near or below sigma_1
// make the reweighting strongly nonconvex and the iteration can cycle.
double default_sigma_scale(const VideoMatrix& D);

// Runs from SolverState::initial(D), or continues `resume` for the remaining
// t_out - resume.iter iterations.
SeparationResult run(const VideoMatrix& D, const SparseSymMatrix& phi_s, const SparseSymMatrix& phi_t,
                     const SolverConfig& cfg, std::optional<SolverState> resume = std::nullopt);

// Serialized config, and its FNV-1a hash (hex). t_out is excluded from the
// hash so a checkpoint can be resumed with a larger iteration budget.
std::string config_json(const SolverConfig& cfg);
std::string config_hash(const SolverConfig& cfg);

// DGM1 dumps of L, S, U, V, U~, V~ plus checkpoint.json {iter, weights, sigma_scale, config_hash}.
void save_checkpoint(const std::filesystem::path& dir, const SolverState& st, const SolverConfig& cfg,
                     const VideoMatrix& D);
SolverState load_checkpoint(const std::filesystem::path& dir, const SolverConfig& cfg);

void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history);

}  // namespace dgm
