#include "doctest.h"
#include "oracles.hpp"
#include "scratch.hpp"

#include "dgm/error.hpp"
#include "dgm/metrics.hpp"
#include "dgm/solver.hpp"
#include "dgm/synth.hpp"

#include <cmath>
#include <random>

using namespace dgm;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index k = 0; k < M.size(); ++k) M.data()[k] = g(rng);
  return M;
}

// Normalized Laplacian of a random connected graph (a path plus random chords).
SparseSymMatrix random_laplacian(Eigen::Index dim, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<SparseSymMatrix::Entry> e;
  for (Eigen::Index i = 0; i + 1 < dim; ++i) e.push_back({i, i + 1, u(rng)});
  for (Eigen::Index k = 0; k < dim; ++k) {
    const auto i = static_cast<Eigen::Index>(rng() % dim), j = static_cast<Eigen::Index>(rng() % dim);
    if (i != j) e.push_back({i, j, u(rng)});
  }
  return normalized_laplacian(SparseSymMatrix::from_entries(dim, e));
}

SolverState random_state(Eigen::Index n, Eigen::Index m, std::mt19937& rng) {
  SolverState st;
  st.L = gaussian(n, m, rng);
  st.S = gaussian(n, m, rng);
  st.U = gaussian(n, m, rng);
  st.V = gaussian(n, m, rng);
  st.U_tilde = gaussian(n, m, rng);
  st.V_tilde = gaussian(n, m, rng);
  st.weights = WeightVector::uniform(std::min(n, m));
  return st;
}

// The smooth part of the L-subproblem whose gradient gradient_L returns.
double smooth_objective(const SolverState& st, const VideoMatrix& D, const Eigen::MatrixXd& phis,
                        const Eigen::MatrixXd& phit, const SolverConfig& cfg) {
  const Eigen::MatrixXd& L = st.L;
  return 0.5 * cfg.gamma1 * (L.transpose() * phis * L).trace() + 0.5 * cfg.gamma2 * (L * phit * L.transpose()).trace() +
         0.5 * cfg.rho1 * (L - st.U - st.U_tilde).squaredNorm() +
         0.5 * cfg.rho2 * (L - D.data + st.S - st.V - st.V_tilde).squaredNorm();
}

struct Problem {
  SynthVideo video;
  SparseSymMatrix phi_s, phi_t;
};

Problem make_problem(const SynthSpec& spec) {
  Problem p{generate(spec), {}, {}};
  p.phi_s = normalized_laplacian(spatial_adjacency(p.video.D, GraphConfig{}));
  p.phi_t = normalized_laplacian(temporal_adjacency(p.video.D, GraphConfig{}));
  return p;
}

}  // namespace

TEST_CASE("update mode names") {
  CHECK(parse_update_mode("paper") == UpdateMode::Paper);
  CHECK(parse_update_mode("consistent") == UpdateMode::Consistent);
  CHECK(std::string(to_string(UpdateMode::Consistent)) == "consistent");
  CHECK_THROWS_AS(parse_update_mode("fast"), Error);
}

TEST_CASE("SolverConfig defaults and validation") {
  const SolverConfig c = SolverConfig::defaults_for(1600, 12);
  CHECK(c.lambda1 == doctest::Approx(20.0));
  CHECK(c.step_size() == doctest::Approx(0.9 / 2.4));
  CHECK_NOTHROW(c.validate());
  SolverConfig bad = c;
  bad.tol = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.rho2 = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.dt = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("gradient_L") {
  std::mt19937 rng(1);
  const Eigen::Index n = 6, m = 4;
  const auto phis = random_laplacian(n, rng), phit = random_laplacian(m, rng);
  SUBCASE("vanishes when both penalty terms are satisfied and gamma = 0") {
    SolverState st = random_state(n, m, rng);
    VideoMatrix D{gaussian(n, m, rng), 2, 3};
    st.U = st.L - st.U_tilde;
    st.V = st.L - D.data + st.S - st.V_tilde;
    SolverConfig cfg;
    cfg.gamma1 = cfg.gamma2 = 0.0;
    CHECK(gradient_L(st, D, phis, phit, cfg).norm() < 1e-13);
  }
  SUBCASE("all-zero state with only rho2 gives -D") {
    SolverState st = SolverState::initial({Eigen::MatrixXd::Zero(n, m), 2, 3});
    VideoMatrix D{gaussian(n, m, rng), 2, 3};
    SolverConfig cfg;
    cfg.gamma1 = cfg.gamma2 = cfg.rho1 = 0.0;
    cfg.rho2 = 1.0;
    CHECK(gradient_L(st, D, phis, phit, cfg) == -D.data);
  }
  SUBCASE("central finite differences") {
    const SolverState st = random_state(n, m, rng);
    VideoMatrix D{gaussian(n, m, rng), 2, 3};
    SolverConfig cfg;
    cfg.gamma1 = 0.7;
    cfg.gamma2 = 0.4;
    cfg.rho1 = 1.3;
    cfg.rho2 = 0.8;
    const Eigen::MatrixXd g = gradient_L(st, D, phis, phit, cfg);
    const Eigen::MatrixXd ds = phis.to_dense(), dt = phit.to_dense();
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      SolverState plus = st, minus = st;
      plus.L.data()[k] += h;
      minus.L.data()[k] -= h;
      const double fd = (smooth_objective(plus, D, ds, dt, cfg) - smooth_objective(minus, D, ds, dt, cfg)) / (2 * h);
      CHECK(g.data()[k] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("update_L") {
  std::mt19937 rng(2);
  const Eigen::Index n = 8, m = 5;
  const auto phis = random_laplacian(n, rng), phit = random_laplacian(m, rng);
  VideoMatrix D{gaussian(n, m, rng), 4, 2};
  SUBCASE("T_in = 0 leaves L unchanged") {
    const SolverState st = random_state(n, m, rng);
    SolverConfig cfg;
    cfg.t_in = 0;
    CHECK(update_L(st, D, phis, phit, cfg) == st.L);
  }
  SUBCASE("zero gradient is a fixed point") {
    SolverState st = random_state(n, m, rng);
    SolverConfig cfg;
    cfg.gamma1 = cfg.gamma2 = 0.0;
    st.U = st.L - st.U_tilde;
    st.V = st.L - D.data + st.S - st.V_tilde;
    CHECK((update_L(st, D, phis, phit, cfg) - st.L).norm() < 1e-13);
  }
  SUBCASE("penalty-only objective converges linearly to its closed-form minimizer") {
    const SolverState st = random_state(n, m, rng);
    SolverConfig cfg;
    cfg.gamma1 = cfg.gamma2 = 0.0;
    cfg.rho1 = 1.0;
    cfg.rho2 = 2.0;
    const Eigen::MatrixXd target =
        (cfg.rho1 * (st.U + st.U_tilde) + cfg.rho2 * (D.data - st.S + st.V + st.V_tilde)) / (cfg.rho1 + cfg.rho2);
    double prev = (st.L - target).norm();
    SolverState work = st;
    for (int round = 0; round < 10; ++round) {
      cfg.t_in = 1;
      work.L = update_L(work, D, phis, phit, cfg);
      const double err = (work.L - target).norm();
      // contraction factor |1 - dt (rho1 + rho2)| = |1 - 0.9 * 3 / 3| = 0.1
      CHECK(err <= 0.1 * prev + 1e-14);
      prev = err;
    }
    CHECK(prev < 1e-8);
  }
  SUBCASE("default step never increases the smooth objective") {
    SolverConfig cfg;
    cfg.gamma1 = 0.5;
    cfg.gamma2 = 0.3;
    cfg.t_in = 1;
    SolverState st = random_state(n, m, rng);
    const Eigen::MatrixXd ds = phis.to_dense(), dt = phit.to_dense();
    for (int step = 0; step < 20; ++step) {
      const double before = smooth_objective(st, D, ds, dt, cfg);
      st.L = update_L(st, D, phis, phit, cfg);
      CHECK(smooth_objective(st, D, ds, dt, cfg) <= before + 1e-12);
    }
  }
  SUBCASE("a huge step diverges with a clear error") {
    SolverConfig cfg;
    cfg.dt = 1e200;
    cfg.t_in = 5;
    CHECK_THROWS_WITH_AS(update_L(random_state(n, m, rng), D, phis, phit, cfg), doctest::Contains("divergent L-update"),
                         Error);
  }
}

TEST_CASE("update_S") {
  std::mt19937 rng(3);
  VideoMatrix D{gaussian(6, 3, rng), 2, 3};
  SolverState st = random_state(6, 3, rng);
  SolverConfig cfg;
  SUBCASE("L = D gives S = 0") {
    st.L = D.data;
    CHECK(update_S(st, D, cfg).isZero(0.0));
  }
  SUBCASE("lambda2 = 0 in paper mode gives D - L") {
    cfg.lambda2 = 0.0;
    CHECK(update_S(st, D, cfg) == D.data - st.L);
  }
  SUBCASE("paper mode is the prox of lambda2 |S| + 1/2 (D - L - S)^2") {
    cfg.lambda2 = 0.35;
    const Eigen::MatrixXd S = update_S(st, D, cfg);
    const Eigen::MatrixXd t = D.data - st.L;
    for (Eigen::Index k = 0; k < S.size(); ++k)
      CHECK(S.data()[k] == doctest::Approx(oracle::l1_prox(t.data()[k], 0.35)).epsilon(1e-9));
  }
  SUBCASE("consistent mode is the prox of the full augmented Lagrangian") {
    cfg.update_mode = UpdateMode::Consistent;
    cfg.lambda2 = 0.35;
    cfg.rho2 = 2.5;
    const Eigen::MatrixXd S = update_S(st, D, cfg);
    const Eigen::MatrixXd t = D.data - st.L + st.V + st.V_tilde;
    for (Eigen::Index k = 0; k < S.size(); ++k) {
      const double expect = oracle::l1_prox(t.data()[k], cfg.lambda2, 1.0 / cfg.rho2);
      CHECK(S.data()[k] == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("update_U") {
  std::mt19937 rng(4);
  SolverConfig cfg;
  SUBCASE("lambda1 = 0 gives L - U~") {
    SolverState st = random_state(5, 4, rng);
    cfg.lambda1 = 0.0;
    CHECK((update_U(st, cfg, 3.0).U - (st.L - st.U_tilde)).norm() < 1e-12);
  }
  SUBCASE("rank-1 2uv^T with w1 = 0.5 and lambda1/rho1 = 1 gives 1.5uv^T") {
    const Eigen::VectorXd u = gaussian(5, 1, rng).col(0).normalized(), v = gaussian(4, 1, rng).col(0).normalized();
    SolverState st = random_state(5, 4, rng);
    st.L = 2.0 * u * v.transpose();
    st.U_tilde.setZero();
    st.weights = {Eigen::Vector4d(0.5, 1, 1, 1), 1.0};
    cfg.lambda1 = 2.0;
    cfg.rho1 = 2.0;
    CHECK((update_U(st, cfg, 3.0).U - 1.5 * u * v.transpose()).norm() < 1e-12);
  }
  SUBCASE("weights are refreshed from the singular values of L - U~") {
    SolverState st = random_state(6, 3, rng);
    const double sigma = 2.5;
    const UUpdate r = update_U(st, cfg, sigma);
    const Eigen::VectorXd s = oracle::singular_values(st.L - st.U_tilde);
    REQUIRE(r.weights.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(r.weights.w(i) == doctest::Approx(std::exp(-s(i) * s(i) / (sigma * sigma))));
    CHECK(r.weights.sigma_scale == sigma);
    for (int i = 1; i < 3; ++i) CHECK(r.weights.w(i) >= r.weights.w(i - 1));
  }
}

TEST_CASE("update_V") {
  std::mt19937 rng(5);
  VideoMatrix D{gaussian(4, 3, rng), 2, 2};
  SolverState st = random_state(4, 3, rng);
  SolverConfig cfg;
  SUBCASE("L + S = D and V~ = 0 gives 0") {
    st.S = D.data - st.L;
    st.V_tilde.setZero();
    CHECK(update_V(st, D, cfg).norm() < 1e-15);
  }
  SUBCASE("large rho2 approaches L + S - D - V~") {
    cfg.rho2 = 1e12;
    CHECK((update_V(st, D, cfg) - (st.L + st.S - D.data - st.V_tilde)).norm() < 1e-10);
  }
  SUBCASE("per-entry prox of |v| + rho2/2 (v - t)^2") {
    cfg.rho2 = 1.7;
    const Eigen::MatrixXd V = update_V(st, D, cfg);
    const Eigen::MatrixXd t = st.L + st.S - D.data - st.V_tilde;
    for (Eigen::Index k = 0; k < V.size(); ++k)
      CHECK(V.data()[k] == doctest::Approx(oracle::l1_prox(t.data()[k], 1.0, 1.0 / cfg.rho2)).epsilon(1e-9));
  }
}

TEST_CASE("update_multipliers") {
  std::mt19937 rng(6);
  VideoMatrix D{gaussian(4, 3, rng), 2, 2};
  SolverState st = random_state(4, 3, rng);
  SUBCASE("zero residuals leave multipliers unchanged") {
    st.U = st.L;
    st.V = st.L + st.S - D.data;
    const Multipliers mu = update_multipliers(st, D);
    CHECK(mu.U_tilde == st.U_tilde);
    CHECK((mu.V_tilde - st.V_tilde).norm() < 1e-15);
  }
  SUBCASE("accumulation of a constant residual") {
    st.U_tilde.setZero();
    const Eigen::MatrixXd R = st.U - st.L;
    Multipliers mu = update_multipliers(st, D);
    CHECK(mu.U_tilde == R);
    st.U_tilde = mu.U_tilde;
    mu = update_multipliers(st, D);
    CHECK((mu.U_tilde - 2.0 * R).norm() < 1e-14);
  }
}

TEST_CASE("converged") {
  std::mt19937 rng(7);
  const Eigen::MatrixXd L = gaussian(3, 3, rng), S = gaussian(3, 3, rng);
  CHECK(converged(L, S, L, S, 1e-12));
  CHECK_FALSE(converged(L, S, 1.5 * L, S, 0.1));
  CHECK_FALSE(converged(L, Eigen::MatrixXd::Zero(3, 3), L, Eigen::MatrixXd::Zero(3, 3), 0.5));
}

TEST_CASE("run: T_out = 0 returns the initialization") {
  SynthSpec spec = SynthSpec::benchmark();
  const Problem p = make_problem(spec);
  SolverConfig cfg = SolverConfig::defaults_for(p.video.D.n(), p.video.D.m());
  cfg.t_out = 0;
  const SeparationResult r = run(p.video.D, p.phi_s, p.phi_t, cfg);
  CHECK(r.iterations == 0);
  CHECK(r.history.empty());
  CHECK(r.L == p.video.D.data);
  CHECK(r.S.isZero(0.0));
}

TEST_CASE("run: static rank-1 background is kept whole") {
  SynthSpec spec = SynthSpec::benchmark();
  spec.bg_rank = 1;
  spec.object_h = spec.object_w = 0;
  spec.outlier_fraction = 0.0;
  const Problem p = make_problem(spec);
  SolverConfig cfg = SolverConfig::defaults_for(p.video.D.n(), p.video.D.m());
  cfg.lambda2 = 5.0;
  const SeparationResult r = run(p.video.D, p.phi_s, p.phi_t, cfg);
  CHECK((p.video.D.data - r.L).norm() / p.video.D.data.norm() < 1e-3);
  CHECK(r.S.norm() < 1e-3 * p.video.D.data.norm());
}

TEST_CASE("run: sparse moving object without outliers is detected") {
  SynthSpec spec = SynthSpec::benchmark();
  spec.object_h = spec.object_w = 9;  // 81 of 1600 pixels, about 5% support
  spec.trajectory = linear_trajectory({15, 2}, {0, 2}, spec.m);
  spec.outlier_fraction = 0.0;
  const Problem p = make_problem(spec);
  for (UpdateMode mode : {UpdateMode::Paper, UpdateMode::Consistent}) {
    CAPTURE(to_string(mode));
    SolverConfig cfg = SolverConfig::defaults_for(p.video.D.n(), p.video.D.m());
    cfg.update_mode = mode;
    const SeparationResult r = run(p.video.D, p.phi_s, p.phi_t, cfg);
    const auto det = detection_metrics(threshold_mask({r.S, spec.n1, spec.n2}, 0.1), p.video.masks);
    CHECK(det.f_measure > 0.9);
    CHECK(r.converged);
    CHECK(static_cast<int>(r.history.size()) == r.iterations);
    CHECK(r.iterations <= cfg.t_out);
    for (const auto& h : r.history)
      CHECK((std::isfinite(h.rel_dL) && std::isfinite(h.rel_dS) && std::isfinite(h.residual_UL) &&
             std::isfinite(h.residual_DLSV) && std::isfinite(h.objective)));
  }
}

TEST_CASE("run: without graph terms and with flat weights it behaves like RPCA") {
  SynthSpec spec = SynthSpec::benchmark();
  spec.bg_rank = 1;
  spec.object_h = spec.object_w = 0;
  spec.outlier_fraction = 0.0;
  SynthVideo v = generate(spec);
  // 2% support of magnitude >= 0.5, added on top of the exact rank-1 background
  std::mt19937 rng(8);
  Eigen::MatrixXd S0 = Eigen::MatrixXd::Zero(v.D.n(), v.D.m());
  const auto count = static_cast<Eigen::Index>(0.02 * static_cast<double>(S0.size()));
  for (Eigen::Index k = 0; k < count;) {
    const auto idx = static_cast<Eigen::Index>(rng() % S0.size());
    if (S0.data()[idx] != 0.0) continue;
    S0.data()[idx] = (rng() % 2 ? 1.0 : -1.0) * (0.5 + 0.001 * static_cast<double>(rng() % 100));
    ++k;
  }
  const VideoMatrix D{v.L_true.data + S0, v.D.n1, v.D.n2};
  SolverConfig cfg = SolverConfig::defaults_for(D.n(), D.m());
  cfg.gamma1 = cfg.gamma2 = 0.0;
  cfg.sigma_scale = 1e12;
  const auto phi_s = normalized_laplacian(spatial_adjacency(D, GraphConfig{}));
  const auto phi_t = normalized_laplacian(temporal_adjacency(D, GraphConfig{}));
  const SeparationResult r = run(D, phi_s, phi_t, cfg);
  CHECK((r.L - v.L_true.data).norm() / v.L_true.data.norm() < 1e-2);
}

TEST_CASE("run: windowed constraint residuals shrink on the benchmark") {
  const Problem p = make_problem(SynthSpec::benchmark());
  const SolverConfig cfg = SolverConfig::defaults_for(p.video.D.n(), p.video.D.m());
  const SeparationResult r = run(p.video.D, p.phi_s, p.phi_t, cfg);
  REQUIRE(r.history.size() >= 10);
  auto window = [&](std::size_t from, auto field) {
    double acc = 0.0;
    for (std::size_t k = from; k < from + 5; ++k) acc += r.history[k].*field;
    return acc / 5.0;
  };
  const std::size_t last = r.history.size() - 5;
  CHECK(window(last, &IterationRecord::residual_UL) <= window(0, &IterationRecord::residual_UL));
  CHECK(window(last, &IterationRecord::residual_DLSV) <= window(0, &IterationRecord::residual_DLSV));
}

TEST_CASE("run is deterministic and resumable") {
  const Problem p = make_problem(SynthSpec::benchmark());
  SolverConfig cfg = SolverConfig::defaults_for(p.video.D.n(), p.video.D.m());
  cfg.t_out = 30;
  const SeparationResult full = run(p.video.D, p.phi_s, p.phi_t, cfg);
  const SeparationResult again = run(p.video.D, p.phi_s, p.phi_t, cfg);
  CHECK(full.L == again.L);
  CHECK(full.S == again.S);

  ScratchDir dir;
  SolverConfig first = cfg;
  first.t_out = 12;
  const SeparationResult part = run(p.video.D, p.phi_s, p.phi_t, first);
  save_checkpoint(dir.path(), part.state, first, p.video.D);
  const SolverState loaded = load_checkpoint(dir.path(), cfg);  // t_out is not part of the hash
  CHECK(loaded.iter == 12);
  const SeparationResult resumed = run(p.video.D, p.phi_s, p.phi_t, cfg, loaded);
  CHECK(resumed.L == full.L);
  CHECK(resumed.S == full.S);
  REQUIRE(resumed.history.size() == 18);
  CHECK(resumed.history.front().iter == 13);

  SolverConfig other = cfg;
  other.lambda2 = 0.31;
  CHECK_THROWS_WITH_AS(load_checkpoint(dir.path(), other), doctest::Contains("different configuration"), Error);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing", cfg), Error);
}

TEST_CASE("config hash and JSON") {
  SolverConfig a;
  SolverConfig b = a;
  b.t_out = 999;
  CHECK(config_hash(a) == config_hash(b));
  b.dt = a.step_size();
  CHECK(config_hash(a) == config_hash(b));
  b.t_in = 7;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_json(a).find("\"update-mode\":\"paper\"") != std::string::npos);
}

TEST_CASE("history CSV") {
  ScratchDir dir;
  write_history_csv(dir / "h.csv", {{1, 0.5, 1.0, 2.0, 3.0, 4.5}, {2, 0.25, 0.125, 1.0, 1.5, 4.0}});
  CHECK(read_bytes(dir / "h.csv") ==
        "iter,rel_dL,rel_dS,residual_UL,residual_DLSV,objective\n1,0.5,1,2,3,4.5\n2,0.25,0.125,1,1.5,4\n");
}

TEST_CASE("run rejects mismatched Laplacians and non-finite input") {
  const Problem p = make_problem(SynthSpec::benchmark());
  const SolverConfig cfg = SolverConfig::defaults_for(p.video.D.n(), p.video.D.m());
  CHECK_THROWS_AS(run(p.video.D, p.phi_t, p.phi_t, cfg), Error);
  VideoMatrix bad = p.video.D;
  bad.data(0, 0) = std::nan("");
  CHECK_THROWS_AS(run(bad, p.phi_s, p.phi_t, cfg), Error);
}
