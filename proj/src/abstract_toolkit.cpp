#include "rpwg/abstract_toolkit.hpp"

#include "rpwg/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

namespace rpwg {

namespace {

Mat sym(const Mat& X) { return 0.5 * (X + X.transpose()); }

void require_symmetric(const Mat& X, const char* name) {
  double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
  if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw validation_error(std::string("abstract instance: ") + name +
                           " is not symmetric");
}

void require_psd(const Mat& X, const char* name, bool strict) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(X), Eigen::EigenvaluesOnly);
  double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
  double lo = es.eigenvalues().minCoeff();
  if (strict ? (lo <= 1e-12 * scale) : (lo < -1e-10 * scale))
    throw validation_error(std::string("abstract instance: ") + name +
                           (strict ? " is not positive definite"
                                   : " is not positive semidefinite"));
}

/// max_x (x'Bx)/(x'Gx) with B symmetric, G SPD.
double gev_max(const Mat& B, const Mat& G) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(sym(B), sym(G),
                                                   Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw numerical_error("abstract_toolkit: generalized eigensolve failed");
  return es.eigenvalues().maxCoeff();
}

Mat solve_spd(const Mat& G, const Mat& rhs, const char* what) {
  Eigen::LLT<Mat> llt(sym(G));
  if (llt.info() != Eigen::Success)
    throw numerical_error(std::string("abstract_toolkit: ") + what +
                          " factorization failed");
  return llt.solve(rhs);
}

}  // namespace

void AbstractInstance::validate() const {
  int n = dim(), m = dim_t();
  if (n < 1 || m < 1) throw validation_error("abstract instance: empty space");
  if (A.cols() != n || M.rows() != n || M.cols() != n)
    throw validation_error("abstract instance: first-space shape mismatch");
  if (At.cols() != m || Mt.rows() != m || Mt.cols() != m)
    throw validation_error("abstract instance: second-space shape mismatch");
  if (J.rows() != m || J.cols() != n || J1.rows() != m || J1.cols() != n)
    throw validation_error("abstract instance: forward map shape mismatch");
  if (Jt.rows() != n || Jt.cols() != m || Jt1.rows() != n || Jt1.cols() != m)
    throw validation_error("abstract instance: backward map shape mismatch");
  require_symmetric(A, "A");
  require_symmetric(At, "At");
  require_symmetric(M, "M");
  require_symmetric(Mt, "Mt");
  require_psd(A, "A", false);
  require_psd(At, "At", false);
  require_psd(M, "M", true);
  require_psd(Mt, "Mt", true);
}

double DeltaParts::max_delta() const {
  return std::max({map, map_t, pairing, forms});
}

DeltaParts measure_delta_parts(const AbstractInstance& inst) {
  DeltaParts p;
  const Mat H1 = inst.A + inst.M;
  const Mat H1t = inst.At + inst.Mt;

  {
    Mat D = inst.J - inst.J1;
    p.map = std::sqrt(std::max(0.0, gev_max(D.transpose() * inst.Mt * D, H1)));
  }
  {
    Mat D = inst.Jt - inst.Jt1;
    p.map_t = std::sqrt(std::max(0.0, gev_max(D.transpose() * inst.M * D, H1t)));
  }
  {
    // Pairing defect: sup |f' B u| over unit f, u in the mass norms.
    Mat B = inst.J.transpose() * inst.Mt - inst.M * inst.Jt;
    Mat MinvB = solve_spd(inst.M, B, "first-space mass");
    p.pairing = std::sqrt(std::max(0.0, gev_max(B.transpose() * MinvB, inst.Mt)));
  }
  {
    // Form defect against |f|_2 |u|_1: Gram of |.|_2 is (A+M) M^{-1} (A+M).
    Mat B = inst.J1.transpose() * inst.At - inst.A * inst.Jt1;
    Mat t = solve_spd(H1, B, "first-space H1 gram");
    Mat Ginv_B = solve_spd(H1, Mat(inst.M * t), "first-space H1 gram");
    p.forms = std::sqrt(std::max(0.0, gev_max(B.transpose() * Ginv_B, H1t)));
  }
  return p;
}

double measure_delta(const AbstractInstance& inst) {
  return measure_delta_parts(inst).max_delta();
}

double weighted_op_norm_dense(const Mat& D, const Mat& G_src, const Mat& G_dst) {
  return std::sqrt(std::max(0.0, gev_max(D.transpose() * G_dst * D, G_src)));
}

namespace {

Mat resolvent_matrix(const Mat& A, const Mat& M) {
  return solve_spd(A + M, M, "resolvent");
}

}  // namespace

std::vector<double> resolvent_spectrum(const Mat& A, const Mat& M, bool append_zero) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(sym(A), sym(M),
                                                   Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw numerical_error("resolvent_spectrum: generalized eigensolve failed");
  std::vector<double> out;
  out.reserve(es.eigenvalues().size() + 1);
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    out.push_back(1.0 / (1.0 + es.eigenvalues()[i]));
  if (append_zero) out.push_back(0.0);
  std::sort(out.begin(), out.end());
  return out;
}

TheoremCheck verify_thm_A1(const AbstractInstance& inst) {
  TheoremCheck c;
  Mat R = resolvent_matrix(inst.A, inst.M);
  Mat Rt = resolvent_matrix(inst.At, inst.Mt);
  Mat D = Rt * inst.J - inst.J * R;
  c.lhs = weighted_op_norm_dense(D, inst.M, inst.Mt);
  c.rhs = 4.0 * measure_delta(inst);
  c.pass = c.lhs <= c.rhs + 1e-10;
  return c;
}

ConstantsBundle measure_constants(const AbstractInstance& inst, double kappa,
                                  double kappa_t) {
  if (!(kappa > 0 && kappa < 1 && kappa_t > 0 && kappa_t < 1))
    throw validation_error("measure_constants: kappa values must lie in (0,1)");
  ConstantsBundle c;
  c.kappa = kappa;
  c.kappa_t = kappa_t;
  c.delta = measure_delta(inst);

  Mat R = resolvent_matrix(inst.A, inst.M);
  Mat Rt = resolvent_matrix(inst.At, inst.Mt);
  c.eta = weighted_op_norm_dense(Mat(Rt * inst.J - inst.J * R), inst.M, inst.Mt);
  c.eta_t = weighted_op_norm_dense(Mat(R * inst.Jt - inst.Jt * Rt), inst.Mt, inst.M);

  // Domination pairs: for a grid value t, the generalized eigenvalue
  // mu = gev_max(M, J'MtJ + tA) certifies |f|^2 <= mu |Jf|^2 + (mu t) a[f],
  // so the admissible pair in the bound's normalization is (mu, mu t).
  // Scan the grid and keep the pair minimizing this side's contribution.
  auto pick = [](const Mat& Msrc, const Mat& Aform, const Mat& Jmap,
                 const Mat& Mdst, double eta_val,
                 double kap) -> std::pair<double, double> {
    Mat base = Jmap.transpose() * Mdst * Jmap;
    std::vector<double> nus = {0.0};
    for (int i = 0; i <= 28; ++i) nus.push_back(std::pow(10.0, -6.0 + 0.25 * i));
    double best_cost = std::numeric_limits<double>::infinity();
    std::pair<double, double> best{0, 0};
    for (double t : nus) {
      Mat S = sym(Mat(base + t * Aform));
      Eigen::LLT<Mat> llt(S);
      if (llt.info() != Eigen::Success) continue;
      double mu;
      try {
        mu = gev_max(Msrc, S);
      } catch (const numerical_error&) {
        continue;
      }
      if (!(std::isfinite(mu) && mu > 0)) continue;
      double nu = mu * t;
      double cost = std::max(eta_val * std::sqrt(mu / kap), nu / (1 - kap));
      if (cost < best_cost) {
        best_cost = cost;
        best = {mu, nu};
      }
    }
    if (!std::isfinite(best_cost))
      throw numerical_error(
          "measure_constants: no admissible domination pair on the nu grid");
    return best;
  };
  std::tie(c.mu, c.nu) = pick(inst.M, inst.A, inst.J, inst.Mt, c.eta, kappa);
  std::tie(c.mu_t, c.nu_t) = pick(inst.Mt, inst.At, inst.Jt, inst.M, c.eta_t, kappa_t);
  return c;
}

TheoremCheck verify_thm_A2(const AbstractInstance& inst, const ConstantsBundle& c) {
  TheoremCheck out;
  auto sa = resolvent_spectrum(inst.A, inst.M, true);
  auto sb = resolvent_spectrum(inst.At, inst.Mt, true);
  out.lhs = hausdorff(sa, sb);
  out.rhs = std::max({c.eta * std::sqrt(c.mu / c.kappa), c.nu / (1 - c.kappa),
                      c.eta_t * std::sqrt(c.mu_t / c.kappa_t),
                      c.nu_t / (1 - c.kappa_t)});
  out.pass = out.lhs <= out.rhs + 1e-10;
  return out;
}

std::pair<double, double> quasi_unitary_constants(double delta) {
  if (!(delta >= 0))
    throw validation_error("quasi_unitary_constants: delta must be nonnegative");
  if (!(delta < 2.0 / 3.0))
    throw validation_error(
        "quasi_unitary_constants: closed form requires delta < 2/3");
  double den = 2.0 - 3.0 * delta;
  return {1.0 + 4.0 * delta / den, delta / den};
}

AbstractInstance random_instance(std::mt19937_64& rng, int dim, int dim_t,
                                 double spread) {
  if (dim < 1 || dim_t < dim)
    throw validation_error("random_instance: need 1 <= dim <= dim_t");
  std::normal_distribution<double> nd;
  auto gauss = [&](int r, int c) {
    Mat X(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) X(i, j) = nd(rng);
    return X;
  };
  auto psd = [&](int n, double scale) {
    Mat G = gauss(n, n);
    return Mat(scale / n * (G.transpose() * G));
  };
  auto spd_mass = [&](int n) {
    return Mat(Mat::Identity(n, n) + psd(n, 0.3));
  };

  const int extra = dim_t - dim;
  AbstractInstance inst;
  inst.A = psd(dim, 1.0);
  inst.M = spd_mass(dim);
  inst.At = Mat::Zero(dim_t, dim_t);
  inst.At.topLeftCorner(dim, dim) = inst.A;
  inst.Mt = Mat::Zero(dim_t, dim_t);
  inst.Mt.topLeftCorner(dim, dim) = inst.M;
  if (extra > 0) {
    inst.At.bottomRightCorner(extra, extra) = psd(extra, 1.0);
    inst.Mt.bottomRightCorner(extra, extra) = spd_mass(extra);
  }
  Mat E = Mat::Zero(dim_t, dim);
  E.topRows(dim) = Mat::Identity(dim, dim);
  inst.J = E;
  inst.J1 = E;
  inst.Jt = E.transpose();
  inst.Jt1 = E.transpose();

  if (spread > 0) {
    inst.J += spread * gauss(dim_t, dim);
    inst.J1 += spread * gauss(dim_t, dim);
    inst.Jt += spread * gauss(dim, dim_t);
    inst.Jt1 += spread * gauss(dim, dim_t);
    inst.At = sym(Mat(inst.At + psd(dim_t, spread)));
  }
  return inst;
}

namespace {

struct DrawResult {
  double a1_margin = std::numeric_limits<double>::infinity();
  double a2_margin = std::numeric_limits<double>::infinity();
  double hn_margin = std::numeric_limits<double>::infinity();
  double delta = 0;
  int violations = 0;
};

DrawResult run_draw(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim_dist(2, 12);
  std::uniform_int_distribution<int> extra_dist(0, 8);
  std::uniform_real_distribution<double> log_spread(-3.0, 0.5);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  int dim = dim_dist(rng);
  int dim_t = dim + extra_dist(rng);
  double spread = coin(rng) < 0.15 ? 0.0 : std::pow(10.0, log_spread(rng));
  AbstractInstance inst = random_instance(rng, dim, dim_t, spread);
  inst.validate();

  DrawResult r;
  r.delta = measure_delta(inst);
  TheoremCheck a1 = verify_thm_A1(inst);
  r.a1_margin = a1.rhs - a1.lhs;
  ConstantsBundle c = measure_constants(inst);
  TheoremCheck a2 = verify_thm_A2(inst, c);
  r.a2_margin = a2.rhs - a2.lhs;

  // Same-space comparison: perturb the form, keep the mass.
  {
    std::normal_distribution<double> nd;
    Mat G(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) G(i, j) = nd(rng);
    Mat At2 = sym(Mat(inst.A + spread / dim * (G.transpose() * G)));
    Mat R = solve_spd(inst.A + inst.M, inst.M, "resolvent");
    Mat R2 = solve_spd(At2 + inst.M, inst.M, "resolvent");
    double dist = hausdorff(resolvent_spectrum(inst.A, inst.M, false),
                            resolvent_spectrum(At2, inst.M, false));
    double norm = weighted_op_norm_dense(Mat(R - R2), inst.M, inst.M);
    r.hn_margin = norm - dist;
  }

  if (r.a1_margin < -1e-10) ++r.violations;
  if (r.a2_margin < -1e-10) ++r.violations;
  if (r.hn_margin < -1e-10) ++r.violations;
  return r;
}

}  // namespace

SuiteSummary run_property_suite(int draws, std::uint64_t seed) {
  if (draws < 1) throw validation_error("run_property_suite: need draws >= 1");
  SuiteSummary s;
  s.draws = draws;
  s.min_a1_margin = std::numeric_limits<double>::infinity();
  s.min_a2_margin = std::numeric_limits<double>::infinity();
  s.min_hn_margin = std::numeric_limits<double>::infinity();

  // Deterministic per-draw seeds, so the partition into threads does not
  // change the outcome.
  const unsigned n_threads =
      std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
  auto worker = [&](int begin, int end) {
    DrawResult acc;
    acc.violations = 0;
    double dmax = 0;
    for (int i = begin; i < end; ++i) {
      DrawResult r = run_draw(seed + 0x9e3779b97f4a7c15ULL * (i + 1));
      acc.a1_margin = std::min(acc.a1_margin, r.a1_margin);
      acc.a2_margin = std::min(acc.a2_margin, r.a2_margin);
      acc.hn_margin = std::min(acc.hn_margin, r.hn_margin);
      acc.violations += r.violations;
      dmax = std::max(dmax, r.delta);
    }
    acc.delta = dmax;
    return acc;
  };

  std::vector<std::future<DrawResult>> futures;
  int chunk = (draws + static_cast<int>(n_threads) - 1) / static_cast<int>(n_threads);
  for (int begin = 0; begin < draws; begin += chunk)
    futures.push_back(std::async(std::launch::async, worker, begin,
                                 std::min(draws, begin + chunk)));
  for (auto& f : futures) {
    DrawResult r = f.get();
    s.min_a1_margin = std::min(s.min_a1_margin, r.a1_margin);
    s.min_a2_margin = std::min(s.min_a2_margin, r.a2_margin);
    s.min_hn_margin = std::min(s.min_hn_margin, r.hn_margin);
    s.violations += r.violations;
    s.max_delta_seen = std::max(s.max_delta_seen, r.delta);
  }
  return s;
}

}  // namespace rpwg
