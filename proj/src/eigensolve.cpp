#include "rpwg/eigensolve.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace rpwg {

namespace {

using LDLT = Eigen::SimplicialLDLT<SpMat>;
using LLT = Eigen::SimplicialLLT<SpMat>;

Vec random_vec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

void assign_clusters(Spectrum& sp) {
  sp.cluster_id.assign(sp.values.size(), 0);
  int cid = 0;
  for (std::size_t i = 1; i < sp.values.size(); ++i) {
    if (sp.values[i] - sp.values[i - 1] > 1e-9 * (1 + std::abs(sp.values[i]))) ++cid;
    sp.cluster_id[i] = cid;
  }
}

EigsResult dense_path(const DiscreteOperatorPair& pair, const EigsOptions& opts) {
  Mat K = Mat(pair.K), M = Mat(pair.M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(K, M);
  if (es.info() != Eigen::Success)
    throw numerical_error("eigs_lowest: dense generalized eigensolver failed");
  const Vec& vals = es.eigenvalues();
  int k;
  if (opts.cutoff) {
    k = 0;
    while (k < vals.size() && vals[k] < *opts.cutoff) ++k;
  } else {
    k = std::min<int>(opts.k, static_cast<int>(vals.size()));
  }
  EigsResult r;
  r.spectrum.values.assign(vals.data(), vals.data() + k);
  r.spectrum.cutoff = opts.cutoff;
  assign_clusters(r.spectrum);
  if (opts.want_vectors) r.vectors = es.eigenvectors().leftCols(k);
  r.residuals.resize(k);
  for (int i = 0; i < k; ++i) {
    Vec x = es.eigenvectors().col(i);
    Vec res = K * x - vals[i] * (M * x);
    // Dense path: use the M-weighted residual through a dense solve.
    Eigen::LLT<Mat> mll(M);
    r.residuals[i] = std::sqrt(std::abs(res.dot(mll.solve(res))));
  }
  return r;
}

struct InertiaTool {
  const DiscreteOperatorPair& pair;
  int count_below(double t) const {
    SpMat A = pair.K - t * pair.M;
    for (int attempt = 0; attempt < 4; ++attempt) {
      LDLT f(A);
      if (f.info() == Eigen::Success) {
        const auto& D = f.vectorD();
        bool clean = true;
        int neg = 0;
        for (int i = 0; i < D.size(); ++i) {
          if (D[i] < 0) ++neg;
          if (D[i] == 0) clean = false;
        }
        if (clean) return neg;
      }
      // Shift hit an eigenvalue or produced a zero pivot: jitter and retry.
      double jitter = (std::abs(t) + 1.0) * 1e-11 * (attempt + 1);
      A = pair.K - (t + jitter) * pair.M;
    }
    throw numerical_error("inertia_below: factorization failed after jitter");
  }
};

struct LanczosWorkspace {
  std::vector<Vec> V;   // M-orthonormal basis
  std::vector<Vec> MV;  // cached M * V
  std::vector<double> alpha, beta;
};

/// One full-reorthogonalization M-Lanczos sweep for Op = (K - sigma M)^{-1} M,
/// deflating against `locked` (converged M-orthonormal vectors).
void lanczos_sweep(const LDLT& F, const SpMat& M, const std::vector<Vec>& locked,
                   const std::vector<Vec>& locked_M, int m_target,
                   std::mt19937_64& rng, LanczosWorkspace& ws) {
  const int n = static_cast<int>(M.rows());
  auto reorth = [&](Vec& w) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < locked.size(); ++i)
        w -= locked_M[i].dot(w) * locked[i];
      for (std::size_t i = 0; i < ws.V.size(); ++i)
        w -= ws.MV[i].dot(w) * ws.V[i];
    }
  };
  if (ws.V.empty()) {
    Vec v0 = random_vec(n, rng);
    reorth(v0);
    double nrm = std::sqrt(v0.dot(M * v0));
    if (nrm <= 0) throw numerical_error("eigs_lowest: degenerate start vector");
    v0 /= nrm;
    ws.V.push_back(v0);
    ws.MV.push_back(M * v0);
  }
  while (static_cast<int>(ws.alpha.size()) < m_target) {
    const Vec& vj = ws.V.back();
    Vec w = F.solve(ws.MV.back());
    double a = ws.MV.back().dot(w);
    ws.alpha.push_back(a);
    w -= a * vj;
    if (ws.V.size() >= 2) w -= ws.beta.back() * ws.V[ws.V.size() - 2];
    reorth(w);
    Vec Mw = M * w;
    double b = std::sqrt(std::max(0.0, w.dot(Mw)));
    if (b < 1e-13) {
      // Invariant subspace exhausted: continue with a fresh direction.
      Vec f = random_vec(n, rng);
      reorth(f);
      Vec Mf = M * f;
      double nf = std::sqrt(std::max(0.0, f.dot(Mf)));
      if (nf < 1e-13) { ws.beta.push_back(0.0); break; }
      ws.beta.push_back(0.0);
      ws.V.push_back(f / nf);
      ws.MV.push_back(Mf / nf);
      continue;
    }
    ws.beta.push_back(b);
    ws.V.push_back(w / b);
    ws.MV.push_back(Mw / b);
  }
}

struct RitzPair {
  double value;
  Vec vector;
  double residual;
};

}  // namespace

int inertia_below(const DiscreteOperatorPair& pair, double t) {
  return InertiaTool{pair}.count_below(t);
}

EigsResult eigs_lowest(const DiscreteOperatorPair& pair, const EigsOptions& opts) {
  const int n = pair.dim;
  if (n <= 0) throw validation_error("eigs_lowest: empty operator");
  if (!opts.cutoff && opts.k <= 0)
    throw validation_error("eigs_lowest: request at least one eigenvalue");

  InertiaTool inertia{pair};
  int k_target;
  if (opts.cutoff) {
    k_target = inertia.count_below(*opts.cutoff);
    if (k_target == 0) {
      EigsResult empty;
      empty.spectrum.cutoff = opts.cutoff;
      return empty;
    }
  } else {
    k_target = std::min(opts.k, n);
  }

  if (n <= 400 || k_target > n / 3) return dense_path(pair, opts);

  const double sigma =
      opts.shift ? *opts.shift
                 : -std::max(0.05, opts.cutoff ? 0.02 * *opts.cutoff : 0.05);
  SpMat A = pair.K - sigma * pair.M;
  LDLT F(A);
  if (F.info() != Eigen::Success)
    throw numerical_error("eigs_lowest: shifted factorization failed");
  LLT Mf(pair.M);
  if (Mf.info() != Eigen::Success)
    throw numerical_error("eigs_lowest: mass factorization failed");

  // Attainable residual accuracy degrades with the pencil's spectral radius:
  // forming K*x already carries roundoff of that size, so the acceptance
  // threshold needs a matching floor or fine meshes can never certify.
  double lam_scale = 0;
  for (int i = 0; i < n; ++i) {
    double mii = pair.M.coeff(i, i);
    if (mii > 0) lam_scale = std::max(lam_scale, pair.K.coeff(i, i) / mii);
  }
  const double res_floor =
      8 * std::numeric_limits<double>::epsilon() * lam_scale;

  std::mt19937_64 rng(opts.seed);
  std::vector<RitzPair> locked_pairs;
  std::vector<Vec> locked, locked_M;

  const int max_rounds = 5;
  for (int round = 0; round < max_rounds; ++round) {
    int missing = k_target - static_cast<int>(locked_pairs.size());
    if (missing <= 0) break;
    int m_max = opts.max_subspace > 0
                    ? opts.max_subspace
                    : std::min(n, std::max(3 * missing + 120, 2 * missing + 80));
    LanczosWorkspace ws;
    int m = std::min(m_max, std::max(2 * missing + 20, 40));
    std::vector<RitzPair> round_pairs;
    while (true) {
      lanczos_sweep(F, pair.M, locked, locked_M, m, rng, ws);
      const int mm = static_cast<int>(ws.alpha.size());
      Mat T = Mat::Zero(mm, mm);
      for (int i = 0; i < mm; ++i) {
        T(i, i) = ws.alpha[i];
        if (i + 1 < mm) T(i, i + 1) = T(i + 1, i) = ws.beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Mat> tes(T);
      // Map Ritz values of the inverted operator back to the original scale.
      // Negative theta means an eigenvalue below the shift; those are just as
      // valid (interior shifts see both sides), so keep every nonzero theta
      // and let the residual gate below reject anything unconverged.
      std::vector<std::pair<double, int>> order;
      for (int i = 0; i < mm; ++i) {
        double theta = tes.eigenvalues()[i];
        if (theta != 0.0) order.emplace_back(sigma + 1.0 / theta, i);
      }
      std::sort(order.begin(), order.end());
      round_pairs.clear();
      bool all_ok = true;
      for (int c = 0; c < missing && c < static_cast<int>(order.size()); ++c) {
        int col = order[c].second;
        Vec x = Vec::Zero(n);
        for (int j = 0; j < mm; ++j) x += tes.eigenvectors()(j, col) * ws.V[j];
        double xn = std::sqrt(x.dot(pair.M * x));
        if (xn <= 0) { all_ok = false; break; }
        x /= xn;
        double lam = order[c].first;
        Vec res = pair.K * x - lam * (pair.M * x);
        double rn = std::sqrt(std::abs(res.dot(Mf.solve(res))));
        if (rn > opts.tol * (1 + std::abs(lam)) + res_floor) {
          all_ok = false;
          break;
        }
        round_pairs.push_back({lam, std::move(x), rn});
      }
      if (all_ok && static_cast<int>(round_pairs.size()) == missing) break;
      if (mm >= m_max || mm >= n) {
        if (round_pairs.empty() && round + 1 == max_rounds)
          throw numerical_error("eigs_lowest: Lanczos failed to converge");
        break;  // keep what converged; certification below decides
      }
      m = std::min(m_max, m + std::max(20, m / 2));
    }
    for (auto& rp : round_pairs) {
      locked.push_back(rp.vector);
      locked_M.push_back(pair.M * rp.vector);
      locked_pairs.push_back(std::move(rp));
    }
    std::sort(locked_pairs.begin(), locked_pairs.end(),
              [](const RitzPair& a, const RitzPair& b) { return a.value < b.value; });

    // Completeness certificate: the inertia count just above the k-th found
    // value (or at the cutoff) must match what we hold. A mismatch means a
    // clustered or multiple eigenvalue was missed; deflate and rerun.
    if (static_cast<int>(locked_pairs.size()) >= k_target) {
      double t_ref;
      if (opts.cutoff) {
        t_ref = *opts.cutoff;
      } else {
        double lk = locked_pairs[k_target - 1].value;
        t_ref = lk + std::max(1e-11, 1e-8 * (1 + std::abs(lk)));
      }
      int expected = inertia.count_below(t_ref);
      int have = 0;
      for (const auto& rp : locked_pairs)
        if (rp.value < t_ref) ++have;
      if (have >= expected) break;
      k_target = std::max(k_target, expected);
    }
  }

  if (static_cast<int>(locked_pairs.size()) < k_target)
    throw numerical_error("eigs_lowest: completeness certification failed");

  EigsResult r;
  r.spectrum.cutoff = opts.cutoff;
  int k_keep = k_target;
  if (opts.cutoff) {
    k_keep = 0;
    for (const auto& rp : locked_pairs)
      if (rp.value < *opts.cutoff) ++k_keep;
  }
  r.spectrum.values.reserve(k_keep);
  if (opts.want_vectors) r.vectors.resize(n, k_keep);
  for (int i = 0; i < k_keep; ++i) {
    r.spectrum.values.push_back(locked_pairs[i].value);
    r.residuals.push_back(locked_pairs[i].residual);
    if (opts.want_vectors) r.vectors.col(i) = locked_pairs[i].vector;
  }
  assign_clusters(r.spectrum);
  return r;
}

struct ResolventHandle::Impl {
  LDLT F;
  SpMat M;
};

ResolventHandle::ResolventHandle(const DiscreteOperatorPair& pair) {
  impl_ = std::make_shared<Impl>();
  impl_->M = pair.M;
  SpMat A = pair.K + pair.M;
  impl_->F.compute(A);
  if (impl_->F.info() != Eigen::Success)
    throw numerical_error("ResolventHandle: factorization of K + M failed");
  M_ = &impl_->M;
  dim_ = pair.dim;
}

Vec ResolventHandle::apply(const Vec& rhs) const {
  return impl_->F.solve(impl_->M * rhs);
}

Vec ResolventHandle::solve_load(const Vec& b) const { return impl_->F.solve(b); }

LinearMap LinearMap::from_sparse(const SpMat& A) {
  LinearMap L;
  L.rows = static_cast<int>(A.rows());
  L.cols = static_cast<int>(A.cols());
  // Capture by value; sparse matrices are cheap to copy relative to solve cost.
  L.apply = [A](const Vec& x) { return Vec(A * x); };
  L.apply_t = [A](const Vec& y) { return Vec(A.transpose() * y); };
  return L;
}

OpNormResult op_norm(const LinearMap& L, const SpMat& G_src, const SpMat& G_dst,
                     const OpNormOptions& opts) {
  LLT src(G_src);
  if (src.info() != Eigen::Success)
    throw numerical_error("op_norm: source Gram factorization failed");
  std::mt19937_64 rng(opts.seed);
  OpNormResult best;
  for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
    Vec x = random_vec(L.cols, rng);
    double xn = std::sqrt(std::abs(x.dot(G_src * x)));
    x /= xn;
    double prev = -1;
    int stable = 0;
    OpNormResult cur;
    for (int it = 1; it <= opts.max_iter; ++it) {
      Vec y = L.apply(x);
      Vec Gy = G_dst * y;
      double val = std::sqrt(std::max(0.0, y.dot(Gy)));
      cur.value = val;
      cur.iterations = it;
      if (val == 0) { cur.converged = true; break; }
      if (prev >= 0 && std::abs(val - prev) <= 0.1 * opts.rel_tol * val) {
        if (++stable >= 3) { cur.converged = true; break; }
      } else {
        stable = 0;
      }
      prev = val;
      Vec g = L.apply_t(Gy);
      x = src.solve(g);
      double nrm = std::sqrt(std::abs(x.dot(g)));
      if (nrm == 0) { cur.converged = true; break; }
      x /= nrm;
    }
    if (cur.value > best.value || restart == 0) {
      bool conv = cur.converged && (best.converged || restart == 0);
      double v = std::max(cur.value, best.value);
      best = cur;
      best.value = v;
      best.converged = conv ? cur.converged : false;
    }
  }
  return best;
}

}  // namespace rpwg
