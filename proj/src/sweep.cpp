#include "rpwg/sweep.hpp"

#include "rpwg/eigensolve.hpp"
#include "rpwg/fem.hpp"
#include "rpwg/limit_operator.hpp"
#include "rpwg/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace rpwg {

MeshControl sweep_mesh_defaults() {
  MeshControl c;
  c.n_h = 8;
  return c;
}

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& eps_value) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [eps, v] : eps_value) {
    if (!(eps > 0))
      throw validation_error("fit_slope: eps values must be positive");
    if (v > 0) pts.emplace_back(std::log(eps), std::log(v));
  }
  if (pts.size() < 3)
    throw validation_error("fit_slope: need at least 3 rows with positive values");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-14 * (1 + n * sxx))
    throw validation_error("fit_slope: eps values are degenerate");
  SlopeFit fit;
  fit.points = static_cast<int>(pts.size());
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0;
  for (const auto& [x, y] : pts) {
    double r = y - (fit.intercept + fit.slope * x);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

namespace {

struct ResolutionResult {
  int dofs = 0;
  double resolvent = 0, dual = 0, quasi = 0;
  double spectral = 0, trunc_bound = 0;
};

MeshControl refine_control(const MeshControl& base, double eps, double b) {
  MeshControl f = base;
  f.strip_h = (base.strip_h > 0 ? base.strip_h : eps / 8) / 2;
  f.room_h = (base.room_h > 0 ? base.room_h : b / 16) / 2;
  f.n_d = base.n_d * 2;
  f.n_h = base.n_h * 2;
  if (base.strip_layers > 0) f.strip_layers = base.strip_layers * 2;
  return f;
}

ResolutionResult run_resolution(const SweepConfig& cfg, const GeometryParams& p,
                                const MeshControl& ctrl, const Spectrum& limit_sp) {
  Mesh2D mesh = build_mesh(p, ctrl);
  DiscreteOperatorPair pair2d = assemble_2d(mesh, PotentialSpec::none());
  IdMaps maps = build_maps(mesh, PotentialSpec::none());
  ResolutionResult r;
  r.dofs = pair2d.dim;
  if (cfg.do_resolvent)
    r.resolvent = resolvent_defect(maps, pair2d, maps.pair0);
  if (cfg.do_dual)
    r.dual = resolvent_defect_dual(maps, pair2d, maps.pair0);
  if (cfg.do_quasi) r.quasi = quasi_unitarity_defect(maps, pair2d);
  if (cfg.do_spectral) {
    EigsOptions eo;
    eo.cutoff = cfg.cutoff;
    Spectrum s2d = eigs_lowest(pair2d, eo).spectrum;
    SpectralDistanceResult d = tilde_hausdorff(s2d, limit_sp);
    r.trunc_bound = d.truncation_bound;
    r.spectral = d.value + d.truncation_bound;
  }
  return r;
}

MetricEntry make_entry(double fine, double coarse) {
  MetricEntry e;
  e.present = true;
  e.value = fine;
  e.coarse = coarse;
  e.mesh_error = std::abs(fine - coarse);
  e.flagged = e.mesh_error > 0.25 * std::abs(fine);
  return e;
}

SweepRow run_row(const SweepConfig& cfg, double eps, std::uint64_t lemma_seed) {
  SweepRow row;
  row.eps = eps;
  auto t0 = std::chrono::steady_clock::now();
  try {
    GeometryParams p = cfg.base;
    p.eps = eps;
    DerivedScales sc = validate_params(p);

    Spectrum limit_sp;
    if (cfg.do_spectral) {
      LimitSpec ls;
      ls.ell_minus = p.ell_minus;
      ls.ell_plus = p.ell_plus;
      ls.gamma = p.gamma;
      limit_sp = secular_spectrum(ls, std::sqrt(cfg.cutoff));
    }

    const bool any_metric =
        cfg.do_resolvent || cfg.do_dual || cfg.do_quasi || cfg.do_spectral;
    MeshControl fine_ctrl = refine_control(cfg.mesh, eps, sc.b);
    if (any_metric) {
      ResolutionResult coarse = run_resolution(cfg, p, cfg.mesh, limit_sp);
      ResolutionResult fine = run_resolution(cfg, p, fine_ctrl, limit_sp);
      row.dofs = coarse.dofs;
      row.dofs_fine = fine.dofs;
      if (cfg.do_resolvent)
        row.resolvent = make_entry(fine.resolvent, coarse.resolvent);
      if (cfg.do_dual) row.dual = make_entry(fine.dual, coarse.dual);
      if (cfg.do_quasi) row.quasi = make_entry(fine.quasi, coarse.quasi);
      if (cfg.do_spectral) {
        row.spectral = make_entry(fine.spectral, coarse.spectral);
        row.truncation_bound = fine.trunc_bound;
      }
    }
    if (cfg.do_lemmas) {
      Mesh2D mesh = build_mesh(p, fine_ctrl);
      IdMaps maps = build_maps(mesh, PotentialSpec::none());
      row.lemmas = lemma_checks(maps, mesh, cfg.lemma_samples, lemma_seed);
      if (row.dofs_fine == 0) row.dofs_fine = mesh.n_nodes();
    }
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

ConvergenceReport run_sweep(const SweepConfig& cfg) {
  if (cfg.eps_list.empty()) throw validation_error("run_sweep: empty eps list");
  for (std::size_t i = 0; i + 1 < cfg.eps_list.size(); ++i)
    if (!(cfg.eps_list[i + 1] < cfg.eps_list[i]))
      throw validation_error("run_sweep: eps list must be strictly decreasing");
  for (double eps : cfg.eps_list) {
    GeometryParams p = cfg.base;
    p.eps = eps;
    validate_params(p);
  }
  if (cfg.do_spectral && !(cfg.cutoff > 0))
    throw validation_error("run_sweep: spectral metric needs a positive cutoff");

  ConvergenceReport rep;
  rep.base = cfg.base;
  const int n = static_cast<int>(cfg.eps_list.size());
  rep.rows.resize(n);

  int budget = cfg.workers > 0
                   ? cfg.workers
                   : static_cast<int>(
                         std::max(1u, std::min(std::thread::hardware_concurrency(), 8u)));
  budget = std::min(budget, n);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      rep.rows[i] =
          run_row(cfg, cfg.eps_list[i], cfg.seed + 1000003ULL * (i + 1));
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < budget; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  auto fit_metric = [&](const std::string& name, double expected,
                        MetricEntry SweepRow::* field) {
    std::vector<std::pair<double, double>> pts;
    bool any = false;
    for (const SweepRow& r : rep.rows) {
      const MetricEntry& e = r.*field;
      if (!r.ok || !e.present) continue;
      any = true;
      if (!e.flagged && e.value > 0) pts.emplace_back(r.eps, e.value);
    }
    if (!any) return;
    rep.expected[name] = expected;
    try {
      rep.fits[name] = fit_slope(pts);
    } catch (const validation_error&) {
      // fewer than 3 usable rows: no fit is reported for this metric
    }
  };
  const double a = cfg.base.alpha, b = cfg.base.beta;
  fit_metric("resolvent_defect", std::min(a, 0.5 - b), &SweepRow::resolvent);
  fit_metric("resolvent_defect_dual", std::min(a, 0.5 - b), &SweepRow::dual);
  fit_metric("spectral_distance", std::min({a, 0.5 - b, 2 * b}),
             &SweepRow::spectral);
  fit_metric("quasi_unitarity", std::min(a, b), &SweepRow::quasi);
  return rep;
}

}  // namespace rpwg
