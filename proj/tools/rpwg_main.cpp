// Command line driver. Subcommands cover the individual stages (validate,
// mesh, solve2d, solve1d), the head-to-head comparison of the two operators
// (compare), the convergence study (sweep), the periodic-comb experiments
// (kp-bands) and the randomized inequality suite (abstract-suite).
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include "rpwg/abstract_toolkit.hpp"
#include "rpwg/eigensolve.hpp"
#include "rpwg/fem.hpp"
#include "rpwg/geometry.hpp"
#include "rpwg/identification.hpp"
#include "rpwg/io.hpp"
#include "rpwg/kronig_penney.hpp"
#include "rpwg/limit_operator.hpp"
#include "rpwg/sweep.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace rpwg;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
  } else {
    write_text_file(out_path, text);
  }
}

// Geometry flags shared by most subcommands; only flags the user actually
// passed override the config file.
struct GeomFlags {
  double eps = 0, alpha = 0, beta = 0, gamma = 0, ell_minus = 0, ell_plus = 0;
  CLI::Option *o_eps = nullptr, *o_alpha = nullptr, *o_beta = nullptr,
              *o_gamma = nullptr, *o_ellm = nullptr, *o_ellp = nullptr;

  void add(CLI::App* cmd) {
    o_eps = cmd->add_option("--eps", eps, "strip height");
    o_alpha = cmd->add_option("--alpha", alpha, "passage height exponent");
    o_beta = cmd->add_option("--beta", beta, "room side exponent");
    o_gamma = cmd->add_option("--gamma", gamma, "coupling strength");
    o_ellm = cmd->add_option("--ell-minus", ell_minus, "left interval end");
    o_ellp = cmd->add_option("--ell-plus", ell_plus, "right interval end");
  }
  void apply(GeometryParams& p) const {
    if (o_eps->count()) p.eps = eps;
    if (o_alpha->count()) p.alpha = alpha;
    if (o_beta->count()) p.beta = beta;
    if (o_gamma->count()) p.gamma = gamma;
    if (o_ellm->count()) p.ell_minus = ell_minus;
    if (o_ellp->count()) p.ell_plus = ell_plus;
  }
};

struct MeshFlags {
  double strip_h = 0, room_h = 0, grading = 0;
  int n_d = 0, n_h = 0, strip_layers = 0;
  CLI::Option *o_sh = nullptr, *o_rh = nullptr, *o_gr = nullptr, *o_nd = nullptr,
              *o_nh = nullptr, *o_sl = nullptr;

  void add(CLI::App* cmd) {
    o_sh = cmd->add_option("--strip-h", strip_h, "target strip element width");
    o_rh = cmd->add_option("--room-h", room_h, "target room element size");
    o_gr = cmd->add_option("--grading", grading, "corner fan growth ratio");
    o_nd = cmd->add_option("--n-d", n_d, "elements across the passage width");
    o_nh = cmd->add_option("--n-h", n_h, "elements across the passage height");
    o_sl = cmd->add_option("--strip-layers", strip_layers,
                           "vertical strip subdivisions (0 = auto)");
  }
  void apply(MeshControl& c) const {
    if (o_sh->count()) c.strip_h = strip_h;
    if (o_rh->count()) c.room_h = room_h;
    if (o_gr->count()) c.grading = grading;
    if (o_nd->count()) c.n_d = n_d;
    if (o_nh->count()) c.n_h = n_h;
    if (o_sl->count()) c.strip_layers = strip_layers;
  }
};

GeometryParams load_geometry(const std::string& config, const GeomFlags& flags) {
  GeometryParams p;
  if (!config.empty()) p = parse_geometry_config(read_text_file(config));
  flags.apply(p);
  return p;
}

MeshControl load_mesh_ctrl(const std::string& config, const MeshFlags& flags) {
  MeshControl c;
  if (!config.empty()) c = parse_mesh_config(read_text_file(config));
  flags.apply(c);
  return c;
}

void dump_pair(const DiscreteOperatorPair& pair, const std::string& prefix,
               const std::string& tag) {
  write_matrix_market(pair.K, prefix + "_K" + tag + ".mtx");
  write_matrix_market(pair.M, prefix + "_M" + tag + ".mtx");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"room-and-passage waveguide laboratory"};
  app.require_subcommand(1);

  // ---- validate ----
  auto* c_validate = app.add_subcommand(
      "validate", "check parameter admissibility and print the derived scales");
  std::string v_config, v_out;
  GeomFlags v_geom;
  c_validate->add_option("--config", v_config, "JSON config file");
  v_geom.add(c_validate);
  c_validate->add_option("--out", v_out, "output file (default stdout)");
  c_validate->callback([&] {
    GeometryParams p = load_geometry(v_config, v_geom);
    DerivedScales s = validate_params(p);
    emit(scales_json(p, s), v_out);
  });

  // ---- mesh ----
  auto* c_mesh = app.add_subcommand(
      "mesh", "build the waveguide mesh; summary to stdout, full dump to --out");
  std::string m_config, m_out;
  GeomFlags m_geom;
  MeshFlags m_mesh;
  c_mesh->add_option("--config", m_config, "JSON config file");
  m_geom.add(c_mesh);
  m_mesh.add(c_mesh);
  c_mesh->add_option("--out", m_out, "write the full mesh JSON here");
  c_mesh->callback([&] {
    GeometryParams p = load_geometry(m_config, m_geom);
    MeshControl ctrl = load_mesh_ctrl(m_config, m_mesh);
    Mesh2D mesh = build_mesh(p, ctrl);
    std::cout << mesh_summary_json(mesh) << '\n';
    if (!m_out.empty()) write_text_file(m_out, mesh_json(mesh));
  });

  // ---- solve2d ----
  auto* c_solve2d = app.add_subcommand(
      "solve2d", "Neumann eigenvalues of the waveguide operator");
  std::string s2_config, s2_out, s2_mesh_out, s2_dump;
  GeomFlags s2_geom;
  MeshFlags s2_mesh;
  double s2_cutoff = 0, s2_v0 = 0;
  int s2_k = 6;
  c_solve2d->add_option("--config", s2_config, "JSON config file");
  s2_geom.add(c_solve2d);
  s2_mesh.add(c_solve2d);
  auto* s2_o_cut =
      c_solve2d->add_option("--cutoff", s2_cutoff, "all eigenvalues below this");
  c_solve2d->add_option("--k", s2_k, "number of lowest eigenvalues (no cutoff)");
  c_solve2d->add_option("--v0", s2_v0, "constant potential on the strip");
  c_solve2d->add_option("--out", s2_out, "spectrum JSON (default stdout)");
  c_solve2d->add_option("--mesh-out", s2_mesh_out, "also dump the mesh JSON here");
  c_solve2d->add_option("--dump-matrices", s2_dump,
                        "write <prefix>_K.mtx / <prefix>_M.mtx");
  c_solve2d->callback([&] {
    GeometryParams p = load_geometry(s2_config, s2_geom);
    MeshControl ctrl = load_mesh_ctrl(s2_config, s2_mesh);
    Mesh2D mesh = build_mesh(p, ctrl);
    PotentialSpec V = s2_v0 == 0.0 ? PotentialSpec::none() : PotentialSpec::constant(s2_v0);
    DiscreteOperatorPair pair = assemble_2d(mesh, V);
    if (!s2_mesh_out.empty()) write_text_file(s2_mesh_out, mesh_json(mesh));
    if (!s2_dump.empty()) dump_pair(pair, s2_dump, "");
    EigsOptions opts;
    if (s2_o_cut->count())
      opts.cutoff = s2_cutoff;
    else
      opts.k = s2_k;
    EigsResult res = eigs_lowest(pair, opts);
    emit(spectrum_json(res.spectrum), s2_out);
  });

  // ---- solve1d ----
  auto* c_solve1d = app.add_subcommand(
      "solve1d", "spectrum of the interval operator with the point coupling");
  std::string s1_config, s1_out, s1_method = "secular";
  GeomFlags s1_geom;
  double s1_kmax = 20, s1_v0 = 0;
  int s1_n = 1024, s1_k = 12;
  c_solve1d->add_option("--config", s1_config, "JSON config file");
  s1_geom.add(c_solve1d);
  c_solve1d->add_option("--method", s1_method, "secular | galerkin")
      ->check(CLI::IsMember({"secular", "galerkin"}));
  c_solve1d->add_option("--k-max", s1_kmax, "wavenumber scan limit (secular)");
  c_solve1d->add_option("--n", s1_n, "grid dofs (galerkin)");
  c_solve1d->add_option("--k", s1_k, "number of eigenvalues (galerkin)");
  c_solve1d->add_option("--v0", s1_v0, "constant potential (galerkin only)");
  c_solve1d->add_option("--out", s1_out, "spectrum JSON (default stdout)");
  c_solve1d->callback([&] {
    GeometryParams p = load_geometry(s1_config, s1_geom);
    LimitSpec spec;
    spec.ell_minus = p.ell_minus;
    spec.ell_plus = p.ell_plus;
    spec.gamma = p.gamma;
    Spectrum sp;
    if (s1_method == "secular") {
      if (s1_v0 != 0.0)
        throw validation_error("the analytic route requires zero potential");
      sp = secular_spectrum(spec, s1_kmax);
    } else {
      if (s1_v0 != 0.0) spec.V = PotentialSpec::constant(s1_v0);
      sp = galerkin_spectrum(spec, s1_n, s1_k);
    }
    emit(spectrum_json(sp), s1_out);
  });

  // ---- compare ----
  auto* c_compare = app.add_subcommand(
      "compare", "defect norms between the waveguide and interval operators");
  std::string cp_config, cp_out, cp_dump;
  GeomFlags cp_geom;
  MeshFlags cp_mesh;
  int cp_lemmas = 0;
  std::uint64_t cp_seed = 0x51ab3a7dULL;
  bool cp_skip_dual = false, cp_skip_quasi = false;
  c_compare->add_option("--config", cp_config, "JSON config file");
  cp_geom.add(c_compare);
  cp_mesh.add(c_compare);
  c_compare->add_option("--lemmas", cp_lemmas,
                        "sample count for the trace-estimate ratios (0 = skip)");
  c_compare->add_option("--seed", cp_seed, "seed for the lemma sampler");
  c_compare->add_flag("--skip-dual", cp_skip_dual, "skip the adjoint-side defect");
  c_compare->add_flag("--skip-quasi", cp_skip_quasi, "skip the quasi-unitarity defect");
  c_compare->add_option("--out", cp_out, "report JSON (default stdout)");
  c_compare->add_option("--dump-matrices", cp_dump,
                        "write operator and map matrices with this prefix");
  c_compare->callback([&] {
    GeometryParams p = load_geometry(cp_config, cp_geom);
    MeshControl ctrl = load_mesh_ctrl(cp_config, cp_mesh);
    Mesh2D mesh = build_mesh(p, ctrl);
    DiscreteOperatorPair pair2 = assemble_2d(mesh, PotentialSpec::none());
    IdMaps maps = build_maps(mesh);
    if (!cp_dump.empty()) {
      dump_pair(pair2, cp_dump, "2");
      dump_pair(maps.pair0, cp_dump, "0");
      write_matrix_market(maps.J, cp_dump + "_J.mtx");
      write_matrix_market(maps.J1, cp_dump + "_J1.mtx");
    }
    DiscrepancyReport rep;
    rep.epsilon = p.eps;
    rep.norm_resolvent_defect = resolvent_defect(maps, pair2, maps.pair0);
    if (!cp_skip_dual)
      rep.norm_resolvent_defect_dual = resolvent_defect_dual(maps, pair2, maps.pair0);
    if (!cp_skip_quasi)
      rep.quasi_unitarity_defect = quasi_unitarity_defect(maps, pair2);
    if (cp_lemmas > 0)
      rep.lemma_constants = lemma_checks(maps, mesh, cp_lemmas, cp_seed);
    emit(discrepancy_json(rep), cp_out);
  });

  // ---- sweep ----
  auto* c_sweep = app.add_subcommand(
      "sweep", "convergence study over a decreasing list of strip heights");
  std::string sw_config, sw_out, sw_csv;
  GeomFlags sw_geom;
  MeshFlags sw_mesh;
  std::vector<double> sw_eps_list;
  std::vector<std::string> sw_metrics;
  double sw_cutoff = 0;
  int sw_lemma_samples = 0, sw_workers = 0;
  std::uint64_t sw_seed = 0;
  c_sweep->add_option("--config", sw_config, "JSON config file (sweep schema)");
  sw_geom.add(c_sweep);
  sw_mesh.add(c_sweep);
  c_sweep->add_option("--eps-list", sw_eps_list, "strictly decreasing strip heights");
  auto* sw_o_cut = c_sweep->add_option("--cutoff", sw_cutoff, "spectral window");
  auto* sw_o_metrics = c_sweep->add_option(
      "--metrics", sw_metrics,
      "subset of: resolvent dual spectral quasi lemmas");
  auto* sw_o_ls =
      c_sweep->add_option("--lemma-samples", sw_lemma_samples, "lemma sample count");
  auto* sw_o_seed = c_sweep->add_option("--seed", sw_seed, "sweep seed");
  auto* sw_o_workers = c_sweep->add_option("--workers", sw_workers, "worker budget");
  c_sweep->add_option("--out", sw_out, "report JSON (default stdout)");
  c_sweep->add_option("--csv", sw_csv, "also write the row table as CSV here");
  c_sweep->callback([&] {
    SweepConfig cfg;
    if (!sw_config.empty()) cfg = parse_sweep_config(read_text_file(sw_config));
    sw_geom.apply(cfg.base);
    sw_mesh.apply(cfg.mesh);
    if (!sw_eps_list.empty()) cfg.eps_list = sw_eps_list;
    if (sw_o_cut->count()) cfg.cutoff = sw_cutoff;
    if (sw_o_ls->count()) cfg.lemma_samples = sw_lemma_samples;
    if (sw_o_seed->count()) cfg.seed = sw_seed;
    if (sw_o_workers->count()) cfg.workers = sw_workers;
    if (sw_o_metrics->count()) {
      cfg.do_resolvent = cfg.do_dual = cfg.do_spectral = cfg.do_quasi =
          cfg.do_lemmas = false;
      for (const std::string& m : sw_metrics) {
        if (m == "resolvent")
          cfg.do_resolvent = true;
        else if (m == "dual")
          cfg.do_dual = true;
        else if (m == "spectral")
          cfg.do_spectral = true;
        else if (m == "quasi")
          cfg.do_quasi = true;
        else if (m == "lemmas")
          cfg.do_lemmas = true;
        else
          throw validation_error("unknown metric '" + m + "'");
      }
    }
    ConvergenceReport rep = run_sweep(cfg);
    emit(report_json(rep), sw_out);
    if (!sw_csv.empty()) write_text_file(sw_csv, report_csv(rep));
  });

  // ---- kp-bands ----
  auto* c_kp = app.add_subcommand(
      "kp-bands", "band edges of the point-coupling comb; with --eps-list, "
                  "gap evidence from the truncated periodic waveguide");
  std::string kp_config, kp_out;
  GeomFlags kp_geom;
  MeshFlags kp_mesh;
  double kp_period = 0, kp_cutoff = 20;
  int kp_bands_n = 8, kp_cells = 0;
  std::vector<double> kp_eps_list;
  c_kp->add_option("--config", kp_config, "JSON config file (periodic schema)");
  kp_geom.add(c_kp);
  kp_mesh.add(c_kp);
  auto* kp_o_period = c_kp->add_option("--period", kp_period, "lattice spacing");
  c_kp->add_option("--n-bands", kp_bands_n, "bands to report (band mode)");
  auto* kp_o_cells = c_kp->add_option("--cells", kp_cells, "truncation cells");
  c_kp->add_option("--eps-list", kp_eps_list,
                   "strip heights for the gap-evidence mode");
  c_kp->add_option("--cutoff", kp_cutoff, "spectral window (gap mode)");
  c_kp->add_option("--out", kp_out, "output file (default stdout)");
  c_kp->callback([&] {
    PeriodicSpec spec;
    if (!kp_config.empty()) spec = parse_periodic_config(read_text_file(kp_config));
    kp_geom.apply(spec.p);
    // The shared --gamma flag doubles as the comb strength here, so the 1D
    // and 2D sides cannot drift apart.
    if (kp_geom.o_gamma->count()) spec.gamma = kp_geom.gamma;
    if (kp_o_period->count()) spec.period = kp_period;
    if (kp_o_cells->count()) spec.n_cells = kp_cells;
    if (kp_eps_list.empty()) {
      emit(bands_csv(kp_band_edges(spec.gamma, kp_bands_n, spec.period)), kp_out);
    } else {
      MeshControl ctrl;
      kp_mesh.apply(ctrl);
      GapEvidenceReport rep = gap_evidence(spec, kp_eps_list, kp_cutoff, ctrl);
      emit(gap_report_json(rep), kp_out);
    }
  });

  // ---- abstract-suite ----
  auto* c_abs = app.add_subcommand(
      "abstract-suite", "randomized verification of the operator-distance "
                        "inequalities on synthetic instances");
  std::string ab_out;
  int ab_draws = 10000;
  std::uint64_t ab_seed = 0xA11CE5EEDULL;
  c_abs->add_option("--draws", ab_draws, "number of random instances");
  c_abs->add_option("--seed", ab_seed, "master seed");
  c_abs->add_option("--out", ab_out, "summary JSON (default stdout)");
  c_abs->callback([&] {
    SuiteSummary s = run_property_suite(ab_draws, ab_seed);
    emit(suite_json(s), ab_out);
    if (s.violations > 0)
      throw numerical_error("inequality suite recorded " +
                            std::to_string(s.violations) + " violations");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const validation_error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
