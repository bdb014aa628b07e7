#include "rpwg/io.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rpwg {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open file for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof())
    throw validation_error("read failed: " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw validation_error("cannot open file for writing: " + path);
  out << content;
  out.flush();
  if (!out.good()) throw validation_error("write failed: " + path);
}

namespace {

json parse_object(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw validation_error(std::string(what) + ": invalid JSON");
  if (!j.is_object())
    throw validation_error(std::string(what) + ": top level must be an object");
  return j;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* context) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw validation_error(std::string(context) + ": unknown key '" + it.key() +
                             "'");
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw validation_error(std::string("config: bad value for '") + key + "'");
  }
}

GeometryParams geometry_from(const json& j) {
  check_keys(j, {"eps", "alpha", "beta", "gamma", "ell_minus", "ell_plus"},
             "geometry config");
  GeometryParams p;
  maybe(j, "eps", p.eps);
  maybe(j, "alpha", p.alpha);
  maybe(j, "beta", p.beta);
  maybe(j, "gamma", p.gamma);
  maybe(j, "ell_minus", p.ell_minus);
  maybe(j, "ell_plus", p.ell_plus);
  return p;
}

MeshControl mesh_from(const json& j) {
  check_keys(j, {"strip_h", "n_d", "n_h", "grading", "room_h", "strip_layers"},
             "mesh config");
  MeshControl c;
  maybe(j, "strip_h", c.strip_h);
  maybe(j, "n_d", c.n_d);
  maybe(j, "n_h", c.n_h);
  maybe(j, "grading", c.grading);
  maybe(j, "room_h", c.room_h);
  maybe(j, "strip_layers", c.strip_layers);
  return c;
}

json geometry_json(const GeometryParams& p) {
  return json{{"eps", p.eps},           {"alpha", p.alpha},
              {"beta", p.beta},         {"gamma", p.gamma},
              {"ell_minus", p.ell_minus}, {"ell_plus", p.ell_plus}};
}

json entry_json(const MetricEntry& e) {
  return json{{"value", e.value},
              {"coarse", e.coarse},
              {"mesh_error", e.mesh_error},
              {"flagged", e.flagged}};
}

json lemmas_json(const LemmaRatios& r) {
  return json{{"mean_dplus_room", r.mean_dplus_room},
              {"mean_dminus_below", r.mean_dminus_below},
              {"mean_dminus_dzero", r.mean_dminus_dzero},
              {"passage_l2", r.passage_l2},
              {"map_mismatch", r.map_mismatch}};
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

GeometryParams parse_geometry_config(const std::string& json_text) {
  json j = parse_object(json_text, "geometry config");
  if (j.contains("geometry")) return geometry_from(j.at("geometry"));
  return geometry_from(j);
}

MeshControl parse_mesh_config(const std::string& json_text) {
  json j = parse_object(json_text, "mesh config");
  if (j.contains("mesh")) return mesh_from(j.at("mesh"));
  // A combined config without a mesh section keeps the defaults.
  if (j.contains("geometry")) return MeshControl{};
  return mesh_from(j);
}

SweepConfig parse_sweep_config(const std::string& json_text) {
  json j = parse_object(json_text, "sweep config");
  check_keys(j,
             {"geometry", "eps_list", "mesh", "cutoff", "metrics",
              "lemma_samples", "seed", "workers"},
             "sweep config");
  SweepConfig cfg;
  if (j.contains("geometry")) cfg.base = geometry_from(j.at("geometry"));
  if (j.contains("mesh")) {
    // Sweep keeps its deeper default passage resolution unless overridden.
    MeshControl c = sweep_mesh_defaults();
    const json& jm = j.at("mesh");
    check_keys(jm, {"strip_h", "n_d", "n_h", "grading", "room_h", "strip_layers"},
               "mesh config");
    maybe(jm, "strip_h", c.strip_h);
    maybe(jm, "n_d", c.n_d);
    maybe(jm, "n_h", c.n_h);
    maybe(jm, "grading", c.grading);
    maybe(jm, "room_h", c.room_h);
    maybe(jm, "strip_layers", c.strip_layers);
    cfg.mesh = c;
  }
  maybe(j, "eps_list", cfg.eps_list);
  maybe(j, "cutoff", cfg.cutoff);
  maybe(j, "lemma_samples", cfg.lemma_samples);
  maybe(j, "seed", cfg.seed);
  maybe(j, "workers", cfg.workers);
  if (j.contains("metrics")) {
    std::vector<std::string> names;
    maybe(j, "metrics", names);
    cfg.do_resolvent = cfg.do_dual = cfg.do_spectral = cfg.do_quasi =
        cfg.do_lemmas = false;
    for (const std::string& n : names) {
      if (n == "resolvent")
        cfg.do_resolvent = true;
      else if (n == "dual")
        cfg.do_dual = true;
      else if (n == "spectral")
        cfg.do_spectral = true;
      else if (n == "quasi")
        cfg.do_quasi = true;
      else if (n == "lemmas")
        cfg.do_lemmas = true;
      else
        throw validation_error("sweep config: unknown metric '" + n + "'");
    }
  }
  return cfg;
}

PeriodicSpec parse_periodic_config(const std::string& json_text) {
  json j = parse_object(json_text, "periodic config");
  check_keys(j, {"period", "gamma", "n_cells", "geometry"}, "periodic config");
  PeriodicSpec spec;
  maybe(j, "period", spec.period);
  maybe(j, "gamma", spec.gamma);
  maybe(j, "n_cells", spec.n_cells);
  if (j.contains("geometry")) spec.p = geometry_from(j.at("geometry"));
  return spec;
}

std::string scales_json(const GeometryParams& p, const DerivedScales& s) {
  json j{{"params", geometry_json(p)},
         {"derived",
          {{"d", s.d}, {"h", s.h}, {"b", s.b}, {"eps_max", s.eps_max}}}};
  return j.dump(2);
}

std::string mesh_summary_json(const Mesh2D& mesh) {
  json by_region;
  for (const auto& [r, h] : mesh.h_by_region) {
    const char* name = r == Region::Strip     ? "strip"
                       : r == Region::Passage ? "passage"
                                              : "room";
    by_region[name] = h;
  }
  json j{{"nodes", mesh.n_nodes()},
         {"triangles", mesh.n_tris()},
         {"area", mesh_area(mesh)},
         {"strip_x_lines", mesh.strip_x_lines.size()},
         {"strip_y_lines", mesh.strip_y_lines.size()},
         {"sites", mesh.sites},
         {"max_h_by_region", by_region},
         {"boundary_edges", mesh.boundary_edges.size()},
         {"passage_top_edges", mesh.dplus_edges.size()},
         {"passage_bottom_edges", mesh.dminus_edges.size()}};
  return j.dump(2);
}

std::string mesh_json(const Mesh2D& mesh) {
  json nodes = json::array();
  for (const auto& n : mesh.nodes) nodes.push_back({n[0], n[1]});
  json tris = json::array();
  for (const auto& t : mesh.tris) tris.push_back({t[0], t[1], t[2]});
  json region = json::array();
  for (Region r : mesh.region) region.push_back(static_cast<int>(r));
  json j{{"nodes", std::move(nodes)},
         {"triangles", std::move(tris)},
         {"region", std::move(region)},
         {"sites", mesh.sites},
         {"strip_x_lines", mesh.strip_x_lines},
         {"strip_y_lines", mesh.strip_y_lines}};
  return j.dump();
}

std::string spectrum_json(const Spectrum& sp) {
  json j{{"values", sp.values},
         {"appended_zero", sp.appended_zero},
         {"cluster_id", sp.cluster_id}};
  if (sp.cutoff)
    j["cutoff"] = *sp.cutoff;
  else
    j["cutoff"] = nullptr;
  return j.dump(2);
}

std::string report_json(const ConvergenceReport& rep) {
  json rows = json::array();
  for (const SweepRow& r : rep.rows) {
    json row{{"eps", r.eps},
             {"ok", r.ok},
             {"dofs", r.dofs},
             {"dofs_fine", r.dofs_fine},
             {"wall_seconds", r.wall_seconds}};
    if (!r.ok) row["error"] = r.error;
    json metrics;
    if (r.resolvent.present) metrics["resolvent_defect"] = entry_json(r.resolvent);
    if (r.dual.present) metrics["resolvent_defect_dual"] = entry_json(r.dual);
    if (r.spectral.present) {
      metrics["spectral_distance"] = entry_json(r.spectral);
      row["truncation_bound"] = r.truncation_bound;
    }
    if (r.quasi.present) metrics["quasi_unitarity"] = entry_json(r.quasi);
    row["metrics"] = std::move(metrics);
    if (r.lemmas) row["lemma_ratios"] = lemmas_json(*r.lemmas);
    rows.push_back(std::move(row));
  }
  json fits;
  for (const auto& [name, f] : rep.fits)
    fits[name] = {{"slope", f.slope},
                  {"intercept", f.intercept},
                  {"residual", f.residual},
                  {"points", f.points}};
  json j{{"base", geometry_json(rep.base)},
         {"rows", std::move(rows)},
         {"fits", std::move(fits)},
         {"expected_slopes", rep.expected}};
  return j.dump(2);
}

std::string report_csv(const ConvergenceReport& rep) {
  std::string out =
      "eps,ok,dofs,dofs_fine,"
      "resolvent_value,resolvent_coarse,resolvent_mesh_error,resolvent_flagged,"
      "dual_value,dual_coarse,dual_mesh_error,dual_flagged,"
      "spectral_value,spectral_coarse,spectral_mesh_error,spectral_flagged,"
      "truncation_bound,"
      "quasi_value,quasi_coarse,quasi_mesh_error,quasi_flagged,"
      "lemma_mean_dplus_room,lemma_mean_dminus_below,lemma_mean_dminus_dzero,"
      "lemma_passage_l2,lemma_map_mismatch,wall_seconds,error\n";
  auto entry_cols = [](const MetricEntry& e) {
    if (!e.present) return std::string(",,,");
    return num(e.value) + "," + num(e.coarse) + "," + num(e.mesh_error) + "," +
           (e.flagged ? "1" : "0");
  };
  for (const SweepRow& r : rep.rows) {
    out += num(r.eps);
    out += r.ok ? ",1," : ",0,";
    out += std::to_string(r.dofs) + "," + std::to_string(r.dofs_fine) + ",";
    out += entry_cols(r.resolvent) + ",";
    out += entry_cols(r.dual) + ",";
    out += entry_cols(r.spectral) + ",";
    out += (r.spectral.present ? num(r.truncation_bound) : "") + ",";
    out += entry_cols(r.quasi) + ",";
    if (r.lemmas) {
      out += num(r.lemmas->mean_dplus_room) + "," +
             num(r.lemmas->mean_dminus_below) + "," +
             num(r.lemmas->mean_dminus_dzero) + "," + num(r.lemmas->passage_l2) +
             "," + num(r.lemmas->map_mismatch);
    } else {
      out += ",,,,";
    }
    out += "," + num(r.wall_seconds) + ",";
    out += r.error.empty() ? "" : csv_quote(r.error);
    out += "\n";
  }
  return out;
}

std::string bands_csv(const std::vector<Band>& bands) {
  std::string out = "band_index,k_start,k_end,lambda_start,lambda_end\n";
  for (std::size_t i = 0; i < bands.size(); ++i)
    out += std::to_string(i + 1) + "," + num(bands[i].k_lo) + "," +
           num(bands[i].k_hi) + "," + num(bands[i].lambda_lo) + "," +
           num(bands[i].lambda_hi) + "\n";
  return out;
}

std::string gap_report_json(const GapEvidenceReport& rep) {
  json bands = json::array();
  for (const Band& b : rep.bands)
    bands.push_back({{"k_lo", b.k_lo},
                     {"k_hi", b.k_hi},
                     {"lambda_lo", b.lambda_lo},
                     {"lambda_hi", b.lambda_hi}});
  json rows = json::array();
  for (const GapEvidenceRow& r : rep.rows)
    rows.push_back({{"eps", r.eps},
                    {"n_eigenvalues", r.n_eigenvalues},
                    {"cluster_size", r.cluster_size},
                    {"cluster_threshold", r.cluster_threshold},
                    {"max_intrusion", r.max_intrusion},
                    {"max_relative_intrusion", r.max_relative_intrusion}});
  json j{{"cutoff", rep.cutoff},
         {"bands", std::move(bands)},
         {"rows", std::move(rows)},
         {"intrusion_decreasing", rep.intrusion_decreasing}};
  return j.dump(2);
}

std::string suite_json(const SuiteSummary& s) {
  json j{{"draws", s.draws},
         {"violations", s.violations},
         {"min_a1_margin", s.min_a1_margin},
         {"min_a2_margin", s.min_a2_margin},
         {"min_hn_margin", s.min_hn_margin},
         {"max_delta_seen", s.max_delta_seen}};
  return j.dump(2);
}

std::string discrepancy_json(const DiscrepancyReport& rep) {
  json j{{"eps", rep.epsilon},
         {"resolvent_defect", rep.norm_resolvent_defect},
         {"resolvent_defect_dual", rep.norm_resolvent_defect_dual},
         {"quasi_unitarity_defect", rep.quasi_unitarity_defect},
         {"lemma_ratios", lemmas_json(rep.lemma_constants)}};
  return j.dump(2);
}

void write_matrix_market(const SpMat& A, const std::string& path) {
  std::ostringstream out;
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      out << (it.row() + 1) << " " << (it.col() + 1) << " " << num(it.value())
          << "\n";
  write_text_file(path, out.str());
}

}  // namespace rpwg
