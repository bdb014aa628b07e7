#include "rpwg/geometry.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

namespace rpwg {

namespace {

[[noreturn]] void reject(const std::string& what) { throw validation_error(what); }

/// n equal intervals from a to b with exact endpoints.
std::vector<double> uniform_pts(double a, double b, int n) {
  assert(n >= 1);
  std::vector<double> xs(n + 1);
  for (int i = 0; i <= n; ++i) xs[i] = a + (b - a) * (static_cast<double>(i) / n);
  xs.front() = a;
  xs.back() = b;
  return xs;
}

/// Offsets 0 = c_0 < ... < c_k = L with first spacing ~ s0 growing geometrically
/// by r, capped at `cap`, then scaled so the last offset lands exactly on L.
std::vector<double> graded_offsets(double L, double s0, double r, double cap) {
  assert(L > 0 && s0 > 0 && cap > 0 && r > 1);
  if (cap <= s0) {
    int n = std::max(1, static_cast<int>(std::ceil(L / cap - 1e-9)));
    std::vector<double> off(n + 1);
    for (int i = 0; i <= n; ++i) off[i] = L * (static_cast<double>(i) / n);
    off.back() = L;
    return off;
  }
  std::vector<double> steps;
  double s = s0, total = 0;
  while (total < L) {
    double step = std::min(s, cap);
    steps.push_back(step);
    total += step;
    s *= r;
  }
  double scale = L / total;
  std::vector<double> off(steps.size() + 1, 0.0);
  double cum = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    cum += steps[i] * scale;
    off[i + 1] = cum;
  }
  off.back() = L;
  return off;
}

/// Ascending points on [a,b], spacing ~ s0 at a, growing toward b.
std::vector<double> graded_asc(double a, double b, double s0, double r, double cap) {
  auto off = graded_offsets(b - a, s0, r, cap);
  std::vector<double> xs(off.size());
  for (std::size_t i = 0; i < off.size(); ++i) xs[i] = a + off[i];
  xs.front() = a;
  xs.back() = b;
  return xs;
}

/// Ascending points on [a,b], spacing ~ s0 at b, growing toward a.
std::vector<double> graded_desc(double a, double b, double s0, double r, double cap) {
  auto off = graded_offsets(b - a, s0, r, cap);
  std::vector<double> xs(off.size());
  for (std::size_t i = 0; i < off.size(); ++i) xs[i] = b - off[off.size() - 1 - i];
  xs.front() = a;
  xs.back() = b;
  return xs;
}

/// Fine spacing ~ s0 at both ends, coarsening toward the middle; at least
/// min_n intervals in total.
std::vector<double> graded_two_sided(double a, double b, double s0, double r,
                                     double cap, int min_n) {
  double L = b - a;
  double half_cap = std::min(cap, L / min_n);
  auto off = graded_offsets(L / 2, s0, r, half_cap);
  std::vector<double> xs;
  xs.reserve(2 * off.size());
  for (double c : off) xs.push_back(a + c);
  for (std::size_t i = off.size() - 1; i-- > 0;) xs.push_back(b - off[i]);
  xs.front() = a;
  xs.back() = b;
  return xs;
}

/// Uniform fill targeting spacing ~ target_h.
std::vector<double> uniform_fill(double a, double b, double target_h) {
  int n = std::max(1, static_cast<int>(std::llround((b - a) / target_h)));
  return uniform_pts(a, b, n);
}

/// Passage column coordinates: n even intervals anchored so that the site
/// coordinate s itself is a grid point (needed for the vertical trace at s).
std::vector<double> passage_columns(double s, double d, int n_d) {
  std::vector<double> xs = uniform_pts(s - d / 2, s, n_d / 2);
  std::vector<double> right = uniform_pts(s, s + d / 2, n_d / 2);
  xs.insert(xs.end(), right.begin() + 1, right.end());
  return xs;
}

struct MeshBuilder {
  Mesh2D mesh;
  std::map<std::pair<double, double>, int> node_index;

  int node(double x, double y) {
    auto key = std::make_pair(x, y);
    auto it = node_index.find(key);
    if (it != node_index.end()) return it->second;
    int id = static_cast<int>(mesh.nodes.size());
    mesh.nodes.push_back({x, y});
    node_index.emplace(key, id);
    return id;
  }

  void add_grid(const std::vector<double>& xs, const std::vector<double>& ys,
                Region tag) {
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
        int ll = node(xs[i], ys[j]);
        int lr = node(xs[i + 1], ys[j]);
        int ur = node(xs[i + 1], ys[j + 1]);
        int ul = node(xs[i], ys[j + 1]);
        mesh.tris.push_back({ll, lr, ur});
        mesh.region.push_back(tag);
        mesh.tris.push_back({ll, ur, ul});
        mesh.region.push_back(tag);
      }
    }
  }
};

double tri_area(const Mesh2D& m, int t) {
  const auto& a = m.nodes[m.tris[t][0]];
  const auto& b = m.nodes[m.tris[t][1]];
  const auto& c = m.nodes[m.tris[t][2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

double tri_diameter(const Mesh2D& m, int t) {
  double d = 0;
  for (int e = 0; e < 3; ++e) {
    const auto& p = m.nodes[m.tris[t][e]];
    const auto& q = m.nodes[m.tris[t][(e + 1) % 3]];
    d = std::max(d, std::hypot(q[0] - p[0], q[1] - p[1]));
  }
  return d;
}

Region classify_centroid(double cx, double cy, double h,
                         const std::vector<double>& sites, double d) {
  if (cy < 0) return Region::Strip;
  if (cy < h) {
    for (double s : sites)
      if (std::abs(cx - s) < d / 2) return Region::Passage;
    throw numerical_error("mesh: passage centroid outside passage bounds");
  }
  return Region::Room;
}

}  // namespace

DerivedScales validate_params(const GeometryParams& p) {
  std::ostringstream msg;
  if (!(std::isfinite(p.ell_minus) && std::isfinite(p.ell_plus)))
    reject("validate_params: infinite interval ends are not supported; "
           "choose a finite truncation (ell_minus, ell_plus)");
  if (!(p.ell_minus < 0 && 0 < p.ell_plus))
    reject("validate_params: interval must satisfy ell_minus < 0 < ell_plus");
  if (!(p.alpha > 0)) reject("validate_params: alpha must be positive");
  if (!(p.beta > 0 && p.beta < 0.5))
    reject("validate_params: beta must lie in (0, 1/2)");
  if (!(p.gamma > 0)) reject("validate_params: gamma must be positive");
  if (!(p.eps > 0)) reject("validate_params: eps must be positive");

  const double bound1 = std::pow(2 * p.gamma, -1.0 / p.alpha);
  const double bound2 = std::pow(p.gamma, -1.0 / (p.alpha + 1 - p.beta));
  const double bound3 = std::min(p.gamma, 1.0 / p.gamma);
  auto check = [&](double bound, const char* name) {
    if (!(p.eps < bound)) {
      msg << "validate_params: eps = " << p.eps << " violates eps < " << name
          << " = " << bound;
      reject(msg.str());
    }
  };
  check(bound1, "(2*gamma)^(-1/alpha)");
  check(-p.ell_minus, "|ell_minus|");
  check(p.ell_plus, "ell_plus");
  check(bound2, "gamma^(-1/(alpha+1-beta))");
  check(bound3, "min{gamma, 1/gamma}");

  DerivedScales s;
  s.d = p.gamma * std::pow(p.eps, p.alpha + 1);
  s.h = std::pow(p.eps, p.alpha);
  s.b = std::pow(p.eps, p.beta);
  s.eps_max = std::min({bound1, -p.ell_minus, p.ell_plus, bound2, bound3});

  const double scale_ref = std::max({std::abs(p.ell_minus), p.ell_plus, 1.0});
  if (s.d < 1e-13 * scale_ref)
    reject("validate_params: degenerate geometry, passage width d below "
           "floating-point resolution relative to the strip length");

  // Consequences of admissibility; failures here would be internal errors.
  assert(s.d <= p.eps / 2 + 1e-15);
  assert(s.d <= s.b + 1e-15);
  return s;
}

Mesh2D build_mesh(const GeometryParams& p, const MeshControl& ctrl) {
  return build_waveguide_mesh(p, ctrl, {0.0});
}

Mesh2D build_waveguide_mesh(const GeometryParams& p, const MeshControl& ctrl,
                            const std::vector<double>& sites) {
  DerivedScales sc = validate_params(p);
  if (sites.empty()) reject("build_mesh: at least one site required");
  if (!std::is_sorted(sites.begin(), sites.end()))
    reject("build_mesh: sites must be sorted");
  for (std::size_t i = 0; i + 1 < sites.size(); ++i)
    if (sites[i + 1] - sites[i] <= sc.b)
      reject("build_mesh: rooms overlap, site spacing must exceed b");
  for (double s : sites)
    if (!(s - p.eps > p.ell_minus && s + p.eps < p.ell_plus))
      reject("build_mesh: site too close to the interval ends");

  const double strip_h = ctrl.strip_h > 0 ? ctrl.strip_h : p.eps / 8;
  const double room_h = ctrl.room_h > 0 ? ctrl.room_h : sc.b / 16;
  const int n_d = std::max(4, ctrl.n_d + (ctrl.n_d % 2));
  const int n_h = std::max(4, ctrl.n_h);
  const double r = ctrl.grading;
  if (!(r > 1.0 && r <= 4.0))
    reject("build_mesh: grading ratio must lie in (1, 4]");
  if (!(strip_h <= p.eps && strip_h > 0))
    reject("build_mesh: strip target width must lie in (0, eps]");

  // Vertical strip subdivisions: honor the requested layer count but deepen the
  // grid until the thinnest column (width d/n_d) keeps aspect ratio <= 8. The
  // tensor structure of the strip is load-bearing for the column-averaging
  // identities, so the cap is enforced by refining y rather than coarsening x.
  int n2 = std::max(2, static_cast<int>(std::ceil(p.eps / strip_h - 1e-9)));
  if (ctrl.strip_layers > 0) n2 = std::max(n2, ctrl.strip_layers);
  int aspect_layers = static_cast<int>(std::ceil(p.eps * n_d / (8.0 * sc.d) - 1e-9));
  n2 = std::max(n2, aspect_layers);

  const double fine = sc.d / n_d;

  MeshBuilder bld;
  bld.mesh.params = p;
  bld.mesh.scales = sc;
  bld.mesh.sites = sites;

  // Strip columns: uniform fill between sites, graded fans within eps/2 of
  // each passage, passage columns shared exactly with the passage grid.
  std::vector<double> xs;
  auto append = [&xs](const std::vector<double>& part) {
    std::size_t start = xs.empty() ? 0 : 1;
    xs.insert(xs.end(), part.begin() + start, part.end());
  };
  double prev = p.ell_minus;
  for (double s : sites) {
    append(uniform_fill(prev, s - p.eps / 2, strip_h));
    append(graded_desc(s - p.eps / 2, s - sc.d / 2, fine, r, strip_h));
    append(passage_columns(s, sc.d, n_d));
    append(graded_asc(s + sc.d / 2, s + p.eps / 2, fine, r, strip_h));
    prev = s + p.eps / 2;
  }
  append(uniform_fill(prev, p.ell_plus, strip_h));

  std::vector<double> ys = uniform_pts(-p.eps, 0.0, n2);
  ys.back() = 0.0;

  bld.add_grid(xs, ys, Region::Strip);
  bld.mesh.strip_x_lines = xs;
  bld.mesh.strip_y_lines = ys;

  std::vector<double> pass_y = graded_two_sided(0.0, sc.h, fine, r, sc.h / n_h, n_h);
  std::vector<double> room_y = graded_asc(sc.h, sc.h + sc.b, fine, r, room_h);
  for (double s : sites) {
    std::vector<double> pass_x = passage_columns(s, sc.d, n_d);
    std::vector<double> room_x = graded_desc(s - sc.b / 2, s - sc.d / 2, fine, r, room_h);
    room_x.insert(room_x.end(), pass_x.begin() + 1, pass_x.end());
    auto right = graded_asc(s + sc.d / 2, s + sc.b / 2, fine, r, room_h);
    room_x.insert(room_x.end(), right.begin() + 1, right.end());
    bld.add_grid(pass_x, pass_y, Region::Passage);
    bld.add_grid(room_x, room_y, Region::Room);
  }

  Mesh2D& m = bld.mesh;

  // Verify the construction tags against centroid classification and collect
  // per-region mesh sizes.
  for (int t = 0; t < m.n_tris(); ++t) {
    double cx = 0, cy = 0;
    for (int v : m.tris[t]) {
      cx += m.nodes[v][0] / 3.0;
      cy += m.nodes[v][1] / 3.0;
    }
    Region cls = classify_centroid(cx, cy, sc.h, sites, sc.d);
    if (cls != m.region[t]) throw numerical_error("mesh: region tag mismatch");
    if (tri_area(m, t) <= 0) throw numerical_error("mesh: non-positive element area");
    double dia = tri_diameter(m, t);
    auto it = m.h_by_region.find(cls);
    if (it == m.h_by_region.end() || it->second < dia) m.h_by_region[cls] = dia;
  }

  // Edge incidence: boundary edges appear once, interface/trace edges twice.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : m.tris) {
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  auto in_passage_span = [&](double x) {
    for (double s : sites)
      if (std::abs(x - s) <= sc.d / 2 + 1e-12) return true;
    return false;
  };
  auto at_site = [&](double x) {
    for (double s : sites)
      if (x == s) return true;
    return false;
  };
  for (const auto& [key, count] : edge_count) {
    const auto& pa = m.nodes[key.first];
    const auto& pb = m.nodes[key.second];
    if (count == 1) {
      m.boundary_edges.push_back({key.first, key.second, EdgeTag::Neumann});
      continue;
    }
    if (count != 2) throw numerical_error("mesh: non-manifold edge");
    if (pa[1] == 0.0 && pb[1] == 0.0 && in_passage_span(pa[0]) && in_passage_span(pb[0]))
      m.dminus_edges.push_back({key.first, key.second, EdgeTag::DMinus});
    else if (pa[1] == sc.h && pb[1] == sc.h && in_passage_span(pa[0]) &&
             in_passage_span(pb[0]))
      m.dplus_edges.push_back({key.first, key.second, EdgeTag::DPlus});
    else if (pa[0] == pb[0] && at_site(pa[0]) && pa[1] <= 0.0 && pb[1] <= 0.0)
      m.dzero_edges.push_back({key.first, key.second, EdgeTag::DZero});
  }
  if (m.dminus_edges.size() < sites.size() * static_cast<std::size_t>(n_d) ||
      m.dplus_edges.size() < sites.size() * static_cast<std::size_t>(n_d))
    throw numerical_error("mesh: passage trace edges missing");
  return m;
}

Mesh2D build_rect_mesh(double x0, double y0, double lx, double ly, int nx, int ny) {
  if (nx < 1 || ny < 1 || lx <= 0 || ly <= 0)
    reject("build_rect_mesh: invalid grid parameters");
  MeshBuilder bld;
  std::vector<double> xs = uniform_pts(x0, x0 + lx, nx);
  std::vector<double> ys = uniform_pts(y0, y0 + ly, ny);
  bld.add_grid(xs, ys, Region::Strip);
  Mesh2D& m = bld.mesh;
  m.strip_x_lines = xs;
  m.strip_y_lines = ys;
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : m.tris)
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  for (const auto& [key, count] : edge_count)
    if (count == 1)
      m.boundary_edges.push_back({key.first, key.second, EdgeTag::Neumann});
  for (int t = 0; t < m.n_tris(); ++t) {
    double dia = tri_diameter(m, t);
    auto it = m.h_by_region.find(Region::Strip);
    if (it == m.h_by_region.end() || it->second < dia)
      m.h_by_region[Region::Strip] = dia;
  }
  return m;
}

double mesh_area(const Mesh2D& mesh) {
  double area = 0;
  for (int t = 0; t < mesh.n_tris(); ++t) area += tri_area(mesh, t);
  return area;
}

}  // namespace rpwg
