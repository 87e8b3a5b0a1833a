#include "ks/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <unordered_map>

namespace ks {

namespace {

real signed_area(const vec2& a, const vec2& b, const vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

real segment_distance(const vec2& p, const vec2& a, const vec2& b) {
  const vec2 d = b - a;
  const real len2 = d.squaredNorm();
  real t = len2 > 0 ? (p - a).dot(d) / len2 : 0;
  t = std::clamp(t, real(0), real(1));
  return (p - (a + t * d)).norm();
}

real angle_at(const vec2& apex, const vec2& u, const vec2& v) {
  const vec2 a = u - apex, b = v - apex;
  return std::atan2(std::abs(a.x() * b.y() - a.y() * b.x()), a.dot(b));
}

// Lawson edge flips towards the Delaunay triangulation. Boundary edges are
// never touched.
void delaunay_flip(const Eigen::Matrix2Xd& verts, std::vector<Eigen::Vector3i>& tris) {
  for (int pass = 0; pass < 200; ++pass) {
    std::unordered_map<std::uint64_t, std::pair<int, int>> owner;
    owner.reserve(tris.size() * 3);
    for (int t = 0; t < int(tris.size()); ++t) {
      for (int k = 0; k < 3; ++k) {
        auto key = edge_key(tris[t][k], tris[t][(k + 1) % 3]);
        auto [it, fresh] = owner.try_emplace(key, t, -1);
        if (!fresh) it->second.second = t;
      }
    }
    std::vector<bool> touched(tris.size(), false);
    int flips = 0;
    for (const auto& [key, pair] : owner) {
      const auto [t1, t2] = pair;
      if (t2 < 0 || touched[t1] || touched[t2]) continue;
      const int a = int(key >> 32), b = int(key & 0xffffffffu);
      auto opposite = [&](int t) {
        for (int k = 0; k < 3; ++k)
          if (tris[t][k] != a && tris[t][k] != b) return tris[t][k];
        return -1;
      };
      const int c = opposite(t1), d = opposite(t2);
      const vec2 pa = verts.col(a), pb = verts.col(b), pc = verts.col(c), pd = verts.col(d);
      if (angle_at(pc, pa, pb) + angle_at(pd, pa, pb) <= pi + 1e-12) continue;
      // orient so that (p, q, c) is counterclockwise for the shared edge (p, q)
      int p = a, q = b;
      if (signed_area(pa, pb, pc) < 0) std::swap(p, q);
      const Eigen::Vector3i n1(p, d, c), n2(d, q, c);
      if (signed_area(verts.col(p), verts.col(d), verts.col(c)) <= 0 ||
          signed_area(verts.col(d), verts.col(q), verts.col(c)) <= 0)
        continue;
      tris[t1] = n1;
      tris[t2] = n2;
      touched[t1] = touched[t2] = true;
      ++flips;
    }
    if (flips == 0) return;
  }
}

// One ring of points on a circle; `offset` is an angular shift.
std::vector<int> add_ring(std::vector<vec2>& pts, real radius, int count, real offset) {
  std::vector<int> ids;
  for (int k = 0; k < count; ++k) {
    const real th = offset + 2 * pi * k / count;
    ids.push_back(int(pts.size()));
    pts.emplace_back(radius * std::cos(th), radius * std::sin(th));
  }
  return ids;
}

real ring_angle(const std::vector<vec2>& pts, int id) {
  real th = std::atan2(pts[id].y(), pts[id].x());
  return th < 0 ? th + 2 * pi : th;
}

// Stitches two concentric rings (outer radius > inner radius) with a strip of
// counterclockwise triangles, advancing by angle.
void zip_rings(const std::vector<vec2>& pts, const std::vector<int>& outer,
               const std::vector<int>& inner, std::vector<Eigen::Vector3i>& tris) {
  // unwrapped angles, starting from each ring's first point
  auto unwrap = [&](const std::vector<int>& ring) {
    std::vector<real> th(ring.size() + 1);
    const real base = ring_angle(pts, ring[0]);
    for (std::size_t k = 0; k < ring.size(); ++k) {
      real a = ring_angle(pts, ring[k]);
      while (a < base - 1e-12) a += 2 * pi;
      if (k > 0) while (a <= th[k - 1]) a += 2 * pi;
      th[k] = a;
    }
    th[ring.size()] = th[0] + 2 * pi;
    return th;
  };
  const auto to = unwrap(outer);
  // align the inner sequence so it starts at or after the outer start
  const int ni = int(inner.size()), no = int(outer.size());
  int shift = 0;
  {
    real best = 1e300;
    for (int k = 0; k < ni; ++k) {
      real a = ring_angle(pts, inner[k]);
      real d = a - to[0];
      while (d < 0) d += 2 * pi;
      if (d > 2 * pi - 1e-12) d -= 2 * pi;
      if (d < best) best = d, shift = k;
    }
  }
  std::vector<int> in(ni + 1);
  std::vector<real> tin(ni + 1);
  for (int k = 0; k <= ni; ++k) {
    in[k] = inner[(shift + k) % ni];
    real a = ring_angle(pts, in[k]);
    while (a < to[0] - 1e-12) a += 2 * pi;
    if (k > 0) while (a <= tin[k - 1]) a += 2 * pi;
    tin[k] = a;
  }
  std::vector<int> out(no + 1);
  for (int k = 0; k <= no; ++k) out[k] = outer[k % no];

  int a = 0, b = 0;
  while (a < no || b < ni) {
    const bool advance_outer =
        b >= ni || (a < no && 0.5 * (to[a] + to[a + 1]) <= 0.5 * (tin[b] + tin[b + 1]));
    if (advance_outer) {
      tris.emplace_back(out[a], out[a + 1], in[b]);
      ++a;
    } else {
      tris.emplace_back(out[a], in[b + 1], in[b]);
      ++b;
    }
  }
}

Mesh build_square(int res) {
  const int n = res + 1;
  Eigen::Matrix2Xd v(2, n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) v.col(j * n + i) = vec2(real(i) / res, real(j) / res);
  Eigen::Matrix3Xi t(3, 2 * res * res);
  int c = 0;
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      const int a = j * n + i, b = a + 1, d = a + n, e = d + 1;
      if ((i + j) % 2 == 0) {
        t.col(c++) = Eigen::Vector3i(a, b, e);
        t.col(c++) = Eigen::Vector3i(a, e, d);
      } else {
        t.col(c++) = Eigen::Vector3i(a, b, d);
        t.col(c++) = Eigen::Vector3i(b, e, d);
      }
    }
  }
  Mesh m = make_mesh(std::move(v), std::move(t));
  m.area = 1.0;  // exact for the unit square
  return m;
}

Mesh finish(const std::vector<vec2>& pts, std::vector<Eigen::Vector3i>& tris) {
  Eigen::Matrix2Xd v(2, pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) v.col(k) = pts[k];
  delaunay_flip(v, tris);
  Eigen::Matrix3Xi t(3, tris.size());
  for (std::size_t k = 0; k < tris.size(); ++k) t.col(k) = tris[k];
  return make_mesh(std::move(v), std::move(t));
}

// Concentric rings from the outer polygon inward; spacing follows the
// boundary edge length so the elements stay close to equilateral.
Mesh build_disk(int n) {
  const real h = 2 * pi / n;
  const real dr = h * std::sqrt(3.0) / 2;
  const int rings = std::max(1, int(std::lround(1.0 / dr)));
  std::vector<vec2> pts;
  std::vector<Eigen::Vector3i> tris;
  std::vector<int> prev = add_ring(pts, 1.0, n, 0.0);
  for (int j = 1; j < rings; ++j) {
    const real r = 1.0 - real(j) / rings;
    const int cnt = std::max(5, int(std::lround(2 * pi * r / h)));
    auto cur = add_ring(pts, r, cnt, (j % 2) * pi / cnt);
    zip_rings(pts, prev, cur, tris);
    prev = std::move(cur);
  }
  const int center = int(pts.size());
  pts.emplace_back(0.0, 0.0);
  for (std::size_t k = 0; k < prev.size(); ++k)
    tris.emplace_back(prev[k], prev[(k + 1) % prev.size()], center);
  return finish(pts, tris);
}

Mesh build_annulus(int n) {
  const int n_inner = int(std::lround(n / 2.0));
  if (n_inner < 3) throw Error(ErrorKind::invalid_argument, "annulus resolution too small to triangulate");
  const real h = 2 * pi / n;
  const real dr = h * std::sqrt(3.0) / 2;
  const int rings = std::max(1, int(std::lround(0.5 / dr)));
  std::vector<vec2> pts;
  std::vector<Eigen::Vector3i> tris;
  std::vector<int> prev = add_ring(pts, 1.0, n, 0.0);
  for (int j = 1; j <= rings; ++j) {
    const real r = 1.0 - 0.5 * real(j) / rings;
    const int cnt = j == rings ? n_inner : std::max(3, int(std::lround(2 * pi * r / h)));
    auto cur = add_ring(pts, r, cnt, (j % 2) * pi / cnt);
    zip_rings(pts, prev, cur, tris);
    prev = std::move(cur);
  }
  return finish(pts, tris);
}

}  // namespace

real Mesh::min_angle_deg() const {
  real best = pi;
  for (Eigen::Index t = 0; t < num_triangles(); ++t) {
    const vec2 a = vertex(triangles(0, t)), b = vertex(triangles(1, t)), c = vertex(triangles(2, t));
    best = std::min({best, angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)});
  }
  return best * 180 / pi;
}

real Mesh::min_edge_length() const {
  real best = 1e300;
  for (Eigen::Index t = 0; t < num_triangles(); ++t)
    for (int k = 0; k < 3; ++k)
      best = std::min(best, (vertex(triangles(k, t)) - vertex(triangles((k + 1) % 3, t))).norm());
  return best;
}

real Mesh::max_edge_length() const {
  real best = 0;
  for (Eigen::Index t = 0; t < num_triangles(); ++t)
    for (int k = 0; k < 3; ++k)
      best = std::max(best, (vertex(triangles(k, t)) - vertex(triangles((k + 1) % 3, t))).norm());
  return best;
}

real Mesh::diameter() const {
  real best = 0;
  for (Eigen::Index e = 0; e < boundary_edges.cols(); ++e)
    for (Eigen::Index f = e + 1; f < boundary_edges.cols(); ++f)
      best = std::max(best, (vertex(boundary_edges(0, e)) - vertex(boundary_edges(0, f))).norm());
  return best;
}

Builtin parse_builtin(std::string_view name) {
  if (name == "unit_square") return Builtin::unit_square;
  if (name == "disk") return Builtin::disk;
  if (name == "annulus") return Builtin::annulus;
  throw Error(ErrorKind::invalid_argument, "unsupported builtin domain '" + std::string(name) + "'");
}

std::string builtin_name(Builtin b) {
  switch (b) {
    case Builtin::unit_square: return "unit_square";
    case Builtin::disk: return "disk";
    case Builtin::annulus: return "annulus";
  }
  return "?";
}

Mesh build_builtin(Builtin name, int resolution) {
  if (resolution < 4) throw Error(ErrorKind::invalid_argument, "resolution must be at least 4");
  switch (name) {
    case Builtin::unit_square: return build_square(resolution);
    case Builtin::disk: return build_disk(resolution);
    case Builtin::annulus: return build_annulus(resolution);
  }
  throw Error(ErrorKind::invalid_argument, "unsupported builtin domain");
}

Mesh build_builtin(std::string_view name, int resolution) {
  return build_builtin(parse_builtin(name), resolution);
}

Mesh make_mesh(Eigen::Matrix2Xd vertices, Eigen::Matrix3Xi triangles) {
  Mesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  const Eigen::Index nv = m.num_vertices(), nt = m.num_triangles();
  if (nv < 3 || nt < 1) throw Error(ErrorKind::invalid_mesh, "mesh needs at least one triangle");

  std::vector<bool> used(nv, false);
  std::unordered_map<std::uint64_t, std::pair<int, std::pair<int, int>>> edges;  // count, oriented edge
  edges.reserve(3 * nt);
  for (Eigen::Index t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) {
      const int i = m.triangles(k, t);
      if (i < 0 || i >= nv) throw Error(ErrorKind::invalid_mesh, "triangle " + std::to_string(t) + " has an out-of-range vertex index");
      used[i] = true;
    }
    const real a = signed_area(m.vertex(m.triangles(0, t)), m.vertex(m.triangles(1, t)), m.vertex(m.triangles(2, t)));
    if (!(a > 0)) throw Error(ErrorKind::invalid_mesh, "triangle " + std::to_string(t) + " is inverted or degenerate");
    m.area += a;
    for (int k = 0; k < 3; ++k) {
      const int i = m.triangles(k, t), j = m.triangles((k + 1) % 3, t);
      auto& slot = edges[edge_key(i, j)];
      if (++slot.first > 2) throw Error(ErrorKind::invalid_mesh, "non-manifold edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
      slot.second = {i, j};
    }
  }
  for (Eigen::Index i = 0; i < nv; ++i)
    if (!used[i]) throw Error(ErrorKind::invalid_mesh, "vertex " + std::to_string(i) + " belongs to no triangle");

  std::vector<std::pair<int, int>> bnd;
  for (const auto& [key, slot] : edges)
    if (slot.first == 1) bnd.push_back(slot.second);
  std::sort(bnd.begin(), bnd.end());

  m.boundary_vertex.assign(nv, false);
  std::unordered_map<int, int> next;
  for (auto [i, j] : bnd) {
    if (!next.emplace(i, j).second) throw Error(ErrorKind::invalid_mesh, "boundary is pinched at vertex " + std::to_string(i));
    m.boundary_vertex[i] = m.boundary_vertex[j] = true;
  }
  // walk loops and store edges loop by loop
  m.boundary_edges.resize(2, bnd.size());
  std::unordered_map<int, bool> seen;
  Eigen::Index c = 0;
  for (auto [start, unused] : bnd) {
    (void)unused;
    if (seen.count(start)) continue;
    int v = start;
    do {
      seen[v] = true;
      auto it = next.find(v);
      if (it == next.end()) throw Error(ErrorKind::invalid_mesh, "open boundary chain");
      m.boundary_edges.col(c++) = Eigen::Vector2i(v, it->second);
      v = it->second;
    } while (v != start);
    ++m.boundary_loops;
  }

  const long chi = long(nv) - long(edges.size()) + long(nt);
  m.genus = int(1 - chi);
  if (m.genus < 0 || m.boundary_loops != m.genus + 1)
    throw Error(ErrorKind::invalid_mesh, "mesh is not a connected planar domain (loops=" +
                                             std::to_string(m.boundary_loops) + ", chi=" + std::to_string(chi) + ")");
  return m;
}

namespace {

// Conforming longest-edge bisection (Rivara). A triangle is split across its
// longest edge only once the neighbour shares that edge as its own longest;
// otherwise the neighbour goes first. Angles stay above half the initial ones.
struct Bisector {
  std::vector<vec2> pts;
  std::vector<Eigen::Vector3i> tris;
  std::unordered_map<std::uint64_t, std::vector<int>> edge_tris;

  // Local index of the vertex opposite the longest edge; ties go to the edge
  // with the smaller key so neighbours agree.
  int longest(int t) const {
    const auto& v = tris[t];
    int best = 0;
    real best_len = -1;
    std::uint64_t best_key = 0;
    for (int k = 0; k < 3; ++k) {
      const int a = v((k + 1) % 3), b = v((k + 2) % 3);
      const real len = (pts[a] - pts[b]).squaredNorm();
      const std::uint64_t key = edge_key(a, b);
      if (len > best_len * (1 + 1e-12) || (len >= best_len * (1 - 1e-12) && key < best_key)) {
        best = k;
        best_len = len;
        best_key = key;
      }
    }
    return best;
  }

  real longest_length(int t) const {
    const int k = longest(t);
    return (pts[tris[t]((k + 1) % 3)] - pts[tris[t]((k + 2) % 3)]).norm();
  }

  void link(int t) {
    for (int k = 0; k < 3; ++k) edge_tris[edge_key(tris[t](k), tris[t]((k + 1) % 3))].push_back(t);
  }

  void unlink(int t) {
    for (int k = 0; k < 3; ++k) {
      auto& list = edge_tris[edge_key(tris[t](k), tris[t]((k + 1) % 3))];
      list.erase(std::find(list.begin(), list.end(), t));
    }
  }

  int neighbour(int t, std::uint64_t key) const {
    for (int s : edge_tris.at(key))
      if (s != t) return s;
    return -1;
  }

  // Splits t across the edge opposite local vertex k at vertex m.
  void split(int t, int k, int m) {
    const int c = tris[t](k), a = tris[t]((k + 1) % 3), b = tris[t]((k + 2) % 3);
    unlink(t);
    tris[t] = Eigen::Vector3i(c, a, m);
    tris.emplace_back(c, m, b);
    link(t);
    link(int(tris.size()) - 1);
  }

  void bisect(int t) {
    for (;;) {
      const int k = longest(t);
      const int a = tris[t]((k + 1) % 3), b = tris[t]((k + 2) % 3);
      const std::uint64_t key = edge_key(a, b);
      const int n = neighbour(t, key);
      if (n >= 0 && edge_key(tris[n]((longest(n) + 1) % 3), tris[n]((longest(n) + 2) % 3)) != key) {
        bisect(n);
        continue;
      }
      const int m = int(pts.size());
      pts.push_back(0.5 * (pts[a] + pts[b]));
      split(t, k, m);
      if (n >= 0) split(n, longest(n), m);
      return;
    }
  }
};

}  // namespace

Mesh refine_toward(const Mesh& mesh, const vec2& point, real h_min, real grading) {
  if (!(h_min > 0) || !(grading > 0)) throw Error(ErrorKind::invalid_argument, "refinement needs h_min > 0 and grading > 0");
  Bisector bs;
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) bs.pts.push_back(mesh.vertex(i));
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
    bs.tris.push_back(mesh.triangles.col(t));
    bs.link(int(t));
  }
  auto too_big = [&](int t) {
    const auto& v = bs.tris[t];
    const real len = bs.longest_length(t);
    const real d = std::min({(bs.pts[v(0)] - point).norm(), (bs.pts[v(1)] - point).norm(), (bs.pts[v(2)] - point).norm()});
    return len > std::max(h_min, grading * std::max<real>(0, d - len));
  };
  for (;;) {
    std::vector<int> marked;
    for (int t = 0; t < int(bs.tris.size()); ++t)
      if (too_big(t)) marked.push_back(t);
    if (marked.empty()) break;
    for (int t : marked)
      if (too_big(t)) bs.bisect(t);
  }
  Eigen::Matrix2Xd v(2, bs.pts.size());
  for (std::size_t k = 0; k < bs.pts.size(); ++k) v.col(k) = bs.pts[k];
  Eigen::Matrix3Xi t(3, bs.tris.size());
  for (std::size_t k = 0; k < bs.tris.size(); ++k) t.col(k) = bs.tris[k];
  Mesh out = make_mesh(std::move(v), std::move(t));
  out.area = mesh.area;
  return out;
}

Mesh load_mesh(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next_number = [&](const char* what) -> std::string {
    if (pos >= tokens.size()) throw Error(ErrorKind::parse, std::string("unexpected end of mesh file while reading ") + what);
    return tokens[pos++];
  };
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw Error(ErrorKind::parse, "expected integer, got '" + s + "'");
    return v;
  };
  auto to_real = [&](const std::string& s) {
    std::size_t used = 0;
    real v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || !std::isfinite(v)) throw Error(ErrorKind::parse, "expected real, got '" + s + "'");
    return v;
  };
  const long nv = to_int(next_number("vertex count"));
  const long nt = to_int(next_number("triangle count"));
  if (nv < 3 || nt < 1) throw Error(ErrorKind::parse, "header must give V >= 3 and T >= 1");
  Eigen::Matrix2Xd v(2, nv);
  for (long i = 0; i < nv; ++i) {
    v(0, i) = to_real(next_number("vertex"));
    v(1, i) = to_real(next_number("vertex"));
  }
  Eigen::Matrix3Xi t(3, nt);
  for (long i = 0; i < nt; ++i)
    for (int k = 0; k < 3; ++k) t(k, i) = int(to_int(next_number("triangle")));
  if (pos != tokens.size()) throw Error(ErrorKind::parse, "trailing data after last triangle");
  return make_mesh(std::move(v), std::move(t));
}

std::string save_mesh(const Mesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) out << mesh.vertices(0, i) << ' ' << mesh.vertices(1, i) << '\n';
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t)
    out << mesh.triangles(0, t) << ' ' << mesh.triangles(1, t) << ' ' << mesh.triangles(2, t) << '\n';
  return out.str();
}

real distance_to_boundary_edges(const Mesh& mesh, const vec2& p) {
  real best = 1e300;
  for (Eigen::Index e = 0; e < mesh.boundary_edges.cols(); ++e)
    best = std::min(best, segment_distance(p, mesh.vertex(mesh.boundary_edges(0, e)), mesh.vertex(mesh.boundary_edges(1, e))));
  return best;
}

vec2 nearest_boundary_point(const Mesh& mesh, const vec2& p) {
  real best = 1e300;
  vec2 out = p;
  for (Eigen::Index e = 0; e < mesh.boundary_edges.cols(); ++e) {
    const vec2 a = mesh.vertex(mesh.boundary_edges(0, e)), b = mesh.vertex(mesh.boundary_edges(1, e));
    const vec2 d = b - a;
    const real t = std::clamp((p - a).dot(d) / d.squaredNorm(), real(0), real(1));
    const vec2 q = a + t * d;
    if (real dist = (p - q).norm(); dist < best) best = dist, out = q;
  }
  return out;
}

bool contains(const Mesh& mesh, const vec2& p, real tol) {
  if (distance_to_boundary_edges(mesh, p) <= tol) return true;
  // crossing number over all boundary loops handles holes
  bool inside = false;
  for (Eigen::Index e = 0; e < mesh.boundary_edges.cols(); ++e) {
    const vec2 a = mesh.vertex(mesh.boundary_edges(0, e)), b = mesh.vertex(mesh.boundary_edges(1, e));
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const real x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

real boundary_distance(const Mesh& mesh, const vec2& p) {
  const real d = distance_to_boundary_edges(mesh, p);
  const real tol = 1e-12 * std::max(real(1), mesh.max_edge_length());
  if (d > tol && !contains(mesh, p, 0))
    throw Error(ErrorKind::precondition, "point lies outside the domain");
  return d <= tol ? 0 : d;
}

}  // namespace ks
