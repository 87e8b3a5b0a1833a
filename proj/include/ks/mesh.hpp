#ifndef KS_MESH_HPP
#define KS_MESH_HPP

#include "ks/common.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ks {

/// Triangulated planar domain with Neumann boundary.
///
/// Immutable after construction. Triangles are counterclockwise, boundary
/// edges are oriented with the domain on their left and form closed loops,
/// one outer loop plus one per hole.
struct Mesh {
  Eigen::Matrix2Xd vertices;
  Eigen::Matrix3Xi triangles;
  Eigen::Matrix2Xi boundary_edges;
  std::vector<bool> boundary_vertex;
  real area = 0;
  int genus = 0;  // number of holes
  int boundary_loops = 0;

  Eigen::Index num_vertices() const { return vertices.cols(); }
  Eigen::Index num_triangles() const { return triangles.cols(); }
  vec2 vertex(Eigen::Index i) const { return vertices.col(i); }

  /// Smallest interior angle over all triangles, in degrees.
  real min_angle_deg() const;
  real min_edge_length() const;
  real max_edge_length() const;
  real diameter() const;
};

enum class Builtin { unit_square, disk, annulus };

Builtin parse_builtin(std::string_view name);
std::string builtin_name(Builtin b);

/// Builtin domains. The disk is the regular `resolution`-gon inscribed in the
/// unit circle; the annulus has outer radius 1 (resolution vertices) and
/// inner radius 1/2; the unit square has `resolution` cells per side.
Mesh build_builtin(Builtin name, int resolution);
Mesh build_builtin(std::string_view name, int resolution);

/// Builds a mesh from vertices and counterclockwise triangles: infers the
/// boundary, the boundary loops and the genus, and validates the result.
Mesh make_mesh(Eigen::Matrix2Xd vertices, Eigen::Matrix3Xi triangles);

/// Graded longest-edge bisection towards `point`: every triangle ends up with
/// its longest edge below max(h_min, grading * distance to the point). The
/// result is conforming and keeps the polygonal boundary.
Mesh refine_toward(const Mesh& mesh, const vec2& point, real h_min, real grading = 0.5);

/// Parses the plain-text format `V T`, V lines `x y`, T lines `i j k`.
Mesh load_mesh(std::string_view text);
std::string save_mesh(const Mesh& mesh);

/// True when p lies in the closure of the meshed domain.
bool contains(const Mesh& mesh, const vec2& p, real tol = 1e-12);

/// Euclidean distance from p to the nearest boundary edge. Throws if p is
/// outside the domain.
real boundary_distance(const Mesh& mesh, const vec2& p);

/// Distance to the boundary without the containment check.
real distance_to_boundary_edges(const Mesh& mesh, const vec2& p);

/// Closest point on the boundary.
vec2 nearest_boundary_point(const Mesh& mesh, const vec2& p);

}  // namespace ks

#endif  // KS_MESH_HPP
