#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace enpod {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class BoundaryMarker : int { Other = 0, OuterCircle = 1, InnerCircle = 2 };

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

/// Conforming 2D triangulation with counterclockwise triangles.
///
/// Edges are derived on construction. Local edge k of a triangle joins its
/// local vertices (k+1)%3 and (k+2)%3, i.e. it is opposite vertex k.
class Mesh {
 public:
  /// Reorients clockwise triangles; throws InvariantError on degenerate
  /// triangles, out-of-range indices or non-conforming edges.
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
       std::vector<BoundaryMarker> vertex_markers);

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::array<int, 3>>& triangle_edges() const { return triangle_edges_; }
  const std::vector<BoundaryMarker>& vertex_markers() const { return vertex_markers_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  /// Number of triangles adjacent to each edge (1 on the boundary, 2 inside).
  const std::vector<int>& edge_valence() const { return edge_valence_; }
  bool is_boundary_edge(std::size_t e) const { return edge_valence_[e] == 1; }
  /// Marker of a boundary edge; interior edges report Other.
  BoundaryMarker edge_marker(std::size_t e) const { return edge_markers_[e]; }

  double signed_area(std::size_t t) const;
  double area() const;
  /// Maximum triangle circumdiameter.
  double h() const { return h_; }

  /// FNV-1a hash of coordinates, connectivity and markers.
  std::uint64_t hash() const;

 private:
  void build_edges();

  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryMarker> vertex_markers_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<int> edge_valence_;
  std::vector<BoundaryMarker> edge_markers_;
  double h_ = 0.0;
};

struct AnnulusGeometry {
  double r1 = 1.0;  ///< outer radius
  double r2 = 0.1;  ///< inner radius
  double c1 = 0.5;  ///< inner centre x
  double c2 = 0.0;  ///< inner centre y
};

/// Structured transfinite mesh between the outer circle and an offset inner
/// circle. Each quad is split along its shorter diagonal.
Mesh generate_offset_annulus(int n_theta, int n_r, const AnnulusGeometry& geometry);

/// n x n vertex grid on [0,1]^2; all boundary vertices are marked Other.
Mesh generate_unit_square(int n);

void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);

}  // namespace enpod
