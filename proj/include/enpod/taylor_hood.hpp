#pragma once

#include <array>
#include <functional>
#include <vector>

#include "enpod/mesh.hpp"
#include "enpod/sparse_matrix.hpp"

namespace enpod {

/// f(x, y, t) -> (fx, fy)
using VectorField = std::function<std::array<double, 2>(double, double, double)>;

/// Value and gradient of a P2 velocity field at one point.
/// grad[c][d] = d u_c / d x_d.
struct VelocitySample {
  std::array<double, 2> value{};
  std::array<std::array<double, 2>, 2> grad{};
};

/// P2 velocity / P1 pressure Taylor-Hood space on an affine triangulation.
///
/// Scalar P2 nodes are the mesh vertices (0..V-1) followed by the edge
/// midpoints (V..V+E-1). Velocity dofs are component-blocked:
/// dof = component * (V + E) + node. Pressure dofs are the vertices.
class TaylorHoodSpace {
 public:
  struct ElementGeometry {
    double area = 0.0;
    /// Constant gradients of the barycentric coordinates.
    std::array<std::array<double, 2>, 3> grad_lambda{};
  };

  /// Velocity dofs on boundary edges carrying any of `dirichlet_markers` are
  /// constrained (both components).
  explicit TaylorHoodSpace(Mesh mesh,
                           std::vector<BoundaryMarker> dirichlet_markers = {
                               BoundaryMarker::OuterCircle, BoundaryMarker::InnerCircle});

  const Mesh& mesh() const { return mesh_; }
  int num_nodes() const { return num_nodes_; }
  int n_vel() const { return 2 * num_nodes_; }
  int n_pr() const { return static_cast<int>(mesh_.num_vertices()); }
  int velocity_dof(int component, int node) const { return component * num_nodes_ + node; }

  /// Local node order: 3 vertices, then midpoints of local edges 0,1,2
  /// (edge k is opposite vertex k).
  std::array<int, 6> element_nodes(std::size_t t) const;
  const ElementGeometry& geometry(std::size_t t) const { return geometry_[t]; }
  Point node_coordinate(int node) const;
  Point map_to_physical(std::size_t t, const std::array<double, 3>& bary) const;

  const std::vector<int>& dirichlet_dofs() const { return dirichlet_dofs_; }
  bool is_dirichlet(int dof) const { return dirichlet_mask_[dof] != 0; }

  VelocitySample sample(const Vector& u, std::size_t t, const std::array<double, 3>& bary) const;

  /// Nodal interpolant of f(., t) into the velocity space.
  Vector interpolate(const VectorField& f, double t) const;
  /// Zeroes the constrained dofs.
  void zero_dirichlet(Vector& u) const;

 private:
  Mesh mesh_;
  int num_nodes_ = 0;
  std::vector<ElementGeometry> geometry_;
  std::vector<int> dirichlet_dofs_;
  std::vector<char> dirichlet_mask_;
};

/// Scalar P2 shape functions on barycentric coordinates, ordered as
/// TaylorHoodSpace::element_nodes.
struct P2Shape {
  std::array<double, 6> value;
  /// d N_a / d lambda_i
  std::array<std::array<double, 3>, 6> dlambda;
};
P2Shape p2_shape(const std::array<double, 3>& bary);

}  // namespace enpod
