#include "enpod/taylor_hood.hpp"

#include <algorithm>

#include "enpod/errors.hpp"

namespace enpod {

P2Shape p2_shape(const std::array<double, 3>& l) {
  P2Shape s{};
  for (int i = 0; i < 3; ++i) {
    s.value[i] = l[i] * (2.0 * l[i] - 1.0);
    s.dlambda[i] = {0.0, 0.0, 0.0};
    s.dlambda[i][i] = 4.0 * l[i] - 1.0;
  }
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    s.value[3 + k] = 4.0 * l[a] * l[b];
    s.dlambda[3 + k] = {0.0, 0.0, 0.0};
    s.dlambda[3 + k][a] = 4.0 * l[b];
    s.dlambda[3 + k][b] = 4.0 * l[a];
  }
  return s;
}

TaylorHoodSpace::TaylorHoodSpace(Mesh mesh, std::vector<BoundaryMarker> dirichlet_markers)
    : mesh_(std::move(mesh)) {
  const int nv = static_cast<int>(mesh_.num_vertices());
  num_nodes_ = nv + static_cast<int>(mesh_.num_edges());

  geometry_.resize(mesh_.num_triangles());
  for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) {
    const auto& tri = mesh_.triangles()[t];
    const Point& p0 = mesh_.vertices()[tri[0]];
    const Point& p1 = mesh_.vertices()[tri[1]];
    const Point& p2 = mesh_.vertices()[tri[2]];
    const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    auto& g = geometry_[t];
    g.area = 0.5 * det;
    // lambda_i = (a_i + b_i x + c_i y) / det
    g.grad_lambda[0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
    g.grad_lambda[1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
    g.grad_lambda[2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
  }

  dirichlet_mask_.assign(n_vel(), 0);
  for (std::size_t e = 0; e < mesh_.num_edges(); ++e) {
    if (!mesh_.is_boundary_edge(e)) continue;
    if (std::find(dirichlet_markers.begin(), dirichlet_markers.end(), mesh_.edge_marker(e)) ==
        dirichlet_markers.end())
      continue;
    for (int node : {mesh_.edges()[e][0], mesh_.edges()[e][1], nv + static_cast<int>(e)})
      for (int c = 0; c < 2; ++c) dirichlet_mask_[velocity_dof(c, node)] = 1;
  }
  for (int d = 0; d < n_vel(); ++d)
    if (dirichlet_mask_[d]) dirichlet_dofs_.push_back(d);
}

std::array<int, 6> TaylorHoodSpace::element_nodes(std::size_t t) const {
  const auto& tri = mesh_.triangles()[t];
  const auto& te = mesh_.triangle_edges()[t];
  const int nv = static_cast<int>(mesh_.num_vertices());
  return {tri[0], tri[1], tri[2], nv + te[0], nv + te[1], nv + te[2]};
}

Point TaylorHoodSpace::node_coordinate(int node) const {
  const int nv = static_cast<int>(mesh_.num_vertices());
  if (node < nv) return mesh_.vertices()[node];
  const auto& e = mesh_.edges()[node - nv];
  const Point& a = mesh_.vertices()[e[0]];
  const Point& b = mesh_.vertices()[e[1]];
  return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

Point TaylorHoodSpace::map_to_physical(std::size_t t, const std::array<double, 3>& l) const {
  const auto& tri = mesh_.triangles()[t];
  Point p;
  for (int i = 0; i < 3; ++i) {
    p.x += l[i] * mesh_.vertices()[tri[i]].x;
    p.y += l[i] * mesh_.vertices()[tri[i]].y;
  }
  return p;
}

VelocitySample TaylorHoodSpace::sample(const Vector& u, std::size_t t,
                                       const std::array<double, 3>& bary) const {
  if (u.size() != n_vel()) throw DimensionError("velocity vector has wrong length");
  const auto nodes = element_nodes(t);
  const auto shape = p2_shape(bary);
  const auto& g = geometry_[t];
  VelocitySample s;
  for (int a = 0; a < 6; ++a) {
    double gx = 0.0, gy = 0.0;
    for (int i = 0; i < 3; ++i) {
      gx += shape.dlambda[a][i] * g.grad_lambda[i][0];
      gy += shape.dlambda[a][i] * g.grad_lambda[i][1];
    }
    for (int c = 0; c < 2; ++c) {
      const double coef = u[velocity_dof(c, nodes[a])];
      s.value[c] += coef * shape.value[a];
      s.grad[c][0] += coef * gx;
      s.grad[c][1] += coef * gy;
    }
  }
  return s;
}

Vector TaylorHoodSpace::interpolate(const VectorField& f, double t) const {
  Vector u(n_vel());
  for (int node = 0; node < num_nodes_; ++node) {
    const Point p = node_coordinate(node);
    const auto v = f(p.x, p.y, t);
    u[velocity_dof(0, node)] = v[0];
    u[velocity_dof(1, node)] = v[1];
  }
  return u;
}

void TaylorHoodSpace::zero_dirichlet(Vector& u) const {
  if (u.size() != n_vel()) throw DimensionError("velocity vector has wrong length");
  for (int d : dirichlet_dofs_) u[d] = 0.0;
}

}  // namespace enpod
