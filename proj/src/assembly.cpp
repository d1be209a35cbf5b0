#include "enpod/assembly.hpp"

#include <algorithm>

#include "enpod/errors.hpp"
#include "enpod/quadrature.hpp"

namespace enpod {

namespace {

struct ShapeTable {
  std::vector<P2Shape> shapes;
  const QuadratureRule* rule;
};

ShapeTable shape_table(int degree) {
  ShapeTable t;
  t.rule = &triangle_rule(degree);
  for (const auto& q : t.rule->points) t.shapes.push_back(p2_shape(q.barycentric));
  return t;
}

/// Physical gradients of the six P2 shape functions at one quadrature point.
using Gradients = std::array<std::array<double, 2>, 6>;

Gradients physical_gradients(const P2Shape& s, const TaylorHoodSpace::ElementGeometry& g) {
  Gradients out{};
  for (int a = 0; a < 6; ++a)
    for (int i = 0; i < 3; ++i) {
      out[a][0] += s.dlambda[a][i] * g.grad_lambda[i][0];
      out[a][1] += s.dlambda[a][i] * g.grad_lambda[i][1];
    }
  return out;
}

void check_velocity(const TaylorHoodSpace& space, const Vector& v, const char* name) {
  if (v.size() != space.n_vel())
    throw DimensionError(std::string(name) + " has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(space.n_vel()));
}

struct LocalField {
  std::array<double, 2> value{};
  std::array<std::array<double, 2>, 2> grad{};
};

LocalField eval_local(const TaylorHoodSpace& space, const Vector& u, const std::array<int, 6>& nodes,
                      const P2Shape& s, const Gradients& g) {
  LocalField f;
  for (int a = 0; a < 6; ++a)
    for (int c = 0; c < 2; ++c) {
      const double coef = u[space.velocity_dof(c, nodes[a])];
      f.value[c] += coef * s.value[a];
      f.grad[c][0] += coef * g[a][0];
      f.grad[c][1] += coef * g[a][1];
    }
  return f;
}

/// Assembles a scalar 6x6 element kernel into both velocity components.
template <typename Kernel>
SparseMatrix assemble_vector_block_diagonal(const TaylorHoodSpace& space, int degree, Kernel kernel) {
  const auto table = shape_table(degree);
  std::vector<Triplet> trip;
  trip.reserve(space.mesh().num_triangles() * 72);
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& geo = space.geometry(t);
    const auto nodes = space.element_nodes(t);
    std::array<std::array<double, 6>, 6> local{};
    for (std::size_t q = 0; q < table.shapes.size(); ++q) {
      const double jw = 2.0 * geo.area * table.rule->points[q].weight;
      kernel(t, table.shapes[q], physical_gradients(table.shapes[q], geo), jw, local);
    }
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
          trip.push_back({space.velocity_dof(c, nodes[a]), space.velocity_dof(c, nodes[b]), local[a][b]});
  }
  return SparseMatrix::from_triplets(space.n_vel(), space.n_vel(), std::move(trip));
}

}  // namespace

SparseMatrix assemble_velocity_mass(const TaylorHoodSpace& space) {
  auto m = assemble_vector_block_diagonal(
      space, kDefaultQuadratureDegree,
      [](std::size_t, const P2Shape& s, const Gradients&, double jw, auto& local) {
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b) local[a][b] += jw * s.value[a] * s.value[b];
      });
  m.mark_symmetric();
  return m;
}

SparseMatrix assemble_velocity_stiffness(const TaylorHoodSpace& space) {
  auto k = assemble_vector_block_diagonal(
      space, kDefaultQuadratureDegree,
      [](std::size_t, const P2Shape&, const Gradients& g, double jw, auto& local) {
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b) local[a][b] += jw * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
      });
  k.mark_symmetric();
  return k;
}

SparseMatrix assemble_divergence(const TaylorHoodSpace& space) {
  const auto table = shape_table(kDefaultQuadratureDegree);
  std::vector<Triplet> trip;
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& geo = space.geometry(t);
    const auto nodes = space.element_nodes(t);
    const auto& tri = space.mesh().triangles()[t];
    // local[q][c][a] = -(d_c N_a, lambda_q)
    double local[3][2][6] = {};
    for (std::size_t iq = 0; iq < table.shapes.size(); ++iq) {
      const auto& qp = table.rule->points[iq];
      const double jw = 2.0 * geo.area * qp.weight;
      const auto g = physical_gradients(table.shapes[iq], geo);
      for (int q = 0; q < 3; ++q)
        for (int c = 0; c < 2; ++c)
          for (int a = 0; a < 6; ++a) local[q][c][a] -= jw * qp.barycentric[q] * g[a][c];
    }
    for (int q = 0; q < 3; ++q)
      for (int c = 0; c < 2; ++c)
        for (int a = 0; a < 6; ++a)
          trip.push_back({tri[q], space.velocity_dof(c, nodes[a]), local[q][c][a]});
  }
  return SparseMatrix::from_triplets(space.n_pr(), space.n_vel(), std::move(trip));
}

SparseMatrix assemble_pressure_mass(const TaylorHoodSpace& space) {
  std::vector<Triplet> trip;
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const double area = space.geometry(t).area;
    const auto& tri = space.mesh().triangles()[t];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.push_back({tri[a], tri[b], area * (a == b ? 1.0 / 6 : 1.0 / 12)});
  }
  auto m = SparseMatrix::from_triplets(space.n_pr(), space.n_pr(), std::move(trip));
  m.mark_symmetric();
  return m;
}

Vector pressure_mean_weights(const TaylorHoodSpace& space) {
  Vector w = Vector::Zero(space.n_pr());
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t)
    for (int v : space.mesh().triangles()[t]) w[v] += space.geometry(t).area / 3.0;
  return w;
}

SparseMatrix assemble_curl_gram(const TaylorHoodSpace& space) {
  const auto table = shape_table(kDefaultQuadratureDegree);
  std::vector<Triplet> trip;
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& geo = space.geometry(t);
    const auto nodes = space.element_nodes(t);
    // local dof (c, a) -> index 6c + a; curl of (N,0) = -dN/dy, of (0,N) = dN/dx
    double local[12][12] = {};
    for (std::size_t iq = 0; iq < table.shapes.size(); ++iq) {
      const double jw = 2.0 * geo.area * table.rule->points[iq].weight;
      const auto g = physical_gradients(table.shapes[iq], geo);
      double curl[12];
      for (int a = 0; a < 6; ++a) {
        curl[a] = -g[a][1];
        curl[6 + a] = g[a][0];
      }
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) local[i][j] += jw * curl[i] * curl[j];
    }
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j)
        trip.push_back({space.velocity_dof(i / 6, nodes[i % 6]), space.velocity_dof(j / 6, nodes[j % 6]),
                        local[i][j]});
  }
  auto c = SparseMatrix::from_triplets(space.n_vel(), space.n_vel(), std::move(trip));
  c.mark_symmetric();
  return c;
}

double trilinear_bstar(const TaylorHoodSpace& space, const Vector& w, const Vector& u,
                       const Vector& v) {
  check_velocity(space, w, "w");
  check_velocity(space, u, "u");
  check_velocity(space, v, "v");
  const auto table = shape_table(kTrilinearQuadratureDegree);
  double total = 0.0;
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& geo = space.geometry(t);
    const auto nodes = space.element_nodes(t);
    double local = 0.0;
    for (std::size_t iq = 0; iq < table.shapes.size(); ++iq) {
      const double jw = 2.0 * geo.area * table.rule->points[iq].weight;
      const auto g = physical_gradients(table.shapes[iq], geo);
      const auto fw = eval_local(space, w, nodes, table.shapes[iq], g);
      const auto fu = eval_local(space, u, nodes, table.shapes[iq], g);
      const auto fv = eval_local(space, v, nodes, table.shapes[iq], g);
      double s = 0.0;
      for (int c = 0; c < 2; ++c) {
        const double w_grad_u = fw.value[0] * fu.grad[c][0] + fw.value[1] * fu.grad[c][1];
        const double w_grad_v = fw.value[0] * fv.grad[c][0] + fw.value[1] * fv.grad[c][1];
        s += 0.5 * (w_grad_u * fv.value[c] - w_grad_v * fu.value[c]);
      }
      local += jw * s;
    }
    total += local;
  }
  return total;
}

SparseMatrix assemble_convection(const TaylorHoodSpace& space, const Vector& w) {
  check_velocity(space, w, "w");
  const auto table = shape_table(kTrilinearQuadratureDegree);
  std::vector<Triplet> trip;
  trip.reserve(space.mesh().num_triangles() * 72);
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& geo = space.geometry(t);
    const auto nodes = space.element_nodes(t);
    double local[6][6] = {};
    for (std::size_t iq = 0; iq < table.shapes.size(); ++iq) {
      const double jw = 2.0 * geo.area * table.rule->points[iq].weight;
      const auto& s = table.shapes[iq];
      const auto g = physical_gradients(s, geo);
      const auto fw = eval_local(space, w, nodes, s, g);
      double adv[6];
      for (int a = 0; a < 6; ++a) adv[a] = fw.value[0] * g[a][0] + fw.value[1] * g[a][1];
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) local[a][b] += 0.5 * jw * (s.value[a] * adv[b] - s.value[b] * adv[a]);
    }
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
          trip.push_back({space.velocity_dof(c, nodes[a]), space.velocity_dof(c, nodes[b]), local[a][b]});
  }
  return SparseMatrix::from_triplets(space.n_vel(), space.n_vel(), std::move(trip));
}

SparseMatrix assemble_convection_derivative(const TaylorHoodSpace& space, const Vector& u) {
  check_velocity(space, u, "u");
  const auto table = shape_table(kTrilinearQuadratureDegree);
  std::vector<Triplet> trip;
  trip.reserve(space.mesh().num_triangles() * 144);
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& geo = space.geometry(t);
    const auto nodes = space.element_nodes(t);
    // local[d][c][a][b]: test component d at node a, trial component c at node b
    double local[2][2][6][6] = {};
    for (std::size_t iq = 0; iq < table.shapes.size(); ++iq) {
      const double jw = 2.0 * geo.area * table.rule->points[iq].weight;
      const auto& s = table.shapes[iq];
      const auto g = physical_gradients(s, geo);
      const auto fu = eval_local(space, u, nodes, s, g);
      for (int d = 0; d < 2; ++d)
        for (int c = 0; c < 2; ++c)
          for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b)
              local[d][c][a][b] += 0.5 * jw * s.value[b] *
                                   (fu.grad[d][c] * s.value[a] - g[a][c] * fu.value[d]);
    }
    for (int d = 0; d < 2; ++d)
      for (int c = 0; c < 2; ++c)
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b)
            trip.push_back({space.velocity_dof(d, nodes[a]), space.velocity_dof(c, nodes[b]), local[d][c][a][b]});
  }
  return SparseMatrix::from_triplets(space.n_vel(), space.n_vel(), std::move(trip));
}

Vector convection_action(const TaylorHoodSpace& space, const Vector& w, const Vector& u) {
  check_velocity(space, w, "w");
  check_velocity(space, u, "u");
  const auto table = shape_table(kTrilinearQuadratureDegree);
  Vector out = Vector::Zero(space.n_vel());
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& geo = space.geometry(t);
    const auto nodes = space.element_nodes(t);
    double local[2][6] = {};
    for (std::size_t iq = 0; iq < table.shapes.size(); ++iq) {
      const double jw = 2.0 * geo.area * table.rule->points[iq].weight;
      const auto& s = table.shapes[iq];
      const auto g = physical_gradients(s, geo);
      const auto fw = eval_local(space, w, nodes, s, g);
      const auto fu = eval_local(space, u, nodes, s, g);
      for (int c = 0; c < 2; ++c) {
        const double w_grad_u = fw.value[0] * fu.grad[c][0] + fw.value[1] * fu.grad[c][1];
        for (int a = 0; a < 6; ++a) {
          const double w_grad_phi = fw.value[0] * g[a][0] + fw.value[1] * g[a][1];
          local[c][a] += 0.5 * jw * (w_grad_u * s.value[a] - w_grad_phi * fu.value[c]);
        }
      }
    }
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 6; ++a) out[space.velocity_dof(c, nodes[a])] += local[c][a];
  }
  return out;
}

Vector project_force(const TaylorHoodSpace& space, const VectorField& f, double time) {
  const auto table = shape_table(kDefaultQuadratureDegree);
  Vector out = Vector::Zero(space.n_vel());
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& geo = space.geometry(t);
    const auto nodes = space.element_nodes(t);
    for (std::size_t iq = 0; iq < table.shapes.size(); ++iq) {
      const auto& qp = table.rule->points[iq];
      const double jw = 2.0 * geo.area * qp.weight;
      const Point x = space.map_to_physical(t, qp.barycentric);
      const auto fv = f(x.x, x.y, time);
      for (int a = 0; a < 6; ++a)
        for (int c = 0; c < 2; ++c)
          out[space.velocity_dof(c, nodes[a])] += jw * fv[c] * table.shapes[iq].value[a];
    }
  }
  return out;
}

double force_l2_norm_squared(const TaylorHoodSpace& space, const VectorField& f, double time) {
  const auto& rule = triangle_rule(kTrilinearQuadratureDegree);
  double s = 0.0;
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const double area = space.geometry(t).area;
    for (const auto& qp : rule.points) {
      const Point x = space.map_to_physical(t, qp.barycentric);
      const auto fv = f(x.x, x.y, time);
      s += 2.0 * area * qp.weight * (fv[0] * fv[0] + fv[1] * fv[1]);
    }
  }
  return s;
}

double l2_error_squared(const TaylorHoodSpace& space, const Vector& uh, const VectorField& exact,
                        double time) {
  check_velocity(space, uh, "uh");
  const auto& rule = triangle_rule(kTrilinearQuadratureDegree);
  double s = 0.0;
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const double area = space.geometry(t).area;
    for (const auto& qp : rule.points) {
      const Point x = space.map_to_physical(t, qp.barycentric);
      const auto ex = exact(x.x, x.y, time);
      const auto v = space.sample(uh, t, qp.barycentric).value;
      s += 2.0 * area * qp.weight * ((v[0] - ex[0]) * (v[0] - ex[0]) + (v[1] - ex[1]) * (v[1] - ex[1]));
    }
  }
  return s;
}

DirichletSystem apply_dirichlet(const SparseMatrix& a, std::vector<Vector> rhs,
                                std::span<const int> dofs, std::span<const double> values) {
  if (dofs.size() != values.size()) throw DimensionError("dirichlet dofs and values differ in length");
  if (a.rows() != a.cols()) throw DimensionError("dirichlet elimination needs a square matrix");
  const int n = a.rows();
  for (const auto& b : rhs)
    if (b.size() != n) throw DimensionError("right-hand side length mismatch");

  std::vector<double> prescribed(n, 0.0);
  std::vector<char> fixed(n, 0);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    if (dofs[k] < 0 || dofs[k] >= n) throw DimensionError("dirichlet dof out of range");
    fixed[dofs[k]] = 1;
    prescribed[dofs[k]] = values[k];
  }
  const bool homogeneous = std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });

  Vector lift = Vector::Zero(n);
  std::vector<int> row_ptr(n + 1, 0);
  std::vector<int> col;
  std::vector<double> val;
  col.reserve(a.nnz());
  val.reserve(a.nnz());
  for (int i = 0; i < n; ++i) {
    if (fixed[i]) {
      col.push_back(i);
      val.push_back(1.0);
    } else {
      for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
        const int j = a.col_idx()[k];
        if (fixed[j]) {
          if (!homogeneous) lift[i] += a.values()[k] * prescribed[j];
        } else {
          col.push_back(j);
          val.push_back(a.values()[k]);
        }
      }
    }
    row_ptr[i + 1] = static_cast<int>(col.size());
  }
  SparseMatrix reduced(n, n, std::move(row_ptr), std::move(col), std::move(val));
  if (a.symmetric_flag()) reduced.mark_symmetric();

  for (auto& b : rhs) {
    if (!homogeneous) b -= lift;
    for (std::size_t k = 0; k < dofs.size(); ++k) b[dofs[k]] = values[k];
  }
  return {std::move(reduced), std::move(rhs)};
}

}  // namespace enpod
