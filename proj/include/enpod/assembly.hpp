#pragma once

#include <span>
#include <vector>

#include "enpod/sparse_matrix.hpp"
#include "enpod/taylor_hood.hpp"

namespace enpod {

/// (phi_a, phi_b) over velocity dofs; symmetric positive definite.
SparseMatrix assemble_velocity_mass(const TaylorHoodSpace& space);
/// (grad phi_a, grad phi_b); kernel = constant fields before constraints.
SparseMatrix assemble_velocity_stiffness(const TaylorHoodSpace& space);
/// Rows are pressure tests q_b, columns velocity trials:  -(div phi_a, q_b).
SparseMatrix assemble_divergence(const TaylorHoodSpace& space);
/// (q_a, q_b) over pressure dofs.
SparseMatrix assemble_pressure_mass(const TaylorHoodSpace& space);
/// integral of each pressure basis function; the zero-mean constraint row.
Vector pressure_mean_weights(const TaylorHoodSpace& space);
/// (curl phi_a, curl phi_b) with the scalar curl dv/dx - du/dy.
SparseMatrix assemble_curl_gram(const TaylorHoodSpace& space);

/// b*(w,u,v) = 1/2 (w.grad u, v) - 1/2 (w.grad v, u).
double trilinear_bstar(const TaylorHoodSpace& space, const Vector& w, const Vector& u,
                       const Vector& v);
/// N(w)[a][b] = b*(w, phi_b, phi_a); skew-symmetric. The pattern is the full
/// P2 element pattern regardless of w.
SparseMatrix assemble_convection(const TaylorHoodSpace& space, const Vector& w);
/// D(u)[a][b] = b*(phi_b, u, phi_a), so that D(u) w = N(w) u. N(u) + D(u) is
/// the derivative of u -> N(u) u.
SparseMatrix assemble_convection_derivative(const TaylorHoodSpace& space, const Vector& u);
/// Vector with entries b*(w, u, phi_a), i.e. N(w) u without forming N(w).
Vector convection_action(const TaylorHoodSpace& space, const Vector& w, const Vector& u);

/// Load vector (f(., t), phi_a).
Vector project_force(const TaylorHoodSpace& space, const VectorField& f, double t);
/// integral of |f(., t)|^2.
double force_l2_norm_squared(const TaylorHoodSpace& space, const VectorField& f, double t);

/// || u_h - u(., t) ||_{L2}^2 evaluated with the degree-6 rule.
double l2_error_squared(const TaylorHoodSpace& space, const Vector& uh, const VectorField& exact,
                        double t);

struct DirichletSystem {
  SparseMatrix matrix;
  std::vector<Vector> rhs;
};

/// Symmetric elimination: constrained rows/columns are removed from the
/// pattern, replaced by a unit diagonal, and their contribution is moved to
/// the right-hand sides. `dofs` index rows of `matrix` (sorted or not).
DirichletSystem apply_dirichlet(const SparseMatrix& matrix, std::vector<Vector> rhs,
                                std::span<const int> dofs, std::span<const double> values);

}  // namespace enpod
