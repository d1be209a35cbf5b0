#pragma once

#include <array>
#include <vector>

namespace enpod {

struct QuadraturePoint {
  std::array<double, 3> barycentric;
  double weight;  ///< weights of a rule sum to 1/2, the reference-triangle area
};

struct QuadratureRule {
  std::vector<QuadraturePoint> points;
  int degree = 0;
};

/// Symmetric triangle rule exact for polynomials of total degree `degree`.
/// Available: 1 (1 point), 2 (3 points), 5 (7 points), 6 (12 points).
const QuadratureRule& triangle_rule(int degree);

inline constexpr int kDefaultQuadratureDegree = 5;
inline constexpr int kTrilinearQuadratureDegree = 6;

}  // namespace enpod
