#include "enpod/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace enpod {

namespace {

// Orbit helpers in barycentric coordinates; `w` is the weight on a unit-area
// triangle and is halved for the reference triangle.
void add_centroid(QuadratureRule& r, double w) {
  r.points.push_back({{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.5 * w});
}

void add_s21(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({{b, a, a}, 0.5 * w});
  r.points.push_back({{a, b, a}, 0.5 * w});
  r.points.push_back({{a, a, b}, 0.5 * w});
}

void add_s111(QuadratureRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  for (const auto& p : {std::array{a, b, c}, std::array{a, c, b}, std::array{b, a, c},
                        std::array{b, c, a}, std::array{c, a, b}, std::array{c, b, a}})
    r.points.push_back({p, 0.5 * w});
}

QuadratureRule make_rule(int degree) {
  QuadratureRule r;
  r.degree = degree;
  switch (degree) {
    case 1:
      add_centroid(r, 1.0);
      break;
    case 2:
      add_s21(r, 1.0 / 6.0, 1.0 / 3.0);
      break;
    case 5: {
      const double s15 = std::sqrt(15.0);
      add_centroid(r, 9.0 / 40.0);
      add_s21(r, (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
      add_s21(r, (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
      break;
    }
    case 6:
      add_s21(r, 0.249286745170910, 0.116786275726379);
      add_s21(r, 0.063089014491502, 0.050844906370207);
      add_s111(r, 0.053145049844817, 0.310352451033784, 0.082851075618374);
      break;
    default:
      throw std::invalid_argument("no triangle rule of degree " + std::to_string(degree));
  }
  return r;
}

}  // namespace

const QuadratureRule& triangle_rule(int degree) {
  static const QuadratureRule d1 = make_rule(1);
  static const QuadratureRule d2 = make_rule(2);
  static const QuadratureRule d5 = make_rule(5);
  static const QuadratureRule d6 = make_rule(6);
  switch (degree) {
    case 1: return d1;
    case 2: return d2;
    case 3:
    case 4:
    case 5: return d5;
    case 6: return d6;
    default: throw std::invalid_argument("no triangle rule of degree " + std::to_string(degree));
  }
}

}  // namespace enpod
