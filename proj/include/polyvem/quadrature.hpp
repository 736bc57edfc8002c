#pragma once

#include <array>
#include <span>

#include "polyvem/mesh.hpp"

namespace polyvem {

struct QuadPoint {
  Point x;
  double w;
};

/// Symmetric 6-point rule on a triangle, exact for total degree <= 4.
/// Weights sum to the triangle area (may be negative for inverted triangles).
inline std::array<QuadPoint, 6> triangle_rule_deg4(const Point& p0, const Point& p1, const Point& p2) {
  constexpr double a1 = 0.445948490915964886318329253883;
  constexpr double a2 = 0.0915762135097707434595714634022;
  constexpr double w1 = 0.223381589678011465695007008433;
  constexpr double w2 = 0.109951743655321867638326324900;
  const double area = 0.5 * cross2(p1 - p0, p2 - p0);
  auto at = [&](double l0, double l1, double l2) { return Point(l0 * p0 + l1 * p1 + l2 * p2); };
  const double b1 = 1.0 - 2.0 * a1;
  const double b2 = 1.0 - 2.0 * a2;
  return {{{at(a1, a1, b1), w1 * area},
           {at(a1, b1, a1), w1 * area},
           {at(b1, a1, a1), w1 * area},
           {at(a2, a2, b2), w2 * area},
           {at(a2, b2, a2), w2 * area},
           {at(b2, a2, a2), w2 * area}}};
}

/// 3-point Gauss-Legendre rule on a segment (exact to degree 5). Weights sum
/// to the segment length.
inline std::array<QuadPoint, 3> segment_rule_gauss3(const Point& a, const Point& b) {
  constexpr double s = 0.774596669241483377035853079956;  // sqrt(3/5)
  const Point mid = 0.5 * (a + b);
  const Point half = 0.5 * (b - a);
  const double len = (b - a).norm();
  return {{{mid - s * half, len * 5.0 / 18.0}, {mid, len * 8.0 / 18.0}, {mid + s * half, len * 5.0 / 18.0}}};
}

/// Integrates f over a polygon split into the fan of triangles (center, V_i, V_i+1).
template <class F>
double fan_quadrature(std::span<const Point> poly, const Point& center, F&& f) {
  double sum = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& q : triangle_rule_deg4(center, poly[i], poly[(i + 1) % n])) sum += q.w * f(q.x);
  return sum;
}

}  // namespace polyvem
