#pragma once

#include "deformation.hpp"
#include "linalg.hpp"
#include "polytope.hpp"
#include "report.hpp"
#include "spaceforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace schlafli {

/// A closed polygon in a 2-dimensional space form. The interior lies on the
/// left of the cyclic vertex order when orientation is +1, on the right when -1.
struct Polygon {
  SpaceForm space;
  Mat vertices;
  int orientation = 1;

  int n() const { return static_cast<int>(vertices.cols()); }
  Vec vertex(int i) const { return vertices.col(((i % n()) + n()) % n()); }
  Polygon reversed_interior() const { return {space, vertices, -orientation}; }
};

/// First-order variations of the edge lengths (edge i joins v_i and v_{i+1})
/// and of the exterior angles.
struct PolygonVariation {
  Vec l_prime;
  Vec theta_prime;

  Vec stacked() const {
    Vec out(l_prime.size() + theta_prime.size());
    out << l_prime, theta_prime;
    return out;
  }
  static PolygonVariation from_stacked(const Vec& v) {
    const Eigen::Index n = v.size() / 2;
    return {v.head(n), v.tail(n)};
  }
};

namespace detail {

inline double det3(const Vec& a, const Vec& b, const Vec& c) {
  return a(0) * (b(1) * c(2) - b(2) * c(1)) - a(1) * (b(0) * c(2) - b(2) * c(0)) + a(2) * (b(0) * c(1) - b(1) * c(0));
}

inline Vec cross3(const Vec& a, const Vec& b) {
  Vec c(3);
  c << a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0);
  return c;
}

inline double cross2(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

/// Planar chart in which geodesics are straight lines (gnomonic, Klein or the
/// identity), with orientation matching the model. Empty if the polygon does
/// not fit in one chart.
inline std::optional<Mat> geodesic_chart(const SpaceForm& s, const Mat& V) {
  const Eigen::Index n = V.cols();
  Mat out(2, n);
  if (s.curvature() == 0) return V;
  if (s.curvature() == -1) {
    for (Eigen::Index j = 0; j < n; ++j) out.col(j) << V(0, j) / V(2, j), V(1, j) / V(2, j);
    return out;
  }
  Vec c = V.rowwise().sum();
  if (c.norm() < 1e-12) return std::nullopt;
  c.normalize();
  for (Eigen::Index j = 0; j < n; ++j)
    if (V.col(j).dot(c) < 1e-9) return std::nullopt;
  Mat T = tangent_basis(s, c);
  Vec b1 = T.col(0), b2 = T.col(1);
  if (det3(b1, b2, c) < 0) std::swap(b1, b2);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = V.col(j).dot(c);
    out.col(j) << V.col(j).dot(b1) / h, V.col(j).dot(b2) / h;
  }
  return out;
}

inline double signed_area(const Mat& C) {
  double a = 0.0;
  const Eigen::Index n = C.cols();
  for (Eigen::Index i = 0; i < n; ++i) a += cross2(C.col(i), C.col((i + 1) % n));
  return 0.5 * a;
}

inline bool segments_cross(const Vec& p, const Vec& q, const Vec& r, const Vec& s) {
  auto orient = [](const Vec& a, const Vec& b, const Vec& c) { return cross2(b - a, c - a); };
  const double d1 = orient(p, q, r), d2 = orient(p, q, s), d3 = orient(r, s, p), d4 = orient(r, s, q);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

/// Interior angle at v between the directions to a (previous) and b (next),
/// as atan2(y, x) of two smooth functions of the three points.
struct AngleParts {
  double y, x;
};

inline AngleParts angle_parts(const SpaceForm& s, const Vec& a, const Vec& v, const Vec& b, int sigma) {
  if (s.curvature() == 0) {
    Vec A = a - v, B = b - v;
    return {sigma * cross2(B, A), A.dot(B)};
  }
  const double K = s.curvature();
  return {sigma * det3(v, b, a), s.bilinear(a, b) - K * s.bilinear(a, v) * s.bilinear(b, v)};
}

inline double interior_angle(const SpaceForm& s, const Vec& a, const Vec& v, const Vec& b, int sigma) {
  AngleParts p = angle_parts(s, a, v, b, sigma);
  double al = std::atan2(p.y, p.x);
  if (al < 0) al += 2 * std::numbers::pi;
  return al;
}

/// Gradients (ambient row vectors) of the interior angle with respect to a, v, b.
inline std::array<Vec, 3> interior_angle_gradient(const SpaceForm& s, const Vec& a, const Vec& v, const Vec& b,
                                                  int sigma) {
  AngleParts p = angle_parts(s, a, v, b, sigma);
  std::array<Vec, 3> gy, gx;
  if (s.curvature() == 0) {
    Vec A = a - v, B = b - v;
    Vec ga(2), gb(2);
    ga << -B(1), B(0);
    gb << A(1), -A(0);
    gy = {sigma * ga, Vec(-sigma * (ga + gb)), sigma * gb};
    gx = {B, Vec(-(A + B)), A};
  } else {
    const Vec& S = s.signs();
    const double K = s.curvature();
    const double av = s.bilinear(a, v), bv = s.bilinear(b, v);
    gy = {sigma * cross3(v, b), sigma * cross3(b, a), sigma * cross3(a, v)};
    Vec Sa = S.cwiseProduct(a), Sb = S.cwiseProduct(b), Sv = S.cwiseProduct(v);
    gx = {Vec(Sb - K * bv * Sv), Vec(-K * (bv * Sa + av * Sb)), Vec(Sa - K * av * Sv)};
  }
  const double r2 = p.x * p.x + p.y * p.y;
  if (!(r2 > 0)) throw GeometryError("degenerate polygon angle");
  std::array<Vec, 3> g;
  for (int k = 0; k < 3; ++k) g[k] = (p.x * gy[k] - p.y * gx[k]) / r2;
  return g;
}

/// Gradients of the distance between a and b with respect to a and b.
inline std::array<Vec, 2> distance_gradient(const SpaceForm& s, const Vec& a, const Vec& b) {
  if (s.curvature() == 0) {
    Vec d = (b - a).normalized();
    return {Vec(-d), d};
  }
  const double l = s.distance(a, b);
  const double den = s.curvature() == 1 ? std::sin(l) : std::sinh(l);
  if (!(den > 0)) throw GeometryError("degenerate edge");
  const Vec& S = s.signs();
  return {Vec(-S.cwiseProduct(b) / den), Vec(-S.cwiseProduct(a) / den)};
}

}  // namespace detail

/// Validates the points and fixes the orientation. With orientation 0 the
/// orientation is read off a geodesic chart, where the interior is the
/// bounded side.
inline Polygon make_polygon(const SpaceForm& space, const Mat& V, int orientation = 0) {
  if (space.dim() != 2) throw InputError("polygons live in 2-dimensional space forms");
  if (V.rows() != space.ambient_dim()) throw InputError("polygon vertices have the wrong ambient dimension");
  const Eigen::Index n = V.cols();
  if (n < 3) throw InputError("a polygon needs at least 3 vertices");
  if (orientation != 0 && orientation != 1 && orientation != -1) throw InputError("orientation must be -1, 0 or 1");
  for (Eigen::Index j = 0; j < n; ++j) space.require_point(V.col(j));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (space.distance(V.col(i), V.col(j)) < 1e-12) throw InputError("polygon has two equal vertices");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = space.distance(V.col(i), V.col((i + 1) % n));
    if (space.curvature() == 1 && std::abs(l - std::numbers::pi) < 1e-9)
      throw InputError("spherical polygon edge of length pi");
  }
  auto chart = detail::geodesic_chart(space, V);
  if (chart) {
    const Mat& C = *chart;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        if (detail::segments_cross(C.col(i), C.col((i + 1) % n), C.col(j), C.col((j + 1) % n)))
          throw InputError("polygon is not simple");
      }
    if (orientation == 0) {
      const double a = detail::signed_area(*chart);
      if (std::abs(a) < 1e-14) throw InputError("polygon has zero area");
      orientation = a > 0 ? 1 : -1;
    }
  } else if (orientation == 0) {
    throw InputError("polygon orientation must be given when it does not fit in a hemisphere");
  }
  return {space, V, orientation};
}

/// Regular polygon with m vertices at distance r from the base point.
inline Polygon regular_polygon(const SpaceForm& s, int m, double r, double phase = 0.0) {
  const int D = s.ambient_dim();
  Vec base = Vec::Zero(D);
  if (s.curvature() != 0) base(D - 1) = 1.0;
  Mat V(D, m);
  for (int i = 0; i < m; ++i) {
    Vec dir = Vec::Zero(D);
    dir(0) = std::cos(phase + 2 * std::numbers::pi * i / m);
    dir(1) = std::sin(phase + 2 * std::numbers::pi * i / m);
    V.col(i) = geodesic_flow(s, base, dir, r);
  }
  return make_polygon(s, V);
}

/// Star-shaped random polygon around the base point: jittered radii in
/// [0.4 r0, r0] at sorted jittered angles.
inline Polygon random_star_polygon(const SpaceForm& s, int m, std::uint64_t seed, double r0 = 0.6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int D = s.ambient_dim();
  Vec base = Vec::Zero(D);
  if (s.curvature() != 0) base(D - 1) = 1.0;
  Mat V(D, m);
  for (int i = 0; i < m; ++i) {
    const double a = 2 * std::numbers::pi * (i + 0.2 + 0.6 * u(rng)) / m;
    Vec dir = Vec::Zero(D);
    dir(0) = std::cos(a);
    dir(1) = std::sin(a);
    V.col(i) = geodesic_flow(s, base, dir, r0 * (0.4 + 0.6 * u(rng)));
  }
  return make_polygon(s, V);
}

inline Vec edge_lengths(const Polygon& p) {
  Vec l(p.n());
  for (int i = 0; i < p.n(); ++i) l(i) = p.space.distance(p.vertex(i), p.vertex(i + 1));
  return l;
}

inline Vec interior_angles(const Polygon& p) {
  Vec a(p.n());
  for (int i = 0; i < p.n(); ++i)
    a(i) = detail::interior_angle(p.space, p.vertex(i - 1), p.vertex(i), p.vertex(i + 1), p.orientation);
  return a;
}

inline Vec exterior_angles(const Polygon& p) { return Vec::Constant(p.n(), std::numbers::pi) - interior_angles(p); }

/// Outward unit normal of each edge: a point of S^2, a unit spacelike vector
/// of de Sitter space, or a unit vector of the plane.
inline Mat edge_duals(const Polygon& p) {
  const SpaceForm& s = p.space;
  Mat W(s.ambient_dim(), p.n());
  for (int i = 0; i < p.n(); ++i) {
    Vec a = p.vertex(i), b = p.vertex(i + 1);
    Vec w;
    if (s.curvature() == 0) {
      Vec d = b - a;
      w = Vec(2);
      w << d(1), -d(0);
      w.normalize();
    } else {
      w = s.signs().cwiseProduct(detail::cross3(b, a));
      const double q = s.norm_sq(w);
      if (!(q > 0)) throw GeometryError("degenerate polygon edge");
      w /= std::sqrt(q);
    }
    W.col(i) = p.orientation * w;
  }
  return W;
}

/// Variation (l', θ') induced by ambient vertex velocities.
inline PolygonVariation variation_of(const Polygon& p, const Mat& X) {
  const int n = p.n();
  if (X.rows() != p.space.ambient_dim() || X.cols() != n) throw InputError("one velocity per polygon vertex expected");
  PolygonVariation v{Vec(n), Vec(n)};
  auto vel = [&](int i) { return X.col(((i % n) + n) % n); };
  for (int i = 0; i < n; ++i) {
    auto g = detail::distance_gradient(p.space, p.vertex(i), p.vertex(i + 1));
    v.l_prime(i) = g[0].dot(vel(i)) + g[1].dot(vel(i + 1));
    auto h = detail::interior_angle_gradient(p.space, p.vertex(i - 1), p.vertex(i), p.vertex(i + 1), p.orientation);
    v.theta_prime(i) = -(h[0].dot(vel(i - 1)) + h[1].dot(vel(i)) + h[2].dot(vel(i + 1)));
  }
  return v;
}

/// Orthonormal tangent chart at every vertex; unknown 2i+k is the k-th
/// coordinate of the velocity at v_i.
inline std::vector<Mat> tangent_charts(const Polygon& p) {
  std::vector<Mat> T;
  for (int i = 0; i < p.n(); ++i) T.push_back(tangent_basis(p.space, p.vertex(i)));
  return T;
}

inline Mat field_from_coordinates(const Polygon& p, const Vec& c) {
  if (c.size() != 2 * p.n()) throw InputError("two tangent coordinates per vertex expected");
  auto T = tangent_charts(p);
  Mat X(p.space.ambient_dim(), p.n());
  for (int i = 0; i < p.n(); ++i) X.col(i) = T[i] * c.segment(2 * i, 2);
  return X;
}

/// The 2n x 2n matrix from tangent coordinates to the stacked (l', θ').
inline Mat variation_map(const Polygon& p) {
  const int n = p.n();
  Mat M(2 * n, 2 * n);
  for (int j = 0; j < 2 * n; ++j) M.col(j) = variation_of(p, field_from_coordinates(p, Vec::Unit(2 * n, j))).stacked();
  return M;
}

/// The same matrix by finite differences of lengths and angles along the
/// geodesic vertex flow.
inline Mat variation_map_fd(const Polygon& p, const DerivativeEngine& eng = {}) {
  const int n = p.n();
  Mat M(2 * n, 2 * n);
  for (int j = 0; j < 2 * n; ++j) {
    Mat X = field_from_coordinates(p, Vec::Unit(2 * n, j));
    M.col(j) = derivative_along(eng, [&](double t) {
      Polygon q{p.space, flow_vertices(p.space, p.vertices, X, t), p.orientation};
      Vec out(2 * n);
      out << edge_lengths(q), exterior_angles(q);
      return out;
    });
  }
  return M;
}

/// Rows of the linear constraints every admissible (l', θ') satisfies. For
/// K = 0 the first row is Σθ' and the others the vector equation.
inline Mat constraint_functionals(const Polygon& p) {
  const int n = p.n();
  Mat W = edge_duals(p);
  if (p.space.curvature() != 0) {
    Mat C(3, 2 * n);
    C << -W, p.vertices;
    return C;
  }
  Mat C = Mat::Zero(3, 2 * n);
  C.block(0, n, 1, n).setOnes();
  C.block(1, 0, 2, n) = -W;
  C.block(1, n, 2, n) = p.vertices;
  return C;
}

/// Σθ'_i v_i − l'_i w_i (plus Σθ'_i as a leading component for K = 0).
inline IdentityReport check_polygon_identity(const Polygon& p, const PolygonVariation& var, double tolerance = 1e-8,
                                             bool sign_flip = false) {
  const int n = p.n();
  if (var.l_prime.size() != n || var.theta_prime.size() != n) throw InputError("variation size does not match the polygon");
  const bool flat = p.space.curvature() == 0;
  Mat W = edge_duals(p);
  std::vector<Term> t;
  for (int i = 0; i < n; ++i) {
    Vec v = var.theta_prime(i) * p.vertex(i);
    if (flat) {
      Vec u(3);
      u << var.theta_prime(i), v;
      v = u;
    }
    t.push_back({0, {2, i}, v, 0.0});
  }
  for (int i = 0; i < n; ++i) {
    Vec v = -var.l_prime(i) * W.col(i);
    if (flat) {
      Vec u(3);
      u << 0.0, v;
      v = u;
    }
    t.push_back({1, {1, i}, v, 0.0});
  }
  ReportOptions o;
  o.tolerance = tolerance;
  o.sign_flip = sign_flip;
  return finalize_report(IdentityId::PolygonIdentity, std::nullopt, std::move(t), o, 3);
}

inline int variation_rank(const Polygon& p) { return numerical_rank(variation_map(p), 1e-10); }

/// Minimum-norm vertex velocities realizing an admissible variation.
inline DeformationField solve_variation(const Polygon& p, const PolygonVariation& target, double tolerance = 1e-8) {
  IdentityReport r = check_polygon_identity(p, target, tolerance);
  if (!r.pass) throw Infeasible("variation violates the polygon constraints");
  const int n = p.n();
  Mat M = variation_map(p);
  if (numerical_rank(M, 1e-10) != 2 * n - 3) throw GeometryError("degenerate polygon: variation map rank is not 2n-3");
  Vec b = target.stacked();
  Vec c = min_norm_solve(M, b, 1e-10);
  if ((M * c - b).norm() > 1e-8 * std::max(1.0, b.norm())) throw Infeasible("variation is not in the image");
  return {field_from_coordinates(p, c)};
}

/// Convex polygon as a 2-dimensional polytope.
inline Polytope polygon_polytope(const Polygon& p) { return build_from_vertices(p.space, p.vertices); }

// Hyperbolic polygons with interior cone points.

struct ConePolygon {
  Polygon boundary;
  Mat cone_points;  // 3 x q, interior points of the boundary polygon

  int q() const { return static_cast<int>(cone_points.cols()); }
};

/// Boundary-edge length variations, interior-angle variations at the boundary
/// vertices and total-angle variations at the cone points.
struct ConeTargets {
  Vec l_prime;
  Vec alpha_prime;
  Vec theta_prime;

  Vec stacked() const {
    Vec out(l_prime.size() + alpha_prime.size() + theta_prime.size());
    out << l_prime, alpha_prime, theta_prime;
    return out;
  }
};

/// Triangulation whose vertices are the boundary vertices (0..n-1) followed
/// by the cone points (n..n+q-1).
struct ConeTriangulation {
  Mat points;
  int n = 0;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> edges;

  int edge_index(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (size_t e = 0; e < edges.size(); ++e)
      if (edges[e][0] == a && edges[e][1] == b) return static_cast<int>(e);
    throw InputError("not an edge of the triangulation");
  }
};

inline ConePolygon make_cone_polygon(const Polygon& boundary, const Mat& cone_points) {
  if (boundary.space.curvature() != -1) throw InputError("cone polygons are hyperbolic");
  const int n = boundary.n();
  Vec ext = exterior_angles(boundary);
  for (int i = 0; i < n; ++i)
    if (!(ext(i) > 1e-9)) throw InputError("cone polygon boundary must be strictly convex");
  if (cone_points.rows() != 3) throw InputError("cone points have the wrong ambient dimension");
  Mat W = edge_duals(boundary);
  for (Eigen::Index k = 0; k < cone_points.cols(); ++k) {
    boundary.space.require_point(cone_points.col(k));
    for (int i = 0; i < n; ++i)
      if (!(boundary.space.bilinear(cone_points.col(k), W.col(i)) < -1e-9))
        throw InputError("cone point is not in the interior");
    for (Eigen::Index j = 0; j < k; ++j)
      if (boundary.space.distance(cone_points.col(k), cone_points.col(j)) < 1e-9)
        throw InputError("cone points must be distinct");
  }
  return {boundary, cone_points};
}

/// Fan triangulation from v_0, then each cone point splits the triangle
/// containing it.
inline ConeTriangulation triangulate(const ConePolygon& cp) {
  const int n = cp.boundary.n(), q = cp.q();
  ConeTriangulation T;
  T.n = n;
  T.points.resize(3, n + q);
  T.points << cp.boundary.vertices, cp.cone_points;
  Mat C = *detail::geodesic_chart(cp.boundary.space, T.points);
  auto ccw = [&](std::array<int, 3> t) {
    if (detail::cross2(C.col(t[1]) - C.col(t[0]), C.col(t[2]) - C.col(t[0])) < 0) std::swap(t[1], t[2]);
    return t;
  };
  for (int i = 1; i + 1 < n; ++i) T.triangles.push_back(ccw({0, i, i + 1}));
  for (int k = 0; k < q; ++k) {
    const int w = n + k;
    bool placed = false;
    for (size_t t = 0; t < T.triangles.size() && !placed; ++t) {
      auto [a, b, c] = T.triangles[t];
      const double area = detail::cross2(C.col(b) - C.col(a), C.col(c) - C.col(a));
      const double la = detail::cross2(C.col(b) - C.col(w), C.col(c) - C.col(w)) / area;
      const double lb = detail::cross2(C.col(c) - C.col(w), C.col(a) - C.col(w)) / area;
      const double lc = 1.0 - la - lb;
      if (la > -1e-12 && lb > -1e-12 && lc > -1e-12) {
        if (std::min({la, lb, lc}) < 1e-9) throw GeometryError("cone point on a triangulation edge");
        T.triangles[t] = {a, b, w};
        T.triangles.push_back({b, c, w});
        T.triangles.push_back({c, a, w});
        placed = true;
      }
    }
    if (!placed) throw InputError("cone point outside the polygon");
  }
  std::vector<std::array<int, 2>> edges;
  for (const auto& t : T.triangles)
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.push_back({a, b});
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  T.edges = edges;
  return T;
}

inline Vec triangulation_lengths(const SpaceForm& s, const ConeTriangulation& T) {
  Vec l(static_cast<Eigen::Index>(T.edges.size()));
  for (size_t e = 0; e < T.edges.size(); ++e) l(static_cast<Eigen::Index>(e)) = s.distance(T.points.col(T.edges[e][0]), T.points.col(T.edges[e][1]));
  return l;
}

/// Angle at the vertex opposite side a of a hyperbolic triangle with sides a, b, c.
inline double hyperbolic_angle(double a, double b, double c) {
  return std::acos(clamp_unit((std::cosh(b) * std::cosh(c) - std::cosh(a)) / (std::sinh(b) * std::sinh(c))));
}

/// Partial derivatives of that angle with respect to (a, b, c).
inline std::array<double, 3> hyperbolic_angle_gradient(double a, double b, double c) {
  const double A = hyperbolic_angle(a, b, c), B = hyperbolic_angle(b, c, a), C = hyperbolic_angle(c, a, b);
  const double da = std::sinh(a) / (std::sinh(b) * std::sinh(c) * std::sin(A));
  return {da, -da * std::cos(C), -da * std::cos(B)};
}

/// Matrix from triangulation edge-length variations to the stacked targets
/// (boundary l', boundary α', cone-point total angle variations).
inline Mat cone_variation_map(const SpaceForm& s, const ConeTriangulation& T) {
  const int n = T.n, q = static_cast<int>(T.points.cols()) - n;
  const int E = static_cast<int>(T.edges.size());
  Vec L = triangulation_lengths(s, T);
  Mat M = Mat::Zero(2 * n + q, E);
  for (int i = 0; i < n; ++i) M(i, T.edge_index(i, (i + 1) % n)) = 1.0;
  for (const auto& t : T.triangles)
    for (int k = 0; k < 3; ++k) {
      const int v = t[k], u = t[(k + 1) % 3], w = t[(k + 2) % 3];
      const int ea = T.edge_index(u, w), eb = T.edge_index(v, w), ec = T.edge_index(v, u);
      auto g = hyperbolic_angle_gradient(L(ea), L(eb), L(ec));
      const int row = n + v;
      M(row, ea) += g[0];
      M(row, eb) += g[1];
      M(row, ec) += g[2];
    }
  return M;
}

inline IdentityReport check_cone_polygon(const ConePolygon& cp, const ConeTargets& t, double tolerance = 1e-7,
                                         bool sign_flip = false) {
  const int n = cp.boundary.n(), q = cp.q();
  if (t.l_prime.size() != n || t.alpha_prime.size() != n || t.theta_prime.size() != q)
    throw InputError("cone targets do not match the polygon");
  Mat W = edge_duals(cp.boundary);
  std::vector<Term> terms;
  for (int i = 0; i < n; ++i) terms.push_back({0, {1, i}, t.l_prime(i) * W.col(i), 0.0});
  for (int j = 0; j < n; ++j) terms.push_back({1, {2, j}, t.alpha_prime(j) * cp.boundary.vertex(j), 0.0});
  for (int k = 0; k < q; ++k) terms.push_back({2, {2, n + k}, t.theta_prime(k) * cp.cone_points.col(k), 0.0});
  ReportOptions o;
  o.tolerance = tolerance;
  o.sign_flip = sign_flip;
  return finalize_report(IdentityId::ConePolygon, std::nullopt, std::move(terms), o, 3);
}

struct ConeDeformation {
  ConeTriangulation triangulation;
  Vec length_prime;  // one per triangulation edge
};

/// Minimum-norm edge-length variation of the triangulation realizing the
/// targets; infeasible exactly when the vector constraint fails.
inline ConeDeformation solve_cone_polygon(const ConePolygon& cp, const ConeTargets& t, double tolerance = 1e-7) {
  IdentityReport r = check_cone_polygon(cp, t, tolerance);
  if (!r.pass) throw Infeasible("targets violate the cone polygon constraint");
  ConeTriangulation T = triangulate(cp);
  Mat M = cone_variation_map(cp.boundary.space, T);
  const int n = cp.boundary.n(), q = cp.q();
  if (numerical_rank(M, 1e-10) != 2 * n + q - 3) throw GeometryError("degenerate triangulation");
  Vec b = t.stacked();
  Vec dl = min_norm_solve(M, b, 1e-10);
  if ((M * dl - b).norm() > 1e-8 * std::max(1.0, b.norm())) throw Infeasible("targets are not in the image");
  return {std::move(T), dl};
}

}  // namespace schlafli
