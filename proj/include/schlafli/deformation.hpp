#pragma once

#include "linalg.hpp"
#include "measure.hpp"
#include "polytope.hpp"
#include "spaceforms.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <random>
#include <type_traits>
#include <vector>

namespace schlafli {

/// One tangent velocity per vertex (columns).
struct DeformationField {
  Mat velocities;

  Vec velocity(int i) const { return velocities.col(i); }
  double max_speed() const {
    double m = 0.0;
    for (Eigen::Index j = 0; j < velocities.cols(); ++j) m = std::max(m, velocities.col(j).norm());
    return m;
  }
};

inline DeformationField operator+(const DeformationField& a, const DeformationField& b) {
  return {a.velocities + b.velocities};
}
inline DeformationField operator*(double s, const DeformationField& a) { return {s * a.velocities}; }

inline void validate_field(const SpaceForm& space, const Mat& vertices, const DeformationField& X) {
  if (X.velocities.rows() != vertices.rows() || X.velocities.cols() != vertices.cols())
    throw InputError("deformation field must have one ambient velocity per vertex");
  for (Eigen::Index j = 0; j < vertices.cols(); ++j) space.require_tangent(vertices.col(j), X.velocities.col(j));
}

inline void validate_field(const Polytope& P, const DeformationField& X) { validate_field(P.space(), P.vertices(), X); }

inline Mat flow_vertices(const SpaceForm& space, const Mat& V, const Mat& X, double t) {
  Mat out(V.rows(), V.cols());
  for (Eigen::Index j = 0; j < V.cols(); ++j) out.col(j) = geodesic_flow(space, V.col(j), X.col(j), t);
  return out;
}

/// Flows every vertex along its geodesic for time t; the face lattice must not
/// change. Non-simplicial faces survive only motions that keep them planar.
inline Polytope deform(const Polytope& P, const DeformationField& X, double t) {
  validate_field(P, X);
  if (t == 0.0) return P;
  return P.with_vertices(flow_vertices(P.space(), P.vertices(), X.velocities, t));
}

enum class FdScheme { Central, Richardson };

struct DerivativeEngine {
  double h = 1e-4;
  FdScheme scheme = FdScheme::Richardson;

  void validate() const {
    if (!(h > 0)) throw InputError("finite-difference step must be positive");
  }
};

namespace detail {

template <class T>
T affine(const T& a, double ca, const T& b, double cb) {
  if constexpr (std::is_arithmetic_v<T>) {
    return ca * a + cb * b;
  } else {
    return T(ca * a + cb * b);
  }
}

}  // namespace detail

/// Derivative at t=0 of a path t -> value by central differences, optionally
/// refined by Richardson extrapolation over (h, h/2). The +h sample is taken
/// first so that cached quadrature plans are built there.
template <class Path>
auto derivative_along(const DerivativeEngine& eng, Path&& at) {
  eng.validate();
  using T = std::decay_t<decltype(at(0.0))>;
  auto central = [&](double h) {
    T a = at(h);
    T b = at(-h);
    return detail::affine(a, 0.5 / h, b, -0.5 / h);
  };
  T d1 = central(eng.h);
  if (eng.scheme == FdScheme::Central) return d1;
  T d2 = central(0.5 * eng.h);
  return detail::affine(d2, 4.0 / 3.0, d1, -1.0 / 3.0);
}

/// Derivative of functional(P) along the geodesic vertex flow of X.
template <class Functional>
auto derivative(const DerivativeEngine& eng, const Polytope& P, const DeformationField& X, Functional&& functional) {
  validate_field(P, X);
  return derivative_along(eng, [&](double t) { return functional(deform(P, X, t)); });
}

inline int trivial_motion_count(const SpaceForm& space) {
  const int d = space.dim();
  if (space.curvature() == 0) return d * (d - 1) / 2 + d;
  const int D = d + 1;
  return D * (D - 1) / 2;
}

/// Infinitesimal isometry number `index`: the matrix A (and translation b for K=0).
inline Mat isometry_generator(const SpaceForm& space, int index, Vec* translation = nullptr) {
  const int total = trivial_motion_count(space);
  if (index < 0 || index >= total) throw InputError("trivial motion index out of range");
  const int D = space.ambient_dim();
  Mat A = Mat::Zero(D, D);
  if (translation) *translation = Vec::Zero(D);
  const int rotations = D * (D - 1) / 2;
  if (index >= rotations) {
    if (translation) (*translation)(index - rotations) = 1.0;
    return A;
  }
  int k = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j, ++k)
      if (k == index) {
        A(j, i) = 1.0;
        A(i, j) = -1.0;
      }
  if (space.curvature() == -1) A = space.signs().asDiagonal() * A;
  return A;
}

inline DeformationField trivial_motion(const Polytope& P, int index) {
  Vec b;
  Mat A = isometry_generator(P.space(), index, &b);
  Mat X = A * P.vertices();
  if (P.curvature() == 0) X.colwise() += b;
  return {X};
}

/// The polytope moved by the one-parameter isometry group of generator
/// `index` for time t. Unlike deform, this is a congruence for every t.
inline Polytope isometry_flow(const Polytope& P, int index, double t) {
  Vec b;
  Mat A = isometry_generator(P.space(), index, &b);
  Mat M = (t * A).exp();
  Mat V = M * P.vertices();
  if (P.curvature() == 0) V.colwise() += t * b;
  return P.with_vertices(V);
}

/// Random tangent field with maximum vertex speed 1.
inline DeformationField random_field(const SpaceForm& space, const Mat& V, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat X(V.rows(), V.cols());
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Vec w(V.rows());
    for (Eigen::Index a = 0; a < V.rows(); ++a) w(a) = g(rng);
    X.col(j) = space.tangent_part(V.col(j), w);
  }
  DeformationField F{X};
  const double m = F.max_speed();
  if (m > 0) F.velocities /= m;
  return F;
}

inline DeformationField random_field(const Polytope& P, std::mt19937_64& rng) {
  return random_field(P.space(), P.vertices(), rng);
}

/// The linear map nu_F on vect(F): the normal component of the deformation,
/// extended linearly from the vertices. Stored as an ambient operator.
struct NuMap {
  FaceRef face;
  Mat A;        // D x D, x -> nu_F(x) for x in vect(F)
  Mat basis;    // vertex columns of F
  Mat normal;   // normal components of the vertex velocities (columns)
  Mat gram_inv;

  Vec apply(const Vec& x) const { return A * x; }
};

inline NuMap nu_map(const Polytope& P, const DeformationField& X, FaceRef F) {
  if (P.curvature() == 0) throw InputError("nu maps are defined for curved space forms");
  const Face& f = P.face(F);
  if (f.vertices.size() != static_cast<size_t>(f.dim + 1)) throw InputError("nu map needs a simplicial face");
  const Vec& S = P.space().signs();
  NuMap nu;
  nu.face = F;
  nu.basis = P.face_vertices(F);
  Mat G = form_gram(S, nu.basis);
  Eigen::FullPivLU<Mat> lu(G);
  if (!lu.isInvertible()) throw GeometryError("singular vertex Gram matrix");
  nu.gram_inv = lu.inverse();
  nu.normal.resize(nu.basis.rows(), nu.basis.cols());
  for (size_t i = 0; i < f.vertices.size(); ++i) {
    Vec Xi = X.velocities.col(f.vertices[i]);
    nu.normal.col(static_cast<Eigen::Index>(i)) = Xi - nu.basis * (nu.gram_inv * (nu.basis.transpose() * S.asDiagonal() * Xi));
  }
  nu.A = nu.normal * nu.gram_inv * nu.basis.transpose() * S.asDiagonal();
  return nu;
}

/// Adjoint of nu_F: maps the normal space of F into vect(F).
inline Vec nu_adjoint(const Polytope& P, const NuMap& nu, const Vec& y) {
  const Vec& S = P.space().signs();
  return nu.basis * (nu.gram_inv * (nu.normal.transpose() * S.asDiagonal() * y));
}

/// int_G <nu_G(x), target> x dv from the second moment of G.
inline Vec nu_integral_from_second(const Polytope& P, const NuMap& nu, const Mat& second, const Vec& target) {
  const Vec& S = P.space().signs();
  return second * (nu.A.transpose() * S.asDiagonal() * target);
}

inline Vec nu_integral(const Polytope& P, const DeformationField& X, FaceRef G, const Vec& target,
                       const QuadratureConfig& cfg = {}) {
  NuMap nu = nu_map(P, X, G);
  FaceMeasure m = measure_face(P, G, cfg, nullptr, true);
  return nu_integral_from_second(P, nu, m.second, target);
}

/// Derivative of each edge length (edges in lattice order) along X.
inline std::vector<double> edge_length_derivatives(const Polytope& P, const DeformationField& X) {
  validate_field(P, X);
  const SpaceForm& s = P.space();
  std::vector<double> out;
  for (const Face& e : P.faces(P.dim() - 1)) {
    const int i = e.vertices[0], j = e.vertices[1];
    Vec a = P.vertex(i), b = P.vertex(j), Xa = X.velocity(i), Xb = X.velocity(j);
    if (s.curvature() == 0) {
      Vec d = b - a;
      out.push_back(d.dot(Xb - Xa) / d.norm());
    } else {
      const double l = s.distance(a, b);
      const double den = s.curvature() == 1 ? std::sin(l) : std::sinh(l);
      out.push_back(-(s.bilinear(Xa, b) + s.bilinear(a, Xb)) / den);
    }
  }
  return out;
}

inline bool is_isometric(const Polytope& P, const DeformationField& X, double tol) {
  const double scale = std::max(1.0, X.max_speed());
  for (double d : edge_length_derivatives(P, X))
    if (std::abs(d) > tol * scale) return false;
  return true;
}

/// Basis (flattened columns) of all first-order deformations keeping every
/// edge length fixed.
inline std::vector<DeformationField> isometric_deformation_basis(const Polytope& P) {
  const SpaceForm& s = P.space();
  const int D = s.ambient_dim();
  const int m = P.num_vertices();
  const auto& edges = P.faces(P.dim() - 1);
  const int rows = static_cast<int>(edges.size()) + (s.curvature() != 0 ? m : 0);
  Mat R = Mat::Zero(rows, D * m);
  const Vec& S = s.signs();
  int r = 0;
  for (const Face& e : edges) {
    const int i = e.vertices[0], j = e.vertices[1];
    Vec a = P.vertex(i), b = P.vertex(j);
    if (s.curvature() == 0) {
      Vec d = (b - a).normalized();
      R.block(r, D * i, 1, D) = -d.transpose();
      R.block(r, D * j, 1, D) = d.transpose();
    } else {
      R.block(r, D * i, 1, D) = S.cwiseProduct(b).transpose();
      R.block(r, D * j, 1, D) = S.cwiseProduct(a).transpose();
    }
    ++r;
  }
  if (s.curvature() != 0)
    for (int i = 0; i < m; ++i) R.block(r++, D * i, 1, D) = S.cwiseProduct(P.vertex(i)).transpose();
  Mat N = null_space(R, 1e-9);
  std::vector<DeformationField> out;
  for (Eigen::Index c = 0; c < N.cols(); ++c) out.push_back({Eigen::Map<const Mat>(N.col(c).data(), D, m)});
  return out;
}

}  // namespace schlafli
