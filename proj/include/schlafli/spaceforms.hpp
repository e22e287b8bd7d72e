#pragma once

#include "linalg.hpp"

#include <cmath>
#include <string>

namespace schlafli {

/// One of the three model spaces of constant curvature K in {-1, 0, +1}.
///
/// K=+1 lives on the unit sphere of R^{n+2}, K=-1 on the upper sheet of the
/// hyperboloid <x,x> = -1 in R^{n+1,1} (last coordinate timelike), and K=0 is
/// the affine space R^{n+1} itself.
class SpaceForm {
 public:
  SpaceForm(int curvature, int intrinsic_dim, double tol = 1e-9)
      : k_(curvature), dim_(intrinsic_dim), tol_(tol) {
    if (k_ < -1 || k_ > 1) throw InputError("curvature must be -1, 0 or 1");
    if (dim_ < 2) throw InputError("intrinsic dimension must be at least 2");
    if (dim_ > 7) throw InputError("intrinsic dimension above 7 is not supported");
    if (!(tol_ > 0)) throw InputError("membership tolerance must be positive");
    signs_ = Vec::Ones(ambient_dim());
    if (k_ == -1) signs_(ambient_dim() - 1) = -1.0;
  }

  static SpaceForm sphere(int dim) { return SpaceForm(1, dim); }
  static SpaceForm hyperbolic(int dim) { return SpaceForm(-1, dim); }
  static SpaceForm euclidean(int dim) { return SpaceForm(0, dim); }

  int curvature() const { return k_; }
  int dim() const { return dim_; }
  int n() const { return dim_ - 1; }
  int ambient_dim() const { return k_ == 0 ? dim_ : dim_ + 1; }
  double tolerance() const { return tol_; }
  const Vec& signs() const { return signs_; }
  bool lorentzian() const { return k_ == -1; }

  std::string name() const {
    const char* base = k_ == 1 ? "S" : (k_ == -1 ? "H" : "R");
    return std::string(base) + "^" + std::to_string(dim_);
  }

  double bilinear(const Vec& u, const Vec& v) const {
    if (u.size() != ambient_dim() || v.size() != ambient_dim())
      throw InputError("bilinear: vector dimension does not match the ambient dimension");
    return form_dot(signs_, u, v);
  }

  double norm_sq(const Vec& u) const { return bilinear(u, u); }

  Mat gram(const Mat& cols) const { return form_gram(signs_, cols); }

  bool on_model(const Vec& x) const {
    if (x.size() != ambient_dim()) return false;
    if (k_ == 0) return x.allFinite();
    if (std::abs(norm_sq(x) - k_) > tol_ * std::max(1.0, x.squaredNorm())) return false;
    if (k_ == -1 && x(ambient_dim() - 1) <= 0) return false;
    return true;
  }

  void require_point(const Vec& x) const {
    if (x.size() != ambient_dim()) throw InputError("point has wrong ambient dimension");
    if (!on_model(x)) throw InputError("point is not on the model " + name());
  }

  bool is_tangent(const Vec& x, const Vec& X) const {
    if (k_ == 0) return X.size() == ambient_dim();
    return std::abs(bilinear(x, X)) <= tol_ * std::max(1.0, X.norm() * x.norm());
  }

  void require_tangent(const Vec& x, const Vec& X) const {
    if (X.size() != ambient_dim()) throw InputError("tangent vector has wrong ambient dimension");
    if (!is_tangent(x, X)) throw InputError("vector is not tangent to the model at its base point");
  }

  /// Component of w tangent to the model at x.
  Vec tangent_part(const Vec& x, const Vec& w) const {
    if (k_ == 0) return w;
    return w - (bilinear(w, x) / bilinear(x, x)) * x;
  }

  /// Rescales y back onto the model (K != 0); identity for K = 0.
  Vec normalize(const Vec& y) const {
    if (k_ == 0) return y;
    const double q = norm_sq(y) * k_;
    if (!(q > 0)) throw GeometryError("cannot normalize a vector of the wrong causal type");
    return y / std::sqrt(q);
  }

  double distance(const Vec& a, const Vec& b) const {
    if (k_ == 1) return std::acos(clamp_unit(bilinear(a, b)));
    if (k_ == -1) return std::acosh(std::max(1.0, -bilinear(a, b)));
    return (a - b).norm();
  }

 private:
  int k_;
  int dim_;
  double tol_;
  Vec signs_;
};

inline double bilinear(const SpaceForm& space, const Vec& u, const Vec& v) { return space.bilinear(u, v); }

/// Point reached at time t along the geodesic with initial velocity X at x.
inline Vec geodesic_flow(const SpaceForm& space, const Vec& x, const Vec& X, double t) {
  space.require_tangent(x, X);
  if (space.curvature() == 0) return x + t * X;
  const double nn = space.norm_sq(X);
  if (nn < 0) throw InputError("tangent vector must be spacelike");
  const double a = std::sqrt(nn);
  if (a == 0.0) return x;
  const double s = t * a;
  if (space.curvature() == 1) return std::cos(s) * x + (std::sin(s) / a) * X;
  return std::cosh(s) * x + (std::sinh(s) / a) * X;
}

/// Projection of w onto span(basis) orthogonal for the space's form.
inline Vec project_span(const SpaceForm& space, const Mat& basis, const Vec& w) {
  if (w.size() != space.ambient_dim() || basis.rows() != space.ambient_dim())
    throw InputError("project_span: dimension mismatch");
  return form_project(space.signs(), basis, w);
}

/// Deterministic orthonormal basis of the tangent space at x.
inline Mat tangent_basis(const SpaceForm& space, const Vec& x) {
  const int D = space.ambient_dim();
  if (space.curvature() == 0) return Mat::Identity(D, D);
  Mat cand(D, D);
  cand.col(0) = x;
  std::vector<int> order(D);
  for (int i = 0; i < D; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(x(a)) < std::abs(x(b)); });
  Mat basis(D, D - 1);
  int found = 0;
  for (int idx : order) {
    if (found == D - 1) break;
    Vec e = Vec::Unit(D, idx);
    Vec t = space.tangent_part(x, e);
    for (int j = 0; j < found; ++j) t -= space.bilinear(t, basis.col(j)) * basis.col(j);
    const double q = space.norm_sq(t);
    if (q < 1e-8) continue;
    basis.col(found++) = t / std::sqrt(q);
  }
  if (found != D - 1) throw GeometryError("tangent basis construction failed");
  return basis;
}

}  // namespace schlafli
