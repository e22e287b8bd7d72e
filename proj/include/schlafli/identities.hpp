#pragma once

#include "deformation.hpp"
#include "linalg.hpp"
#include "measure.hpp"
#include "polytope.hpp"
#include "report.hpp"

#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace schlafli {

struct CheckConfig {
  QuadratureConfig quad;
  DerivativeEngine fd;
  std::optional<double> tolerance;
  bool sign_flip = false;
  bool euclidean_literal = false;  // evaluate the printed unprimed Euclidean (E_p) term
  bool keep_terms = true;
};

inline double default_tolerance(int dim) { return dim <= 3 ? 1e-5 : 1e-4; }

/// Every face and dual-face measure of a polytope at one instant.
struct Snapshot {
  std::vector<std::vector<double>> V, Vd;  // [codim][id]; V[0] is the body when measured
  std::vector<std::vector<Vec>> pi, pid;
  std::vector<Vec> normals;
};

namespace detail {

template <class T, class F>
std::vector<std::vector<T>> zip_map(const std::vector<std::vector<T>>& a, const std::vector<std::vector<T>>& b, F f) {
  std::vector<std::vector<T>> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    out[i].reserve(a[i].size());
    for (size_t j = 0; j < a[i].size(); ++j) out[i].push_back(f(a[i][j], b[i][j]));
  }
  return out;
}

}  // namespace detail

inline Snapshot operator+(const Snapshot& a, const Snapshot& b) {
  Snapshot s;
  s.V = detail::zip_map(a.V, b.V, [](double x, double y) { return x + y; });
  s.Vd = detail::zip_map(a.Vd, b.Vd, [](double x, double y) { return x + y; });
  s.pi = detail::zip_map(a.pi, b.pi, [](const Vec& x, const Vec& y) -> Vec { return x + y; });
  s.pid = detail::zip_map(a.pid, b.pid, [](const Vec& x, const Vec& y) -> Vec { return x + y; });
  for (size_t g = 0; g < a.normals.size(); ++g) s.normals.push_back(a.normals[g] + b.normals[g]);
  return s;
}

inline Snapshot operator*(double c, const Snapshot& a) {
  Snapshot s = a;
  for (auto& row : s.V)
    for (double& v : row) v *= c;
  for (auto& row : s.Vd)
    for (double& v : row) v *= c;
  for (auto& row : s.pi)
    for (Vec& v : row) v *= c;
  for (auto& row : s.pid)
    for (Vec& v : row) v *= c;
  for (Vec& v : s.normals) v *= c;
  return s;
}

struct SecondMoments {
  std::vector<std::vector<Mat>> face, dual;
};

inline Snapshot take_snapshot(const Polytope& P, const QuadratureConfig& q, QuadCache* cache, bool body,
                              SecondMoments* second = nullptr) {
  const int d = P.dim();
  Snapshot s;
  s.V.resize(d + 1);
  s.pi.resize(d + 1);
  s.Vd.resize(d + 1);
  s.pid.resize(d + 1);
  if (second) {
    second->face.assign(d + 1, {});
    second->dual.assign(d + 1, {});
  }
  if (body) {
    FaceMeasure m = measure_face(P, {0, 0}, q, cache);
    s.V[0].push_back(m.volume);
    s.pi[0].push_back(m.moment);
  }
  for (int c = 1; c <= d; ++c) {
    for (const Face& f : P.faces(c)) {
      FaceMeasure m = measure_face(P, f.ref(), q, cache, second != nullptr);
      FaceMeasure md = measure_dual(P, dual_face(P, f.ref()), q, cache, second != nullptr);
      s.V[c].push_back(m.volume);
      s.pi[c].push_back(m.moment);
      s.Vd[c].push_back(md.volume);
      s.pid[c].push_back(md.moment);
      if (second) {
        second->face[c].push_back(m.second);
        second->dual[c].push_back(md.second);
      }
    }
  }
  s.normals = P.normals();
  return s;
}

/// Orthogonal projector onto vect(F) (K != 0) or F_0 (K = 0) as a matrix.
inline Mat face_projector(const Polytope& P, FaceRef F) {
  const Vec& S = P.space().signs();
  Mat B = face_span_basis(P, F);
  const Eigen::Index D = P.space().ambient_dim();
  if (B.cols() == 0) return Mat::Zero(D, D);
  Mat G = form_gram(S, B);
  return B * G.inverse() * B.transpose() * S.asDiagonal();
}

/// The static data, the first derivatives of all measures, and the ν maps of
/// a polytope under one deformation field.
struct VariationalData {
  Polytope P;
  DeformationField X;
  Snapshot base, deriv;
  SecondMoments second;
  std::vector<std::vector<Mat>> nu;    // [codim][id], empty when undefined
  std::vector<std::vector<Mat>> proj;  // [codim][id]
  bool has_body = false;
  double speed = 0.0;

  int n() const { return P.dim() - 1; }
  double K() const { return P.curvature(); }
};

inline VariationalData prepare(const Polytope& P, const DeformationField& X, const CheckConfig& cfg,
                               bool body = false) {
  validate_field(P, X);
  cfg.quad.validate();
  VariationalData d{P, X, {}, {}, {}, {}, {}, body, X.max_speed()};
  QuadCache cache;
  d.base = take_snapshot(P, cfg.quad, &cache, body, &d.second);
  d.deriv = derivative_along(cfg.fd, [&](double t) { return take_snapshot(deform(P, X, t), cfg.quad, &cache, body); });
  const int dim = P.dim();
  d.nu.assign(dim + 1, {});
  d.proj.assign(dim + 1, {});
  for (int c = 1; c <= dim; ++c)
    for (const Face& f : P.faces(c)) {
      d.proj[c].push_back(face_projector(P, f.ref()));
      const bool simplex = f.vertices.size() == static_cast<size_t>(f.dim + 1);
      d.nu[c].push_back(P.curvature() != 0 && simplex ? nu_map(P, X, f.ref()).A : Mat());
    }
  return d;
}

/// Snapshot of the static data only.
inline Snapshot static_snapshot(const Polytope& P, const QuadratureConfig& q, bool body = true) {
  QuadCache cache;
  return take_snapshot(P, q, &cache, body);
}

namespace detail {

inline void require_p(int p, int lo, int hi, const char* what) {
  if (p < lo || p > hi)
    throw InputError(std::string(what) + ": p=" + std::to_string(p) + " outside [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
}

inline void require_curved(const VariationalData& d, const char* what) {
  if (d.P.curvature() == 0) throw InputError(std::string(what) + " is stated for spherical and hyperbolic polytopes");
}

inline const Mat& nu_of(const VariationalData& d, int c, int id) {
  const Mat& A = d.nu[c][id];
  if (A.size() == 0) throw InputError("nu map undefined: the face is not a simplex");
  return A;
}

inline ReportOptions options(const VariationalData& d, const CheckConfig& cfg, bool scalar = false) {
  ReportOptions o;
  o.tolerance = cfg.tolerance.value_or(default_tolerance(d.P.dim()));
  o.sign_flip = cfg.sign_flip;
  o.speed = d.speed;
  o.scalar = scalar;
  o.keep_terms = cfg.keep_terms;
  return o;
}

inline Vec scalar_vec(double x) { return Vec::Constant(1, x); }

/// ν_{F*}(π(F*)) from the velocities of the normals spanning F*.
inline Vec nu_dual_of_moment(const VariationalData& d, int c, int id) {
  const Face& f = d.P.face(c, id);
  Mat N(d.P.space().ambient_dim(), static_cast<Eigen::Index>(f.facets.size()));
  Mat Np(N.rows(), N.cols());
  for (size_t i = 0; i < f.facets.size(); ++i) {
    N.col(static_cast<Eigen::Index>(i)) = d.base.normals[f.facets[i]];
    Np.col(static_cast<Eigen::Index>(i)) = d.deriv.normals[f.facets[i]];
  }
  Vec coef = min_norm_solve(N, d.base.pid[c][id], 1e-12);
  return d.proj[c][id] * (Np * coef);
}

/// ν_H^*(y) for y in the normal space of a simplicial face H.
inline Vec nu_adjoint_of(const VariationalData& d, int c, int id, const Vec& y) {
  const Vec& S = d.P.space().signs();
  return S.asDiagonal() * (nu_of(d, c, id).transpose() * (S.asDiagonal() * y));
}

}  // namespace detail

namespace detail {

/// Static and differentiated measures of the faces of one (possibly
/// non-convex) polyhedron, indexed [codim][id].
struct MeasureSet {
  int n;
  double K;
  const Snapshot& base;
  const Snapshot& deriv;

  int count(int c) const { return static_cast<int>(base.V[c].size()); }
};

inline std::vector<Term> E0_terms(const MeasureSet& m) {
  std::vector<Term> t;
  for (int i = 0; i < m.count(2); ++i)
    t.push_back({0, {2, i}, m.deriv.Vd[2][i] * m.base.pi[2][i], m.base.Vd[2][i] * m.base.pi[2][i].norm()});
  for (int i = 0; i < m.count(1); ++i)
    t.push_back({1, {1, i}, -m.deriv.V[1][i] * m.base.normals[i], m.base.V[1][i] * m.base.normals[i].norm()});
  return t;
}

inline std::vector<Term> Hp_terms(const MeasureSet& m, int p) {
  const double c0 = (m.n - p + 1) * m.K;
  const double cp = m.K == 0 ? 1.0 : p;
  std::vector<Term> t;
  if (m.K != 0) {
    for (int i = 0; i < m.count(p - 1); ++i)
      t.push_back({0, {p - 1, i}, c0 * m.deriv.V[p - 1][i] * m.base.pid[p - 1][i],
                   std::abs(c0) * m.base.V[p - 1][i] * m.base.pid[p - 1][i].norm()});
    for (int i = 0; i < m.count(p); ++i)
      t.push_back({1, {p, i}, c0 * m.base.Vd[p][i] * m.deriv.pi[p][i],
                   std::abs(c0) * m.base.Vd[p][i] * m.base.pi[p][i].norm()});
  }
  for (int i = 0; i < m.count(p + 1); ++i)
    t.push_back({2, {p + 1, i}, cp * m.base.V[p + 1][i] * m.deriv.pid[p + 1][i],
                 cp * m.base.V[p + 1][i] * m.base.pid[p + 1][i].norm()});
  for (int i = 0; i < m.count(p + 2); ++i)
    t.push_back({3, {p + 2, i}, cp * m.deriv.Vd[p + 2][i] * m.base.pi[p + 2][i],
                 cp * m.base.Vd[p + 2][i] * m.base.pi[p + 2][i].norm()});
  return t;
}

inline std::vector<Term> Kp_terms(const MeasureSet& m, int p) {
  const double c0 = (m.n - p + 1) * m.K;
  const double cp = m.K == 0 ? 1.0 : p;
  std::vector<Term> t;
  if (m.K != 0) {
    for (int i = 0; i < m.count(p - 1); ++i)
      t.push_back({0, {p - 1, i}, c0 * m.deriv.V[p - 1][i] * m.base.pid[p - 1][i],
                   std::abs(c0) * m.base.V[p - 1][i] * m.base.pid[p - 1][i].norm()});
    for (int i = 0; i < m.count(p); ++i)
      t.push_back({1, {p, i}, -c0 * m.deriv.Vd[p][i] * m.base.pi[p][i],
                   std::abs(c0) * m.base.Vd[p][i] * m.base.pi[p][i].norm()});
  }
  for (int i = 0; i < m.count(p + 1); ++i)
    t.push_back({2, {p + 1, i}, -cp * m.deriv.V[p + 1][i] * m.base.pid[p + 1][i],
                 cp * m.base.V[p + 1][i] * m.base.pid[p + 1][i].norm()});
  for (int i = 0; i < m.count(p + 2); ++i)
    t.push_back({3, {p + 2, i}, cp * m.deriv.Vd[p + 2][i] * m.base.pi[p + 2][i],
                 cp * m.base.Vd[p + 2][i] * m.base.pi[p + 2][i].norm()});
  return t;
}

}  // namespace detail

/// Σθ'(F)π(F) − ΣV'(G)G*  (G* = N(G) in the Euclidean case).
inline IdentityReport check_E0(const VariationalData& d, const CheckConfig& cfg = {}) {
  const IdentityId id = d.P.curvature() == 0 ? IdentityId::E0_Euclidean : IdentityId::E0;
  return finalize_report(id, std::nullopt, detail::E0_terms({d.n(), d.K(), d.base, d.deriv}), detail::options(d, cfg),
                         d.P.space().ambient_dim());
}

/// (E_p); the Euclidean form keeps only the last two sums.
inline IdentityReport check_Ep(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  const int n = d.n();
  const double K = d.K();
  detail::require_p(p, 1, n - 1, "E_p");
  const double c0 = (n - p + 1) * K;
  const double cp = K == 0 ? 1.0 : p;
  std::vector<Term> t;
  if (K != 0)
    for (const Face& h : d.P.faces(p)) {
      const int i = h.id;
      Vec v = c0 * d.base.Vd[p][i] * (d.proj[p][i] * d.deriv.pi[p][i]);
      t.push_back({0, h.ref(), v, std::abs(c0) * d.base.Vd[p][i] * d.base.pi[p][i].norm()});
    }
  for (const Face& f : d.P.faces(p + 2)) {
    const int i = f.id;
    t.push_back({1, f.ref(), cp * d.deriv.Vd[p + 2][i] * d.base.pi[p + 2][i],
                 cp * d.base.Vd[p + 2][i] * d.base.pi[p + 2][i].norm()});
  }
  const bool literal = K == 0 && cfg.euclidean_literal;
  for (const Face& g : d.P.faces(p + 1)) {
    const int i = g.id;
    const Vec& w = literal ? d.base.pid[p + 1][i] : d.deriv.pid[p + 1][i];
    t.push_back({2, g.ref(), cp * d.base.V[p + 1][i] * (d.proj[p + 1][i] * w),
                 cp * d.base.V[p + 1][i] * d.base.pid[p + 1][i].norm()});
  }
  const IdentityId id = K == 0 ? IdentityId::Ep_Euclidean : IdentityId::Ep;
  return finalize_report(id, p, std::move(t), detail::options(d, cfg), d.P.space().ambient_dim());
}

/// (H_p); with K = 0 the first two sums drop out.
inline IdentityReport check_Hp(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  detail::require_p(p, 2, d.n() - 1, "H_p");
  const IdentityId id = d.K() == 0 ? IdentityId::Hp_Euclidean : IdentityId::Hp;
  return finalize_report(id, p, detail::Hp_terms({d.n(), d.K(), d.base, d.deriv}, p), detail::options(d, cfg),
                         d.P.space().ambient_dim());
}

/// (K_p): only volume derivatives against static moments.
inline IdentityReport check_Kp(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  detail::require_p(p, 2, d.n() - 1, "K_p");
  const IdentityId id = d.K() == 0 ? IdentityId::Kp_Euclidean : IdentityId::Kp;
  return finalize_report(id, p, detail::Kp_terms({d.n(), d.K(), d.base, d.deriv}, p), detail::options(d, cfg),
                         d.P.space().ambient_dim());
}

/// (F'_p): ΣV(F*)(π'(F) − ν_F(π(F))) − pΣ∫_G⟨ν_G(x), π(G*)⟩x.
inline IdentityReport check_Fp_prime(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  detail::require_curved(d, "F'_p");
  detail::require_p(p, 1, d.n(), "F'_p");
  const Vec& S = d.P.space().signs();
  std::vector<Term> t;
  for (const Face& f : d.P.faces(p)) {
    const int i = f.id;
    Vec v = d.base.Vd[p][i] * (d.deriv.pi[p][i] - detail::nu_of(d, p, i) * d.base.pi[p][i]);
    t.push_back({0, f.ref(), v, d.base.Vd[p][i] * d.base.pi[p][i].norm()});
  }
  for (const Face& g : d.P.faces(p + 1)) {
    const int i = g.id;
    const Mat& M2 = d.second.face[p + 1][i];
    const Vec& w = d.base.pid[p + 1][i];
    Vec v = -p * (M2 * (detail::nu_of(d, p + 1, i).transpose() * S.asDiagonal() * w));
    t.push_back({1, g.ref(), v, p * M2.norm() * w.norm()});
  }
  return finalize_report(IdentityId::Fp_prime, p, std::move(t), detail::options(d, cfg), d.P.space().ambient_dim());
}

/// (G'_p): ΣV'(F*)π(F) + (n−p+1)KΣ∫_G⟨ν_G(x), π(G*)⟩x − ΣV(H)ν_H^*(π(H*)).
inline IdentityReport check_Gp_prime(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  detail::require_curved(d, "G'_p");
  const int n = d.n();
  detail::require_p(p, 0, n - 1, "G'_p");
  const double c1 = (n - p + 1) * d.K();
  const Vec& S = d.P.space().signs();
  std::vector<Term> t;
  for (const Face& f : d.P.faces(p + 2)) {
    const int i = f.id;
    t.push_back({0, f.ref(), d.deriv.Vd[p + 2][i] * d.base.pi[p + 2][i],
                 d.base.Vd[p + 2][i] * d.base.pi[p + 2][i].norm()});
  }
  for (const Face& g : d.P.faces(p + 1)) {
    const int i = g.id;
    const Mat& M2 = d.second.face[p + 1][i];
    const Vec& w = d.base.pid[p + 1][i];
    Vec v = c1 * (M2 * (detail::nu_of(d, p + 1, i).transpose() * S.asDiagonal() * w));
    t.push_back({1, g.ref(), v, std::abs(c1) * M2.norm() * w.norm()});
  }
  for (const Face& h : d.P.faces(p + 1)) {
    const int i = h.id;
    Vec v = -d.base.V[p + 1][i] * detail::nu_adjoint_of(d, p + 1, i, d.base.pid[p + 1][i]);
    t.push_back({2, h.ref(), v, d.base.V[p + 1][i] * d.base.pid[p + 1][i].norm()});
  }
  return finalize_report(IdentityId::Gp_prime, p, std::move(t), detail::options(d, cfg), d.P.space().ambient_dim());
}

/// (L_p) with its right-hand side moved to the left.
inline IdentityReport check_Lp(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  detail::require_curved(d, "L_p");
  const int n = d.n();
  detail::require_p(p, 1, n - 1, "L_p");
  const double ck = d.K() * (n - p);
  std::vector<Term> t;
  for (const Face& f : d.P.faces(p + 2)) {
    const int i = f.id;
    Vec v = (p + 1) * d.base.V[p + 2][i] * (d.deriv.pid[p + 2][i] - detail::nu_dual_of_moment(d, p + 2, i));
    t.push_back({0, f.ref(), v, (p + 1) * d.base.V[p + 2][i] * d.base.pid[p + 2][i].norm()});
  }
  for (const Face& g : d.P.faces(p)) {
    const int i = g.id;
    t.push_back({1, g.ref(), ck * d.deriv.V[p][i] * d.base.pid[p][i],
                 std::abs(ck) * d.base.V[p][i] * d.base.pid[p][i].norm()});
  }
  for (const Face& h : d.P.faces(p + 1)) {
    const int i = h.id;
    Vec v = ck * d.base.Vd[p + 1][i] * (detail::nu_of(d, p + 1, i) * d.base.pi[p + 1][i]);
    t.push_back({2, h.ref(), v, std::abs(ck) * d.base.Vd[p + 1][i] * d.base.pi[p + 1][i].norm()});
  }
  return finalize_report(IdentityId::Lp, p, std::move(t), detail::options(d, cfg), d.P.space().ambient_dim());
}

/// (Q'_p): ΣV(F*)ν_F(π(F)) − (p+2)Σ∫_{F*}⟨ν_F(π(F)), n⟩n + ΣV'(G)π(G*).
inline IdentityReport check_Qp_prime(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  detail::require_curved(d, "Q'_p");
  detail::require_p(p, 0, d.n() - 1, "Q'_p");
  const Vec& S = d.P.space().signs();
  std::vector<Term> t;
  for (const Face& f : d.P.faces(p + 2)) {
    const int i = f.id;
    Vec nu_pi = detail::nu_of(d, p + 2, i) * d.base.pi[p + 2][i];
    t.push_back({0, f.ref(), d.base.Vd[p + 2][i] * nu_pi, d.base.Vd[p + 2][i] * d.base.pi[p + 2][i].norm()});
    const Mat& M2 = d.second.dual[p + 2][i];
    t.push_back({1, f.ref(), -(p + 2) * (M2 * (S.asDiagonal() * nu_pi)),
                 (p + 2) * M2.norm() * d.base.pi[p + 2][i].norm()});
  }
  for (const Face& g : d.P.faces(p + 1)) {
    const int i = g.id;
    t.push_back({2, g.ref(), d.deriv.V[p + 1][i] * d.base.pid[p + 1][i],
                 d.base.V[p + 1][i] * d.base.pid[p + 1][i].norm()});
  }
  return finalize_report(IdentityId::Qp_prime, p, std::move(t), detail::options(d, cfg), d.P.space().ambient_dim());
}

/// (M'_p): ΣV(F)(π'(F*) − ν_{F*}(π(F*))) + (n−p)KΣ∫_{G*}⟨ν_G(π(G)), n⟩n.
inline IdentityReport check_Mp_prime(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  detail::require_curved(d, "M'_p");
  const int n = d.n();
  detail::require_p(p, 0, n - 1, "M'_p");
  const double ck = (n - p) * d.K();
  const Vec& S = d.P.space().signs();
  std::vector<Term> t;
  for (const Face& f : d.P.faces(p + 2)) {
    const int i = f.id;
    Vec v = d.base.V[p + 2][i] * (d.deriv.pid[p + 2][i] - detail::nu_dual_of_moment(d, p + 2, i));
    t.push_back({0, f.ref(), v, d.base.V[p + 2][i] * d.base.pid[p + 2][i].norm()});
  }
  for (const Face& g : d.P.faces(p + 1)) {
    const int i = g.id;
    const Mat& M2 = d.second.dual[p + 1][i];
    Vec nu_pi = detail::nu_of(d, p + 1, i) * d.base.pi[p + 1][i];
    t.push_back({1, g.ref(), ck * (M2 * (S.asDiagonal() * nu_pi)), std::abs(ck) * M2.norm() * d.base.pi[p + 1][i].norm()});
  }
  return finalize_report(IdentityId::Mp_prime, p, std::move(t), detail::options(d, cfg), d.P.space().ambient_dim());
}

/// The two static Minkowski-type formulas: the body formula and one report
/// per p in 1..n (vertices count with volume 1).
inline std::pair<IdentityReport, std::vector<IdentityReport>> check_minkowski_static(const Polytope& P,
                                                                                     const Snapshot& s,
                                                                                     const CheckConfig& cfg = {}) {
  const int n = P.dim() - 1;
  const double K = P.curvature();
  const Eigen::Index D = P.space().ambient_dim();
  ReportOptions o;
  o.tolerance = cfg.tolerance.value_or(default_tolerance(P.dim()));
  o.sign_flip = cfg.sign_flip;
  o.keep_terms = cfg.keep_terms;
  std::vector<Term> t;
  if (K != 0) {
    if (s.pi[0].empty()) throw InputError("the body moment was not measured");
    t.push_back({0, {0, 0}, (n + 1) * K * s.pi[0][0], 0.0});
  }
  for (const Face& f : P.faces(1)) t.push_back({1, f.ref(), s.V[1][f.id] * s.normals[f.id], 0.0});
  IdentityReport first = finalize_report(IdentityId::MinkowskiStatic1, std::nullopt, std::move(t), o, D);
  std::vector<IdentityReport> rest;
  for (int p = 1; p <= n; ++p) {
    std::vector<Term> u;
    if (K != 0)
      for (const Face& f : P.faces(p))
        u.push_back({0, f.ref(), (n - p + 1) * K * s.Vd[p][f.id] * s.pi[p][f.id], 0.0});
    for (const Face& g : P.faces(p + 1)) u.push_back({1, g.ref(), p * s.V[p + 1][g.id] * s.pid[p + 1][g.id], 0.0});
    rest.push_back(finalize_report(IdentityId::MinkowskiStatic2, p, std::move(u), o, D));
  }
  return {std::move(first), std::move(rest)};
}

inline std::pair<IdentityReport, std::vector<IdentityReport>> check_minkowski_static(const Polytope& P,
                                                                                     const CheckConfig& cfg = {}) {
  return check_minkowski_static(P, static_snapshot(P, cfg.quad, P.curvature() != 0), cfg);
}

/// K(n−p)ΣV(F*)V'(F) + pΣV(H)V'(H*) over F in F_p and H in F_{p+2}.
inline IdentityReport check_scalar_schlafli(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  const int n = d.n();
  detail::require_p(p, 1, n - 1, "scalar Schlafli");
  const double ck = d.K() * (n - p);
  std::vector<Term> t;
  if (ck != 0)
    for (const Face& f : d.P.faces(p)) {
      const int i = f.id;
      t.push_back({0, f.ref(), detail::scalar_vec(ck * d.base.Vd[p][i] * d.deriv.V[p][i]),
                   std::abs(ck) * d.base.Vd[p][i] * d.base.V[p][i]});
    }
  for (const Face& h : d.P.faces(p + 2)) {
    const int i = h.id;
    t.push_back({1, h.ref(), detail::scalar_vec(p * d.base.V[p + 2][i] * d.deriv.Vd[p + 2][i]),
                 p * d.base.V[p + 2][i] * d.base.Vd[p + 2][i]});
  }
  return finalize_report(IdentityId::ScalarSchlafli, p, std::move(t), detail::options(d, cfg, true), 1);
}

/// nK V'(P) + ΣV(F)θ'(F) with exterior angles θ.
inline IdentityReport check_classical_schlafli(const VariationalData& d, const CheckConfig& cfg = {}) {
  if (!d.has_body) throw InputError("classical Schlafli needs the body volume");
  const int n = d.n();
  std::vector<Term> t;
  const double ck = n * d.K();
  if (ck != 0)
    t.push_back({0, {0, 0}, detail::scalar_vec(ck * d.deriv.V[0][0]), std::abs(ck) * d.base.V[0][0]});
  for (const Face& f : d.P.faces(2)) {
    const int i = f.id;
    t.push_back({1, f.ref(), detail::scalar_vec(d.base.V[2][i] * d.deriv.Vd[2][i]), d.base.V[2][i] * d.base.Vd[2][i]});
  }
  return finalize_report(IdentityId::ClassicalSchlafli, std::nullopt, std::move(t), detail::options(d, cfg, true), 1);
}

inline void require_isometric(const VariationalData& d, double tol = 1e-7) {
  if (!is_isometric(d.P, d.X, tol)) throw InputError("deformation is not isometric to first order");
}

/// (n−p+1)K(−ΣV'(G*)π(G)) + pΣV'(L*)π(L) for isometric deformations.
inline IdentityReport check_isometric_corollary(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  const int n = d.n();
  detail::require_p(p, 2, n - 1, "isometric corollary");
  require_isometric(d);
  const double c0 = (n - p + 1) * d.K();
  std::vector<Term> t;
  if (c0 != 0)
    for (const Face& g : d.P.faces(p)) {
      const int i = g.id;
      t.push_back({0, g.ref(), -c0 * d.deriv.Vd[p][i] * d.base.pi[p][i],
                   std::abs(c0) * d.base.Vd[p][i] * d.base.pi[p][i].norm()});
    }
  for (const Face& l : d.P.faces(p + 2)) {
    const int i = l.id;
    t.push_back({1, l.ref(), p * d.deriv.Vd[p + 2][i] * d.base.pi[p + 2][i],
                 p * d.base.Vd[p + 2][i] * d.base.pi[p + 2][i].norm()});
  }
  return finalize_report(IdentityId::IsometricCorollary, p, std::move(t), detail::options(d, cfg),
                         d.P.space().ambient_dim());
}

/// Σθ'(F)π(F) for isometric deformations.
inline IdentityReport check_isometric_angles(const VariationalData& d, const CheckConfig& cfg = {}) {
  require_isometric(d);
  std::vector<Term> t;
  for (const Face& f : d.P.faces(2)) {
    const int i = f.id;
    t.push_back({0, f.ref(), d.deriv.Vd[2][i] * d.base.pi[2][i], d.base.Vd[2][i] * d.base.pi[2][i].norm()});
  }
  return finalize_report(IdentityId::IsometricCorollary, std::nullopt, std::move(t), detail::options(d, cfg),
                         d.P.space().ambient_dim());
}

/// E_p against (n−p+1)K·F'_p + p·G'_p.
inline IdentityReport check_Ep_consistency(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  CheckConfig c = cfg;
  c.sign_flip = false;
  IdentityReport e = check_Ep(d, p, cfg);
  IdentityReport f = check_Fp_prime(d, p, c);
  IdentityReport g = check_Gp_prime(d, p, c);
  const double a = (d.n() - p + 1) * d.K();
  Vec combo = a * f.residual + p * g.residual;
  return compare_reports(IdentityId::ConsistencyEp, p, e, combo, std::max(f.scale, g.scale),
                         cfg.tolerance.value_or(default_tolerance(d.P.dim())));
}

/// L_p against K(n−p)·Q'_{p−1} + (p+1)·M'_p.
inline IdentityReport check_Lp_consistency(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  CheckConfig c = cfg;
  c.sign_flip = false;
  IdentityReport l = check_Lp(d, p, cfg);
  IdentityReport q = check_Qp_prime(d, p - 1, c);
  IdentityReport m = check_Mp_prime(d, p, c);
  Vec combo = d.K() * (d.n() - p) * q.residual + (p + 1) * m.residual;
  return compare_reports(IdentityId::ConsistencyLp, p, l, combo, std::max(q.scale, m.scale),
                         cfg.tolerance.value_or(default_tolerance(d.P.dim())));
}

/// Derivative of the p-th static formula, by the product rule.
inline Vec minkowski_static_derivative(const VariationalData& d, int p) {
  const int n = d.n();
  const double K = d.K();
  Vec out = Vec::Zero(d.P.space().ambient_dim());
  for (const Face& f : d.P.faces(p)) {
    const int i = f.id;
    out += (n - p + 1) * K * (d.deriv.Vd[p][i] * d.base.pi[p][i] + d.base.Vd[p][i] * d.deriv.pi[p][i]);
  }
  for (const Face& g : d.P.faces(p + 1)) {
    const int i = g.id;
    out += p * (d.deriv.V[p + 1][i] * d.base.pid[p + 1][i] + d.base.V[p + 1][i] * d.deriv.pid[p + 1][i]);
  }
  return out;
}

/// K_p against H_p minus the derivative of the static formula.
inline IdentityReport check_Kp_consistency(const VariationalData& d, int p, const CheckConfig& cfg = {}) {
  CheckConfig c = cfg;
  c.sign_flip = false;
  IdentityReport k = check_Kp(d, p, cfg);
  IdentityReport h = check_Hp(d, p, c);
  const double w = d.K() == 0 ? 1.0 / p : 1.0;
  Vec combo = h.residual - w * minkowski_static_derivative(d, p);
  return compare_reports(IdentityId::ConsistencyKp, p, k, combo, h.scale,
                         cfg.tolerance.value_or(default_tolerance(d.P.dim())));
}

/// Singular curvature 2π − Σ(face angles) at every vertex of a polyhedron in R^3.
inline Vec vertex_curvatures(const Polytope& P) {
  if (P.curvature() != 0 || P.dim() != 3) throw InputError("vertex curvatures are computed for polyhedra in R^3");
  Vec k = Vec::Constant(P.num_vertices(), 2 * std::numbers::pi);
  for (const Face& f : P.faces(1)) {
    const auto& vs = f.vertices;
    // Facet vertices in cyclic order around the facet centroid.
    Vec c = P.face_vertices(f.ref()).rowwise().mean();
    Eigen::Vector3d N = P.normal(f.id);
    Eigen::Vector3d e1 = (P.vertex(vs[0]) - c).normalized();
    Vec e2 = N.cross(e1);
    std::vector<std::pair<double, int>> order;
    for (int v : vs) {
      Vec r = P.vertex(v) - c;
      order.push_back({std::atan2(r.dot(e2), r.dot(e1)), v});
    }
    std::sort(order.begin(), order.end());
    const size_t m = order.size();
    for (size_t j = 0; j < m; ++j) {
      const int v = order[j].second;
      Vec a = P.vertex(order[(j + m - 1) % m].second) - P.vertex(v);
      Vec b = P.vertex(order[(j + 1) % m].second) - P.vertex(v);
      k(v) -= std::acos(clamp_unit(a.normalized().dot(b.normalized())));
    }
  }
  return k;
}

/// Σ k'(v)v + Σ l(e)Π_e(π'(e*)) for polyhedra in R^3, with k'(v) from the
/// face angles at v.
inline IdentityReport check_curvature_corollary_R3(const VariationalData& d, const CheckConfig& cfg = {}) {
  Vec kp = derivative(cfg.fd, d.P, d.X, [](const Polytope& Q) { return vertex_curvatures(Q); });
  Vec k0 = vertex_curvatures(d.P);
  std::vector<Term> t;
  for (const Face& v : d.P.faces(3)) {
    const int vi = v.vertices[0];
    t.push_back({0, v.ref(), kp(vi) * d.P.vertex(vi), std::abs(k0(vi)) * d.P.vertex(vi).norm()});
  }
  for (const Face& e : d.P.faces(2)) {
    const int i = e.id;
    t.push_back({1, e.ref(), d.base.V[2][i] * (d.proj[2][i] * d.deriv.pid[2][i]),
                 d.base.V[2][i] * d.base.pid[2][i].norm()});
  }
  return finalize_report(IdentityId::CurvatureCorollaryR3, 1, std::move(t), detail::options(d, cfg), 3);
}

// Convenience overloads that prepare the variational data themselves.

inline IdentityReport check_E0(const Polytope& P, const DeformationField& X, const CheckConfig& cfg = {}) {
  return check_E0(prepare(P, X, cfg), cfg);
}
inline IdentityReport check_Ep(const Polytope& P, const DeformationField& X, int p, const CheckConfig& cfg = {}) {
  return check_Ep(prepare(P, X, cfg), p, cfg);
}
inline IdentityReport check_Hp(const Polytope& P, const DeformationField& X, int p, const CheckConfig& cfg = {}) {
  return check_Hp(prepare(P, X, cfg), p, cfg);
}
inline IdentityReport check_Kp(const Polytope& P, const DeformationField& X, int p, const CheckConfig& cfg = {}) {
  return check_Kp(prepare(P, X, cfg), p, cfg);
}
inline IdentityReport check_scalar_schlafli(const Polytope& P, const DeformationField& X, int p,
                                            const CheckConfig& cfg = {}) {
  return check_scalar_schlafli(prepare(P, X, cfg), p, cfg);
}

}  // namespace schlafli
