#pragma once

#include "linalg.hpp"
#include "polytope.hpp"
#include "quadrature.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace schlafli {

/// Volume V(F), moment pi(F) = int_F x dv and optionally int_F x x^T dv.
struct FaceMeasure {
  double volume = 0.0;
  Vec moment;
  Mat second;
  double est_error = 0.0;
};

namespace detail {

inline std::string plan_key(const std::string& tag, char kind, FaceRef F, FaceRef G, size_t idx) {
  return tag + kind + std::to_string(F.codim) + "." + std::to_string(F.id) + "/" + std::to_string(G.codim) + "." +
         std::to_string(G.id) + "#" + std::to_string(idx);
}

inline FaceMeasure to_measure(const RadialIntegral& r) {
  FaceMeasure m;
  m.volume = r.volume;
  m.moment = r.moment;
  m.second = r.second;
  m.est_error = r.error;
  return m;
}

}  // namespace detail

/// Measure of a primal face (codim 0 gives the body). Spherical and hyperbolic
/// faces are triangulated and integrated by radial pushforward; flat faces are
/// exact.
inline FaceMeasure measure_face(const Polytope& P, FaceRef F, const QuadratureConfig& cfg, QuadCache* cache = nullptr,
                                bool second = false, const std::string& tag = "") {
  const Face& f = P.face(F);
  const Eigen::Index D = P.space().ambient_dim();
  if (f.dim == 0) {
    FaceMeasure m;
    m.volume = 1.0;
    m.moment = P.vertex(f.vertices[0]);
    if (second) m.second = m.moment * m.moment.transpose();
    return m;
  }
  RadialIntegral total;
  total.moment = Vec::Zero(D);
  if (second) total.second = Mat::Zero(D, D);
  const auto simplices = triangulate_face(P, F);
  for (size_t i = 0; i < simplices.size(); ++i) {
    Mat U = detail::columns(P.vertices(), simplices[i]);
    if (P.curvature() == 0) {
      total.add(integrate_flat(U, second));
    } else {
      SimplexPlan* plan = cache ? cache->slot(detail::plan_key(tag, 'P', F, F, i)) : nullptr;
      total.add(integrate_radial(P.space().signs(), U, cfg, plan, second));
    }
  }
  return detail::to_measure(total);
}

/// Measure of a dual face (a spherical polytope in the normal space).
inline FaceMeasure measure_dual(const Polytope& P, const DualFace& df, const QuadratureConfig& cfg,
                                QuadCache* cache = nullptr, bool second = false, const std::string& tag = "") {
  const Eigen::Index D = P.space().ambient_dim();
  RadialIntegral total;
  total.moment = Vec::Zero(D);
  if (second) total.second = Mat::Zero(D, D);
  const auto simplices = triangulate_dual(P, df);
  for (size_t i = 0; i < simplices.size(); ++i) {
    Mat U = detail::columns(df.normals, simplices[i]);
    SimplexPlan* plan = cache ? cache->slot(detail::plan_key(tag, 'D', df.face, df.within, i)) : nullptr;
    total.add(integrate_radial(P.space().signs(), U, cfg, plan, second));
  }
  return detail::to_measure(total);
}

inline FaceMeasure measure_dual(const Polytope& P, FaceRef F, const QuadratureConfig& cfg, QuadCache* cache = nullptr,
                                bool second = false) {
  return measure_dual(P, dual_face(P, F), cfg, cache, second);
}

inline double face_volume(const Polytope& P, FaceRef F, const QuadratureConfig& cfg = {}) {
  return measure_face(P, F, cfg).volume;
}

inline Vec face_moment(const Polytope& P, FaceRef F, const QuadratureConfig& cfg = {}) {
  return measure_face(P, F, cfg).moment;
}

inline Vec body_moment(const Polytope& P, const QuadratureConfig& cfg = {}) { return measure_face(P, {0, 0}, cfg).moment; }

struct MonteCarloEstimate {
  double volume = 0.0;
  double volume_se = 0.0;
  Vec moment;
  Vec moment_se;
  double acceptance = 0.0;
  long samples = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Halfspace {
  Vec normal;
  Vec anchor;
};

inline std::vector<Halfspace> face_halfspaces(const Polytope& P, FaceRef F) {
  std::vector<Halfspace> hs;
  for (int h : P.face(F).sub) {
    FaceRef H{F.codim + 1, h};
    hs.push_back({relative_normal(P, H, F), P.vertex(P.face(H).vertices[0])});
  }
  return hs;
}

inline bool inside(const Polytope& P, const std::vector<Halfspace>& hs, const Vec& x) {
  const Vec& S = P.space().signs();
  for (const auto& h : hs) {
    const double s = P.curvature() != 0 ? form_dot(S, h.normal, x) : h.normal.dot(x - h.anchor);
    if (s > 0) return false;
  }
  return true;
}

class Accumulator {
 public:
  explicit Accumulator(Eigen::Index D) : m1_(Vec::Zero(D)), m2_(Vec::Zero(D)) {}
  void add(double w, const Vec& x, bool in) {
    ++n_;
    if (!in) return;
    ++hits_;
    s1_ += w;
    s2_ += w * w;
    m1_ += w * x;
    m2_ += (w * x).cwiseAbs2();
  }
  MonteCarloEstimate finish() const {
    MonteCarloEstimate e;
    const double n = static_cast<double>(n_);
    e.samples = n_;
    e.acceptance = hits_ / n;
    e.volume = s1_ / n;
    e.volume_se = std::sqrt(std::max(0.0, s2_ / n - e.volume * e.volume) / n);
    e.moment = m1_ / n;
    e.moment_se = ((m2_ / n - e.moment.cwiseAbs2()).cwiseMax(0.0) / n).cwiseSqrt();
    return e;
  }

 private:
  long n_ = 0;
  long hits_ = 0;
  double s1_ = 0.0, s2_ = 0.0;
  Vec m1_, m2_;
};

inline double cap_profile_integral(int k, double r) {
  // int_0^r sin^{k-1}(phi) d phi by composite Simpson.
  if (k == 1) return r;
  const int n = 4000;
  const double h = r / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::pow(std::sin(i * h), k - 1);
  }
  return s * h / 3.0;
}

}  // namespace detail

/// Independent Monte Carlo estimate of V(F) and pi(F) with standard errors.
/// K=+1 samples uniformly in a spherical cap containing F, K=-1 samples a
/// coordinate box of the hyperboloid patch with the area density, K=0 samples
/// a bounding box. Membership is tested against F's facet inequalities.
inline MonteCarloEstimate mc_oracle(const Polytope& P, FaceRef F, const QuadratureConfig& cfg,
                                    std::uint64_t task_id = 0) {
  cfg.validate();
  const Face& f = P.face(F);
  const Eigen::Index D = P.space().ambient_dim();
  const int k = f.dim;
  if (k == 0) {
    MonteCarloEstimate e;
    e.volume = 1.0;
    e.moment = P.vertex(f.vertices[0]);
    e.moment_se = Vec::Zero(D);
    e.acceptance = 1.0;
    return e;
  }
  std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ detail::splitmix64(task_id + 0x51ed2701ULL)));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto hs = detail::face_halfspaces(P, F);
  const Mat V = P.face_vertices(F);
  const Vec& S = P.space().signs();
  detail::Accumulator acc(D);
  const long N = cfg.mc_samples;

  if (P.curvature() == 1) {
    Mat W = detail::range_basis(V);
    Vec c = W.transpose() * V.rowwise().sum();
    c.normalize();
    double r = 0.0;
    for (Eigen::Index j = 0; j < V.cols(); ++j) r = std::max(r, std::acos(clamp_unit(c.dot(W.transpose() * V.col(j)))));
    r += 1e-9;
    const bool whole = r >= 0.5 * std::numbers::pi - 1e-6;
    Mat perp = null_space(c.transpose());
    const double area = whole ? sphere_volume(k) : sphere_volume(k - 1) * detail::cap_profile_integral(k, r);
    const double bound = whole ? 1.0 : std::sin(r);
    for (long i = 0; i < N; ++i) {
      Vec loc(k + 1);
      if (whole) {
        for (int j = 0; j <= k; ++j) loc(j) = gauss(rng);
        loc.normalize();
      } else {
        double phi;
        while (true) {
          phi = r * unif(rng);
          if (k == 1 || unif(rng) <= std::pow(std::sin(phi) / bound, k - 1)) break;
        }
        Vec om(k);
        for (int j = 0; j < k; ++j) om(j) = gauss(rng);
        om.normalize();
        loc = std::cos(phi) * c + std::sin(phi) * (perp * om);
      }
      Vec x = W * loc;
      acc.add(area, x, detail::inside(P, hs, x));
    }
  } else if (P.curvature() == -1) {
    Vec c = P.space().normalize(V.rowwise().sum());
    Mat B = detail::range_basis(V);
    for (Eigen::Index j = 0; j < B.cols(); ++j) B.col(j) += form_dot(S, B.col(j), c) * c;
    Mat E = form_orthonormal_basis(S, detail::range_basis(B, 1e-8));
    if (E.cols() != k) throw GeometryError("mc_oracle: spacelike frame construction failed");
    Vec lo = Vec::Zero(k), hi = Vec::Zero(k);
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      Vec u(k);
      for (int a = 0; a < k; ++a) u(a) = form_dot(S, V.col(j), E.col(a));
      lo = lo.cwiseMin(u);
      hi = hi.cwiseMax(u);
    }
    Vec pad = 1e-6 * (hi - lo) + Vec::Constant(k, 1e-9);
    lo -= pad;
    hi += pad;
    const double box = (hi - lo).prod();
    for (long i = 0; i < N; ++i) {
      Vec u(k);
      for (int a = 0; a < k; ++a) u(a) = lo(a) + (hi(a) - lo(a)) * unif(rng);
      const double h = std::sqrt(1.0 + u.squaredNorm());
      Vec x = h * c + E * u;
      acc.add(box / h, x, detail::inside(P, hs, x));
    }
  } else {
    Mat W = detail::range_basis(V.rightCols(V.cols() - 1).colwise() - V.col(0));
    Vec lo = Vec::Constant(k, 1e300), hi = Vec::Constant(k, -1e300);
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      Vec u = W.transpose() * (V.col(j) - V.col(0));
      lo = lo.cwiseMin(u);
      hi = hi.cwiseMax(u);
    }
    const double box = (hi - lo).prod();
    for (long i = 0; i < N; ++i) {
      Vec u(k);
      for (int a = 0; a < k; ++a) u(a) = lo(a) + (hi(a) - lo(a)) * unif(rng);
      Vec x = V.col(0) + W * u;
      acc.add(box, x, detail::inside(P, hs, x));
    }
  }
  MonteCarloEstimate e = acc.finish();
  if (e.acceptance < 1e-4) throw GeometryError("mc_oracle: acceptance rate below 1e-4");
  return e;
}

}  // namespace schlafli
