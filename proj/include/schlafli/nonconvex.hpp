#pragma once

#include "deformation.hpp"
#include "generate.hpp"
#include "identities.hpp"
#include "linalg.hpp"
#include "measure.hpp"
#include "polytope.hpp"
#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace schlafli {

/// The hyperplane {x : normal·x = offset} in ambient coordinates (plain dot
/// product). Through the origin (offset 0) for spherical and hyperbolic space.
struct Hyperplane {
  Vec normal;
  double offset = 0.0;

  double side(const Vec& x) const { return normal.dot(x) - offset; }
};

/// A polytope lying in a hyperplane, expressed in the induced space form of
/// one dimension less. Section coordinates y map to ambient points as
/// origin + basis·y (basis is form-orthonormal).
struct Section {
  Polytope polytope;
  Mat basis;
  Vec origin;

  Vec to_ambient(const Vec& y) const { return origin + basis * y; }
  Vec direction_to_ambient(const Vec& y) const { return basis * y; }
};

namespace detail {

struct SectionFrame {
  Mat basis;
  Vec origin;
  Vec signs;
};

inline SectionFrame section_frame(const SpaceForm& space, const Hyperplane& H, const Vec& sample) {
  const int D = space.ambient_dim();
  const double mn = H.normal.norm();
  if (H.normal.size() != D || mn == 0.0) throw InputError("hyperplane normal has the wrong size or vanishes");
  SectionFrame f;
  if (space.curvature() == 0) {
    Vec u = H.normal / mn;
    f.basis = null_space(u.transpose());
    f.origin = (H.offset / mn) * u;
    f.signs = Vec::Ones(D - 1);
    return f;
  }
  if (H.offset != 0.0) throw InputError("spherical and hyperbolic cuts pass through the origin");
  const Vec& S = space.signs();
  Mat N = null_space(H.normal.transpose());
  Mat G = N.transpose() * S.asDiagonal() * N;
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  const Vec& lam = es.eigenvalues();
  const int negatives = static_cast<int>((lam.array() < 0).count());
  if (lam.cwiseAbs().minCoeff() < 1e-12) throw GeometryError("degenerate hyperplane section");
  if (negatives != (space.curvature() < 0 ? 1 : 0)) throw InputError("hyperplane misses the space form");
  // Positive directions first, the timelike one last.
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > 0) order.push_back(i);
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) < 0) order.push_back(i);
  f.basis = Mat(D, D - 1);
  f.signs = Vec(D - 1);
  for (Eigen::Index k = 0; k < D - 1; ++k) {
    f.basis.col(k) = N * es.eigenvectors().col(order[k]) / std::sqrt(std::abs(lam(order[k])));
    f.signs(k) = lam(order[k]) > 0 ? 1.0 : -1.0;
  }
  if (space.curvature() < 0 && form_dot(S, f.basis.col(D - 2), sample) > 0) f.basis.col(D - 2) *= -1.0;
  f.origin = Vec::Zero(D);
  return f;
}

inline Vec section_coordinates(const SpaceForm& space, const SectionFrame& f, const Vec& x) {
  if (space.curvature() == 0) return f.basis.transpose() * (x - f.origin);
  return f.signs.asDiagonal() * (f.basis.transpose() * (space.signs().asDiagonal() * x));
}

/// Column index of the point x in V, or -1.
inline int find_point(const Mat& V, const Vec& x, double tol) {
  for (Eigen::Index j = 0; j < V.cols(); ++j)
    if ((V.col(j) - x).norm() <= tol) return static_cast<int>(j);
  return -1;
}

inline std::optional<FaceRef> find_face_by_points(const Polytope& P, const Mat& pts, double tol) {
  std::vector<int> idx;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    const int k = find_point(P.vertices(), pts.col(j), tol);
    if (k < 0) return std::nullopt;
    idx.push_back(k);
  }
  return P.find(idx);
}

inline double point_tolerance(const Mat& V) { return 1e-9 * std::max(1.0, V.cwiseAbs().maxCoeff()); }

}  // namespace detail

/// The polytope spanned by points of a hyperplane, as a polytope of the
/// induced space form. Section vertex k is points.col(k).
inline Section make_section(const SpaceForm& space, const Hyperplane& H, const Mat& points) {
  if (points.cols() == 0) throw InputError("empty section");
  const double scale = std::max(1.0, points.cwiseAbs().maxCoeff()) * H.normal.norm();
  for (Eigen::Index j = 0; j < points.cols(); ++j)
    if (std::abs(H.side(points.col(j))) > 1e-8 * scale) throw GeometryError("section point off the hyperplane");
  detail::SectionFrame f = detail::section_frame(space, H, points.col(0));
  const SpaceForm sub(space.curvature(), space.dim() - 1);
  Mat Y(space.ambient_dim() - 1, points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    Vec y = detail::section_coordinates(space, f, points.col(j));
    if (space.curvature() != 0) y = sub.normalize(y);
    Y.col(j) = y;
  }
  return {build_from_vertices(sub, Y), f.basis, f.origin};
}

/// Pieces of a convex polytope on the two sides of a hyperplane and their
/// common facet.
struct SplitResult {
  Polytope minus, plus;
  Section cut;
};

/// Vertices on the hyperplane go to both pieces; edges crossing it are cut at
/// the geodesic intersection point.
inline SplitResult split_polytope(const Polytope& P, const Hyperplane& H, double tol = 1e-9) {
  const SpaceForm& space = P.space();
  if (H.normal.size() != space.ambient_dim()) throw InputError("hyperplane normal has the wrong size");
  if (space.curvature() != 0 && H.offset != 0.0) throw InputError("spherical and hyperbolic cuts pass through the origin");
  const Mat& V = P.vertices();
  const double thr = tol * std::max(1.0, V.cwiseAbs().maxCoeff()) * H.normal.norm();
  Vec s(V.cols());
  for (Eigen::Index j = 0; j < V.cols(); ++j) s(j) = H.side(V.col(j));
  if (s.maxCoeff() <= thr || s.minCoeff() >= -thr) throw InputError("hyperplane does not cut the polytope");

  std::vector<Vec> cut, minus, plus;
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    if (std::abs(s(j)) <= thr)
      cut.push_back(V.col(j));
    else
      (s(j) < 0 ? minus : plus).push_back(V.col(j));
  }
  for (const Face& e : P.faces(P.dim() - 1)) {
    const int a = e.vertices[0], b = e.vertices[1];
    if (!((s(a) < -thr && s(b) > thr) || (s(a) > thr && s(b) < -thr))) continue;
    Vec x = (s(b) * V.col(a) - s(a) * V.col(b)) / (s(b) - s(a));
    if (space.curvature() != 0) x = space.normalize(x);
    cut.push_back(x);
  }
  auto stack = [](const std::vector<Vec>& a, const std::vector<Vec>& b) {
    Mat M(a.front().size(), static_cast<Eigen::Index>(a.size() + b.size()));
    Eigen::Index k = 0;
    for (const Vec& x : a) M.col(k++) = x;
    for (const Vec& x : b) M.col(k++) = x;
    return M;
  };
  Mat C = stack(cut, {});
  return {build_from_vertices(space, stack(minus, cut)), build_from_vertices(space, stack(plus, cut)),
          make_section(space, H, C)};
}

/// V(S^{p-1})/V(S^{p-2}) and V(S^p)/V(S^{p-1}): weights of the section term
/// for a face of codimension p.
inline std::pair<double, double> section_weights(int p) {
  if (p < 2) throw InputError("section weights need codimension at least 2");
  return {sphere_volume(p - 1) / sphere_volume(p - 2), sphere_volume(p) / sphere_volume(p - 1)};
}

/// Faces of P of codimension at least 2 lying in the hyperplane.
inline std::vector<FaceRef> common_faces(const Polytope& P, const Hyperplane& H, double tol = 1e-9) {
  const double t = tol * std::max(1.0, P.vertices().cwiseAbs().maxCoeff());
  std::vector<FaceRef> out;
  for (int c = 2; c <= P.dim(); ++c)
    for (const Face& f : P.faces(c)) {
      bool in = true;
      for (int v : f.vertices) in = in && std::abs(H.side(P.vertex(v))) <= t * std::max(1.0, H.normal.norm());
      if (in) out.push_back(f.ref());
    }
  return out;
}

/// Dual measure of a face of a section, with the moment in ambient coordinates.
inline FaceMeasure section_dual(const Section& Q, FaceRef F, const QuadratureConfig& cfg, QuadCache* cache = nullptr) {
  FaceMeasure m = measure_dual(Q.polytope, F, cfg, cache);
  m.moment = Q.direction_to_ambient(m.moment);
  return m;
}

/// V(F*_{P'}) + V(F*_{P''}) − V(F*_P) − c V(F*_{P'∩P''}) and the moment
/// analog, for a face F of P lying in the cutting hyperplane.
inline std::pair<IdentityReport, IdentityReport> check_prop_nonconvex(const Polytope& P, const Hyperplane& H, FaceRef F,
                                                                      const QuadratureConfig& cfg = {},
                                                                      double tolerance = 1e-7, bool sign_flip = false) {
  const int p = F.codim;
  if (p < 2 || p > P.dim()) throw InputError("the face must have codimension at least 2");
  SplitResult sp = split_polytope(P, H);
  Mat pts = P.face_vertices(F);
  const double tol = detail::point_tolerance(P.vertices());
  auto fm = detail::find_face_by_points(sp.minus, pts, tol);
  auto fp = detail::find_face_by_points(sp.plus, pts, tol);
  Mat ys(sp.cut.polytope.space().ambient_dim(), pts.cols());
  std::vector<int> local;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    Vec x = pts.col(j);
    int k = -1;
    for (int v = 0; v < sp.cut.polytope.num_vertices(); ++v)
      if ((sp.cut.to_ambient(sp.cut.polytope.vertex(v)) - x).norm() <= 1e-8 * std::max(1.0, x.norm())) k = v;
    if (k < 0) throw InputError("the face does not lie in the cutting hyperplane");
    local.push_back(k);
  }
  auto fq = sp.cut.polytope.find(local);
  if (!fm || !fp || !fq || fm->codim != p || fp->codim != p || fq->codim != p - 1)
    throw InputError("the face is not common to the polytope, both pieces and the section");
  FaceMeasure dP = measure_dual(P, F, cfg), dm = measure_dual(sp.minus, *fm, cfg), dp = measure_dual(sp.plus, *fp, cfg);
  FaceMeasure dq = section_dual(sp.cut, *fq, cfg);
  const auto [cv, cm] = section_weights(p);

  auto scalar = [](double x) { return Vec::Constant(1, x); };
  std::vector<Term> tv{{0, F, scalar(dm.volume), std::abs(dm.volume)},
                       {0, F, scalar(dp.volume), std::abs(dp.volume)},
                       {1, F, scalar(-dP.volume), std::abs(dP.volume)},
                       {2, F, scalar(-cv * dq.volume), std::abs(cv * dq.volume)}};
  std::vector<Term> tm{{0, F, dm.moment, dm.moment.norm()},
                       {0, F, dp.moment, dp.moment.norm()},
                       {1, F, -dP.moment, dP.moment.norm()},
                       {2, F, -cm * dq.moment, cm * dq.moment.norm()}};
  ReportOptions o;
  o.tolerance = tolerance;
  o.sign_flip = sign_flip;
  o.scalar = true;
  IdentityReport rv = finalize_report(IdentityId::NonconvexVolume, p, std::move(tv), o, 1);
  o.scalar = false;
  IdentityReport rm = finalize_report(IdentityId::NonconvexMoment, p, std::move(tm), o, P.space().ambient_dim());
  return {rv, rm};
}

/// Two pieces sharing a whole facet.
struct Gluing {
  int a = 0, b = 0;
  int facet_a = 0, facet_b = 0;
  std::vector<int> vertices;  // global indices, sorted
};

/// A face of the boundary complex of a union: the faces of the pieces with
/// the same vertices, and the gluings whose shared facet contains it.
struct UnionFace {
  int codim = 0;
  std::vector<int> vertices;
  std::vector<std::pair<int, int>> carriers;  // (piece, face id)
  std::vector<int> gluings;
};

/// A polyhedron given as convex pieces with disjoint interiors, glued face to
/// face along common facets.
struct PolytopeUnion {
  SpaceForm space{0, 3};
  std::vector<Polytope> pieces;
  Mat vertices;                                  // distinct vertices of all pieces
  std::vector<std::vector<int>> piece_vertices;  // piece-local -> global
  std::vector<Gluing> gluings;
  std::vector<std::vector<UnionFace>> faces;     // [codim], codim 0 unused

  int dim() const { return space.dim(); }
  int n() const { return dim() - 1; }
  int num_faces(int codim) const { return static_cast<int>(faces.at(codim).size()); }

  std::optional<FaceRef> find(std::vector<int> verts) const {
    std::sort(verts.begin(), verts.end());
    for (int c = 1; c <= dim(); ++c)
      for (int i = 0; i < num_faces(c); ++i)
        if (faces[c][i].vertices == verts) return FaceRef{c, i};
    return std::nullopt;
  }
};

inline PolytopeUnion make_union(const std::vector<Polytope>& pieces) {
  if (pieces.empty()) throw InputError("a union needs at least one piece");
  PolytopeUnion U;
  U.space = pieces.front().space();
  U.pieces = pieces;
  const int d = U.dim();
  double scale = 1.0;
  for (const Polytope& P : pieces) {
    if (P.curvature() != U.space.curvature() || P.dim() != d) throw InputError("pieces live in different spaces");
    scale = std::max(scale, P.vertices().cwiseAbs().maxCoeff());
  }
  const double tol = 1e-9 * scale;
  std::vector<Vec> global;
  for (const Polytope& P : pieces) {
    std::vector<int> map;
    for (int j = 0; j < P.num_vertices(); ++j) {
      int k = -1;
      for (size_t g = 0; g < global.size(); ++g)
        if ((global[g] - P.vertex(j)).norm() <= tol) k = static_cast<int>(g);
      if (k < 0) {
        k = static_cast<int>(global.size());
        global.push_back(P.vertex(j));
      }
      map.push_back(k);
    }
    U.piece_vertices.push_back(map);
  }
  U.vertices = Mat(U.space.ambient_dim(), static_cast<Eigen::Index>(global.size()));
  for (size_t g = 0; g < global.size(); ++g) U.vertices.col(static_cast<Eigen::Index>(g)) = global[g];

  auto global_set = [&](int piece, const std::vector<int>& local) {
    std::vector<int> s;
    for (int v : local) s.push_back(U.piece_vertices[piece][v]);
    std::sort(s.begin(), s.end());
    return s;
  };
  const int N = static_cast<int>(pieces.size());
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b)
      for (const Face& fa : pieces[a].faces(1))
        for (const Face& fb : pieces[b].faces(1)) {
          auto sa = global_set(a, fa.vertices);
          if (sa != global_set(b, fb.vertices)) continue;
          const Vec& na = pieces[a].normal(fa.id);
          const Vec& nb = pieces[b].normal(fb.id);
          if ((na + nb).norm() > 1e-7) throw InputError("glued pieces must lie on opposite sides of their common facet");
          U.gluings.push_back({a, b, fa.id, fb.id, sa});
        }

  // The gluing graph must connect all pieces.
  std::vector<int> comp(N);
  for (int i = 0; i < N; ++i) comp[i] = i;
  std::function<int(int)> root = [&](int i) { return comp[i] == i ? i : comp[i] = root(comp[i]); };
  for (const Gluing& g : U.gluings) comp[root(g.a)] = root(g.b);
  for (int i = 0; i < N; ++i)
    if (root(i) != root(0)) throw InputError("pieces must be connected through shared facets");

  U.faces.assign(d + 1, {});
  for (int c = 1; c <= d; ++c) {
    std::map<std::vector<int>, UnionFace> by_set;
    for (int i = 0; i < N; ++i)
      for (const Face& f : pieces[i].faces(c)) {
        auto s = global_set(i, f.vertices);
        UnionFace& uf = by_set[s];
        uf.codim = c;
        uf.vertices = s;
        uf.carriers.push_back({i, f.id});
      }
    for (auto& [s, uf] : by_set) {
      if (c == 1 && uf.carriers.size() == 2) continue;  // shared facet, interior to the union
      if (uf.carriers.size() > 2)
        throw InputError("a face lies in more than two pieces; only pairwise corrections are supported");
      for (size_t g = 0; g < U.gluings.size(); ++g)
        if (detail::is_subset(s, U.gluings[g].vertices)) uf.gluings.push_back(static_cast<int>(g));
      if (uf.carriers.size() == 2) {
        const int a = std::min(uf.carriers[0].first, uf.carriers[1].first);
        const int b = std::max(uf.carriers[0].first, uf.carriers[1].first);
        bool glued = false;
        for (int g : uf.gluings) glued = glued || (U.gluings[g].a == a && U.gluings[g].b == b);
        if (!glued) throw InputError("pieces meeting only along a lower-dimensional face are not supported");
      }
      if (uf.carriers.size() == 1 && !uf.gluings.empty())
        throw InputError("pieces are not glued face to face");
      U.faces[c].push_back(uf);
    }
  }
  return U;
}

namespace detail {

inline Section gluing_section(const PolytopeUnion& U, const std::vector<Polytope>& pieces, const Mat& V, int g) {
  const Gluing& gl = U.gluings[g];
  const Polytope& A = pieces[gl.a];
  const Vec& n = A.normal(gl.facet_a);
  Hyperplane H;
  if (U.space.curvature() == 0) {
    H.normal = n;
    H.offset = n.dot(V.col(gl.vertices[0]));
  } else {
    H.normal = U.space.signs().asDiagonal() * n;
  }
  return make_section(U.space, H, columns(V, gl.vertices));
}

/// All union face measures for the given piece geometries (vertex positions V).
inline Snapshot union_snapshot(const PolytopeUnion& U, const std::vector<Polytope>& pieces, const Mat& V,
                               const QuadratureConfig& cfg, std::vector<QuadCache>* caches) {
  const int d = U.dim();
  const size_t np = pieces.size();
  std::vector<Section> sections;
  for (size_t g = 0; g < U.gluings.size(); ++g) sections.push_back(gluing_section(U, pieces, V, static_cast<int>(g)));
  auto cache = [&](size_t k) { return caches ? &(*caches)[k] : nullptr; };
  Snapshot s;
  s.V.assign(d + 1, {});
  s.Vd.assign(d + 1, {});
  s.pi.assign(d + 1, {});
  s.pid.assign(d + 1, {});
  const Eigen::Index D = U.space.ambient_dim();
  for (int c = 1; c <= d; ++c)
    for (const UnionFace& f : U.faces[c]) {
      const auto [i0, id0] = f.carriers.front();
      FaceMeasure m = measure_face(pieces[i0], {c, id0}, cfg, cache(i0));
      double vd = 0.0;
      Vec pd = Vec::Zero(D);
      for (const auto& [i, id] : f.carriers) {
        FaceMeasure md = measure_dual(pieces[i], FaceRef{c, id}, cfg, cache(i));
        vd += md.volume;
        pd += md.moment;
      }
      if (f.carriers.size() == 2) {
        const auto [cv, cmom] = section_weights(c);
        for (int g : f.gluings) {
          std::vector<int> local;
          for (int v : f.vertices)
            local.push_back(static_cast<int>(std::lower_bound(U.gluings[g].vertices.begin(), U.gluings[g].vertices.end(), v) -
                                             U.gluings[g].vertices.begin()));
          auto fq = sections[g].polytope.find(local);
          if (!fq || fq->codim != c - 1) throw GeometryError("union face is not a face of the shared facet");
          FaceMeasure mq = section_dual(sections[g], *fq, cfg, cache(np + g));
          vd -= cv * mq.volume;
          pd -= cmom * mq.moment;
        }
      }
      s.V[c].push_back(m.volume);
      s.pi[c].push_back(m.moment);
      s.Vd[c].push_back(vd);
      s.pid[c].push_back(pd);
      if (c == 1) s.normals.push_back(pieces[i0].normal(id0));
    }
  return s;
}

inline std::vector<Polytope> moved_pieces(const PolytopeUnion& U, const Mat& V) {
  std::vector<Polytope> out;
  for (size_t i = 0; i < U.pieces.size(); ++i) out.push_back(U.pieces[i].with_vertices(columns(V, U.piece_vertices[i])));
  return out;
}

}  // namespace detail

/// Union-defined V(F*) and π(F*) (pairwise inclusion–exclusion over pieces).
inline FaceMeasure union_dual_data(const PolytopeUnion& U, FaceRef F, const QuadratureConfig& cfg = {}) {
  if (F.codim < 1 || F.codim > U.dim() || F.id < 0 || F.id >= U.num_faces(F.codim))
    throw InputError("no such face of the union");
  Snapshot s = detail::union_snapshot(U, U.pieces, U.vertices, cfg, nullptr);
  FaceMeasure m;
  m.volume = s.Vd[F.codim][F.id];
  m.moment = s.pid[F.codim][F.id];
  return m;
}

inline Snapshot union_static_data(const PolytopeUnion& U, const QuadratureConfig& cfg = {}) {
  return detail::union_snapshot(U, U.pieces, U.vertices, cfg, nullptr);
}

/// Random vertex velocities of a union (maximum speed 1). In the Euclidean
/// case every non-simplex facet of every piece moves by an affine map, so it
/// stays flat along the whole path; curved unions must have simplicial pieces.
inline DeformationField random_union_field(const PolytopeUnion& U, std::mt19937_64& rng) {
  if (U.space.curvature() != 0) {
    for (const Polytope& P : U.pieces)
      if (!P.simplicial()) throw InputError("random fields on curved unions need simplicial pieces");
    return random_field(U.space, U.vertices, rng);
  }
  const Eigen::Index D = U.space.ambient_dim(), nv = U.vertices.cols();
  std::vector<Vec> rows;
  for (size_t i = 0; i < U.pieces.size(); ++i)
    for (const Face& f : U.pieces[i].faces(1)) {
      if (static_cast<int>(f.vertices.size()) <= U.dim()) continue;
      std::vector<int> g;
      for (int v : f.vertices) g.push_back(U.piece_vertices[i][v]);
      // Greedy affine basis of the facet.
      std::vector<int> basis{g[0]};
      Mat dirs(D, 0);
      for (size_t k = 1; k < g.size() && static_cast<int>(basis.size()) < U.dim(); ++k) {
        Mat trial(D, dirs.cols() + 1);
        trial << dirs, U.vertices.col(g[k]) - U.vertices.col(g[0]);
        if (numerical_rank(trial, 1e-9) == trial.cols()) {
          dirs = trial;
          basis.push_back(g[k]);
        }
      }
      for (int e : g) {
        if (std::find(basis.begin(), basis.end(), e) != basis.end()) continue;
        Vec mu = dirs.colPivHouseholderQr().solve(Vec(U.vertices.col(e) - U.vertices.col(g[0])));
        for (Eigen::Index a = 0; a < D; ++a) {
          Vec r = Vec::Zero(D * nv);
          double w0 = 1.0;
          r(e * D + a) += 1.0;
          for (size_t k = 1; k < basis.size(); ++k) {
            r(basis[k] * D + a) -= mu(static_cast<Eigen::Index>(k - 1));
            w0 -= mu(static_cast<Eigen::Index>(k - 1));
          }
          r(g[0] * D + a) -= w0;
          rows.push_back(r);
        }
      }
    }
  Mat C(static_cast<Eigen::Index>(rows.size()), D * nv);
  for (size_t r = 0; r < rows.size(); ++r) C.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  Mat Nsp = null_space(C);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec z(Nsp.cols());
  for (auto& x : z) x = gauss(rng);
  Vec flat = Nsp * z;
  DeformationField X{Eigen::Map<Mat>(flat.data(), D, nv)};
  const double m = X.max_speed();
  if (m > 0) X.velocities /= m;
  return X;
}

/// E0, H_p or K_p for a union with union-defined dual data.
inline IdentityReport check_union_identity(const PolytopeUnion& U, const DeformationField& X, IdentityId id,
                                           std::optional<int> p = std::nullopt, const CheckConfig& cfg = {}) {
  validate_field(U.space, U.vertices, X);
  cfg.quad.validate();
  const int n = U.n();
  if (id == IdentityId::UnionHp || id == IdentityId::UnionKp) {
    if (!p) throw InputError("p is required");
    if (*p < 2 || *p > n - 1) throw InputError("p outside [2, n-1]");
  } else if (id != IdentityId::UnionE0) {
    throw InputError("union checks cover E0, H_p and K_p");
  }
  std::vector<QuadCache> caches(U.pieces.size() + U.gluings.size());
  Snapshot base = detail::union_snapshot(U, U.pieces, U.vertices, cfg.quad, &caches);
  Snapshot deriv = derivative_along(cfg.fd, [&](double t) {
    Mat V = flow_vertices(U.space, U.vertices, X.velocities, t);
    return detail::union_snapshot(U, detail::moved_pieces(U, V), V, cfg.quad, &caches);
  });
  const detail::MeasureSet m{n, static_cast<double>(U.space.curvature()), base, deriv};
  std::vector<Term> t = id == IdentityId::UnionE0 ? detail::E0_terms(m)
                        : id == IdentityId::UnionHp ? detail::Hp_terms(m, *p)
                                                    : detail::Kp_terms(m, *p);
  ReportOptions o;
  o.tolerance = cfg.tolerance.value_or(default_tolerance(U.dim()));
  o.sign_flip = cfg.sign_flip;
  o.speed = X.max_speed();
  o.keep_terms = cfg.keep_terms;
  return finalize_report(id, id == IdentityId::UnionE0 ? std::nullopt : p, std::move(t), o, U.space.ambient_dim());
}

/// Prism over a planar polygon given by the columns of a 2 x k matrix.
inline Polytope prism(const Mat& polygon, double height) {
  const Eigen::Index k = polygon.cols();
  Mat V(3, 2 * k);
  for (Eigen::Index j = 0; j < k; ++j) {
    V.col(j) << polygon(0, j), polygon(1, j), 0.0;
    V.col(k + j) << polygon(0, j), polygon(1, j), height;
  }
  return build_from_vertices(SpaceForm::euclidean(3), V);
}

/// The L-shaped solid ([0,2]x[0,1] ∪ [0,1]x[1,2]) x [0,1], cut into two
/// convex prisms along a segment from the reflex corner (1,1): to (0,0) for
/// variant 0, to (0,1/2) for variant 1.
inline PolytopeUnion l_shape_union(int variant) {
  Mat a, b;
  if (variant == 0) {
    a = Mat(2, 4);
    a << 0, 2, 2, 1, 0, 0, 1, 1;
    b = Mat(2, 4);
    b << 0, 1, 1, 0, 0, 1, 2, 2;
  } else if (variant == 1) {
    a = Mat(2, 5);
    a << 0, 2, 2, 1, 0, 0, 0, 1, 1, 0.5;
    b = Mat(2, 4);
    b << 0, 1, 1, 0, 0.5, 1, 2, 2;
  } else {
    throw InputError("L-shape variants are 0 and 1");
  }
  return make_union({prism(a, 1.0), prism(b, 1.0)});
}

/// Two random simplicial pieces glued along a common simplex facet lying in a
/// hyperplane through the base point; the union is usually not convex.
inline PolytopeUnion random_glued_union(const SpaceForm& space, int extra, std::uint64_t seed,
                                        const GenerateOptions& opt = {}) {
  if (extra < 1) throw InputError("each piece needs at least one point off the shared facet");
  const int D = space.ambient_dim(), d = space.dim();
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    Vec m = Vec::Zero(D);
    for (int a = 0; a < d; ++a) m(a) = gauss(rng);
    m.normalize();
    // Reflection in the hyperplane m·x = 0 is an isometry since m(D-1) = 0.
    auto reflect = [&](const Vec& x) -> Vec { return x - 2 * m.dot(x) * m; };
    Mat T = random_points(space, d, rng, opt);
    for (Eigen::Index j = 0; j < T.cols(); ++j) {
      Vec x = T.col(j) - m.dot(T.col(j)) * m;
      T.col(j) = space.curvature() == 0 ? x : space.normalize(x);
    }
    Mat A = random_points(space, 2 * extra, rng, opt);
    Mat Pa(D, d + extra), Pb(D, d + extra);
    Pa.leftCols(d) = T;
    Pb.leftCols(d) = T;
    bool ok = true;
    for (int j = 0; j < 2 * extra; ++j) {
      Vec x = A.col(j);
      if (std::abs(m.dot(x)) < 0.1) ok = false;
      const bool want_plus = j < extra;
      if ((m.dot(x) > 0) != want_plus) x = reflect(x);
      (want_plus ? Pa : Pb).col(d + (want_plus ? j : j - extra)) = x;
    }
    if (!ok) continue;
    try {
      Polytope a = build_from_vertices(space, Pa), b = build_from_vertices(space, Pb);
      if (!a.simplicial() || !b.simplicial() || a.margin() < opt.min_margin || b.margin() < opt.min_margin) continue;
      return make_union({a, b});
    } catch (const Error&) {
      continue;
    }
  }
  throw GeometryError("random_glued_union: retries exhausted");
}

}  // namespace schlafli
