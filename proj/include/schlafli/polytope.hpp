#pragma once

#include "linalg.hpp"
#include "spaceforms.hpp"

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace schlafli {

struct FaceRef {
  int codim = 0;
  int id = 0;
  auto operator<=>(const FaceRef&) const = default;
};

/// A face of a polytope. Ids are stable within a codimension class: faces are
/// sorted by their vertex index sets.
struct Face {
  int codim = 0;
  int id = 0;
  int dim = 0;
  std::vector<int> vertices;
  std::vector<int> facets;  // codim-1 faces containing this face
  std::vector<int> sub;     // codim+1 faces contained in this face
  std::vector<int> super;   // codim-1 faces containing this face
  FaceRef ref() const { return {codim, id}; }
};

struct BuildOptions {
  double tol = 1e-9;
  bool require_simplicial = false;
};

namespace detail {

inline bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline bool contains(const std::vector<int>& v, int x) { return std::binary_search(v.begin(), v.end(), x); }

inline std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline Mat columns(const Mat& V, const std::vector<int>& idx) {
  Mat out(V.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = V.col(idx[i]);
  return out;
}

/// Intrinsic dimension of the face spanned by the given vertices.
inline int span_dim(int curvature, const Mat& V, double rel_tol = 1e-9) {
  if (V.cols() == 0) return -1;
  if (curvature != 0) return numerical_rank(V, rel_tol) - 1;
  if (V.cols() == 1) return 0;
  Mat diff = V.rightCols(V.cols() - 1).colwise() - V.col(0);
  return numerical_rank(diff, rel_tol);
}

/// Euclidean orthonormal basis of the column space of V.
inline Mat range_basis(const Mat& V, double rel_tol = 1e-9) {
  Eigen::JacobiSVD<Mat> svd(V, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return svd.matrixU().leftCols(r);
}

}  // namespace detail

class Polytope {
 public:
  const SpaceForm& space() const { return space_; }
  int curvature() const { return space_.curvature(); }
  int dim() const { return space_.dim(); }
  int num_vertices() const { return static_cast<int>(vertices_.cols()); }
  const Mat& vertices() const { return vertices_; }
  Vec vertex(int i) const { return vertices_.col(i); }

  int num_faces(int codim) const { return static_cast<int>(lattice_.at(codim).size()); }
  const std::vector<Face>& faces(int codim) const { return lattice_.at(codim); }
  const Face& face(int codim, int id) const { return lattice_.at(codim).at(id); }
  const Face& face(FaceRef r) const { return face(r.codim, r.id); }
  const Face& body() const { return lattice_[0][0]; }

  /// Outward unit normal of facet `id` (codim 1).
  const Vec& normal(int id) const { return normals_.at(id); }
  const std::vector<Vec>& normals() const { return normals_; }

  bool simplicial() const { return simplicial_; }
  /// Smallest distance (relative) of a vertex to a facet hyperplane it is not on.
  double margin() const { return margin_; }

  Mat face_vertices(FaceRef r) const { return detail::columns(vertices_, face(r).vertices); }

  std::optional<FaceRef> find(std::vector<int> verts) const {
    std::sort(verts.begin(), verts.end());
    for (int c = 0; c <= dim(); ++c) {
      auto it = index_.at(c).find(verts);
      if (it != index_.at(c).end()) return FaceRef{c, it->second};
    }
    return std::nullopt;
  }

  bool same_lattice(const Polytope& o) const {
    if (o.dim() != dim() || o.num_vertices() != num_vertices()) return false;
    for (int c = 0; c <= dim(); ++c) {
      if (o.lattice_[c].size() != lattice_[c].size()) return false;
      for (size_t i = 0; i < lattice_[c].size(); ++i)
        if (o.lattice_[c][i].vertices != lattice_[c][i].vertices) return false;
    }
    return true;
  }

  /// Rebuilds the polytope from moved vertices and asserts the lattice is unchanged.
  Polytope with_vertices(const Mat& moved) const;

  friend Polytope build_from_vertices(const SpaceForm& space, const Mat& points, const BuildOptions& opt);

 private:
  explicit Polytope(const SpaceForm& s) : space_(s) {}

  SpaceForm space_;
  Mat vertices_;
  std::vector<std::vector<Face>> lattice_;
  std::vector<std::map<std::vector<int>, int>> index_;
  std::vector<Vec> normals_;
  bool simplicial_ = false;
  double margin_ = 0.0;
};

namespace detail {

inline void require_pointed(const SpaceForm& space, const Mat& V) {
  if (space.curvature() != 1) return;
  Vec c = V.rowwise().sum();
  auto worst = [&](const Vec& c) {
    double w = 1e300;
    for (Eigen::Index j = 0; j < V.cols(); ++j) w = std::min(w, c.dot(V.col(j)));
    return w / std::max(c.norm(), 1e-300);
  };
  if (worst(c) > 1e-9) return;
  // Perceptron search for a direction with positive product against every point.
  c = V.col(0);
  for (int iter = 0; iter < 20000; ++iter) {
    bool ok = true;
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      if (c.dot(V.col(j)) <= 1e-9 * c.norm()) {
        c += V.col(j);
        ok = false;
      }
    }
    if (ok && worst(c) > 1e-9) return;
  }
  throw InputError("spherical vertex set is not pointed (not contained in an open hemisphere)");
}

}  // namespace detail

inline Polytope build_from_vertices(const SpaceForm& space, const Mat& points, const BuildOptions& opt = {}) {
  const int d = space.dim();
  const int D = space.ambient_dim();
  const int K = space.curvature();
  const int m = static_cast<int>(points.cols());
  if (points.rows() != D) throw InputError("vertex coordinates do not match the ambient dimension");
  if (m < d + 1) throw InputError("at least " + std::to_string(d + 1) + " points are required");
  for (int j = 0; j < m; ++j) space.require_point(points.col(j));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if ((points.col(i) - points.col(j)).norm() < 1e-9) throw InputError("duplicate points");
  detail::require_pointed(space, points);

  const Vec& S = space.signs();
  double coord_scale = 0.0;
  for (int j = 0; j < m; ++j) coord_scale = std::max(coord_scale, points.col(j).norm());
  if (K == 0) {
    coord_scale = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) coord_scale = std::max(coord_scale, (points.col(i) - points.col(j)).norm());
  }
  const double thr = opt.tol * std::max(1.0, coord_scale);

  auto side_values = [&](const Vec& u, int anchor) {
    Vec s(m);
    for (int j = 0; j < m; ++j)
      s(j) = K != 0 ? form_dot(S, u, points.col(j)) : u.dot(points.col(j) - points.col(anchor));
    return s;
  };

  // Supporting hyperplanes through every d-subset.
  std::map<std::vector<int>, Vec> facet_sets;
  std::vector<int> comb(d);
  for (int i = 0; i < d; ++i) comb[i] = i;
  bool any_spanning = false;
  while (true) {
    Mat A;
    if (K != 0) {
      A = detail::columns(points, comb).transpose() * S.asDiagonal();
    } else {
      A.resize(d - 1, D);
      for (int i = 1; i < d; ++i) A.row(i - 1) = (points.col(comb[i]) - points.col(comb[0])).transpose();
    }
    Mat N = null_space(A, 1e-9);
    if (N.cols() == 1) {
      any_spanning = true;
      Vec u = N.col(0);
      Vec s = side_values(u, comb[0]);
      bool pos = false, neg = false;
      for (int j = 0; j < m; ++j) {
        if (s(j) > thr) pos = true;
        if (s(j) < -thr) neg = true;
      }
      if (!(pos && neg) && (pos || neg)) {
        std::vector<int> on;
        for (int j = 0; j < m; ++j)
          if (std::abs(s(j)) <= thr) on.push_back(j);
        if (pos) u = -u;
        facet_sets.emplace(on, u);
      }
    }
    int i = d - 1;
    while (i >= 0 && comb[i] == m - d + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < d; ++j) comb[j] = comb[j - 1] + 1;
  }
  if (!any_spanning || facet_sets.size() < static_cast<size_t>(d + 1))
    throw GeometryError("degenerate position: the points do not span a full-dimensional polytope");

  Polytope P(space);
  P.vertices_ = points;

  // Closure of the facet vertex sets under intersection.
  std::set<std::vector<int>> all;
  std::vector<std::vector<int>> frontier;
  for (auto& [f, u] : facet_sets) {
    all.insert(f);
    frontier.push_back(f);
  }
  while (!frontier.empty()) {
    std::vector<std::vector<int>> next;
    for (const auto& f : frontier) {
      for (const auto& [g, u] : facet_sets) {
        auto x = detail::intersect(f, g);
        if (!x.empty() && all.insert(x).second) next.push_back(x);
      }
    }
    frontier.swap(next);
  }

  P.lattice_.assign(d + 1, {});
  P.index_.assign(d + 1, {});
  std::vector<int> all_idx(m);
  for (int i = 0; i < m; ++i) all_idx[i] = i;
  all.insert(all_idx);
  for (const auto& f : all) {
    const int fd = (f.size() == static_cast<size_t>(m)) ? d : detail::span_dim(K, detail::columns(points, f));
    if (f.size() != static_cast<size_t>(m) && (fd < 0 || fd >= d)) throw GeometryError("degenerate position in face lattice");
    if (fd == 0 && f.size() != 1) throw GeometryError("degenerate position: coincident vertices");
    Face face;
    face.codim = d - fd;
    face.dim = fd;
    face.vertices = f;
    face.id = static_cast<int>(P.lattice_[face.codim].size());
    P.index_[face.codim][f] = face.id;
    P.lattice_[face.codim].push_back(face);
  }
  for (int i = 0; i < m; ++i)
    if (!P.index_[d].count({i})) throw InputError("point " + std::to_string(i) + " is not a vertex of the hull");
  if (P.lattice_[1].size() != facet_sets.size()) throw GeometryError("degenerate position: inconsistent facets");

  // Incidences.
  for (int c = 0; c <= d; ++c) {
    for (auto& f : P.lattice_[c]) {
      if (c >= 1)
        for (const auto& g : P.lattice_[1])
          if (detail::is_subset(f.vertices, g.vertices)) f.facets.push_back(g.id);
      if (c + 1 <= d)
        for (const auto& g : P.lattice_[c + 1])
          if (detail::is_subset(g.vertices, f.vertices)) f.sub.push_back(g.id);
      if (c >= 1)
        for (const auto& g : P.lattice_[c - 1])
          if (detail::is_subset(f.vertices, g.vertices)) f.super.push_back(g.id);
    }
  }

  // Euler relation for the boundary sphere.
  long chi = 0;
  for (int c = 1; c <= d; ++c) chi += ((d - c) % 2 == 0 ? 1 : -1) * static_cast<long>(P.lattice_[c].size());
  if (chi != 1 + ((d - 1) % 2 == 0 ? 1 : -1)) throw GeometryError("face lattice violates the Euler relation");

  // Outward unit normals refined on the whole facet vertex set.
  P.margin_ = 1e300;
  for (const auto& f : P.lattice_[1]) {
    const Vec& guess = facet_sets.at(f.vertices);
    Mat A;
    if (K != 0) {
      A = detail::columns(points, f.vertices).transpose() * S.asDiagonal();
    } else {
      A.resize(static_cast<Eigen::Index>(f.vertices.size()) - 1, D);
      for (size_t i = 1; i < f.vertices.size(); ++i)
        A.row(static_cast<Eigen::Index>(i) - 1) = (points.col(f.vertices[i]) - points.col(f.vertices[0])).transpose();
    }
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
    Vec u = svd.matrixV().col(D - 1);
    if (u.dot(guess) < 0) u = -u;
    if (K != 0) {
      const double q = form_dot(S, u, u);
      if (!(q > 1e-12)) throw GeometryError("facet normal is not spacelike");
      u /= std::sqrt(q);
    } else {
      u.normalize();
    }
    Vec s = side_values(u, f.vertices[0]);
    for (int j = 0; j < m; ++j) {
      if (detail::contains(f.vertices, j)) continue;
      if (s(j) > 0) throw GeometryError("facet orientation failed");
      P.margin_ = std::min(P.margin_, -s(j) / std::max(1.0, coord_scale));
    }
    P.normals_.push_back(u);
  }

  P.simplicial_ = true;
  for (int c = 1; c <= d; ++c)
    for (const auto& f : P.lattice_[c])
      if (f.vertices.size() != static_cast<size_t>(f.dim + 1)) P.simplicial_ = false;
  if (opt.require_simplicial && !P.simplicial_) throw InputError("polytope is not simplicial");
  return P;
}

inline Polytope Polytope::with_vertices(const Mat& moved) const {
  Polytope Q = build_from_vertices(space_, moved);
  if (!same_lattice(Q)) throw CombinatoricsChanged("deformation changed the combinatorics of the polytope");
  return Q;
}

/// Basis of vect(F) (K != 0) or of the direction space F_0 (K = 0).
inline Mat face_span_basis(const Polytope& P, FaceRef F) {
  Mat V = P.face_vertices(F);
  if (P.curvature() != 0) return detail::range_basis(V);
  if (V.cols() == 1) return Mat(V.rows(), 0);
  Mat diff = V.rightCols(V.cols() - 1).colwise() - V.col(0);
  return detail::range_basis(diff);
}

/// Orthogonal projection onto vect(F) (K != 0) or F_0 (K = 0).
inline Vec project_onto_face(const Polytope& P, FaceRef F, const Vec& w) {
  return form_project(P.space().signs(), face_span_basis(P, F), w);
}

/// Outward unit normal of H inside the span of G, where H is a facet of G.
inline Vec relative_normal(const Polytope& P, FaceRef H, FaceRef G) {
  const Face& h = P.face(H);
  const Face& g = P.face(G);
  if (H.codim != G.codim + 1 || !detail::is_subset(h.vertices, g.vertices))
    throw InputError("relative_normal: H is not a facet of G");
  if (G.codim == 0) return P.normal(H.id);
  int w = -1;
  for (int v : g.vertices)
    if (!detail::contains(h.vertices, v)) {
      w = v;
      break;
    }
  const Vec& S = P.space().signs();
  Vec perp;
  if (P.curvature() != 0) {
    Vec x = P.vertex(w);
    perp = x - form_project(S, face_span_basis(P, H), x);
  } else {
    Vec x = P.vertex(w) - P.vertex(h.vertices[0]);
    perp = x - form_project(S, face_span_basis(P, H), x);
  }
  const double q = form_dot(S, perp, perp);
  if (!(q > 0)) throw GeometryError("relative normal is not spacelike");
  return -perp / std::sqrt(q);
}

/// Polar dual of F relative to G (G = P by default): the spherical polytope
/// spanned by the outward normals, inside vect(G), of the facets of G through F.
struct DualFace {
  FaceRef face;
  FaceRef within;
  std::vector<int> generators;  // ids of the facets of `within` containing `face`
  Mat normals;                  // one column per generator
  int dim = 0;                  // spherical dimension
};

/// Facets of G (ids in codim G.codim+1) that contain E.
inline std::vector<int> facets_of_within_containing(const Polytope& P, FaceRef E, FaceRef G) {
  const Face& e = P.face(E);
  if (G.codim == 0) return e.facets;
  std::vector<int> out;
  for (int h : P.face(G).sub)
    if (detail::is_subset(e.vertices, P.face(G.codim + 1, h).vertices)) out.push_back(h);
  return out;
}

inline DualFace dual_face(const Polytope& P, FaceRef F, FaceRef G = {0, 0}) {
  const Face& f = P.face(F);
  const Face& g = P.face(G);
  if (F.codim <= G.codim || !detail::is_subset(f.vertices, g.vertices))
    throw InputError("dual_face: F must be a proper face of G");
  DualFace df;
  df.face = F;
  df.within = G;
  df.dim = g.dim - f.dim - 1;
  df.generators = facets_of_within_containing(P, F, G);
  df.normals.resize(P.space().ambient_dim(), static_cast<Eigen::Index>(df.generators.size()));
  for (size_t i = 0; i < df.generators.size(); ++i)
    df.normals.col(static_cast<Eigen::Index>(i)) = relative_normal(P, {G.codim + 1, df.generators[i]}, G);
  if (numerical_rank(df.normals, 1e-9) != df.dim + 1)
    throw GeometryError("dual face normals do not span the normal space");
  Mat B = detail::range_basis(df.normals);
  Eigen::SelfAdjointEigenSolver<Mat> es(form_gram(P.space().signs(), B));
  if (es.eigenvalues().minCoeff() < 1e-10) throw GeometryError("normal space is not spacelike");
  return df;
}

/// Exterior dihedral angle at a codimension-2 face.
inline double exterior_dihedral_angle(const Polytope& P, FaceRef F) {
  if (F.codim != 2) throw InputError("exterior_dihedral_angle needs a codimension-2 face");
  const Face& f = P.face(F);
  if (f.facets.size() != 2) throw InputError("face is not contained in exactly two facets");
  return std::acos(clamp_unit(P.space().bilinear(P.normal(f.facets[0]), P.normal(f.facets[1]))));
}

namespace detail {

inline void pull_primal(const Polytope& P, FaceRef E, std::vector<std::vector<int>>& out) {
  const Face& e = P.face(E);
  if (e.vertices.size() == static_cast<size_t>(e.dim + 1)) {
    out.push_back(e.vertices);
    return;
  }
  const int v0 = e.vertices.front();
  for (int s : e.sub) {
    const Face& sf = P.face(E.codim + 1, s);
    if (contains(sf.vertices, v0)) continue;
    std::vector<std::vector<int>> part;
    pull_primal(P, sf.ref(), part);
    for (auto& simplex : part) {
      simplex.insert(simplex.begin(), v0);
      out.push_back(std::move(simplex));
    }
  }
}

inline void pull_dual(const Polytope& P, FaceRef E, FaceRef G, std::vector<std::vector<int>>& out) {
  std::vector<int> gens = facets_of_within_containing(P, E, G);
  const int sdim = P.face(G).dim - P.face(E).dim - 1;
  if (gens.size() == static_cast<size_t>(sdim + 1)) {
    out.push_back(gens);
    return;
  }
  const int g0 = gens.front();
  const Face& gf = P.face(G);
  for (int up : P.face(E).super) {
    FaceRef U{E.codim - 1, up};
    if (U.codim <= G.codim || !is_subset(P.face(U).vertices, gf.vertices)) continue;
    std::vector<int> ugens = facets_of_within_containing(P, U, G);
    if (contains(ugens, g0)) continue;
    std::vector<std::vector<int>> part;
    pull_dual(P, U, G, part);
    for (auto& simplex : part) {
      simplex.insert(simplex.begin(), g0);
      out.push_back(std::move(simplex));
    }
  }
}

}  // namespace detail

/// Pulling triangulation of F from its first vertex; vertex index tuples.
inline std::vector<std::vector<int>> triangulate_face(const Polytope& P, FaceRef F) {
  std::vector<std::vector<int>> out;
  detail::pull_primal(P, F, out);
  return out;
}

/// Pulling triangulation of a dual face; tuples index the columns of df.normals.
inline std::vector<std::vector<int>> triangulate_dual(const Polytope& P, const DualFace& df) {
  std::vector<std::vector<int>> raw;
  detail::pull_dual(P, df.face, df.within, raw);
  std::vector<std::vector<int>> out;
  out.reserve(raw.size());
  for (const auto& s : raw) {
    std::vector<int> cols;
    for (int g : s) {
      auto it = std::lower_bound(df.generators.begin(), df.generators.end(), g);
      cols.push_back(static_cast<int>(it - df.generators.begin()));
    }
    out.push_back(cols);
  }
  return out;
}

}  // namespace schlafli
