#pragma once

#include "deformation.hpp"
#include "linalg.hpp"
#include "polygon.hpp"
#include "polytope.hpp"
#include "quadrature.hpp"
#include "report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace schlafli {

/// Simplicial decomposition of the round sphere S^dim. faces[c] lists the
/// faces of codimension c (c = 0 are the cells) as sorted vertex sets.
struct SphereDecomposition {
  int dim = 2;
  Mat vertices;
  std::vector<std::vector<std::vector<int>>> faces;
  std::vector<std::map<std::vector<int>, int>> lookup;
  std::vector<std::vector<std::vector<int>>> cells_of;  // [codim][id] -> containing cells

  const std::vector<std::vector<int>>& cells() const { return faces[0]; }
  const std::vector<std::vector<int>>& edges() const { return faces[dim - 1]; }
  int num_edges() const { return static_cast<int>(edges().size()); }
  int n() const { return dim - 1; }

  int face_id(int codim, std::vector<int> verts) const {
    std::sort(verts.begin(), verts.end());
    auto it = lookup.at(codim).find(verts);
    if (it == lookup.at(codim).end()) throw InputError("not a face of the decomposition");
    return it->second;
  }
};

inline SphereDecomposition make_decomposition(int dim, const Mat& V, std::vector<std::vector<int>> cells) {
  if (dim < 2) throw InputError("sphere decompositions need dimension at least 2");
  if (V.rows() != dim + 1) throw InputError("decomposition vertices have the wrong ambient dimension");
  for (Eigen::Index j = 0; j < V.cols(); ++j)
    if (std::abs(V.col(j).norm() - 1.0) > 1e-9) throw InputError("decomposition vertices must be unit vectors");
  SphereDecomposition d;
  d.dim = dim;
  d.vertices = V;
  d.faces.assign(dim + 1, {});
  d.lookup.assign(dim + 1, {});
  d.cells_of.assign(dim + 1, {});
  for (auto& c : cells) {
    if (static_cast<int>(c.size()) != dim + 1) throw InputError("cells must be simplices");
    std::sort(c.begin(), c.end());
    if (std::adjacent_find(c.begin(), c.end()) != c.end()) throw InputError("repeated vertex in a cell");
    for (int v : c)
      if (v < 0 || v >= V.cols()) throw InputError("cell vertex index out of range");
    if (std::abs(detail::columns(V, c).determinant()) < 1e-12) throw InputError("degenerate cell");
  }
  std::sort(cells.begin(), cells.end());
  for (int ci = 0; ci < static_cast<int>(cells.size()); ++ci) {
    const auto& c = cells[ci];
    const int m = dim + 1;
    for (int mask = 1; mask < (1 << m); ++mask) {
      std::vector<int> s;
      for (int k = 0; k < m; ++k)
        if (mask & (1 << k)) s.push_back(c[k]);
      const int codim = m - static_cast<int>(s.size());
      auto [it, inserted] = d.lookup[codim].try_emplace(s, 0);
      (void)inserted;
      (void)it;
    }
  }
  for (int c = 0; c <= dim; ++c) {
    int id = 0;
    for (auto& [s, idx] : d.lookup[c]) {
      idx = id++;
      d.faces[c].push_back(s);
    }
    d.cells_of[c].assign(d.faces[c].size(), {});
  }
  for (int ci = 0; ci < static_cast<int>(d.faces[0].size()); ++ci) {
    const auto& cell = d.faces[0][ci];
    for (int c = 0; c <= dim; ++c)
      for (size_t f = 0; f < d.faces[c].size(); ++f)
        if (std::includes(cell.begin(), cell.end(), d.faces[c][f].begin(), d.faces[c][f].end()))
          d.cells_of[c][f].push_back(ci);
  }
  for (const auto& around : d.cells_of[1])
    if (around.size() != 2) throw InputError("every codimension 1 face must lie in exactly two cells");
  return d;
}

/// Boundary of the cross-polytope, radially projected: cells are orthants.
inline SphereDecomposition cross_polytope_sphere(int dim) {
  const int D = dim + 1;
  Mat V(D, 2 * D);
  for (int i = 0; i < D; ++i) {
    V.col(2 * i) = Vec::Unit(D, i);
    V.col(2 * i + 1) = -Vec::Unit(D, i);
  }
  std::vector<std::vector<int>> cells;
  for (int mask = 0; mask < (1 << D); ++mask) {
    std::vector<int> c;
    for (int i = 0; i < D; ++i) c.push_back(2 * i + ((mask >> i) & 1));
    cells.push_back(c);
  }
  return make_decomposition(dim, V, cells);
}

inline SphereDecomposition octahedral_s2() { return cross_polytope_sphere(2); }

/// Facets of a simplicial convex polytope in R^{dim+1} containing the origin,
/// projected to the unit sphere.
inline SphereDecomposition radial_decomposition(const Polytope& P) {
  if (P.curvature() != 0) throw InputError("radial projection starts from a Euclidean polytope");
  if (!P.simplicial()) throw InputError("radial projection needs a simplicial polytope");
  for (const Face& f : P.faces(1))
    if (P.normal(f.id).dot(P.vertex(f.vertices[0])) <= 1e-12) throw InputError("origin must be interior");
  Mat V = P.vertices();
  for (Eigen::Index j = 0; j < V.cols(); ++j) V.col(j).normalize();
  std::vector<std::vector<int>> cells;
  for (const Face& f : P.faces(1)) cells.push_back(f.vertices);
  return make_decomposition(P.dim() - 1, V, cells);
}

inline SphereDecomposition icosahedral_s2() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Mat V(3, 12);
  int k = 0;
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) {
      V.col(k++) << 0, s1, s2 * phi;
      V.col(k++) << s1, s2 * phi, 0;
      V.col(k++) << s2 * phi, 0, s1;
    }
  return radial_decomposition(build_from_vertices(SpaceForm::euclidean(3), V));
}

/// Cross-polytope with every vertex moved by a uniform offset in
/// [-amplitude, amplitude]^(dim+1) before projecting. Cells are no longer
/// right-angled.
inline SphereDecomposition perturbed_cross_polytope_sphere(int dim, double amplitude, std::uint64_t seed) {
  const int D = dim + 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  Mat V(D, 2 * D);
  for (int i = 0; i < D; ++i) {
    V.col(2 * i) = Vec::Unit(D, i);
    V.col(2 * i + 1) = -Vec::Unit(D, i);
  }
  for (auto& x : V.reshaped()) x += u(rng);
  SphereDecomposition d = radial_decomposition(build_from_vertices(SpaceForm::euclidean(D), V));
  if (d.cells().size() != (size_t{1} << D)) throw GeometryError("perturbation changed the combinatorics");
  return d;
}

/// Edge lengths of the round embedding, in edge order.
inline Vec round_lengths(const SphereDecomposition& d) {
  Vec l(d.num_edges());
  for (int e = 0; e < d.num_edges(); ++e)
    l(e) = std::acos(clamp_unit(d.vertices.col(d.edges()[e][0]).dot(d.vertices.col(d.edges()[e][1]))));
  return l;
}

/// Length derivatives induced by tangent vertex velocities of the round
/// embedding.
inline Vec induced_length_variation(const SphereDecomposition& d, const Mat& X) {
  if (X.rows() != d.vertices.rows() || X.cols() != d.vertices.cols()) throw InputError("one velocity per vertex expected");
  Vec dl(d.num_edges());
  for (int e = 0; e < d.num_edges(); ++e) {
    const int a = d.edges()[e][0], b = d.edges()[e][1];
    Vec va = d.vertices.col(a), vb = d.vertices.col(b);
    dl(e) = -(X.col(a).dot(vb) + va.dot(X.col(b))) / std::sin(std::acos(clamp_unit(va.dot(vb))));
  }
  return dl;
}

/// Vertices of a spherical simplex with the given pairwise distances, via the
/// Cholesky factor of the Gram matrix cos(l_ij).
inline Mat realize_cell(const Mat& lengths) {
  if (lengths.rows() != lengths.cols()) throw InputError("length matrix must be square");
  for (Eigen::Index i = 0; i < lengths.rows(); ++i)
    for (Eigen::Index j = 0; j < lengths.cols(); ++j)
      if (i != j && !(lengths(i, j) > 0.0 && lengths(i, j) < std::numbers::pi))
        throw GeometryError("spherical edge lengths must lie in (0, pi)");
  Mat G = lengths.array().cos().matrix();
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) throw GeometryError("edge lengths are not realizable by a spherical simplex");
  Mat L = llt.matrixL();
  if (L.diagonal().minCoeff() < 1e-10) throw GeometryError("edge lengths are not realizable by a spherical simplex");
  return L.transpose();
}

inline Mat cell_length_matrix(const SphereDecomposition& d, const Vec& lengths, const std::vector<int>& cell) {
  const int m = static_cast<int>(cell.size());
  Mat L = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) L(i, j) = L(j, i) = lengths(d.face_id(d.dim - 1, {cell[i], cell[j]}));
  return L;
}

/// Outward unit normals of the facets of a simplex (facet i omits vertex i).
inline Mat outward_normals(const Mat& U) {
  Mat N = -U.transpose().inverse();
  for (Eigen::Index i = 0; i < N.cols(); ++i) N.col(i).normalize();
  return N;
}

/// Volume and moment of the spherical simplex spanned by unit columns.
inline RadialIntegral spherical_simplex(const Mat& U, const QuadratureConfig& cfg, SimplexPlan* plan = nullptr) {
  RadialIntegral r;
  if (U.cols() == 1) {
    r.volume = 1.0;
    r.moment = U.col(0);
    return r;
  }
  if (U.cols() == 2) {
    const double l = std::acos(clamp_unit(U.col(0).dot(U.col(1))));
    r.volume = l;
    r.moment = std::tan(l / 2) * (U.col(0) + U.col(1));
    return r;
  }
  return integrate_radial(Vec::Ones(U.rows()), U, cfg, plan);
}

namespace detail {

inline std::vector<int> local_positions(const std::vector<int>& cell, const std::vector<int>& face, bool complement) {
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(cell.size()); ++k) {
    const bool in = std::binary_search(face.begin(), face.end(), cell[k]);
    if (in != complement) out.push_back(k);
  }
  return out;
}

}  // namespace detail

/// Intrinsic scalars of a cone metric given by edge lengths: V(F) and
/// W*(F) = Σ_C V(F*_C) for every face of codimension 1..dim.
struct ConeScalars {
  std::vector<Vec> V, Wstar;

  Vec stacked() const {
    Eigen::Index total = 0;
    for (const auto& v : V) total += v.size();
    for (const auto& w : Wstar) total += w.size();
    Vec out(total);
    Eigen::Index k = 0;
    for (const auto& v : V) {
      out.segment(k, v.size()) = v;
      k += v.size();
    }
    for (const auto& w : Wstar) {
      out.segment(k, w.size()) = w;
      k += w.size();
    }
    return out;
  }
  void unstack(const Vec& s) {
    Eigen::Index k = 0;
    for (auto& v : V) {
      v = s.segment(k, v.size());
      k += v.size();
    }
    for (auto& w : Wstar) {
      w = s.segment(k, w.size());
      k += w.size();
    }
  }
};

inline ConeScalars cone_scalars(const SphereDecomposition& d, const Vec& lengths, const QuadratureConfig& cfg,
                                QuadCache* cache = nullptr) {
  if (lengths.size() != d.num_edges()) throw InputError("one length per edge expected");
  ConeScalars s;
  s.V.assign(d.dim + 1, Vec());
  s.Wstar.assign(d.dim + 1, Vec());
  for (int c = 1; c <= d.dim; ++c) {
    s.V[c] = Vec::Zero(static_cast<Eigen::Index>(d.faces[c].size()));
    s.Wstar[c] = Vec::Zero(s.V[c].size());
  }
  std::vector<Mat> real, normals;
  for (const auto& cell : d.cells()) {
    real.push_back(realize_cell(cell_length_matrix(d, lengths, cell)));
    normals.push_back(outward_normals(real.back()));
  }
  auto slot = [&](const std::string& key) { return cache ? cache->slot(key) : nullptr; };
  for (int c = 1; c <= d.dim; ++c)
    for (size_t f = 0; f < d.faces[c].size(); ++f) {
      const auto& face = d.faces[c][f];
      const auto& around = d.cells_of[c][f];
      const int c0 = around.front();
      Mat U = detail::columns(real[c0], detail::local_positions(d.cells()[c0], face, false));
      s.V[c](f) = spherical_simplex(U, cfg, slot("V" + std::to_string(c) + "." + std::to_string(f))).volume;
      for (int ci : around) {
        Mat N = detail::columns(normals[ci], detail::local_positions(d.cells()[ci], face, true));
        s.Wstar[c](f) += spherical_simplex(N, cfg, slot("W" + std::to_string(c) + "." + std::to_string(f) + "/" +
                                                           std::to_string(ci)))
                             .volume;
      }
    }
  return s;
}

inline ConeScalars cone_scalar_derivatives(const SphereDecomposition& d, const Vec& dl, const QuadratureConfig& cfg,
                                           const DerivativeEngine& eng = {}) {
  const Vec l0 = round_lengths(d);
  if (dl.size() != l0.size()) throw InputError("one length variation per edge expected");
  QuadCache cache;
  ConeScalars shape = cone_scalars(d, l0, cfg, &cache);
  Vec ds = derivative_along(eng, [&](double t) { return cone_scalars(d, l0 + t * dl, cfg, &cache).stacked(); });
  shape.unstack(ds);
  return shape;
}

/// Interior dihedral angles of every cell at its codimension 2 faces, summed
/// per face: the singular curvature is 2π minus this total.
inline Vec singular_curvatures(const SphereDecomposition& d, const Vec& lengths) {
  const int c2 = 2;
  Vec K = Vec::Constant(static_cast<Eigen::Index>(d.faces[c2].size()), 2 * std::numbers::pi);
  for (size_t ci = 0; ci < d.cells().size(); ++ci) {
    const auto& cell = d.cells()[ci];
    Mat N = outward_normals(realize_cell(cell_length_matrix(d, lengths, cell)));
    const int m = static_cast<int>(cell.size());
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        std::vector<int> face;
        for (int k = 0; k < m; ++k)
          if (k != i && k != j) face.push_back(cell[k]);
        const double interior = std::numbers::pi - std::acos(clamp_unit(N.col(i).dot(N.col(j))));
        K(d.face_id(c2, face)) -= interior;
      }
  }
  return K;
}

/// K'(F) for every codimension 2 face along l + t·δl.
inline Vec curvature_derivative(const SphereDecomposition& d, const Vec& dl, const DerivativeEngine& eng = {}) {
  const Vec l0 = round_lengths(d);
  if (dl.size() != l0.size()) throw InputError("one length variation per edge expected");
  return derivative_along(eng, [&](double t) { return singular_curvatures(d, l0 + t * dl); });
}

/// Moment of a face of the round embedding (a vertex is its own moment).
inline Vec round_moment(const SphereDecomposition& d, int codim, int id, const QuadratureConfig& cfg) {
  return spherical_simplex(detail::columns(d.vertices, d.faces[codim][id]), cfg).moment;
}

struct WStarData {
  double wstar = 0.0;
  Vec circ;
};

/// W*(F) and F° = Σ_C π(F*_C) at the round metric.
inline WStarData wstar_data(const SphereDecomposition& d, int codim, int id, const QuadratureConfig& cfg = {}) {
  if (codim < 1 || codim > d.dim) throw InputError("codimension out of range");
  WStarData w;
  w.circ = Vec::Zero(d.dim + 1);
  const auto& face = d.faces[codim].at(id);
  for (int ci : d.cells_of[codim][id]) {
    const auto& cell = d.cells()[ci];
    Mat N = outward_normals(detail::columns(d.vertices, cell));
    RadialIntegral r = spherical_simplex(detail::columns(N, detail::local_positions(cell, face, true)), cfg);
    w.wstar += r.volume;
    w.circ += r.moment;
  }
  return w;
}

/// Σ K'(F)π(F) over codimension 2 faces.
inline IdentityReport check_codim2_balance(const SphereDecomposition& d, const Vec& dl, double tolerance = 1e-6,
                                           const QuadratureConfig& cfg = {}, const DerivativeEngine& eng = {},
                                           bool sign_flip = false) {
  Vec Kp = curvature_derivative(d, dl, eng);
  std::vector<Term> t;
  // Alternating groups, so the sign-flip control negates half of the sum.
  for (size_t f = 0; f < d.faces[2].size(); ++f) {
    Vec pi = round_moment(d, 2, static_cast<int>(f), cfg);
    t.push_back({static_cast<int>(f % 2), {2, static_cast<int>(f)}, Kp(f) * pi, 2 * std::numbers::pi * pi.norm()});
  }
  ReportOptions o;
  o.tolerance = tolerance;
  o.sign_flip = sign_flip;
  o.speed = dl.size() ? dl.cwiseAbs().maxCoeff() : 0.0;
  return finalize_report(IdentityId::Codim2Balance, std::nullopt, std::move(t), o, d.dim + 1);
}

/// (n−p+1)(ΣV'(F)F° − ΣW*(G)'π(G)) + p(−ΣV'(H)H° + ΣW*(L)'π(L)) over
/// F, G, H, L of codimension p−1, p, p+1, p+2.
inline IdentityReport check_sphere_Kp(const SphereDecomposition& d, const Vec& dl, int p, double tolerance = 1e-5,
                                      const QuadratureConfig& cfg = {}, const DerivativeEngine& eng = {},
                                      bool sign_flip = false) {
  const int n = d.n();
  if (p < 2 || p > n - 1) throw InputError("p must lie in 2..n-1 (a decomposition of S^4 or higher)");
  ConeScalars base = cone_scalars(d, round_lengths(d), cfg);
  ConeScalars der = cone_scalar_derivatives(d, dl, cfg, eng);
  std::vector<Term> t;
  const double a = n - p + 1;
  for (size_t f = 0; f < d.faces[p - 1].size(); ++f) {
    WStarData w = wstar_data(d, p - 1, static_cast<int>(f), cfg);
    t.push_back({0, {p - 1, static_cast<int>(f)}, a * der.V[p - 1](f) * w.circ, a * base.V[p - 1](f) * w.circ.norm()});
  }
  for (size_t g = 0; g < d.faces[p].size(); ++g) {
    Vec pi = round_moment(d, p, static_cast<int>(g), cfg);
    t.push_back({1, {p, static_cast<int>(g)}, -a * der.Wstar[p](g) * pi, a * base.Wstar[p](g) * pi.norm()});
  }
  for (size_t h = 0; h < d.faces[p + 1].size(); ++h) {
    WStarData w = wstar_data(d, p + 1, static_cast<int>(h), cfg);
    t.push_back({2, {p + 1, static_cast<int>(h)}, -p * der.V[p + 1](h) * w.circ, p * base.V[p + 1](h) * w.circ.norm()});
  }
  for (size_t l = 0; l < d.faces[p + 2].size(); ++l) {
    Vec pi = round_moment(d, p + 2, static_cast<int>(l), cfg);
    t.push_back({3, {p + 2, static_cast<int>(l)}, p * der.Wstar[p + 2](l) * pi, p * base.Wstar[p + 2](l) * pi.norm()});
  }
  ReportOptions o;
  o.tolerance = tolerance;
  o.sign_flip = sign_flip;
  o.speed = dl.size() ? dl.cwiseAbs().maxCoeff() : 0.0;
  return finalize_report(IdentityId::SphereKp, p, std::move(t), o, d.dim + 1);
}

/// First-order cone deformation of S^2 with prescribed cone-angle variations,
/// glued from deformations of the two disks bounded by a polygon through the
/// cone points.
struct S2ConeDeformation {
  Polygon polygon{SpaceForm::sphere(2), Mat(), 1};  // vertices are the cone points in polygon order
  std::vector<int> order;    // order[k] = index of the cone point at polygon vertex k
  DeformationField inner, outer;
  Vec angle_variation;       // induced cone-angle variation, per input point
};

namespace detail {

/// Axis around which the points sort into a simple polygon: no point near a
/// pole and all azimuth gaps below π.
inline std::optional<std::vector<int>> azimuth_order(const Mat& V, const Vec& axis) {
  const Eigen::Index n = V.cols();
  Mat T = tangent_basis(SpaceForm::sphere(2), axis);
  Vec b1 = T.col(0), b2 = T.col(1);
  if (det3(b1, b2, axis) < 0) std::swap(b1, b2);
  std::vector<std::pair<double, int>> az;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(V.col(j).dot(axis)) > 1 - 1e-6) return std::nullopt;
    az.push_back({std::atan2(V.col(j).dot(b2), V.col(j).dot(b1)), static_cast<int>(j)});
  }
  std::sort(az.begin(), az.end());
  for (Eigen::Index k = 0; k < n; ++k) {
    double gap = az[(k + 1) % n].first - az[k].first;
    if (k + 1 == n) gap += 2 * std::numbers::pi;
    if (gap < 1e-6 || gap > std::numbers::pi - 1e-6) return std::nullopt;
  }
  std::vector<int> order;
  for (const auto& a : az) order.push_back(a.second);
  return order;
}

}  // namespace detail

inline S2ConeDeformation construct_s2_deformation(const Mat& V, const Vec& t, double tolerance = 1e-8) {
  const Eigen::Index n = V.cols();
  if (V.rows() != 3) throw InputError("points must lie in S^2");
  if (t.size() != n) throw InputError("one angle variation per point expected");
  if (n < 3) throw InputError("at least 3 cone points are needed");
  const SpaceForm s2 = SpaceForm::sphere(2);
  for (Eigen::Index j = 0; j < n; ++j) s2.require_point(V.col(j));
  const double tmax = std::max(1.0, t.cwiseAbs().maxCoeff());
  if ((V * t).norm() > tolerance * tmax) throw Infeasible("cone-angle variations are not balanced");

  std::vector<Vec> axes;
  Vec mean = V.rowwise().mean();
  if (mean.norm() > 1e-3) axes.push_back(mean.normalized());
  for (int i = 0; i < 3; ++i) axes.push_back(Vec::Unit(3, i));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 64; ++k) axes.push_back(Vec((Vec(3) << g(rng), g(rng), g(rng)).finished()).normalized());
  std::optional<std::vector<int>> order;
  for (const Vec& a : axes)
    if ((order = detail::azimuth_order(V, a))) break;
  if (!order) throw GeometryError("no simple polygon through the cone points was found");

  S2ConeDeformation out;
  out.order = *order;
  Mat W(3, n);
  Vec tk(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    W.col(k) = V.col(out.order[k]);
    tk(k) = t(out.order[k]);
  }
  out.polygon = make_polygon(s2, W, 1);
  Polygon outer = out.polygon.reversed_interior();
  PolygonVariation target{Vec::Zero(n), -0.5 * tk};
  out.inner = solve_variation(out.polygon, target);
  out.outer = solve_variation(outer, target);
  Vec induced = -(variation_of(out.polygon, out.inner.velocities).theta_prime +
                  variation_of(outer, out.outer.velocities).theta_prime);
  out.angle_variation = Vec(n);
  for (Eigen::Index k = 0; k < n; ++k) out.angle_variation(out.order[k]) = induced(k);
  return out;
}

}  // namespace schlafli
