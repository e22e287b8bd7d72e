#pragma once

#include "linalg.hpp"
#include "polytope.hpp"
#include "spaceforms.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace schlafli {

/// Spherical polytope with the coordinate basis vectors as vertices.
inline Polytope orthant_simplex(int dim) {
  SpaceForm s = SpaceForm::sphere(dim);
  return build_from_vertices(s, Mat::Identity(dim + 1, dim + 1));
}

/// The spherical octant: the orthant triangle in S^2.
inline Polytope octant() { return orthant_simplex(2); }

inline Polytope unit_cube() {
  Mat V(3, 8);
  for (int i = 0; i < 8; ++i) V.col(i) << (i & 1), ((i >> 1) & 1), ((i >> 2) & 1);
  return build_from_vertices(SpaceForm::euclidean(3), V);
}

inline Polytope regular_tetrahedron() {
  Mat V(3, 4);
  V << 1, 1, -1, -1,
       1, -1, 1, -1,
       1, -1, -1, 1;
  return build_from_vertices(SpaceForm::euclidean(3), V);
}

struct GenerateOptions {
  int max_attempts = 500;
  double min_margin = 5e-3;
  bool require_simplicial = true;
  double radius = 0.0;  // 0 selects a per-space default
  double jitter = 0.15;
};

inline double default_radius(int curvature) { return curvature == 1 ? 0.7 : (curvature == -1 ? 0.8 : 1.0); }

/// Random points scattered around the base point: Gaussian directions at a
/// jittered distance, mapped to the model by the exponential map.
inline Mat random_points(const SpaceForm& space, int count, std::mt19937_64& rng, const GenerateOptions& opt = {}) {
  const int D = space.ambient_dim();
  const int d = space.dim();
  const double r0 = opt.radius > 0 ? opt.radius : default_radius(space.curvature());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Mat V(D, count);
  Vec base = Vec::Zero(D);
  if (space.curvature() != 0) base(D - 1) = 1.0;
  for (int j = 0; j < count; ++j) {
    Vec g = Vec::Zero(D);
    for (int a = 0; a < d; ++a) g(a) = gauss(rng);
    g.normalize();
    const double r = r0 * (1.0 + opt.jitter * unif(rng));
    V.col(j) = geodesic_flow(space, base, g, r);
  }
  return V;
}

/// Random simplicial polytope with every point a vertex and a safety margin
/// against combinatorial changes under small deformations.
inline Polytope random_polytope(const SpaceForm& space, int count, std::uint64_t seed, const GenerateOptions& opt = {}) {
  if (count < space.dim() + 1) throw InputError("vertex count below the minimum n+2");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    Mat V = random_points(space, count, rng, opt);
    try {
      Polytope P = build_from_vertices(space, V);
      if (opt.require_simplicial && !P.simplicial()) continue;
      if (P.margin() < opt.min_margin) continue;
      return P;
    } catch (const Error&) {
      continue;
    }
  }
  throw GeometryError("random_polytope: retries exhausted");
}

}  // namespace schlafli
