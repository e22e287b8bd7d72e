#include "catch_amalgamated.hpp"

#include <schlafli/generate.hpp>
#include <schlafli/measure.hpp>
#include <schlafli/polytope.hpp>

using namespace schlafli;
using Catch::Approx;

namespace {

long euler_sum(const Polytope& P) {
  long chi = 0;
  for (int c = 1; c <= P.dim(); ++c) chi += ((P.dim() - c) % 2 ? -1 : 1) * static_cast<long>(P.num_faces(c));
  return chi;
}

// Independent facet count: every d-subset whose hyperplane has all points on one side.
int brute_force_facets(const SpaceForm& s, const Mat& V) {
  const int d = s.dim();
  const int m = static_cast<int>(V.cols());
  int count = 0;
  std::vector<int> c(d);
  for (int i = 0; i < d; ++i) c[i] = i;
  while (true) {
    Mat A(d, V.rows());
    for (int i = 0; i < d; ++i) A.row(i) = V.col(c[i]).transpose() * s.signs().asDiagonal();
    Eigen::FullPivLU<Mat> lu(A);
    Mat ker = lu.kernel();
    if (ker.cols() == 1) {
      int pos = 0, neg = 0;
      for (int j = 0; j < m; ++j) {
        const double v = ker.col(0).dot(s.signs().cwiseProduct(V.col(j)));
        if (v > 1e-10) ++pos;
        if (v < -1e-10) ++neg;
      }
      if (pos == 0 || neg == 0) ++count;
    }
    int i = d - 1;
    while (i >= 0 && c[i] == m - d + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < d; ++j) c[j] = c[j - 1] + 1;
  }
  return count;
}

}  // namespace

TEST_CASE("spherical octant lattice", "[polytope]") {
  Polytope P = octant();
  REQUIRE(P.num_faces(1) == 3);
  REQUIRE(P.num_faces(2) == 3);
  REQUIRE(P.num_faces(0) == 1);
  REQUIRE(P.simplicial());
  for (int g = 0; g < 3; ++g) {
    const Vec& N = P.normal(g);
    for (int v : P.face(1, g).vertices) REQUIRE(std::abs(N.dot(P.vertex(v))) < 1e-14);
    for (int v = 0; v < 3; ++v)
      if (!detail::contains(P.face(1, g).vertices, v)) REQUIRE(N.dot(P.vertex(v)) < 0);
  }
}

TEST_CASE("regular tetrahedron and cube", "[polytope]") {
  Polytope T = regular_tetrahedron();
  REQUIRE(T.num_faces(1) == 4);
  REQUIRE(T.num_faces(2) == 6);
  REQUIRE(T.num_faces(3) == 4);
  for (const auto& e : T.faces(2)) REQUIRE(exterior_dihedral_angle(T, e.ref()) == Approx(std::numbers::pi - std::acos(1.0 / 3.0)));

  Polytope C = unit_cube();
  REQUIRE(C.num_faces(1) == 6);
  REQUIRE(C.num_faces(2) == 12);
  REQUIRE(C.num_faces(3) == 8);
  REQUIRE_FALSE(C.simplicial());
  for (const auto& e : C.faces(2)) REQUIRE(exterior_dihedral_angle(C, e.ref()) == Approx(std::numbers::pi / 2));
}

TEST_CASE("orthant simplex in S^3 has right dihedral angles", "[polytope]") {
  Polytope P = orthant_simplex(3);
  REQUIRE(P.num_faces(2) == 6);
  for (const auto& e : P.faces(2)) REQUIRE(exterior_dihedral_angle(P, e.ref()) == Approx(std::numbers::pi / 2));
}

TEST_CASE("random spherical hulls agree with brute force and Euler", "[polytope]") {
  SpaceForm s = SpaceForm::sphere(3);
  std::mt19937_64 rng(3);
  int built = 0;
  for (int trial = 0; trial < 30 && built < 10; ++trial) {
    Mat V = random_points(s, 8, rng);
    try {
      Polytope P = build_from_vertices(s, V);
      ++built;
      REQUIRE(P.num_faces(1) == brute_force_facets(s, V));
      REQUIRE(euler_sum(P) == 2);  // chi(S^2)
    } catch (const InputError&) {
    }
  }
  REQUIRE(built > 0);
}

TEST_CASE("hull input validation", "[polytope]") {
  SpaceForm s = SpaceForm::sphere(2);
  REQUIRE_THROWS_AS(build_from_vertices(s, Mat::Identity(3, 2)), InputError);
  Mat V(3, 4);
  V.leftCols(3) = Mat::Identity(3, 3);
  V.col(3) = Vec::Ones(3).normalized();
  REQUIRE_THROWS_AS(build_from_vertices(s, V), InputError);  // interior point
  Mat W(3, 4);
  W << 1, -1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0;
  W.row(2).setZero();
  REQUIRE_THROWS(build_from_vertices(s, W));  // not pointed
}

TEST_CASE("dual faces", "[polytope]") {
  QuadratureConfig cfg;
  Polytope P = octant();
  DualFace df = dual_face(P, {2, 0});
  REQUIRE(df.dim == 1);
  REQUIRE(measure_dual(P, df, cfg).volume == Approx(std::numbers::pi / 2).epsilon(1e-12));

  Polytope C = unit_cube();
  for (const auto& e : C.faces(2)) REQUIRE(measure_dual(C, dual_face(C, e.ref()), cfg).volume == Approx(std::numbers::pi / 2));

  // The orthant is self-dual: the duals of vertices are triangles with three facets.
  Polytope O = orthant_simplex(3);
  for (const auto& v : O.faces(3)) {
    DualFace d = dual_face(O, v.ref());
    REQUIRE(d.generators.size() == 3);
    REQUIRE(triangulate_dual(O, d).size() == 1);
  }
}

TEST_CASE("exterior angles equal dual arc lengths", "[polytope]") {
  QuadratureConfig cfg;
  for (int K : {-1, 0, 1}) {
    Polytope P = random_polytope(SpaceForm(K, 3), 8, 5);
    for (const auto& e : P.faces(2))
      REQUIRE(std::abs(exterior_dihedral_angle(P, e.ref()) - measure_dual(P, e.ref(), cfg).volume) < 1e-10);
  }
}

TEST_CASE("vertex duals measure the curvature of the boundary", "[polytope]") {
  QuadratureConfig cfg;
  Polytope P = random_polytope(SpaceForm::sphere(3), 8, 9);
  for (const auto& v : P.faces(3)) {
    double sum = 0.0;
    for (const auto& f : P.faces(1)) {
      if (!detail::contains(f.vertices, v.vertices[0])) continue;
      // Facet angle at v: angle between the two other vertices seen from v.
      std::vector<int> others;
      for (int w : f.vertices)
        if (w != v.vertices[0]) others.push_back(w);
      Vec x = P.vertex(v.vertices[0]);
      Vec a = P.space().tangent_part(x, P.vertex(others[0])).normalized();
      Vec b = P.space().tangent_part(x, P.vertex(others[1])).normalized();
      sum += std::acos(a.dot(b));
    }
    REQUIRE(measure_dual(P, v.ref(), cfg).volume == Approx(2 * std::numbers::pi - sum).epsilon(1e-9));
  }
}

TEST_CASE("dual of a facet is its outward normal", "[polytope]") {
  Polytope P = random_polytope(SpaceForm::hyperbolic(3), 8, 2);
  for (const auto& g : P.faces(1)) {
    DualFace d = dual_face(P, g.ref());
    REQUIRE(d.dim == 0);
    const Vec& N = d.normals.col(0);
    REQUIRE(P.space().norm_sq(N) == Approx(1.0));
    for (int v = 0; v < P.num_vertices(); ++v) {
      const double s = P.space().bilinear(N, P.vertex(v));
      if (detail::contains(g.vertices, v))
        REQUIRE(std::abs(s) < 1e-12);
      else
        REQUIRE(s < 0);
    }
  }
}

TEST_CASE("pulling triangulation of the cube", "[polytope]") {
  Polytope C = unit_cube();
  auto tets = triangulate_face(C, {0, 0});
  double vol = 0.0;
  for (const auto& t : tets) vol += integrate_flat(detail::columns(C.vertices(), t), false).volume;
  REQUIRE(vol == Approx(1.0).epsilon(1e-14));
  for (const auto& f : C.faces(1)) REQUIRE(triangulate_face(C, f.ref()).size() == 2);
}
