#include "catch_amalgamated.hpp"

#include <schlafli/conemanifold.hpp>
#include <schlafli/generate.hpp>

using namespace schlafli;

namespace {

Vec random_dl(const SphereDecomposition& d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec dl(d.num_edges());
  for (auto& x : dl) x = u(rng);
  return dl;
}

Mat random_tangent_field(const SphereDecomposition& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat X(d.vertices.rows(), d.vertices.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Vec x(X.rows());
    for (auto& c : x) c = g(rng);
    Vec v = d.vertices.col(j);
    X.col(j) = x - x.dot(v) * v;
  }
  return X;
}

// Spherical law of cosines: angle opposite side a.
double angle_opposite(double a, double b, double c) {
  return std::acos((std::cos(a) - std::cos(b) * std::cos(c)) / (std::sin(b) * std::sin(c)));
}

}  // namespace

TEST_CASE("decompositions tile the sphere", "[conemanifold]") {
  QuadratureConfig cfg;
  struct Case {
    SphereDecomposition d;
    size_t cells;
  };
  std::vector<Case> cases{{octahedral_s2(), 8}, {icosahedral_s2(), 20}, {cross_polytope_sphere(3), 16},
                          {cross_polytope_sphere(4), 32}};
  for (const auto& [d, ncells] : cases) {
    REQUIRE(d.cells().size() == ncells);
    double total = 0;
    for (const auto& c : d.cells()) total += spherical_simplex(detail::columns(d.vertices, c), cfg).volume;
    REQUIRE(total == Catch::Approx(sphere_volume(d.dim)).epsilon(1e-8));
    // Dihedral angles close up around every codimension 2 face.
    REQUIRE(singular_curvatures(d, round_lengths(d)).cwiseAbs().maxCoeff() <= 1e-10);
  }
  REQUIRE(icosahedral_s2().num_edges() == 30);
  REQUIRE(cross_polytope_sphere(3).faces[2].size() == 24);
}

TEST_CASE("invalid decompositions are rejected", "[conemanifold]") {
  SphereDecomposition o = octahedral_s2();
  auto cells = o.cells();
  cells.pop_back();
  REQUIRE_THROWS_AS(make_decomposition(2, o.vertices, cells), InputError);
  Mat bad = o.vertices;
  bad(0, 0) = 2.0;
  REQUIRE_THROWS_AS(make_decomposition(2, bad, o.cells()), InputError);
  REQUIRE_THROWS_AS(radial_decomposition(unit_cube()), InputError);
}

TEST_CASE("cells are realized from their edge lengths", "[conemanifold]") {
  const double h = std::numbers::pi / 2;
  Mat L = Mat::Constant(3, 3, h);
  L.diagonal().setZero();
  Mat U = realize_cell(L);
  REQUIRE((U.transpose() * U - Mat::Identity(3, 3)).norm() <= 1e-14);

  // Equilateral triangle with side π/3: cos of the angle is 1/3.
  Mat E = Mat::Constant(3, 3, std::numbers::pi / 3);
  E.diagonal().setZero();
  Mat N = outward_normals(realize_cell(E));
  const double interior = std::numbers::pi - std::acos(N.col(0).dot(N.col(1)));
  REQUIRE(interior == Catch::Approx(std::acos(1.0 / 3.0)).epsilon(1e-12));
  REQUIRE(interior == Catch::Approx(angle_opposite(std::numbers::pi / 3, std::numbers::pi / 3, std::numbers::pi / 3))
                          .epsilon(1e-12));

  // Round trip for a perturbed tetrahedron on S^3.
  Mat T = Mat::Constant(4, 4, h);
  T.diagonal().setZero();
  T(0, 1) = T(1, 0) = 1.3;
  T(2, 3) = T(3, 2) = 1.7;
  T(0, 3) = T(3, 0) = 1.45;
  Mat W = realize_cell(T);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) REQUIRE(std::abs(W.col(i).dot(W.col(j)) - std::cos(T(i, j))) <= 1e-12);

  Mat B = Mat::Constant(3, 3, 0.5);
  B.diagonal().setZero();
  B(0, 1) = B(1, 0) = 1.2;  // violates the triangle inequality
  REQUIRE_THROWS_AS(realize_cell(B), GeometryError);
  Mat C = L;
  C(0, 1) = C(1, 0) = 3.2;
  REQUIRE_THROWS_AS(realize_cell(C), GeometryError);
}

TEST_CASE("curvature derivative on the octahedral decomposition", "[conemanifold]") {
  SphereDecomposition d = octahedral_s2();
  REQUIRE(curvature_derivative(d, Vec::Zero(d.num_edges())).norm() == 0.0);
  for (int e = 0; e < d.num_edges(); ++e) {
    Vec dl = Vec::Zero(d.num_edges());
    dl(e) = 1.0;
    Vec Kp = curvature_derivative(d, dl);
    const auto& edge = d.edges()[e];
    // Only the two cells through the edge change. In each, lengthening the
    // side opposite w moves the angle at w by d/da of the law of cosines and
    // the angles at the endpoints by d/da of the adjacent-angle formula.
    const double h = std::numbers::pi / 2, s = 1e-6;
    const double opposite = (angle_opposite(h + s, h, h) - angle_opposite(h - s, h, h)) / (2 * s);
    const double adjacent = (angle_opposite(h, h + s, h) - angle_opposite(h, h - s, h)) / (2 * s);
    for (int v = 0; v < static_cast<int>(d.faces[2].size()); ++v) {
      const int w = d.faces[2][v][0];
      int cells_with_w = 0;
      for (int c : d.cells_of[1][d.face_id(1, edge)]) {
        const auto& cell = d.cells()[c];
        if (std::find(cell.begin(), cell.end(), w) != cell.end()) ++cells_with_w;
      }
      double expected = 0.0;
      if (w == edge[0] || w == edge[1])
        expected = -2 * adjacent;
      else
        expected = -cells_with_w * opposite;
      REQUIRE(Kp(v) == Catch::Approx(expected).margin(1e-7));
    }
  }
}

TEST_CASE("codimension 2 balance", "[conemanifold]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const SphereDecomposition& d : {octahedral_s2(), icosahedral_s2()}) {
      IdentityReport r = check_codim2_balance(d, random_dl(d, seed, 0.1), 1e-7);
      INFO("seed " << seed << " rel " << r.rel_residual);
      REQUIRE(r.pass);
      REQUIRE(r.id == IdentityId::Codim2Balance);
    }
    SphereDecomposition s3 = cross_polytope_sphere(3);
    REQUIRE(check_codim2_balance(s3, random_dl(s3, seed, 0.1), 1e-6).pass);
  }
}

TEST_CASE("codimension 2 balance is linear and detects a sign flip", "[conemanifold]") {
  SphereDecomposition d = icosahedral_s2();
  Vec a = random_dl(d, 4), b = random_dl(d, 5);
  REQUIRE_FALSE(check_codim2_balance(d, a, 1e-7, {}, {}, true).pass);
  Vec ka = curvature_derivative(d, a), kb = curvature_derivative(d, b);
  Vec kc = curvature_derivative(d, 0.4 * a - 1.7 * b);
  REQUIRE((kc - (0.4 * ka - 1.7 * kb)).norm() <= 1e-7 * kc.norm());
}

TEST_CASE("length variations from vertex motions have no curvature", "[conemanifold]") {
  for (const SphereDecomposition& d : {icosahedral_s2(), cross_polytope_sphere(3)}) {
    Vec dl = induced_length_variation(d, random_tangent_field(d, 6));
    REQUIRE(dl.norm() > 0.1);
    REQUIRE(curvature_derivative(d, dl).cwiseAbs().maxCoeff() <= 1e-8);
    REQUIRE(check_codim2_balance(d, dl).residual.norm() <= 1e-8);
  }
}

TEST_CASE("dual volumes and moments of the round decomposition", "[conemanifold]") {
  QuadratureConfig cfg;
  for (const SphereDecomposition& d : {icosahedral_s2(), cross_polytope_sphere(3), cross_polytope_sphere(4)}) {
    for (int c = 1; c <= d.dim; ++c)
      for (int f = 0; f < static_cast<int>(d.faces[c].size()); ++f) {
        WStarData w = wstar_data(d, c, f, cfg);
        // F° is orthogonal to the span of F.
        for (int v : d.faces[c][f]) REQUIRE(std::abs(w.circ.dot(d.vertices.col(v))) <= 1e-9);
        const double k = static_cast<double>(d.cells_of[c][f].size());
        if (c == 1) REQUIRE(w.wstar == Catch::Approx(2.0).epsilon(1e-12));
        if (c == 2) REQUIRE(w.wstar == Catch::Approx((k - 2) * std::numbers::pi).epsilon(1e-12));
        if (c == 1) REQUIRE(w.circ.norm() <= 1e-12);
      }
  }
  // Orthant cells are self-polar, so around any face the duals are orthants
  // of the normal sphere and tile it.
  for (int dim : {3, 4}) {
    SphereDecomposition d = cross_polytope_sphere(dim);
    for (int c = 1; c <= dim; ++c) {
      WStarData w = wstar_data(d, c, 0, cfg);
      REQUIRE(w.wstar == Catch::Approx(sphere_volume(c - 1)).epsilon(1e-8));
      REQUIRE(w.circ.norm() <= 1e-9);
    }
  }
}

TEST_CASE("higher balance on a decomposition of S^4", "[conemanifold][slow]") {
  SphereDecomposition d = perturbed_cross_polytope_sphere(4, 0.2, 7);
  REQUIRE(d.n() == 3);
  Vec dl = random_dl(d, 7, 0.1);
  IdentityReport r = check_sphere_Kp(d, dl, 2, 1e-5);
  INFO("rel " << r.rel_residual);
  REQUIRE(r.pass);
  REQUIRE(r.id == IdentityId::SphereKp);
  REQUIRE(check_sphere_Kp(d, dl, 2, 1e-5, {}, {}, true).rel_residual > 1e-2);

  // Vertex motions leave every intrinsic quantity fixed.
  SphereDecomposition round = cross_polytope_sphere(4);
  Vec iso = induced_length_variation(round, random_tangent_field(round, 9));
  REQUIRE(check_sphere_Kp(round, iso, 2, 1e-5).residual.norm() <= 1e-6);

  SphereDecomposition s3 = cross_polytope_sphere(3);
  REQUIRE_THROWS_AS(check_sphere_Kp(s3, random_dl(s3, 1), 2), InputError);
}

TEST_CASE("cone deformations of S^2 from balanced angle variations", "[conemanifold]") {
  // Three points on the equator with balanced weights.
  Mat V(3, 3);
  for (int k = 0; k < 3; ++k) {
    const double a = 2 * std::numbers::pi * k / 3;
    V.col(k) << std::cos(a), std::sin(a), 0.0;
  }
  S2ConeDeformation s = construct_s2_deformation(V, Vec::Constant(3, 0.3));
  REQUIRE((s.angle_variation - Vec::Constant(3, 0.3)).cwiseAbs().maxCoeff() <= 1e-6);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 5 + trial;
    Mat P(3, n);
    for (int j = 0; j < n; ++j) P.col(j) = Vec((Vec(3) << g(rng), g(rng), g(rng)).finished()).normalized();
    Vec t(n);
    for (auto& x : t) x = g(rng);
    // Project t onto the balanced subspace {t : Σ t_i v_i = 0}.
    Mat A = P;
    t -= A.transpose() * (A * A.transpose()).ldlt().solve(A * t);
    S2ConeDeformation c = construct_s2_deformation(P, t);
    INFO("trial " << trial);
    REQUIRE((c.angle_variation - t).cwiseAbs().maxCoeff() <= 1e-6);
    REQUIRE(c.inner.velocities.cols() == n);
    REQUIRE(c.outer.velocities.cols() == n);
    Vec off = t;
    off(0) += 1e-2;
    REQUIRE_THROWS_AS(construct_s2_deformation(P, off), Infeasible);
  }
}

TEST_CASE("unbalanced angle variations are infeasible", "[conemanifold]") {
  Mat V(3, 4);
  V << 1, 0, 0, 0.6, 0, 1, 0, 0.0, 0, 0, 1, 0.8;
  REQUIRE_THROWS_AS(construct_s2_deformation(V, Vec::Ones(4)), Infeasible);
  REQUIRE_THROWS_AS(construct_s2_deformation(V, Vec::Ones(3)), InputError);
}
