#include "catch_amalgamated.hpp"

#include <schlafli/generate.hpp>
#include <schlafli/identities.hpp>
#include <schlafli/polygon.hpp>

using namespace schlafli;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

Polygon regular(const SpaceForm& s, int m, double r, double phase = 0.0) { return regular_polygon(s, m, r, phase); }

Polygon random_star(const SpaceForm& s, int m, std::uint64_t seed, double r0 = 0.6) {
  return random_star_polygon(s, m, seed, r0);
}

Vec random_coords(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vec c(size);
  for (auto& x : c) x = g(rng);
  return c;
}

}  // namespace

TEST_CASE("unit square with one moving corner", "[polygon]") {
  Mat V(2, 4);
  V << 0, 1, 1, 0,
       0, 0, 1, 1;
  Polygon p = make_polygon(SpaceForm::euclidean(2), V);
  REQUIRE(p.orientation == 1);
  Mat X = Mat::Zero(2, 4);
  X(0, 2) = 1.0;
  PolygonVariation v = variation_of(p, X);
  Vec th(4), l(4);
  th << 0, -1, 1, 0;
  l << 0, 0, 1, 0;
  REQUIRE((v.theta_prime - th).norm() < 1e-15);
  REQUIRE((v.l_prime - l).norm() < 1e-15);
  IdentityReport r = check_polygon_identity(p, {l, th});
  REQUIRE(r.residual.norm() == 0.0);
  REQUIRE(r.pass);
  REQUIRE((exterior_angles(p) - Vec::Constant(4, pi / 2)).norm() < 1e-15);
  Mat N = edge_duals(p);
  REQUIRE((N.col(0) - Vec::Unit(2, 1) * -1.0).norm() < 1e-15);
  REQUIRE((N.col(1) - Vec::Unit(2, 0)).norm() < 1e-15);
}

TEST_CASE("regular spherical polygon shrinking towards the pole", "[polygon]") {
  for (int m : {3, 5, 6}) {
    Polygon p = regular(SpaceForm::sphere(2), m, 0.8);
    Mat X(3, m);
    for (int i = 0; i < m; ++i) {
      Vec v = p.vertex(i);
      Vec radial(3);
      radial << v(0), v(1), 0.0;
      X.col(i) = -p.space.tangent_part(v, radial.normalized());
    }
    PolygonVariation var = variation_of(p, X);
    for (int i = 1; i < m; ++i) {
      REQUIRE(var.l_prime(i) == Approx(var.l_prime(0)).epsilon(1e-12));
      REQUIRE(var.theta_prime(i) == Approx(var.theta_prime(0)).epsilon(1e-12));
    }
    REQUIRE(var.l_prime(0) < 0);
    IdentityReport r = check_polygon_identity(p, var);
    REQUIRE(r.rel_residual < 1e-12);
    // Exterior angles of a spherical polygon sum to 2π minus its area.
    REQUIRE(exterior_angles(p).sum() < 2 * pi);
  }
}

TEST_CASE("identity for induced variations", "[polygon]") {
  for (int K : {-1, 0, 1}) {
    SpaceForm s(K, 2);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      Polygon p = random_star(s, 3 + static_cast<int>(seed), seed);
      PolygonVariation var = variation_of(p, field_from_coordinates(p, random_coords(2 * p.n(), seed + 50)));
      IdentityReport r = check_polygon_identity(p, var);
      INFO("K=" << K << " seed=" << seed << " rel=" << r.rel_residual);
      REQUIRE(r.rel_residual <= 1e-8);
      REQUIRE(r.pass);
      // Sign flip must break it.
      REQUIRE_FALSE(check_polygon_identity(p, var, 1e-8, true).pass);
    }
  }
}

TEST_CASE("analytic and finite-difference variation maps agree", "[polygon]") {
  for (int K : {-1, 0, 1}) {
    Polygon p = random_star(SpaceForm(K, 2), 6, 7 + static_cast<std::uint64_t>(K + 1));
    Mat A = variation_map(p), F = variation_map_fd(p);
    REQUIRE((A - F).norm() <= 1e-7 * A.norm());
  }
}

TEST_CASE("rank, kernel and constraints of the variation map", "[polygon]") {
  Mat sq(2, 4);
  sq << 0, 1, 1, 0,
        0, 0, 1, 1;
  std::vector<Polygon> polys = {regular(SpaceForm::sphere(2), 3, 0.9), make_polygon(SpaceForm::euclidean(2), sq),
                                random_star(SpaceForm::hyperbolic(2), 7, 3), random_star(SpaceForm::sphere(2), 8, 4),
                                random_star(SpaceForm::euclidean(2), 5, 5)};
  for (const Polygon& p : polys) {
    const int n = p.n();
    Mat M = variation_map(p);
    REQUIRE(numerical_rank(M) == 2 * n - 3);
    Mat C = constraint_functionals(p);
    REQUIRE((C * M).norm() <= 1e-9 * M.norm());
    Mat aug(2 * n, 2 * n + 3);
    aug << M, C.transpose();
    REQUIRE(numerical_rank(aug) == 2 * n);
    // Trivial motions lie in the kernel.
    for (int g = 0; g < trivial_motion_count(p.space); ++g) {
      Vec b;
      Mat G = isometry_generator(p.space, g, &b);
      Mat X = G * p.vertices;
      if (p.space.curvature() == 0) X.colwise() += b;
      REQUIRE(variation_of(p, X).stacked().norm() < 1e-13);
    }
  }
}

TEST_CASE("solving for a deformation", "[polygon]") {
  for (int K : {-1, 0, 1}) {
    Polygon p = random_star(SpaceForm(K, 2), 6, 20 + static_cast<std::uint64_t>(K + 1));
    const int n = p.n();
    Vec c = random_coords(2 * n, 30);
    Mat X0 = field_from_coordinates(p, c);
    PolygonVariation target = variation_of(p, X0);
    DeformationField X = solve_variation(p, target);
    REQUIRE((variation_of(p, X.velocities).stacked() - target.stacked()).norm() <= 1e-8 * target.stacked().norm());
    // The two fields differ by a trivial motion.
    REQUIRE(variation_of(p, X.velocities - X0).stacked().norm() <= 1e-8 * target.stacked().norm());
    Mat M = variation_map(p);
    Mat kern = null_space(M);
    REQUIRE(kern.cols() == 3);
    Vec diff(2 * n);
    auto T = tangent_charts(p);
    for (int i = 0; i < n; ++i) diff.segment(2 * i, 2) = T[i].transpose() * p.space.signs().asDiagonal() * (X.velocities.col(i) - X0.col(i));
    REQUIRE((diff - kern * (kern.transpose() * diff)).norm() <= 1e-8 * c.norm());

    DeformationField Z = solve_variation(p, {Vec::Zero(n), Vec::Zero(n)});
    REQUIRE(Z.velocities.norm() == 0.0);
  }
  Polygon tri = regular(SpaceForm::sphere(2), 3, 0.7);
  PolygonVariation bad{Vec::Zero(3), Vec::Zero(3)};
  bad.theta_prime(0) = 1.0;
  REQUIRE_THROWS_AS(solve_variation(tri, bad), Infeasible);
}

TEST_CASE("polygon identity agrees with the codimension one identity", "[polygon]") {
  for (int K : {-1, 0, 1}) {
    Polygon p = regular(SpaceForm(K, 2), 6, 0.7, 0.3);
    // Perturb into a generic convex hexagon.
    std::mt19937_64 rng(40);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    Mat V = p.vertices;
    for (int i = 0; i < p.n(); ++i) {
      Mat T = tangent_basis(p.space, V.col(i));
      V.col(i) = geodesic_flow(p.space, V.col(i), T * Vec::Constant(2, u(rng)), 1.0);
    }
    p = make_polygon(p.space, V);
    Polytope P = polygon_polytope(p);
    REQUIRE(P.num_vertices() == p.n());
    DeformationField X{field_from_coordinates(p, random_coords(2 * p.n(), 41))};
    VariationalData d = prepare(P, X, {});
    IdentityReport e0 = check_E0(d);
    PolygonVariation var = variation_of(p, X.velocities);
    IdentityReport pr = check_polygon_identity(p, var);
    REQUIRE(e0.pass);
    REQUIRE(pr.pass);
    // Term by term: angle derivatives at vertices and length derivatives of edges.
    Mat N = edge_duals(p);
    for (const Face& v : P.faces(2)) {
      const int i = v.vertices[0];
      REQUIRE(d.deriv.Vd[2][v.id] == Approx(var.theta_prime(i)).margin(1e-7));
    }
    for (const Face& g : P.faces(1)) {
      int a = g.vertices[0], b = g.vertices[1];
      const int i = (b == (a + 1) % p.n()) ? a : b;
      REQUIRE(d.deriv.V[1][g.id] == Approx(var.l_prime(i)).margin(1e-7));
      REQUIRE((d.base.normals[g.id] - N.col(i)).norm() < 1e-10);
    }
    Vec tail = K == 0 ? Vec(pr.residual.tail(2)) : pr.residual;
    REQUIRE((e0.residual - tail).norm() <= 1e-6 * e0.scale);
  }
}

TEST_CASE("de Sitter edge duals", "[polygon]") {
  Polygon p = random_star(SpaceForm::hyperbolic(2), 5, 9);
  Mat W = edge_duals(p);
  for (int i = 0; i < p.n(); ++i) {
    REQUIRE(p.space.norm_sq(W.col(i)) == Approx(1.0).epsilon(1e-12));
    REQUIRE(std::abs(p.space.bilinear(W.col(i), p.vertex(i))) < 1e-12);
    REQUIRE(std::abs(p.space.bilinear(W.col(i), p.vertex(i + 1))) < 1e-12);
  }
}

TEST_CASE("complementary spherical disks", "[polygon]") {
  Polygon p = random_star(SpaceForm::sphere(2), 5, 11);
  Polygon q = p.reversed_interior();
  REQUIRE((interior_angles(p) + interior_angles(q) - Vec::Constant(5, 2 * pi)).norm() < 1e-12);
  REQUIRE((edge_duals(p) + edge_duals(q)).norm() < 1e-15);
  PolygonVariation var = variation_of(q, field_from_coordinates(q, random_coords(10, 12)));
  REQUIRE(check_polygon_identity(q, var).pass);
  REQUIRE(numerical_rank(variation_map(q)) == 7);
}

TEST_CASE("invalid polygons", "[polygon]") {
  Mat V(2, 4);
  V << 0, 1, 0, 1,
       0, 1, 1, 0;
  REQUIRE_THROWS_AS(make_polygon(SpaceForm::euclidean(2), V), InputError);  // bow tie
  Mat W(2, 2);
  W << 0, 1, 0, 0;
  REQUIRE_THROWS_AS(make_polygon(SpaceForm::euclidean(2), W), InputError);
  Mat E(3, 3);
  E << 1, 0, -1,
       0, 1, 0,
       0, 0, 0;
  REQUIRE_THROWS_AS(make_polygon(SpaceForm::sphere(2), E), InputError);  // edge of length π
  REQUIRE_THROWS_AS(make_polygon(SpaceForm::sphere(3), Mat::Identity(4, 3)), InputError);
}

TEST_CASE("hyperbolic angle derivatives", "[polygon][cone]") {
  const double a = 0.9, b = 1.1, c = 0.7, h = 1e-5;
  auto g = hyperbolic_angle_gradient(a, b, c);
  REQUIRE(g[0] == Approx((hyperbolic_angle(a + h, b, c) - hyperbolic_angle(a - h, b, c)) / (2 * h)).epsilon(1e-8));
  REQUIRE(g[1] == Approx((hyperbolic_angle(a, b + h, c) - hyperbolic_angle(a, b - h, c)) / (2 * h)).epsilon(1e-8));
  REQUIRE(g[2] == Approx((hyperbolic_angle(a, b, c + h) - hyperbolic_angle(a, b, c - h)) / (2 * h)).epsilon(1e-8));
  // Angle sum of a hyperbolic triangle is below π.
  REQUIRE(hyperbolic_angle(a, b, c) + hyperbolic_angle(b, c, a) + hyperbolic_angle(c, a, b) < pi);
}

TEST_CASE("hyperbolic polygons with cone points", "[polygon][cone]") {
  const SpaceForm h = SpaceForm::hyperbolic(2);
  Polygon p = regular(h, 5, 1.0, 0.1);
  Mat W(3, 2);
  W.col(0) = geodesic_flow(h, Vec::Unit(3, 2), Vec::Unit(3, 0), 0.3);
  W.col(1) = geodesic_flow(h, Vec::Unit(3, 2), (Vec(3) << -0.2, 0.5, 0.0).finished(), 0.6);
  ConePolygon cp = make_cone_polygon(p, W);
  ConeTriangulation T = triangulate(cp);
  const int n = 5, q = 2;
  REQUIRE(static_cast<int>(T.edges.size()) == 2 * n + 3 * q - 3);
  REQUIRE(static_cast<int>(T.triangles.size()) == n + 2 * q - 2);
  Mat M = cone_variation_map(h, T);
  REQUIRE(numerical_rank(M) == 2 * n + q - 3);
  REQUIRE(null_space(M).cols() == 2 * q);

  // Undeformed angles: cone points carry 2π, boundary vertices their polygon angle.
  Vec L = triangulation_lengths(h, T);
  Vec total = Vec::Zero(n + q);
  for (const auto& t : T.triangles)
    for (int k = 0; k < 3; ++k) {
      const int v = t[k], u = t[(k + 1) % 3], w = t[(k + 2) % 3];
      total(v) += hyperbolic_angle(L(T.edge_index(u, w)), L(T.edge_index(v, w)), L(T.edge_index(v, u)));
    }
  REQUIRE((total.head(n) - interior_angles(p)).norm() < 1e-10);
  REQUIRE(total(n) == Approx(2 * pi).epsilon(1e-12));
  REQUIRE(total(n + 1) == Approx(2 * pi).epsilon(1e-12));

  // Zero targets.
  ConeTargets zero{Vec::Zero(n), Vec::Zero(n), Vec::Zero(q)};
  REQUIRE(check_cone_polygon(cp, zero).residual.norm() == 0.0);
  REQUIRE(solve_cone_polygon(cp, zero).length_prime.norm() == 0.0);

  // Targets induced by random edge-length variations satisfy the constraint.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Vec dl = random_coords(static_cast<int>(T.edges.size()), seed);
    Vec y = M * dl;
    ConeTargets t{y.head(n), y.segment(n, n), y.tail(q)};
    IdentityReport r = check_cone_polygon(cp, t);
    INFO("rel=" << r.rel_residual);
    REQUIRE(r.rel_residual <= 1e-7);
    ConeDeformation sol = solve_cone_polygon(cp, t);
    REQUIRE((M * sol.length_prime - y).norm() <= 1e-8 * y.norm());
  }

  // Perturbing one target off the constraint makes it infeasible.
  Vec y = M * random_coords(static_cast<int>(T.edges.size()), 9);
  ConeTargets t{y.head(n), y.segment(n, n), y.tail(q)};
  t.theta_prime(0) += 1e-2;
  REQUIRE_FALSE(check_cone_polygon(cp, t).pass);
  REQUIRE_THROWS_AS(solve_cone_polygon(cp, t), Infeasible);
}

TEST_CASE("single cone point at the centre of a regular triangle", "[polygon][cone]") {
  const SpaceForm h = SpaceForm::hyperbolic(2);
  Polygon p = regular(h, 3, 1.2);
  ConePolygon cp = make_cone_polygon(p, Vec::Unit(3, 2));
  ConeTargets t{Vec::Zero(3), Vec::Zero(3), Vec::Ones(1)};
  REQUIRE_FALSE(check_cone_polygon(cp, t).pass);
  REQUIRE_THROWS_AS(solve_cone_polygon(cp, t), Infeasible);
  Mat M = cone_variation_map(h, triangulate(cp));
  ConeTargets u{Vec::Zero(3), Vec::Zero(3), Vec::Zero(1)};
  REQUIRE_NOTHROW(solve_cone_polygon(cp, u));
  REQUIRE(numerical_rank(M) == 2 * 3 + 1 - 3);
}

TEST_CASE("cone points must be interior", "[polygon][cone]") {
  const SpaceForm h = SpaceForm::hyperbolic(2);
  Polygon p = regular(h, 4, 0.5);
  Vec far = geodesic_flow(h, Vec::Unit(3, 2), Vec::Unit(3, 0), 2.0);
  REQUIRE_THROWS_AS(make_cone_polygon(p, far), InputError);
  REQUIRE_THROWS_AS(make_cone_polygon(regular(SpaceForm::sphere(2), 4, 0.5), Vec::Unit(3, 2)), InputError);
}
