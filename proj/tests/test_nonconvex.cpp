#include "catch_amalgamated.hpp"

#include <schlafli/generate.hpp>
#include <schlafli/nonconvex.hpp>

using namespace schlafli;

namespace {

Hyperplane plane(std::initializer_list<double> normal, double offset = 0.0) {
  Vec n(static_cast<Eigen::Index>(normal.size()));
  Eigen::Index k = 0;
  for (double x : normal) n(k++) = x;
  return {n, offset};
}

// Vertices of a convex polytope lying on every facet hyperplane through the
// centroid of the given points: the face whose relative interior holds them.
std::vector<int> carrier(const Polytope& P, const Mat& pts) {
  Vec c = pts.rowwise().mean();
  const Vec& S = P.space().signs();
  std::vector<int> on;
  for (const Face& f : P.faces(1)) {
    const Vec& n = P.normal(f.id);
    const double v = P.curvature() == 0 ? n.dot(c - P.vertex(f.vertices[0])) : form_dot(S, n, c);
    if (std::abs(v) < 1e-9) on.push_back(f.id);
  }
  std::vector<int> verts;
  for (int j = 0; j < P.num_vertices(); ++j) {
    bool all = true;
    for (int f : on) all = all && detail::contains(P.face(1, f).vertices, j);
    if (all) verts.push_back(j);
  }
  return verts;
}

Mat union_face_points(const PolytopeUnion& U, int c, int id) { return detail::columns(U.vertices, U.faces[c][id].vertices); }

}  // namespace

TEST_CASE("splitting a cube", "[nonconvex]") {
  Polytope C = unit_cube();
  SplitResult s = split_polytope(C, plane({1, 0, 0}, 0.5));
  REQUIRE(s.minus.num_vertices() == 8);
  REQUIRE(s.plus.num_vertices() == 8);
  QuadratureConfig cfg;
  REQUIRE(measure_face(s.minus, {0, 0}, cfg).volume == Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE(measure_face(s.plus, {0, 0}, cfg).volume == Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE(s.cut.polytope.dim() == 2);
  REQUIRE(s.cut.polytope.num_vertices() == 4);
  REQUIRE(measure_face(s.cut.polytope, {0, 0}, cfg).volume == Catch::Approx(1.0).epsilon(1e-12));

  REQUIRE_THROWS_AS(split_polytope(C, plane({1, 0, 0}, 2.0)), InputError);
  REQUIRE_THROWS_AS(split_polytope(C, plane({1, 0, 0}, 1.0)), InputError);  // touches a facet only
  // A cut through vertices keeps them in both pieces.
  SplitResult d = split_polytope(C, plane({1, -1, 0}));
  REQUIRE(d.minus.num_vertices() == 6);
  REQUIRE(d.plus.num_vertices() == 6);
}

TEST_CASE("splitting preserves volume", "[nonconvex]") {
  QuadratureConfig cfg;
  Polytope O = orthant_simplex(3);
  SplitResult s = split_polytope(O, plane({0.3, -0.5, 0.7, -0.1}));
  const double whole = measure_face(O, {0, 0}, cfg).volume;
  REQUIRE(whole == Catch::Approx(sphere_volume(3) / 16).epsilon(1e-9));
  REQUIRE(measure_face(s.minus, {0, 0}, cfg).volume + measure_face(s.plus, {0, 0}, cfg).volume ==
          Catch::Approx(whole).epsilon(1e-9));
  for (int K : {-1, 1}) {
    Polytope P = random_polytope(SpaceForm(K, 3), 8, 30);
    Vec c = P.vertices().rowwise().mean();
    Vec n = Vec::Zero(4);
    n.head(3) = Vec::Random(3);
    n(3) = -n.head(3).dot(c.head(3)) / c(3);  // through the centroid direction
    SplitResult h = split_polytope(P, {n, 0.0});
    REQUIRE(measure_face(h.minus, {0, 0}, cfg).volume + measure_face(h.plus, {0, 0}, cfg).volume ==
            Catch::Approx(measure_face(P, {0, 0}, cfg).volume).epsilon(1e-9));
  }
}

TEST_CASE("dual measures of a split polytope", "[nonconvex]") {
  const auto [cv2, cm2] = section_weights(2);
  REQUIRE(cv2 == Catch::Approx(std::numbers::pi).epsilon(1e-15));
  REQUIRE(cm2 == Catch::Approx(2.0).epsilon(1e-15));
  REQUIRE_THROWS_AS(section_weights(1), InputError);

  // Cube cut by x = y through two opposite edges.
  Polytope C = unit_cube();
  Hyperplane H = plane({1, -1, 0});
  int checked = 0;
  for (int c = 2; c <= 3; ++c)
    for (const Face& f : C.faces(c)) {
      Mat pts = C.face_vertices(f.ref());
      bool inside = true;
      for (Eigen::Index j = 0; j < pts.cols(); ++j) inside = inside && std::abs(H.side(pts.col(j))) < 1e-12;
      if (!inside) continue;
      auto [rv, rm] = check_prop_nonconvex(C, H, f.ref(), {}, 1e-8);
      INFO("codim " << c << " rel " << rv.rel_residual << " " << rm.rel_residual);
      REQUIRE(rv.pass);
      REQUIRE(rm.pass);
      ++checked;
    }
  REQUIRE(checked == 6);  // two edges and four vertices
  REQUIRE(common_faces(C, H).size() == 6);
  REQUIRE(common_faces(C, plane({1, 0, 0}, 0.5)).empty());

  // The edge x = y = 0: exterior angles 3π/4 in each prism, π/2 in the cube.
  SplitResult s = split_polytope(C, H);
  std::vector<int> axis;
  for (int j = 0; j < C.num_vertices(); ++j)
    if (C.vertex(j)(0) == 0 && C.vertex(j)(1) == 0) axis.push_back(j);
  auto ref = detail::find_face_by_points(s.minus, detail::columns(C.vertices(), axis), 1e-12);
  REQUIRE(ref);
  REQUIRE(measure_dual(s.minus, *ref, {}).volume == Catch::Approx(3 * std::numbers::pi / 4).epsilon(1e-9));

  // The relation needs a face common to all four polytopes.
  REQUIRE_THROWS_AS(check_prop_nonconvex(C, plane({1, 0, 0}, 0.5), {2, 0}), InputError);
  REQUIRE_THROWS_AS(check_prop_nonconvex(C, H, {1, 0}), InputError);
}

TEST_CASE("dual measure relation on random spherical splits", "[nonconvex]") {
  for (std::uint64_t seed : {31u, 32u}) {
    Polytope P = random_polytope(SpaceForm::sphere(3), 8, seed);
    const Face& e = P.faces(2).front();
    Vec a = P.vertex(e.vertices[0]), b = P.vertex(e.vertices[1]);
    Vec c = P.vertices().rowwise().mean();
    Mat A(3, 4);
    A << a.transpose(), b.transpose(), c.transpose();
    Hyperplane H{null_space(A).col(0), 0.0};
    int checked = 0;
    for (int codim = 2; codim <= 3; ++codim)
      for (const Face& f : P.faces(codim)) {
        Mat pts = P.face_vertices(f.ref());
        bool inside = true;
        for (Eigen::Index j = 0; j < pts.cols(); ++j) inside = inside && std::abs(H.side(pts.col(j))) < 1e-12;
        if (!inside) continue;
        auto [rv, rm] = check_prop_nonconvex(P, H, f.ref(), {}, 1e-7);
        INFO("seed " << seed << " codim " << codim << " rel " << rv.rel_residual << " " << rm.rel_residual);
        REQUIRE(rv.pass);
        REQUIRE(rm.pass);
        ++checked;
      }
    REQUIRE(checked == 3);
    REQUIRE(common_faces(P, H).size() == 3);
    auto [fv, fm] = check_prop_nonconvex(P, H, e.ref(), {}, 1e-7, true);
    REQUIRE_FALSE(fv.pass);
    REQUIRE_FALSE(fm.pass);
  }
}

TEST_CASE("a split convex polytope as a union", "[nonconvex]") {
  for (int K : {0, 1}) {
    Polytope P = K == 0 ? random_polytope(SpaceForm::euclidean(3), 9, 33) : random_polytope(SpaceForm::sphere(3), 9, 33);
    Vec c = P.vertices().rowwise().mean();
    Hyperplane H{Vec::Unit(3, 0), c(0)};
    if (K == 1) H = {(Vec(4) << 1, 0.2, 0, -(c(0) + 0.2 * c(1)) / c(3)).finished(), 0.0};
    SplitResult s = split_polytope(P, H);
    PolytopeUnion U = make_union({s.minus, s.plus});
    REQUIRE(U.gluings.size() == 1);
    Snapshot u = union_static_data(U);
    QuadratureConfig cfg;
    for (int codim = 1; codim <= 3; ++codim)
      for (int i = 0; i < U.num_faces(codim); ++i) {
        Mat pts = union_face_points(U, codim, i);
        std::vector<int> verts = carrier(P, pts);
        auto ref = P.find(verts);
        REQUIRE(ref);
        INFO("K=" << K << " codim " << codim << " face " << i);
        if (ref->codim == codim) {
          FaceMeasure m = measure_dual(P, *ref, cfg);
          REQUIRE(u.Vd[codim][i] == Catch::Approx(m.volume).margin(1e-8));
          REQUIRE((u.pid[codim][i] - m.moment).norm() <= 1e-8);
        } else {
          // Lies inside a larger face of P: the union sees no corner there.
          REQUIRE(std::abs(u.Vd[codim][i]) <= 1e-8);
          REQUIRE(u.pid[codim][i].norm() <= 1e-8);
        }
      }
  }
}

TEST_CASE("L-shaped solid", "[nonconvex]") {
  PolytopeUnion a = l_shape_union(0), b = l_shape_union(1);
  REQUIRE(a.vertices.cols() == 12);
  REQUIRE(b.vertices.cols() == 14);
  Snapshot sa = union_static_data(a), sb = union_static_data(b);

  // Decomposition independence on the faces both decompositions share.
  int shared = 0;
  for (int c = 1; c <= 3; ++c)
    for (int i = 0; i < a.num_faces(c); ++i) {
      Mat pts = union_face_points(a, c, i);
      std::vector<int> idx;
      for (Eigen::Index j = 0; j < pts.cols(); ++j) idx.push_back(detail::find_point(b.vertices, pts.col(j), 1e-12));
      if (std::find(idx.begin(), idx.end(), -1) != idx.end()) continue;
      auto fb = b.find(idx);
      if (!fb || fb->codim != c) continue;
      ++shared;
      INFO("codim " << c << " face " << i);
      REQUIRE(sa.Vd[c][i] == Catch::Approx(sb.Vd[c][fb->id]).margin(1e-8));
      REQUIRE((sa.pid[c][i] - sb.pid[c][fb->id]).norm() <= 1e-8);
    }
  REQUIRE(shared > 20);

  // Edges along the cut of the second decomposition are flat, except the
  // reflex edge itself.
  int flat = 0;
  for (int i = 0; i < b.num_faces(2); ++i) {
    Mat pts = union_face_points(b, 2, i);
    bool on_cut = true, reflex_edge = true;
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      on_cut = on_cut && std::abs(pts(1, j) - 0.5 * pts(0, j) - 0.5) < 1e-12;
      reflex_edge = reflex_edge && pts(0, j) == 1.0;
    }
    if (!on_cut || reflex_edge) continue;
    REQUIRE(std::abs(sb.Vd[2][i]) <= 1e-10);
    REQUIRE(sb.pid[2][i].norm() <= 1e-10);
    ++flat;
  }
  REQUIRE(flat == 3);

  // The reflex edge over (1,1) has exterior angle −π/2.
  std::vector<int> reflex;
  for (Eigen::Index j = 0; j < a.vertices.cols(); ++j)
    if (std::abs(a.vertices(0, j) - 1) < 1e-12 && std::abs(a.vertices(1, j) - 1) < 1e-12) reflex.push_back(static_cast<int>(j));
  auto r = a.find(reflex);
  REQUIRE(r);
  REQUIRE(r->codim == 2);
  REQUIRE(sa.Vd[2][r->id] == Catch::Approx(-std::numbers::pi / 2).epsilon(1e-9));
  REQUIRE((sa.pid[2][r->id] - (Vec(3) << -1, -1, 0).finished()).norm() <= 1e-12);
  // Convex edges keep their exterior angle π/2.
  for (int i = 0; i < a.num_faces(2); ++i)
    if (i != r->id && std::abs(sa.Vd[2][i]) > 1e-9) REQUIRE(sa.Vd[2][i] == Catch::Approx(std::numbers::pi / 2).epsilon(1e-9));
}

TEST_CASE("E0 on the L-shaped solid", "[nonconvex]") {
  for (int variant : {0, 1}) {
    PolytopeUnion U = l_shape_union(variant);
    std::mt19937_64 rng(34 + variant);
    DeformationField X = random_union_field(U, rng);
    REQUIRE(X.max_speed() == Catch::Approx(1.0));
    IdentityReport r = check_union_identity(U, X, IdentityId::UnionE0);
    INFO("variant " << variant << " rel " << r.rel_residual);
    REQUIRE(r.pass);
    REQUIRE(r.rel_residual <= 1e-5);
    CheckConfig flip;
    flip.sign_flip = true;
    REQUIRE_FALSE(check_union_identity(U, X, IdentityId::UnionE0, std::nullopt, flip).pass);
  }
}

TEST_CASE("identities on glued unions in curved space", "[nonconvex][slow]") {
  for (int K : {-1, 1}) {
    PolytopeUnion U3 = random_glued_union(SpaceForm(K, 3), 3, 35);
    std::mt19937_64 rng(36);
    IdentityReport r = check_union_identity(U3, random_union_field(U3, rng), IdentityId::UnionE0);
    INFO("K=" << K << " rel " << r.rel_residual);
    REQUIRE(r.pass);
  }
  PolytopeUnion U4 = random_glued_union(SpaceForm::sphere(4), 3, 37);
  std::mt19937_64 rng(38);
  DeformationField X = random_union_field(U4, rng);
  IdentityReport h = check_union_identity(U4, X, IdentityId::UnionHp, 2);
  IdentityReport k = check_union_identity(U4, X, IdentityId::UnionKp, 2);
  INFO("Hp " << h.rel_residual << " Kp " << k.rel_residual);
  REQUIRE(h.pass);
  REQUIRE(k.pass);
}

TEST_CASE("invalid unions", "[nonconvex]") {
  Polytope C = unit_cube();
  REQUIRE_THROWS_AS(make_union({}), InputError);
  // Overlapping copies share every facet on the same side.
  REQUIRE_THROWS_AS(make_union({C, C}), InputError);
  // Disconnected pieces.
  Mat far = C.vertices();
  far.row(0).array() += 5.0;
  REQUIRE_THROWS_AS(make_union({C, build_from_vertices(SpaceForm::euclidean(3), far)}), InputError);
  PolytopeUnion L = l_shape_union(0);
  REQUIRE_THROWS_AS(check_union_identity(L, {Mat::Zero(3, 12)}, IdentityId::UnionHp, 2), InputError);
  REQUIRE_THROWS_AS(check_union_identity(L, {Mat::Zero(3, 12)}, IdentityId::E0), InputError);
  REQUIRE_THROWS_AS(l_shape_union(2), InputError);
}
