#include "catch_amalgamated.hpp"

#include <schlafli/io.hpp>
#include <schlafli/suite.hpp>

using namespace schlafli;
using io::Json;

TEST_CASE("documents round trip exactly", "[io]") {
  Polytope P = random_polytope(SpaceForm::hyperbolic(3), 8, 3);
  Json j = io::polytope_to_json(P);
  Polytope Q = io::polytope_from_json(io::parse(io::dump(j)));
  REQUIRE(Q.vertices() == P.vertices());
  REQUIRE(Q.same_lattice(P));

  Polygon sq = make_polygon(SpaceForm::euclidean(2), (Mat(2, 4) << 0, 1, 1, 0, 0, 0, 1, 1).finished());
  Polygon sq2 = io::polygon_from_json(io::parse(io::dump(io::polygon_to_json(sq))));
  REQUIRE(sq2.vertices == sq.vertices);
  REQUIRE(sq2.orientation == sq.orientation);

  PolygonVariation v{Vec::LinSpaced(4, 0.1, 0.4), Vec::LinSpaced(4, -1, 1)};
  PolygonVariation v2 = io::variation_from_json(io::parse(io::dump(io::variation_to_json(v))), 4);
  REQUIRE(v2.stacked() == v.stacked());

  SphereDecomposition d = icosahedral_s2();
  SphereDecomposition d2 = io::decomposition_from_json(io::parse(io::dump(io::decomposition_to_json(d))));
  REQUIRE(d2.vertices == d.vertices);
  REQUIRE(d2.cells() == d.cells());

  PolytopeUnion U = l_shape_union(1);
  PolytopeUnion U2 = io::union_from_json(io::parse(io::dump(io::union_to_json(U))));
  REQUIRE(U2.vertices == U.vertices);
  REQUIRE(U2.gluings.size() == U.gluings.size());

  DeformationField X{Mat::Random(4, 8)};
  REQUIRE(io::field_from_json(io::field_to_json(X), 4).velocities == X.velocities);

  Hyperplane H{Vec::Unit(3, 1), 0.25};
  Hyperplane H2 = io::hyperplane_from_json(io::hyperplane_to_json(H));
  REQUIRE(H2.normal == H.normal);
  REQUIRE(H2.offset == H.offset);
}

TEST_CASE("malformed documents are input errors", "[io]") {
  REQUIRE_THROWS_AS(io::parse("{\"type\": "), InputError);
  REQUIRE_THROWS_AS(io::polytope_from_json(io::parse(R"({"type": "polygon"})")), InputError);
  REQUIRE_THROWS_AS(io::polytope_from_json(io::parse(R"({"type": "polytope", "curvature": 1, "dim": 2})")), InputError);
  REQUIRE_THROWS_AS(io::polytope_from_json(io::parse(R"({"type": "polytope", "curvature": 2, "dim": 2, "vertices": []})")),
                    InputError);
  REQUIRE_THROWS_AS(io::vec_from_json(io::parse(R"([1, "x"])")), InputError);
  REQUIRE_THROWS_AS(io::read_file("/nonexistent/file.json"), InputError);

  // Gluings that disagree with the geometry.
  Json j = io::union_to_json(l_shape_union(0));
  j["gluings"] = Json::array({Json::array({Json::array({0, 0}), Json::array({1, 0})})});
  REQUIRE_THROWS_AS(io::union_from_json(j), InputError);
}

TEST_CASE("non-finite numbers stay valid JSON", "[io]") {
  IdentityReport r;
  r.rel_residual = std::numeric_limits<double>::infinity();
  r.residual = Vec::Zero(1);
  Json j = io::report_to_json(r);
  REQUIRE(j["rel_residual"] == "inf");
  REQUIRE_NOTHROW(io::parse(j.dump()));
}

TEST_CASE("admissible p ranges", "[suite]") {
  PRange e = suite_p_range("Ep", 1, 4);
  REQUIRE((e.applies && e.lo == 1 && e.hi == 2));
  REQUIRE_FALSE(suite_p_range("Hp", 1, 3).applies);
  REQUIRE(suite_p_range("Hp", 0, 4).applies);
  REQUIRE_FALSE(suite_p_range("Fp_prime", 0, 4).applies);
  PRange g = suite_p_range("Gp_prime", -1, 3);
  REQUIRE((g.lo == 0 && g.hi == 1));
  REQUIRE_FALSE(suite_p_range("E0", 0, 3).indexed);

  SuiteConfig c;
  c.dim = 4;
  c.curvature = 0;
  for (const std::string& s : c.selected()) REQUIRE(suite_p_range(s, 0, 4).applies);
  c.ps = {2};
  REQUIRE(c.p_values("Ep") == std::vector<int>{2});
  REQUIRE(c.p_values("MinkowskiStatic") == std::vector<int>{2});
}

TEST_CASE("configuration errors", "[suite]") {
  SuiteConfig c;
  c.identities = {"Nope"};
  REQUIRE_THROWS_AS(c.validate(), InputError);
  c.identities = {"Hp"};
  REQUIRE_THROWS_AS(c.validate(), InputError);
  c = {};
  c.vertex_count = 3;
  REQUIRE_THROWS_AS(c.validate(), InputError);
  c = {};
  c.tolerance = -1.0;
  REQUIRE_THROWS_AS(c.validate(), InputError);
  c = {};
  c.identities = {"Ep"};
  c.ps = {5};
  REQUIRE_THROWS_AS(c.validate(), InputError);
  c = {};
  c.curvature = 3;
  REQUIRE_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("suites are deterministic and sorted", "[suite]") {
  SuiteConfig c;
  c.seed = 11;
  c.curvature = -1;
  c.instances = 3;
  c.deformations = 2;
  SuiteResult a = run_suite(c);
  c.threads = 3;
  SuiteResult b = run_suite(c);
  REQUIRE(a.items.size() == b.items.size());
  REQUIRE(a.all_pass());
  for (size_t i = 0; i < a.items.size(); ++i) {
    REQUIRE(a.items[i].key == b.items[i].key);
    REQUIRE(a.items[i].report.rel_residual == b.items[i].report.rel_residual);
    if (i > 0) REQUIRE(a.items[i - 1].key < a.items[i].key);
  }
  // Static formulas run once per polytope.
  int statics = 0;
  for (const SuiteItem& i : a.items) statics += i.report.id == IdentityId::MinkowskiStatic2 ? 1 : 0;
  REQUIRE(statics == 3 * 2);
}

TEST_CASE("suite controls fail every item", "[suite]") {
  for (int K : {-1, 0, 1}) {
    SuiteConfig c;
    c.curvature = K;
    c.seed = 21;
    c.sign_flip = true;
    SuiteResult f = run_suite(c);
    REQUIRE(f.failures() == static_cast<int>(f.items.size()));
    c.sign_flip = false;
    c.tolerance = 0.0;
    SuiteResult z = run_suite(c);
    REQUIRE(z.failures() == static_cast<int>(z.items.size()));
  }
}

TEST_CASE("a fixed polytope and field", "[suite]") {
  Polytope C = unit_cube();
  SuiteConfig c;
  c.curvature = 0;
  REQUIRE_THROWS_AS(run_suite(c, &C), InputError);
  DeformationField X{C.vertices().colwise() - C.vertices().rowwise().mean()};
  SuiteResult r = run_suite(c, &C, &X);
  REQUIRE(r.all_pass());
  c.curvature = 1;
  REQUIRE_THROWS_AS(run_suite(c, &C, &X), InputError);
}

TEST_CASE("oracle agreement report", "[suite][oracle]") {
  QuadratureConfig q;
  q.mc_samples = 20000;
  IdentityReport r = check_oracle_agreement(octant(), q);
  REQUIRE(r.id == IdentityId::OracleAgreement);
  REQUIRE(r.terms.size() == 4);  // the triangle and its three edges
  REQUIRE(r.rel_residual == Catch::Approx(r.residual(0) / 3.0));
  REQUIRE(r.pass == (r.residual(0) < 3.0));
}
