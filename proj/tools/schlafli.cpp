// Batch driver: instance generation, identity suites and report emission.
//
// Exit status: 0 when every check passes, 1 when a check fails, 2 on bad
// input or configuration.

#include <schlafli/conemanifold.hpp>
#include <schlafli/generate.hpp>
#include <schlafli/io.hpp>
#include <schlafli/nonconvex.hpp>
#include <schlafli/polygon.hpp>
#include <schlafli/suite.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace schlafli;
using io::Json;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kBadInput = 2;

struct Options {
  std::uint64_t seed = 1;
  std::string space = "sphere";
  int dim = 3;
  int vertices = 8;
  int instances = 1;
  int deformations = 1;
  int threads = 1;
  std::vector<std::string> identities;
  std::vector<int> ps;
  std::optional<double> tol;
  double fd_step = 1e-4;
  double quad_tol = 1e-9;
  long mc_samples = 200000;
  std::string out;
  std::string format = "json";
  std::string in;
  std::string target;
  bool sign_flip = false;
  bool terms = false;
};

int parse_space(const std::string& s) {
  if (s == "sphere" || s == "S" || s == "1" || s == "+1") return 1;
  if (s == "hyperbolic" || s == "H" || s == "-1") return -1;
  if (s == "euclidean" || s == "E" || s == "R" || s == "0") return 0;
  throw InputError("unknown space '" + s + "' (sphere, hyperbolic or euclidean)");
}

const char* space_name(int k) { return k == 1 ? "sphere" : (k == -1 ? "hyperbolic" : "euclidean"); }

QuadratureConfig quad_config(const Options& o) {
  QuadratureConfig q;
  q.target_rel_tol = o.quad_tol;
  q.mc_samples = o.mc_samples;
  q.seed = o.seed;
  q.validate();
  return q;
}

DerivativeEngine fd_engine(const Options& o) {
  DerivativeEngine e;
  e.h = o.fd_step;
  e.validate();
  return e;
}

SuiteConfig suite_config(const Options& o) {
  SuiteConfig c;
  c.seed = o.seed;
  c.curvature = parse_space(o.space);
  c.dim = o.dim;
  c.vertex_count = o.vertices;
  c.instances = o.instances;
  c.deformations = o.deformations;
  c.identities = o.identities;
  c.ps = o.ps;
  c.tolerance = o.tol;
  c.quad = quad_config(o);
  c.fd = fd_engine(o);
  c.sign_flip = o.sign_flip;
  c.keep_terms = o.terms;
  c.threads = o.threads;
  return c;
}

Json item_json(const std::string& key, const IdentityReport& r, bool terms) {
  Json j;
  j["key"] = key;
  const Json body = io::report_to_json(r, terms);
  for (auto& [k, v] : body.items()) j[k] = v;
  return j;
}

Json summary(const Json& items) {
  int passed = 0;
  for (const Json& i : items) passed += i.at("pass").get<bool>() ? 1 : 0;
  Json s;
  s["items"] = items.size();
  s["passed"] = passed;
  s["failed"] = static_cast<int>(items.size()) - passed;
  s["pass"] = passed == static_cast<int>(items.size());
  return s;
}

std::string fmt(const Json& x) {
  if (x.is_number_float()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", x.get<double>());
    return buf;
  }
  if (x.is_null()) return "";
  if (x.is_string()) return x.get<std::string>();
  return x.dump();
}

std::string render(const Json& doc, const std::string& format) {
  if (format == "json") return io::dump(doc);
  const Json empty = Json::array();
  const Json& items = doc.contains("items") ? doc["items"] : empty;
  std::ostringstream os;
  if (format == "csv") {
    os << "key,id,p,pass,rel_residual,tolerance,scale\n";
    for (const Json& i : items)
      os << fmt(i["key"]) << ',' << fmt(i["id"]) << ',' << fmt(i["p"]) << ',' << (i["pass"].get<bool>() ? 1 : 0)
         << ',' << fmt(i["rel_residual"]) << ',' << fmt(i["tolerance"]) << ',' << fmt(i["scale"]) << '\n';
    return os.str();
  }
  for (const Json& i : items)
    os << (i["pass"].get<bool>() ? "PASS " : "FAIL ") << fmt(i["key"]) << "  rel=" << fmt(i["rel_residual"])
       << "  tol=" << fmt(i["tolerance"]) << (i.contains("note") ? "  (" + fmt(i["note"]) + ")" : "") << '\n';
  if (doc.contains("summary")) {
    const Json& s = doc["summary"];
    os << s["passed"].get<int>() << "/" << s["items"].get<int>() << " passed\n";
  }
  return os.str();
}

void emit(const Json& doc, const Options& o) {
  const std::string text = render(doc, o.format);
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw InputError("cannot write " + o.out);
  f << text;
}

int status_of(const Json& doc) { return doc.at("summary").at("pass").get<bool>() ? kPass : kFail; }

Json config_json(const SuiteConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["space"] = space_name(c.curvature);
  j["dim"] = c.dim;
  j["vertices"] = c.vertex_count;
  j["instances"] = c.instances;
  j["deformations"] = c.deformations;
  j["identities"] = c.selected();
  j["p"] = c.ps;
  j["tolerance"] = c.tolerance ? Json(*c.tolerance) : Json(nullptr);
  j["fd_step"] = c.fd.h;
  j["quad_tol"] = c.quad.target_rel_tol;
  j["mc_samples"] = c.quad.mc_samples;
  j["sign_flip"] = c.sign_flip;
  return j;
}

int cmd_gen(const Options& o) {
  Polytope P = random_polytope(SpaceForm(parse_space(o.space), o.dim), o.vertices, o.seed);
  Json doc = io::polytope_to_json(P);
  if (o.format != "json") throw InputError("gen writes json only");
  emit(doc, o);
  return kPass;
}

int check_union(const Options& o, const Json& input) {
  PolytopeUnion U = io::union_from_json(input);
  CheckConfig cfg;
  cfg.quad = quad_config(o);
  cfg.fd = fd_engine(o);
  cfg.tolerance = o.tol;
  cfg.sign_flip = o.sign_flip;
  cfg.keep_terms = o.terms;
  std::vector<std::pair<IdentityId, std::optional<int>>> plan;
  std::vector<std::string> names = o.identities.empty() ? std::vector<std::string>{"UnionE0", "UnionHp", "UnionKp"} : o.identities;
  for (const std::string& s : names) {
    auto id = identity_from_name(s);
    if (!id || (*id != IdentityId::UnionE0 && *id != IdentityId::UnionHp && *id != IdentityId::UnionKp))
      throw InputError("unions support UnionE0, UnionHp and UnionKp, not '" + s + "'");
    if (*id == IdentityId::UnionE0) {
      plan.push_back({*id, std::nullopt});
      continue;
    }
    for (int p = 2; p <= U.n() - 1; ++p)
      if (o.ps.empty() || std::find(o.ps.begin(), o.ps.end(), p) != o.ps.end()) plan.push_back({*id, p});
  }
  if (plan.empty()) throw InputError("no admissible identity for this union");
  Json items = Json::array();
  for (int k = 0; k < o.deformations; ++k) {
    std::mt19937_64 rng(o.seed * 1000003ULL + static_cast<std::uint64_t>(k));
    DeformationField X = random_union_field(U, rng);
    for (auto& [id, p] : plan) {
      char key[64];
      std::snprintf(key, sizeof key, "d%03d/%s", k, identity_name(id));
      std::string kk = key;
      if (p) kk += "/p" + std::to_string(*p);
      items.push_back(item_json(kk, check_union_identity(U, X, id, p, cfg), o.terms));
    }
  }
  Json doc;
  doc["type"] = "union_report";
  doc["pieces"] = U.pieces.size();
  doc["gluings"] = U.gluings.size();
  doc["summary"] = summary(items);
  doc["items"] = items;
  emit(doc, o);
  return status_of(doc);
}

int cmd_check(const Options& o) {
  std::optional<Polytope> fixed;
  std::optional<DeformationField> field;
  SuiteConfig c = suite_config(o);
  if (!o.in.empty()) {
    Json input = io::read_file(o.in);
    if (input.value("type", std::string()) == "union") return check_union(o, input);
    fixed = io::polytope_from_json(input);
    c.curvature = fixed->curvature();
    c.dim = fixed->dim();
    c.vertex_count = fixed->num_vertices();
    c.instances = 1;
    if (!o.target.empty()) {
      field = io::field_from_json(io::read_file(o.target), fixed->space().ambient_dim());
      c.deformations = 1;
    }
  } else if (!o.target.empty()) {
    throw InputError("--target needs --in");
  }
  c.validate();
  SuiteResult r = run_suite(c, fixed ? &*fixed : nullptr, field ? &*field : nullptr);
  Json items = Json::array();
  for (const SuiteItem& i : r.items) {
    Json j = item_json(i.key, i.report, o.terms);
    j["instance_seed"] = i.instance_seed;
    if (!i.error.empty()) j["error"] = i.error;
    items.push_back(j);
  }
  Json doc;
  doc["type"] = "suite_report";
  doc["config"] = config_json(c);
  if (fixed) doc["input"] = o.in;
  doc["summary"] = summary(items);
  doc["items"] = items;
  emit(doc, o);
  return status_of(doc);
}

int cmd_polygon(const Options& o) {
  if (o.in.empty()) throw InputError("polygon needs --in");
  Polygon p = io::polygon_from_json(io::read_file(o.in));
  const int n = p.n();
  const double tol = o.tol.value_or(1e-8);
  Mat M = variation_map(p);
  const int rank = variation_rank(p);
  Json doc;
  doc["type"] = "polygon_report";
  doc["polygon"] = io::polygon_to_json(p);
  doc["edge_lengths"] = io::vec_to_json(edge_lengths(p));
  doc["exterior_angles"] = io::vec_to_json(exterior_angles(p));
  doc["rank"] = rank;
  doc["expected_rank"] = 2 * n - 3;
  doc["constraint_residual"] = (constraint_functionals(p) * M).cwiseAbs().maxCoeff();
  Json items = Json::array();
  IdentityReport rk;
  rk.id = IdentityId::PolygonIdentity;
  rk.scalar = true;
  rk.residual = Vec::Constant(1, rank - (2 * n - 3));
  rk.rel_residual = std::abs(rank - (2 * n - 3));
  rk.tolerance = 0.5;
  rk.pass = rk.rel_residual < rk.tolerance;
  rk.note = "rank of the variation map against 2n-3";
  items.push_back(item_json("rank", rk, false));
  std::mt19937_64 rng(o.seed);
  DeformationField X = random_field(p.space, p.vertices, rng);
  items.push_back(item_json("induced", check_polygon_identity(p, variation_of(p, X.velocities), tol, o.sign_flip), o.terms));
  if (!o.target.empty()) {
    PolygonVariation t = io::variation_from_json(io::read_file(o.target), n);
    IdentityReport r = check_polygon_identity(p, t, tol, o.sign_flip);
    if (r.pass) {
      DeformationField sol = solve_variation(p, t, tol);
      const double err = (variation_of(p, sol.velocities).stacked() - t.stacked()).cwiseAbs().maxCoeff();
      doc["solution"] = io::field_to_json(sol);
      doc["round_trip_error"] = err;
      r.note = "feasible";
    } else {
      r.note = "infeasible: the target violates the closing constraints";
    }
    items.push_back(item_json("target", r, o.terms));
  }
  doc["summary"] = summary(items);
  doc["items"] = items;
  emit(doc, o);
  return status_of(doc);
}

int cone_decomposition(const Options& o, const Json& input) {
  SphereDecomposition d = io::decomposition_from_json(input);
  QuadratureConfig q = quad_config(o);
  DerivativeEngine e = fd_engine(o);
  std::vector<Vec> variations;
  if (input.contains("length_variation")) {
    variations.push_back(io::vec_from_json(input["length_variation"], d.num_edges()));
  } else {
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < o.deformations; ++k) {
      Vec dl(d.num_edges());
      for (Eigen::Index i = 0; i < dl.size(); ++i) dl(i) = g(rng);
      variations.push_back(dl);
    }
  }
  Json items = Json::array();
  for (size_t k = 0; k < variations.size(); ++k) {
    char key[32];
    std::snprintf(key, sizeof key, "d%03zu/", k);
    items.push_back(item_json(std::string(key) + "Codim2Balance",
                              check_codim2_balance(d, variations[k], o.tol.value_or(1e-6), q, e, o.sign_flip), o.terms));
    for (int p = 2; p <= d.n() - 1; ++p)
      if (o.ps.empty() || std::find(o.ps.begin(), o.ps.end(), p) != o.ps.end())
        items.push_back(item_json(std::string(key) + "SphereKp/p" + std::to_string(p),
                                  check_sphere_Kp(d, variations[k], p, o.tol.value_or(1e-5), q, e, o.sign_flip), o.terms));
  }
  Json doc;
  doc["type"] = "cone_report";
  doc["dim"] = d.dim;
  doc["cells"] = d.cells().size();
  doc["edges"] = d.num_edges();
  doc["summary"] = summary(items);
  doc["items"] = items;
  emit(doc, o);
  return status_of(doc);
}

int cone_s2(const Options& o, const Json& input) {
  Mat V = io::points_from_json(io::field(input, "points"), 3);
  Vec t = io::vec_from_json(io::field(input, "angle_variation"), V.cols());
  const double tol = o.tol.value_or(1e-6);
  Json doc;
  doc["type"] = "s2_cone_report";
  IdentityReport r;
  r.id = IdentityId::ConePolygon;
  r.tolerance = tol;
  r.residual = Vec::Zero(1);
  try {
    S2ConeDeformation s = construct_s2_deformation(V, t);
    const double err = (s.angle_variation - t).cwiseAbs().maxCoeff();
    r.residual(0) = err;
    r.scale = std::max(1.0, t.cwiseAbs().maxCoeff());
    r.rel_residual = err / r.scale;
    r.pass = r.rel_residual < tol;
    r.note = "largest cone-angle error";
    doc["order"] = s.order;
    doc["polygon"] = io::polygon_to_json(s.polygon);
    doc["inner"] = io::field_to_json(s.inner);
    doc["outer"] = io::field_to_json(s.outer);
    doc["angle_variation"] = io::vec_to_json(s.angle_variation);
  } catch (const Infeasible& e) {
    r.rel_residual = std::numeric_limits<double>::infinity();
    r.note = std::string("infeasible: ") + e.what();
  }
  Json items = Json::array({item_json("construction", r, false)});
  doc["summary"] = summary(items);
  doc["items"] = items;
  emit(doc, o);
  return status_of(doc);
}

int cmd_cone(const Options& o) {
  if (o.in.empty()) throw InputError("cone needs --in");
  Json input = io::read_file(o.in);
  const std::string type = input.value("type", std::string());
  if (type == "sphere_decomposition") return cone_decomposition(o, input);
  if (type == "s2_targets") return cone_s2(o, input);
  throw InputError("cone expects a 'sphere_decomposition' or 's2_targets' document");
}

int cmd_split(const Options& o) {
  if (o.in.empty()) throw InputError("split needs --in");
  Json input = io::read_file(o.in);
  io::expect_type(input, "split");
  Polytope P = io::polytope_from_json(io::field(input, "polytope"));
  Hyperplane H = io::hyperplane_from_json(io::field(input, "hyperplane"));
  SplitResult s = split_polytope(P, H);
  QuadratureConfig q = quad_config(o);
  Json items = Json::array();
  for (FaceRef F : common_faces(P, H)) {
    auto [rv, rm] = check_prop_nonconvex(P, H, F, q, o.tol.value_or(1e-7), o.sign_flip);
    const std::string key = "c" + std::to_string(F.codim) + "/f" + std::to_string(F.id);
    items.push_back(item_json(key + "/volume", rv, o.terms));
    items.push_back(item_json(key + "/moment", rm, o.terms));
  }
  Json doc;
  doc["type"] = "split_report";
  if (items.empty()) doc["note"] = "no face of codimension 2 or more lies in the hyperplane";
  doc["minus"] = io::polytope_to_json(s.minus);
  doc["plus"] = io::polytope_to_json(s.plus);
  Json cut;
  cut["section"] = io::polytope_to_json(s.cut.polytope);
  cut["origin"] = io::vec_to_json(s.cut.origin);
  cut["basis"] = io::points_to_json(s.cut.basis);
  doc["cut"] = cut;
  doc["volumes"] = Json::array({measure_face(s.minus, {0, 0}, q).volume, measure_face(s.plus, {0, 0}, q).volume});
  doc["summary"] = summary(items);
  doc["items"] = items;
  emit(doc, o);
  return status_of(doc);
}

int cmd_report(const Options& o) {
  if (o.in.empty()) throw InputError("report needs --in");
  Json doc = io::read_file(o.in);
  if (!doc.contains("summary") || !doc.contains("items")) throw InputError("not a report document");
  Options out = o;
  if (o.format == "json") out.format = "text";
  emit(doc, out);
  return status_of(doc);
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--space", o.space, "sphere, hyperbolic or euclidean");
  sub->add_option("--dim", o.dim, "dimension n+1 of the space form")->check(CLI::Range(2, 7));
  sub->add_option("--vertices", o.vertices, "vertex count of generated polytopes");
  sub->add_option("--identity", o.identities, "identities to check")->delimiter(',');
  sub->add_option("--p", o.ps, "values of p")->delimiter(',');
  sub->add_option("--tol", o.tol, "tolerance override");
  sub->add_option("--fd-step", o.fd_step, "finite-difference step");
  sub->add_option("--quad-tol", o.quad_tol, "quadrature target relative error");
  sub->add_option("--mc-samples", o.mc_samples, "Monte Carlo samples per face");
  sub->add_option("--out", o.out, "output file (default stdout)");
  sub->add_option("--format", o.format, "json, csv or text")->check(CLI::IsMember({"json", "csv", "text"}));
  sub->add_option("--in", o.in, "input document");
  sub->add_option("--target", o.target, "target variation document");
  sub->add_option("--instances", o.instances, "number of generated polytopes");
  sub->add_option("--deformations", o.deformations, "random deformations per polytope");
  sub->add_option("--threads", o.threads, "worker threads");
  sub->add_flag("--sign-flip", o.sign_flip, "negate the last term group, or every other term of a single sum (self-test)");
  sub->add_flag("--terms", o.terms, "include the term breakdown");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schlafli-type identities for polytopes in space forms"};
  app.require_subcommand(1);
  Options o;
  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Sub subs[] = {{"gen", "generate a random polytope", cmd_gen},
                      {"check", "run an identity suite", cmd_check},
                      {"polygon", "polygon variations", cmd_polygon},
                      {"cone", "cone-manifold checks", cmd_cone},
                      {"split", "split a polytope by a hyperplane", cmd_split},
                      {"report", "summarize a report document", cmd_report}};
  std::vector<std::pair<CLI::App*, int (*)(const Options&)>> handlers;
  for (const Sub& s : subs) {
    CLI::App* a = app.add_subcommand(s.name, s.help);
    add_common(a, o);
    handlers.push_back({a, s.run});
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kBadInput;
  }
  try {
    for (auto& [a, run] : handlers)
      if (a->parsed()) return run(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return kBadInput;
}
