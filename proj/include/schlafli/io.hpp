#pragma once

#include "conemanifold.hpp"
#include "nonconvex.hpp"
#include "polygon.hpp"
#include "polytope.hpp"
#include "report.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace schlafli::io {

using Json = nlohmann::ordered_json;

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

inline Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vec vec_from_json(const Json& j, Eigen::Index size = -1) {
  require(j.is_array(), "expected an array of numbers");
  if (size >= 0) require(static_cast<Eigen::Index>(j.size()) == size, "array has the wrong length");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), "expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

/// Points are stored one per row; matrices hold them as columns.
inline Json points_to_json(const Mat& M) {
  Json a = Json::array();
  for (Eigen::Index j = 0; j < M.cols(); ++j) a.push_back(vec_to_json(M.col(j)));
  return a;
}

inline Mat points_from_json(const Json& j, Eigen::Index rows) {
  require(j.is_array(), "expected an array of points");
  Mat M(rows, static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = vec_from_json(j[i], rows);
  return M;
}

inline const Json& field(const Json& j, const char* key) {
  require(j.is_object() && j.contains(key), std::string("missing field '") + key + "'");
  return j.at(key);
}

inline void expect_type(const Json& j, const char* type) {
  require(j.is_object() && j.value("type", std::string()) == type, std::string("expected a '") + type + "' document");
}

inline int get_int(const Json& j, const char* key) {
  const Json& v = field(j, key);
  require(v.is_number_integer(), std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

inline SpaceForm space_from_json(const Json& j) { return SpaceForm(get_int(j, "curvature"), get_int(j, "dim")); }

inline Json polytope_to_json(const Polytope& P) {
  Json j;
  j["type"] = "polytope";
  j["curvature"] = P.curvature();
  j["dim"] = P.dim();
  j["vertices"] = points_to_json(P.vertices());
  return j;
}

inline Polytope polytope_from_json(const Json& j) {
  expect_type(j, "polytope");
  SpaceForm s = space_from_json(j);
  return build_from_vertices(s, points_from_json(field(j, "vertices"), s.ambient_dim()));
}

inline Json field_to_json(const DeformationField& X) {
  Json j;
  j["type"] = "field";
  j["velocities"] = points_to_json(X.velocities);
  return j;
}

inline DeformationField field_from_json(const Json& j, Eigen::Index rows) {
  expect_type(j, "field");
  return {points_from_json(field(j, "velocities"), rows)};
}

inline Json hyperplane_to_json(const Hyperplane& H) {
  Json j;
  j["normal"] = vec_to_json(H.normal);
  j["offset"] = H.offset;
  return j;
}

inline Hyperplane hyperplane_from_json(const Json& j) {
  Hyperplane H{vec_from_json(field(j, "normal")), 0.0};
  if (j.contains("offset")) {
    require(j["offset"].is_number(), "offset must be a number");
    H.offset = j["offset"].get<double>();
  }
  return H;
}

inline Json polygon_to_json(const Polygon& p) {
  Json j;
  j["type"] = "polygon";
  j["curvature"] = p.space.curvature();
  j["orientation"] = p.orientation;
  j["vertices"] = points_to_json(p.vertices);
  return j;
}

/// Orientation 0 (or absent) reads it off the vertex order.
inline Polygon polygon_from_json(const Json& j) {
  expect_type(j, "polygon");
  SpaceForm s(get_int(j, "curvature"), 2);
  const int orientation = j.contains("orientation") ? get_int(j, "orientation") : 0;
  return make_polygon(s, points_from_json(field(j, "vertices"), s.ambient_dim()), orientation);
}

inline Json variation_to_json(const PolygonVariation& v) {
  Json j;
  j["type"] = "polygon_variation";
  j["l_prime"] = vec_to_json(v.l_prime);
  j["theta_prime"] = vec_to_json(v.theta_prime);
  return j;
}

inline PolygonVariation variation_from_json(const Json& j, int n) {
  expect_type(j, "polygon_variation");
  return {vec_from_json(field(j, "l_prime"), n), vec_from_json(field(j, "theta_prime"), n)};
}

inline Json decomposition_to_json(const SphereDecomposition& d) {
  Json j;
  j["type"] = "sphere_decomposition";
  j["dim"] = d.dim;
  j["vertices"] = points_to_json(d.vertices);
  j["cells"] = d.cells();
  return j;
}

inline SphereDecomposition decomposition_from_json(const Json& j) {
  expect_type(j, "sphere_decomposition");
  const int dim = get_int(j, "dim");
  require(dim >= 2 && dim <= 7, "dimension must lie in 2..7");
  std::vector<std::vector<int>> cells;
  try {
    cells = field(j, "cells").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("cells must be arrays of vertex indices");
  }
  return make_decomposition(dim, points_from_json(field(j, "vertices"), dim + 1), std::move(cells));
}

inline Json union_to_json(const PolytopeUnion& U) {
  Json j;
  j["type"] = "union";
  j["curvature"] = U.space.curvature();
  j["dim"] = U.dim();
  Json pieces = Json::array();
  for (const Polytope& P : U.pieces) pieces.push_back(polytope_to_json(P));
  j["pieces"] = pieces;
  Json g = Json::array();
  for (const Gluing& x : U.gluings) g.push_back(Json::array({Json::array({x.a, x.facet_a}), Json::array({x.b, x.facet_b})}));
  j["gluings"] = g;
  return j;
}

/// The listed gluings, each [[piece, facet], [piece, facet]], must be exactly
/// the shared facets found geometrically.
inline PolytopeUnion union_from_json(const Json& j) {
  expect_type(j, "union");
  SpaceForm s = space_from_json(j);
  const Json& pj = field(j, "pieces");
  require(pj.is_array(), "pieces must be an array");
  std::vector<Polytope> pieces;
  for (const Json& x : pj) {
    Polytope P = polytope_from_json(x);
    require(P.curvature() == s.curvature() && P.dim() == s.dim(), "piece lives in a different space");
    pieces.push_back(std::move(P));
  }
  PolytopeUnion U = make_union(pieces);
  if (j.contains("gluings")) {
    std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> listed, found;
    try {
      for (const Json& g : j["gluings"]) {
        auto a = std::make_pair(g.at(0).at(0).get<int>(), g.at(0).at(1).get<int>());
        auto b = std::make_pair(g.at(1).at(0).get<int>(), g.at(1).at(1).get<int>());
        listed.push_back(std::minmax(a, b));
      }
    } catch (const nlohmann::json::exception&) {
      throw InputError("gluings must be [[piece, facet], [piece, facet]] pairs");
    }
    for (const Gluing& g : U.gluings) found.push_back(std::minmax(std::make_pair(g.a, g.facet_a), std::make_pair(g.b, g.facet_b)));
    std::sort(listed.begin(), listed.end());
    std::sort(found.begin(), found.end());
    require(listed == found, "listed gluings do not match the shared facets of the pieces");
  }
  return U;
}

/// Non-finite numbers are written as strings so the document stays valid JSON.
inline Json number(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

inline Json report_to_json(const IdentityReport& r, bool with_terms = false) {
  Json j;
  j["id"] = identity_name(r.id);
  j["p"] = r.p ? Json(*r.p) : Json(nullptr);
  j["pass"] = r.pass;
  j["rel_residual"] = number(r.rel_residual);
  j["tolerance"] = r.tolerance;
  j["scale"] = number(r.scale);
  j["scalar"] = r.scalar;
  j["residual"] = vec_to_json(r.residual);
  if (!r.note.empty()) j["note"] = r.note;
  if (with_terms) {
    Json t = Json::array();
    for (const Term& x : r.terms) {
      Json e;
      e["group"] = x.group;
      e["codim"] = x.face.codim;
      e["face"] = x.face.id;
      e["value"] = vec_to_json(x.value);
      e["reference"] = x.reference;
      t.push_back(e);
    }
    j["terms"] = t;
  }
  return j;
}

inline Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

inline Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace schlafli::io
