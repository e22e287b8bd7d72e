#pragma once

#include "linalg.hpp"
#include "polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace schlafli {

enum class IdentityId {
  E0,
  Ep,
  Hp,
  Kp,
  Fp_prime,
  Gp_prime,
  Lp,
  Qp_prime,
  Mp_prime,
  MinkowskiStatic1,
  MinkowskiStatic2,
  ScalarSchlafli,
  E0_Euclidean,
  Ep_Euclidean,
  Kp_Euclidean,
  IsometricCorollary,
  Hp_Euclidean,
  ClassicalSchlafli,
  CurvatureCorollaryR3,
  ConsistencyEp,
  ConsistencyLp,
  ConsistencyKp,
  PolygonIdentity,
  ConePolygon,
  Codim2Balance,
  SphereKp,
  NonconvexVolume,
  NonconvexMoment,
  UnionE0,
  UnionHp,
  UnionKp,
  OracleAgreement,
};

inline const char* identity_name(IdentityId id) {
  switch (id) {
    case IdentityId::E0: return "E0";
    case IdentityId::Ep: return "Ep";
    case IdentityId::Hp: return "Hp";
    case IdentityId::Kp: return "Kp";
    case IdentityId::Fp_prime: return "Fp_prime";
    case IdentityId::Gp_prime: return "Gp_prime";
    case IdentityId::Lp: return "Lp";
    case IdentityId::Qp_prime: return "Qp_prime";
    case IdentityId::Mp_prime: return "Mp_prime";
    case IdentityId::MinkowskiStatic1: return "MinkowskiStatic1";
    case IdentityId::MinkowskiStatic2: return "MinkowskiStatic2";
    case IdentityId::ScalarSchlafli: return "ScalarSchlafli";
    case IdentityId::E0_Euclidean: return "E0_Euclidean";
    case IdentityId::Ep_Euclidean: return "Ep_Euclidean";
    case IdentityId::Kp_Euclidean: return "Kp_Euclidean";
    case IdentityId::IsometricCorollary: return "IsometricCorollary";
    case IdentityId::Hp_Euclidean: return "Hp_Euclidean";
    case IdentityId::ClassicalSchlafli: return "ClassicalSchlafli";
    case IdentityId::CurvatureCorollaryR3: return "CurvatureCorollaryR3";
    case IdentityId::ConsistencyEp: return "ConsistencyEp";
    case IdentityId::ConsistencyLp: return "ConsistencyLp";
    case IdentityId::ConsistencyKp: return "ConsistencyKp";
    case IdentityId::PolygonIdentity: return "PolygonIdentity";
    case IdentityId::ConePolygon: return "ConePolygon";
    case IdentityId::Codim2Balance: return "Codim2Balance";
    case IdentityId::SphereKp: return "SphereKp";
    case IdentityId::NonconvexVolume: return "NonconvexVolume";
    case IdentityId::NonconvexMoment: return "NonconvexMoment";
    case IdentityId::UnionE0: return "UnionE0";
    case IdentityId::UnionHp: return "UnionHp";
    case IdentityId::UnionKp: return "UnionKp";
    case IdentityId::OracleAgreement: return "OracleAgreement";
  }
  return "unknown";
}

inline std::optional<IdentityId> identity_from_name(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(IdentityId::OracleAgreement); ++i) {
    auto id = static_cast<IdentityId>(i);
    if (s == identity_name(id)) return id;
  }
  return std::nullopt;
}

/// One summand of an identity. `reference` is the size of the same summand
/// with the differentiated factor replaced by its static value; it sets the
/// magnitude floor for deformations whose terms all vanish.
struct Term {
  int group = 0;
  FaceRef face;
  Vec value;
  double reference = 0.0;
};

struct IdentityReport {
  IdentityId id = IdentityId::E0;
  std::optional<int> p;
  Vec residual;
  double scale = 0.0;
  double rel_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool scalar = false;
  std::vector<Term> terms;
  std::string note;
};

struct ReportOptions {
  double tolerance = 1e-5;
  bool sign_flip = false;  // negate the last term group, or alternate terms if there is one (self-test)
  double speed = 0.0;      // deformation size used for the magnitude floor
  bool scalar = false;
  bool keep_terms = true;
};

inline IdentityReport finalize_report(IdentityId id, std::optional<int> p, std::vector<Term> terms,
                                      const ReportOptions& opt, Eigen::Index dim) {
  IdentityReport r;
  r.id = id;
  r.p = p;
  r.scalar = opt.scalar;
  r.tolerance = opt.tolerance;
  r.residual = Vec::Zero(dim);
  int first = std::numeric_limits<int>::max(), last = 0;
  for (const Term& t : terms) {
    first = std::min(first, t.group);
    last = std::max(last, t.group);
  }
  // With a single group, negating it leaves the sum zero; flip alternate terms.
  const bool single = first == last;
  double biggest = 0.0, ref = 0.0;
  for (size_t k = 0; k < terms.size(); ++k) {
    Term& t = terms[k];
    if (opt.sign_flip && (single ? k % 2 == 1 : t.group == last)) t.value = -t.value;
    r.residual += t.value;
    biggest = std::max(biggest, t.value.norm());
    ref = std::max(ref, t.reference);
  }
  r.scale = std::max(biggest, opt.speed * ref);
  const double res = r.residual.norm();
  if (r.scale > 0)
    r.rel_residual = res / r.scale;
  else
    r.rel_residual = res == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  r.pass = r.rel_residual < r.tolerance;
  if (opt.keep_terms) r.terms = std::move(terms);
  return r;
}

/// Difference of two reports that should agree: passes when the residual
/// vectors coincide relative to the larger scale.
inline IdentityReport compare_reports(IdentityId id, std::optional<int> p, const IdentityReport& a,
                                      const Vec& b_residual, double b_scale, double tolerance) {
  IdentityReport r;
  r.id = id;
  r.p = p;
  r.scalar = a.scalar;
  r.tolerance = tolerance;
  r.residual = a.residual - b_residual;
  r.scale = std::max(a.scale, b_scale);
  r.rel_residual = r.scale > 0 ? r.residual.norm() / r.scale : (r.residual.norm() == 0 ? 0.0 : INFINITY);
  r.pass = r.rel_residual < tolerance;
  return r;
}

}  // namespace schlafli
